"""Select the Vietoris-Rips kernel at import: compiled extension if present, else pure Python.

Set ``FILLRAD_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _vr_fallback as fallback

if os.environ.get("FILLRAD_PURE_PYTHON"):
    active = fallback
else:
    try:
        from . import _vr_kernel as active
    except ImportError:  # extension not built
        active = fallback

compiled = None if active is fallback else active

IMPLEMENTATION = active.IMPLEMENTATION
count_simplices = active.count_simplices
enumerate_simplices = active.enumerate_simplices
barcode = active.barcode
