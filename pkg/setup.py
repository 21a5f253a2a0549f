import os

import numpy as np
from setuptools import Extension, setup

# FILLRAD_PURE_PYTHON=1 skips the compiled kernel; the package then runs on
# the pure-Python fallback.
ext_modules = []
if not os.environ.get("FILLRAD_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "fillrad._vr_kernel",
            ["src/fillrad/_vr_kernel.pyx"],
            include_dirs=[np.get_include()],
            language="c++",
            extra_compile_args=["-O3", "-std=c++17"],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )

setup(ext_modules=ext_modules)
