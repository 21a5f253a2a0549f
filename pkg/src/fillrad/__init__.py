"""Filling-radius estimates of sampled Riemannian manifolds.

Vietoris-Rips persistence on the Kuratowski embedding gives the estimate;
closed-form bounds and finite-scale constructions certify it.
"""

from ._kernel import IMPLEMENTATION
from .bounds import (
    BoundReport,
    check_bounds,
    dilation,
    katz_bound,
    lipschitz_comparison,
    lower_bound,
    product_fillrad,
    submersion_bound,
    warped_product_bound,
)
from .constructions import (
    cylinder_audit,
    cylinder_function,
    frechet_retract,
    reach_probe,
    retraction_audit,
    shifted_base_function,
    unique_projection_witness,
)
from .errors import FillradError
from .metric_core import (
    FiniteMetricSpace,
    KuratowskiFrame,
    kuratowski_embed,
    scale_metric,
    sup_distance,
    validate_metric,
    vicinity_set,
)
from .persistence import (
    Barcode,
    EstimatorConfig,
    FillRadEstimate,
    build_vr_filtration,
    estimate_fillrad,
    reduce,
    reduce_naive,
    scaling_check,
)
from .samplers import (
    ManifoldSample,
    SubmersionSample,
    quotient_metric,
    sample_berger,
    sample_circle,
    sample_flat_torus,
    sample_rp2,
    sample_sphere,
)

__version__ = "0.1.0"
