"""Bounds on the reliability function of discrete memoryless channels.

Library layout:

- ``probability``: finite-alphabet distributions, channels, metrics,
  information measures, and the balanced-pair predicates.
- ``optimize``: golden-section and scan maximizers, simplex pattern
  search, information-constrained minimization, auxiliary-kernel ascent.
- ``pairwise``: the constrained pairwise divergence with its tilt dual.
- ``classic``: sphere-packing, random-coding, expurgated, Csiszar-Korner,
  zero-rate, straight-line, and the BSC lower envelope.
- ``genie``: the genie-receiver upper bound, its dual and symmetric
  relaxation, the alpha broadcast family, the simpler E_B form, the BSC
  closed form, and the sandwich function E_orth.
- ``oracle``: exact and Monte Carlo decoding of explicit codebooks.
- ``cli``: spec files, curve tables, CSV emission, and the command line.

All values are in nats unless a caller converts at the boundary.
"""

__version__ = "0.1.0"

from .probability import (  # noqa: F401
    BroadcastKernel,
    ChannelKernel,
    DecodingMetric,
    JointDist,
    ProbVec,
    ValidationError,
    binary_entropy,
    conditional_kl,
    is_balanced,
    kl_divergence,
    metric_supports_channel,
    ml_metric,
    mutual_information,
    zero_error_mismatch_is_zero,
)
from .optimize import (  # noqa: F401
    AuxiliaryDecomposition,
    OptimizerConfig,
    info_constrained_min,
    maximize_concave_1d,
    maximize_over_aux,
    min_over_conditional_simplex,
)
from .classic import (  # noqa: F401
    BoundCurve,
    BscLowerBoundParams,
    TangentPoint,
    capacity,
    e_ck,
    e_ex,
    e_lb_bsc,
    e_r,
    e_sp,
    straight_line_bound,
    zero_rate_exponent,
)
from .genie import (  # noqa: F401
    AlphaFamily,
    GenieEvaluation,
    broadcast_alpha,
    bsc_genie_bound,
    default_wz_family,
    e_b,
    e_bar_zero,
    e_orth,
    e_sym,
    eta,
    genie_bound,
    genie_bound_fixed,
    genie_curve,
    pair_distance,
    phi_divergence,
)
from .oracle import (  # noqa: F401
    Codebook,
    PeResult,
    exact_pe,
    finite_exponent,
    monte_carlo_pe,
    random_cc_code,
)
from .cli import ChannelSpec, CurveTable, figure_bsc, parse_spec, run_suite  # noqa: F401
