"""Fractal calculus on self-similar sets.

Prefractals and grid covers (:mod:`fraktal.geometry`), mass distributions and
staircase functions (:mod:`fraktal.measure`), fractal derivatives with their
continuous and fractional approximations (:mod:`fraktal.operators`), and
fitting/reporting helpers (:mod:`fraktal.analysis`).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DivergentQuotientError,
    DomainError,
    FraktalError,
    InsufficientResolutionError,
    ModeError,
    RangeError,
    ResourceLimitError,
    ValidationError,
)
from .geometry import (  # noqa: E402
    DeltaCover,
    IfsSpec,
    IntervalSet,
    build_prefractal,
    count_boxes,
    delta_cover,
    similarity_dimension,
)
from .measure import (  # noqa: E402
    DimensionEstimate,
    StaircaseFunction,
    box_counting_dimension,
    mass_distribution,
    mass_ladder,
    staircase,
)
from .operators import (  # noqa: E402
    OperatorConfig,
    SampledFunction,
    caputo_derivative,
    caputo_like_window_derivative,
    coefficient,
    evaluate,
    fractal_function_window_derivative,
    fractal_space_window_derivative,
    inverse_fractal_derivative,
    local_fractal_derivative,
    parvate_gangal_derivative,
    q_derivative,
    q_exponential,
    surface_coefficient,
)
from .analysis import (  # noqa: E402
    ComparisonReport,
    PowerLawFit,
    compare_operators,
    convergence_study,
    fit_power_law,
)
