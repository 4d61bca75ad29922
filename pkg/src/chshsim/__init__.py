"""CHSH Bell-test simulator for classical beams with noise-correlated polarizations.

Two classical polarized waves have their polarizations (V/H) set per trial
by a pair of correlated binary noise signals.  The package evaluates the
CHSH quantity S for such a system both analytically and by Monte Carlo,
solves for the correlation threshold where S crosses the classical bound 2,
and searches the detector-angle space for the maximal S at fixed
correlation.
"""

from ._kernels import BACKEND
from .errors import (
    CalibrationError,
    ChshSimError,
    EmptyRunError,
    InsufficientDataError,
    InvalidParameterError,
)
from .estimators import (
    CLASSICAL_BOUND,
    QUOTED_THRESHOLD_FIGURE,
    STANDARD_ANGLES,
    TSIRELSON_BOUND,
    AngleSet,
    ChshResult,
    PairStatistics,
    analytic_chsh,
    analytic_e,
    analytic_p_aligned,
    analytic_p_mismatched,
    estimate_p,
    make_source,
    mc_chsh,
    mc_e,
    mc_pair_run,
    violation_threshold,
)
from .noise import (
    CHUNK_TRIALS,
    ConditionalProbabilities,
    GaussianSignSource,
    RtwPairSource,
    SignPairCounts,
    TrialPolarizations,
    calibrate_gaussian,
    conditional_probs,
    corr_from_conditional,
    empirical_correlation,
    empirical_correlation_from_counts,
    sign_correlation,
)
from .optimize import OptimizationResult, grid_search, optimize_angles, refine
from .polarization import (
    FieldVector,
    TrialOutcome,
    coincidence_intensity,
    correlation_field,
    field,
    pair_label_intensities,
    trial_outcome,
)

__version__ = "0.1.0"
