"""Likelihood, filtering and ML estimation for hidden Markov models whose
observations depend on the current state and the previous observation."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .derivatives import (
    InformationMatrix,
    TangentState,
    fd_score,
    init_tangent,
    observed_information,
    score,
    tangent_filter_step,
    tangent_run,
)
from .diagnostics import (
    c5_direct_ratio,
    c5_ratio,
    c5_sup_scan,
    degeneracy_report,
    operator_mismatch_report,
    score_system_check,
)
from .estimation import FitResult, mle_fit, profile_loglik
from .exceptions import (
    ChainUnderflowError,
    EnumerationBudgetError,
    ImpossibleObservation,
    ModelError,
    NumericalError,
    ReducibleChainError,
)
from .filtering import (
    FilterState,
    init_filter,
    loglik,
    predict_update_step,
    run_filter,
    unnormalized_filter_trace,
)
from .model import (
    GaussianAR,
    GaussianMean,
    Model,
    ModelFamily,
    ObservationSequence,
    ParamVector,
    StateGrid,
    TableEmission,
    build_model,
    simulate,
    stationary_distribution,
)
from .operators import (
    apply_corrected_operator,
    apply_fuh_operator,
    corrected_chain,
    fuh_scalar_chain,
    joint_density_bruteforce,
    joint_density_via_composition,
)
