"""Exact analyzer for information flow in state-dependent channels with noisy feedback."""

from .model import (
    Alphabets,
    BudgetError,
    ConditionalKernel,
    DEFAULT_BUDGET,
    SpecError,
    StationaryShorthand,
    SystemSpec,
    ValidatedSystem,
    expand_shorthand,
    load_system,
    save_system,
    span,
    system_from_dict,
    system_to_dict,
    trajectory_from_index,
    trajectory_index,
    validate_system,
)
from .engine import (
    DEFAULT_TOL,
    IdentityReport,
    JointTable,
    MESSAGE,
    SelectorError,
    StateDependenceError,
    StatelessReport,
    build_joint,
    causal_entropy,
    causal_mutual_info,
    cond_entropy_term,
    cross_term,
    directed_info,
    directed_info_causal,
    feedback_directed_info,
    is_feedback_blind,
    is_noiseless_feedback,
    is_state_blind,
    verify_conservation,
    verify_proof_steps,
    verify_stateless_reduction,
)
from .sampling import (
    Estimate,
    SampleSet,
    convergence_csv,
    convergence_report,
    plugin_estimate,
    sample_trajectories,
)
from .scenarios import CANONICAL_NAMES, Dims, canonical, permute_alphabet, random_system

__version__ = "0.1.0"
