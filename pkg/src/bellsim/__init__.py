"""CHSH inequality: hidden-variable bounds, singlet predictions and Bell-test simulation."""

__version__ = "0.1.0"

from .core import (
    MAXIMAL_VIOLATION_SETTINGS,
    PAIRS,
    AngleSettings,
    ChshReport,
    DomainError,
    EmptyCountsError,
    EventCounts,
    chsh_combination,
    correlator_from_counts,
    lemma_abs_sum_bound,
    original_bell_check,
    q_quantity,
)
from .lhv import (
    HiddenVariableModel,
    JointDistributionModel,
    OutcomeAssignment,
    chsh_of_p16,
    correlator_factorizable,
    correlator_joint_model,
    correlators_from_p16,
    enumerate_assignments,
    quantum_mimic_joint,
)
from .montecarlo import TrialPlan, VisibilityModel, aspect_comparison, estimate_chsh, sample_events, visibility_correlator
from .optimize import OptimizationResult, lhv_ceiling_search, maximize_chsh
from .quantum import (
    Observable,
    QuantumState,
    chsh_qm,
    commutator_frobenius_norm,
    correlator_qm,
    joint_outcome_distribution,
    observable_from_angle,
    singlet_state,
)
