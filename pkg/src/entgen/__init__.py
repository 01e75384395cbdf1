"""Simulation and verification of coherent-state entanglement generation over lossy channels."""

from .bounds import (
    PerformancePoint,
    TriangleBound,
    f_opt,
    f_sym,
    fidelity_cap,
    fsym_curve_derivatives,
    g_polynomial,
    mix,
    ps_star,
    tradeoff_max_PsF,
    triangle,
    upper_convex_hull,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .fock import (
    TruncationError,
    TruncationPolicy,
    apply_loss,
    coherent_overlap,
    coherent_vector,
    singlet_fraction,
)
from .protocol import (
    ProtocolParams,
    apply_phase_flip,
    build_joint_state,
    equivalence_check,
    equivalent_state,
    phase_flip_f,
)
from .strategies import (
    MeasurementStrategy,
    correction_unitaries,
    evaluate_strategy,
    sample_compliant_strategy,
    trivial_strategy,
    usd_strategy,
)
from .verifier import TrialConfig, cross_validate_representations, hull_check, run_monte_carlo

__version__ = "0.1.0"
