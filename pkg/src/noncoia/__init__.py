"""Noncoherent interference alignment for K-user single-antenna networks.

Builds the random-phase equivalent MIMO channels obtained by demodulating
2-symbol-extension blocks with intentionally offset carriers, solves
interference alignment over them, and runs Monte Carlo rate/BER experiments
against a TDMA baseline and the capacity-scaling bound.
"""

from .errors import (
    AlignmentError,
    ConfigurationError,
    DegenerateAlignment,
    DegeneratePhase,
    InfeasibleRate,
    NoRealAlignment,
    NoncoiaError,
)
from .phases import (
    EPS_COS,
    CosineCertificate,
    CosinePolynomial,
    PhasePlan,
    RationalAngle,
    certify_irrational,
    check_phase_plan,
    cosine_min_poly,
    irrational_core,
    mean_cos_squared,
    mobius_period_check,
    reduced_fractions,
    sample_phase_plan,
)
from .channel import (
    ChannelRealization,
    EquivalentNetwork,
    NetworkConfig,
    build_equivalent_network,
    draw_channel,
    load_deterministic_values,
    naive_extension,
    sample_branch_noise,
    superposition_extension,
)
from .align import (
    AlignmentReport,
    IASolution,
    alignment_precoders,
    closed_form_ia3,
    desired_ratio,
    diagonality_report,
    leakage_of,
    max_sinr_solve,
    min_leakage_solve,
)
from .modem import (
    LoadingPlan,
    PamConstellation,
    fh_loading,
    pam_detect,
    pam_modulate,
    uniform_loading,
)
from .link import (
    LinkConfig,
    LinkReport,
    ber_sweep,
    capacity_bound,
    crossover_scan,
    effective_gains,
    fit_dof_slope,
    per_user_rates,
    per_user_sinr,
    rate_sweep,
    simulate_block_errors,
    tdma_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "AlignmentReport",
    "ChannelRealization",
    "ConfigurationError",
    "CosineCertificate",
    "CosinePolynomial",
    "DegenerateAlignment",
    "DegeneratePhase",
    "EPS_COS",
    "EquivalentNetwork",
    "IASolution",
    "InfeasibleRate",
    "LinkConfig",
    "LinkReport",
    "LoadingPlan",
    "NetworkConfig",
    "NoRealAlignment",
    "NoncoiaError",
    "PamConstellation",
    "PhasePlan",
    "RationalAngle",
    "alignment_precoders",
    "ber_sweep",
    "build_equivalent_network",
    "capacity_bound",
    "certify_irrational",
    "check_phase_plan",
    "closed_form_ia3",
    "cosine_min_poly",
    "crossover_scan",
    "desired_ratio",
    "diagonality_report",
    "draw_channel",
    "effective_gains",
    "fh_loading",
    "fit_dof_slope",
    "irrational_core",
    "leakage_of",
    "load_deterministic_values",
    "max_sinr_solve",
    "mean_cos_squared",
    "min_leakage_solve",
    "mobius_period_check",
    "naive_extension",
    "pam_detect",
    "pam_modulate",
    "per_user_rates",
    "per_user_sinr",
    "rate_sweep",
    "reduced_fractions",
    "sample_branch_noise",
    "sample_phase_plan",
    "simulate_block_errors",
    "superposition_extension",
    "tdma_baseline",
    "uniform_loading",
]
