"""CAPM equilibrium returns when the market return is built from its constituents."""
from .equilibrium import (
    EquilibriumSolution,
    MarketParams,
    SolutionFamily,
    SystemMatrix,
    build_system_matrix,
    capm_residual,
    market_return,
    reduced_pseudoinverse,
    solution_family_oracle,
    solve_equilibrium,
    validate_market,
)
from .feasibility import (
    RangeResult,
    SweepRecord,
    limiting_case_report,
    optimize_return_range,
    sweep_concentration,
)
from .market_structure import WeightLaw, normalized_hhi, power_law_weights, sample_constrained_beta
from .sensitivity import (
    SensitivityReport,
    endogenous_jacobian,
    fd_jacobian_oracle,
    sensitivity_report,
    standard_jacobian,
)

__version__ = "0.1.0"
