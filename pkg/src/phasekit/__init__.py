"""Phase-function solver for linear scalar ODEs with oscillatory solutions.

Typical use::

    from phasekit import ScalarODE, build_phase_set, solve_ivp

    ode = ScalarODE(2, (0.0, 1.0), lambda t: [w**2 + 0 * t, 0 * t])
    ps = build_phase_set(ode)
    sol = solve_ivp(ps, 0.0, [1.0, 0.0])
    sol(0.5)
"""

from .chebkit import ChebGrid, PiecewiseCheb, cheb_nodes
from .equation import ScalarODE
from .errors import (
    BudgetExhaustedError,
    DivergenceError,
    DomainError,
    InvalidArgumentError,
    PhaseOverflowError,
    PhasekitError,
    SingularMatrixError,
    TurningPointError,
)
from .kernels import IMPLEMENTATION
from .levin import LevinConfig, LevinConvergenceWarning, LevinState, levin_stage
from .linalg import companion_eigs
from .odesolve import AdaptiveConfig, SystemSolution, solve_adaptive
from .phase import (
    ConditioningWarning,
    PhaseSet,
    SolveReport,
    basis_derivatives,
    build_phase_set,
    frequency_omega,
    solve_bvp,
    solve_ivp,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "BudgetExhaustedError",
    "ChebGrid",
    "ConditioningWarning",
    "DivergenceError",
    "DomainError",
    "IMPLEMENTATION",
    "InvalidArgumentError",
    "LevinConfig",
    "LevinConvergenceWarning",
    "LevinState",
    "PhaseOverflowError",
    "PhaseSet",
    "PhasekitError",
    "PiecewiseCheb",
    "ScalarODE",
    "SingularMatrixError",
    "SolveReport",
    "SystemSolution",
    "TurningPointError",
    "basis_derivatives",
    "build_phase_set",
    "cheb_nodes",
    "companion_eigs",
    "frequency_omega",
    "levin_stage",
    "solve_adaptive",
    "solve_bvp",
    "solve_ivp",
]
