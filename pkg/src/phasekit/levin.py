"""Local Levin-type Newton solve for slowly-varying Riccati solutions.

On a single Chebyshev window the eigenvalues of the coefficient matrix give
``n`` slowly-varying initial guesses, each of which is refined by Newton's
method with truncated QR solves.  The refined branches and their
derivatives are then interpolated to a point ``sigma``; those values seed the
global extension in :mod:`phasekit.phase`.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .chebkit import cheb_deriv_coeffs, cheb_eval, cheb_nodes, diff_matrix, vals_to_coeffs
from .errors import DivergenceError, InvalidArgumentError, TurningPointError
from .linalg import DEFAULT_QR_TOL, companion_eigs, truncated_lsq
from .riccati import RiccatiGridState, riccati_jacobian, riccati_residual

__all__ = [
    "LevinConfig",
    "LevinState",
    "NewtonReport",
    "LevinConvergenceWarning",
    "initial_guesses",
    "newton_refine",
    "levin_stage",
]

EPS0 = np.finfo(float).eps


class LevinConvergenceWarning(UserWarning):
    """A branch hit the Newton iteration cap without meeting the criterion."""


@dataclass(frozen=True)
class LevinConfig:
    """Window, evaluation point and Newton controls for the local solve.

    ``window`` and ``sigma`` default to ``[a, a + (b - a)/10]`` and its
    midpoint; see :meth:`resolve`.
    """

    window: tuple = None
    sigma: float = None
    k: int = 16
    max_newton: int = 8
    newton_tol_factor: float = 100 * EPS0
    qr_tol: float = DEFAULT_QR_TOL

    def resolve(self, interval):
        """Fill in defaults and validate against the equation's interval."""
        a, b = interval
        window = self.window
        if window is None:
            window = (a, a + 0.1 * (b - a))
        a0, b0 = float(window[0]), float(window[1])
        sigma = 0.5 * (a0 + b0) if self.sigma is None else float(self.sigma)
        if not (a <= a0 < b0 <= b):
            raise InvalidArgumentError(f"window ({a0}, {b0}) not inside ({a}, {b})")
        if not a0 <= sigma <= b0:
            raise InvalidArgumentError(f"sigma={sigma} outside the window ({a0}, {b0})")
        if self.k < 8:
            raise InvalidArgumentError("Levin grid needs k >= 8")
        if self.max_newton < 1:
            raise InvalidArgumentError("max_newton must be at least 1")
        return LevinConfig((a0, b0), sigma, self.k, self.max_newton,
                           self.newton_tol_factor, self.qr_tol)


@dataclass(frozen=True)
class NewtonReport:
    converged: bool
    iterations: int
    last_update: float


@dataclass(frozen=True, eq=False)
class LevinState:
    """Values ``r_j^(i)(sigma)`` for branches j and orders i = 0..n-2.

    ``values[j, i]`` is the i-th derivative of branch j at ``sigma``.
    ``branch_nodes`` keeps the refined branches on the window grid.
    """

    sigma: float
    values: np.ndarray
    reports: tuple
    branch_nodes: np.ndarray = field(repr=False)
    window: tuple = None

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def converged(self):
        return np.array([rep.converged for rep in self.reports])


def _match_branches(lam, nodes):
    """Order the eigenvalues at each node so that branches are continuous.

    Greedy nearest neighbour against the previous node.  A match farther than
    half the minimal separation at the previous node means branches cannot be
    told apart and is reported as a turning point.
    """
    k, n = lam.shape
    out = np.empty_like(lam)
    order = np.lexsort((lam[0].real, lam[0].imag))
    out[0] = lam[0, order]
    for i in range(1, k):
        prev = out[i - 1]
        sep = np.abs(prev[:, None] - prev[None, :])
        sep[np.diag_indices(n)] = np.inf
        half_sep = 0.5 * sep.min()
        dist = np.abs(prev[:, None] - lam[i][None, :])
        taken_b = np.zeros(n, bool)
        taken_e = np.zeros(n, bool)
        for _ in range(n):
            d = np.where(taken_b[:, None] | taken_e[None, :], np.inf, dist)
            bi, ei = np.unravel_index(np.argmin(d), d.shape)
            if d[bi, ei] > half_sep:
                raise TurningPointError(
                    f"eigenvalue branches cannot be matched near t={nodes[i]:.16g}",
                    location=float(nodes[i]))
            out[i, bi] = lam[i, ei]
            taken_b[bi] = taken_e[ei] = True
    return out


def initial_guesses(ode, grid):
    """Eigenvalue branches of the coefficient matrix at the grid nodes.

    Returns an (n, k) array: row j is branch j sampled on the grid.
    """
    q = ode.q(grid.nodes)
    lam = companion_eigs(q.T)
    scale = max(1.0, float(np.abs(lam).max()))
    for i in range(grid.k):
        d = np.abs(lam[i][:, None] - lam[i][None, :])
        d[np.diag_indices(ode.order)] = np.inf
        if d.min() <= 1e-12 * scale:
            raise TurningPointError(
                f"eigenvalues coalesce at t={grid.nodes[i]:.16g}",
                location=float(grid.nodes[i]))
    return _match_branches(lam, grid.nodes).T


def newton_refine(ode, grid, branch, q_vals=None, max_newton=8,
                  tol_factor=100 * EPS0, qr_tol=DEFAULT_QR_TOL, branch_index=None):
    """Newton iterations for one branch on the grid.

    Stops after ``max_newton`` steps or once
    ``max|delta| < tol_factor * max|r|``.  Returns ``(r, NewtonReport)``.
    """
    if q_vals is None:
        q_vals = ode.q(grid.nodes)
    r = np.array(branch, dtype=complex)
    if not np.all(np.isfinite(r)):
        raise InvalidArgumentError("initial guess must be finite")
    D = diff_matrix(grid)
    update = np.inf
    for it in range(1, max_newton + 1):
        state = RiccatiGridState(grid, r, q_vals, D)
        xi = riccati_residual(state)
        B = riccati_jacobian(state)
        delta = truncated_lsq(B, -xi, qr_tol)
        r = r + delta
        if not np.all(np.isfinite(r)):
            raise DivergenceError(
                f"Newton iteration for branch {branch_index} produced non-finite values",
                branch=branch_index)
        update = float(np.abs(delta).max())
        if update < tol_factor * float(np.abs(r).max()):
            return r, NewtonReport(True, it, update)
    return r, NewtonReport(False, max_newton, update)


def levin_stage(ode, config=None):
    """Refine all branches on the window and evaluate them at sigma."""
    config = (config or LevinConfig()).resolve(ode.interval)
    n = ode.order
    grid = cheb_nodes(config.k, config.window)
    q_vals = ode.q(grid.nodes)
    guesses = initial_guesses(ode, grid)

    x = (config.sigma - grid.a) / grid.half_width - 1.0
    values = np.empty((n, n - 1), dtype=complex)
    refined = np.empty((n, grid.k), dtype=complex)
    reports = []
    for j in range(n):
        r, rep = newton_refine(ode, grid, guesses[j], q_vals, config.max_newton,
                               config.newton_tol_factor, config.qr_tol, branch_index=j)
        if not rep.converged:
            warnings.warn(
                f"branch {j} did not meet the Newton criterion in {rep.iterations} "
                f"iterations (last update {rep.last_update:.3e})",
                LevinConvergenceWarning, stacklevel=2)
        refined[j] = r
        reports.append(rep)
        c = vals_to_coeffs(r)
        for i in range(n - 1):
            ci = cheb_deriv_coeffs(c, i, grid.half_width) if i else c
            values[j, i] = cheb_eval(ci, x)

    sep = np.abs(values[:, 0][:, None] - values[:, 0][None, :])
    sep[np.diag_indices(n)] = np.inf
    if sep.min() <= 0:
        raise TurningPointError(f"branches coincide at sigma={config.sigma}",
                                location=config.sigma)
    return LevinState(config.sigma, values, tuple(reports), refined, config.window)
