"""Phase functions for the scalar equation and the solutions built from them.

:func:`build_phase_set` runs the Levin stage, extends every Riccati branch
over the whole interval with the adaptive solver and integrates it, giving
``psi_1 .. psi_n`` with ``exp(psi_j)`` a basis of solutions.  Initial and
boundary value problems then reduce to an n x n linear system for the
weights of that basis.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .chebkit import PiecewiseCheb, chebfit_adaptive
from .equation import ScalarODE
from .errors import (
    InvalidArgumentError,
    PhaseOverflowError,
    SingularMatrixError,
    TurningPointError,
)
from .levin import LevinConfig, LevinState, _match_branches, levin_stage
from .linalg import companion_eigs, dense_solve
from .odesolve import AdaptiveConfig, RiccatiProblem, solve_adaptive
from .riccati import jet_polynomials

__all__ = [
    "ScalarODE",
    "PhaseSet",
    "SolveReport",
    "ConditioningWarning",
    "build_phase_set",
    "basis_derivatives",
    "solve_ivp",
    "solve_bvp",
    "frequency_omega",
]

#: assembly matrices with a larger condition number trigger a warning
COND_WARN = 1e12
_EXP_MAX = np.log(np.finfo(float).max)


class ConditioningWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class PhaseSet:
    """Phase functions and their derivatives.

    ``psi[j][d]`` is the d-th derivative of ``psi_j`` for d = 0..n-1.
    """

    order: int
    interval: tuple
    sigma: float
    eta: float
    eta_values: np.ndarray
    psi: tuple
    levin: LevinState = field(repr=False, default=None)
    intervals_processed: int = 0

    def __post_init__(self):
        corr = [complex(v) - self.psi[j][0](self.eta) for j, v in enumerate(self.eta_values)]
        object.__setattr__(self, "_corr", np.array(corr))

    @property
    def n(self):
        return self.order

    @property
    def ncoeffs(self):
        """Chebyshev coefficients used by the n phase functions."""
        return int(sum(self.psi[j][0].ncoeffs for j in range(self.order)))

    @property
    def ncoeffs_all(self):
        """Coefficients of all n^2 expansions (phases and derivatives)."""
        return int(sum(f.ncoeffs for row in self.psi for f in row))

    def phase(self, j, t, deriv=0):
        """psi_j or one of its derivatives at ``t``.

        The value at ``eta`` reproduces the prescribed value exactly.
        """
        val = self.psi[j][deriv](t)
        if deriv == 0:
            val = val + self._corr[j]
        return val

    def r(self, j, t):
        return self.psi[j][1](t)

    def to_json(self):
        return {
            "n": self.order,
            "a": self.interval[0],
            "b": self.interval[1],
            "sigma": self.sigma,
            "eta": self.eta,
            "eta_values": [[float(v.real), float(v.imag)] for v in self.eta_values],
            "phases": [[f.to_json() for f in row] for row in self.psi],
        }

    @classmethod
    def from_json(cls, obj):
        psi = tuple(tuple(PiecewiseCheb.from_json(f) for f in row) for row in obj["phases"])
        vals = np.array([complex(re, im) for re, im in obj["eta_values"]])
        return cls(int(obj["n"]), (float(obj["a"]), float(obj["b"])), float(obj["sigma"]),
                   float(obj["eta"]), vals, psi)


def _check_branch_separation(rs, a, b):
    pts = np.unique(np.concatenate([f.partition for f in rs] + [np.linspace(a, b, 65)]))
    vals = np.array([f(pts) for f in rs])
    scale = max(1.0, float(np.abs(vals).max()))
    n = len(rs)
    for i in range(n):
        for j in range(i + 1, n):
            d = np.abs(vals[i] - vals[j])
            idx = int(np.argmin(d))
            if d[idx] <= 1e-13 * scale:
                raise TurningPointError(
                    f"Riccati branches {i} and {j} collide near t={pts[idx]:.16g}",
                    location=float(pts[idx]))


def build_phase_set(ode, levin=None, eta=None, eta_values=None, adaptive=None):
    """Construct the phase functions of ``ode``.

    ``eta`` defaults to the left endpoint and ``eta_values`` to zeros.
    """
    a, b = ode.interval
    n = ode.order
    eta = a if eta is None else float(eta)
    if not a <= eta <= b:
        raise InvalidArgumentError(f"eta={eta} outside ({a}, {b})")
    eta_values = np.zeros(n, dtype=complex) if eta_values is None else \
        np.asarray(eta_values, dtype=complex)
    if eta_values.shape != (n,):
        raise InvalidArgumentError(f"need {n} values at eta")
    adaptive = adaptive or AdaptiveConfig()

    state = levin_stage(ode, levin)
    problem = RiccatiProblem(ode)
    psi = []
    processed = 0
    for j in range(n):
        sol = solve_adaptive(problem, (a, b), state.values[j], adaptive, eta=state.sigma)
        processed += sol.intervals_processed
        derivs = [sol.component(i) for i in range(n - 1)]
        phase = derivs[0].antiderivative(anchor=eta, value=eta_values[j])
        psi.append(tuple([phase] + derivs))
    _check_branch_separation([row[1] for row in psi], a, b)
    return PhaseSet(n, (a, b), state.sigma, eta, eta_values, tuple(psi), state, processed)


def _jet(ps, j, t, m):
    t = np.asarray(t, dtype=float)
    n = ps.order
    jet = np.zeros(t.shape + (n,), dtype=complex)
    for d in range(1, min(m, n - 1) + 1):
        jet[..., d - 1] = ps.phase(j, t, d)
    if m == n:
        # psi^(n) is not stored; differentiate the top stored expansion
        jet[..., n - 1] = ps.psi[j][n - 1](t, deriv=1)
    return jet


def _exp_phase(ps, j, t, shift):
    z = ps.phase(j, t) - shift
    if np.any(np.real(z) > _EXP_MAX):
        raise PhaseOverflowError(f"exp(psi_{j}) overflows even after rescaling", branch=j)
    return np.exp(z)


def basis_derivatives(ps, j, t, m=0, shift=0.0):
    """m-th derivative of ``exp(psi_j - shift)`` at t, as ``P_m exp(psi_j - shift)``.

    Orders up to n are allowed; order n differentiates the stored
    expansion of psi_j^(n-1) and is slightly less accurate.
    """
    if not 0 <= m <= ps.order:
        raise InvalidArgumentError(f"derivative order {m} not in [0, {ps.order}]")
    P = jet_polynomials(ps.order)[m]
    return P(_jet(ps, j, t, m)) * _exp_phase(ps, j, t, shift)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Solution ``y = sum_j weights[j] exp(psi_j - shifts[j])``."""

    phase_set: PhaseSet
    weights: np.ndarray
    shifts: np.ndarray
    cond: float
    wall_time: float
    warnings: tuple = ()

    @property
    def ncoeffs(self):
        return self.phase_set.ncoeffs

    @property
    def basis_weights(self):
        """Weights of the unshifted basis exp(psi_j) (may over/underflow)."""
        with np.errstate(over="ignore", under="ignore"):
            return self.weights * np.exp(-self.shifts)

    def __call__(self, t, deriv=0):
        ps = self.phase_set
        out = 0
        for j in range(ps.order):
            out = out + self.weights[j] * basis_derivatives(ps, j, t, deriv, self.shifts[j])
        return out

    def materialize(self, eps=1e-12, k=16):
        """Piecewise Chebyshev expansion of the solution itself.  Its size
        grows with the frequency of the equation."""
        a, b = self.phase_set.interval
        return chebfit_adaptive(lambda t: self(t), a, b, k, eps)


def _assemble(ps, conditions):
    n = ps.order
    pts = np.array([c[0] for c in conditions], dtype=float)
    a, b = ps.interval
    if np.any(pts < a) or np.any(pts > b):
        raise InvalidArgumentError("condition point outside the interval")
    shifts = np.array([np.max(np.real(ps.phase(j, pts))) for j in range(n)])
    M = np.empty((n, n), dtype=complex)
    for row, (t, m, _) in enumerate(conditions):
        if not 0 <= int(m) <= n - 1:
            raise InvalidArgumentError(f"derivative order {m} not in [0, {n - 1}]")
        for j in range(n):
            M[row, j] = basis_derivatives(ps, j, t, int(m), shifts[j])
    return M, shifts


def _solve_conditions(ps, conditions, strict):
    t_start = time.perf_counter()
    M, shifts = _assemble(ps, conditions)
    rhs = np.array([c[2] for c in conditions], dtype=complex)
    notes = []
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond * np.finfo(float).eps >= 1.0:
        if strict:
            raise SingularMatrixError(f"condition matrix is singular (cond={cond:.3e})")
    weights = dense_solve(M, rhs)
    if cond > COND_WARN:
        msg = f"ill-conditioned assembly matrix (cond={cond:.3e})"
        notes.append(msg)
        warnings.warn(msg, ConditioningWarning, stacklevel=3)
    return SolveReport(ps, weights, shifts, cond, time.perf_counter() - t_start, tuple(notes))


def solve_ivp(ps, t0, values):
    """Weights matching ``y^(m)(t0) = values[m]`` for m = 0..n-1."""
    values = np.asarray(values, dtype=complex)
    if values.shape != (ps.order,):
        raise InvalidArgumentError(f"need {ps.order} initial values, got {values.shape}")
    return _solve_conditions(ps, [(float(t0), m, values[m]) for m in range(ps.order)], False)


def solve_bvp(ps, conditions):
    """Weights matching conditions ``(point, derivative order, value)``."""
    conditions = [(float(t), int(m), complex(v)) for t, m, v in conditions]
    if len(conditions) != ps.order:
        raise InvalidArgumentError(f"need exactly {ps.order} conditions, got {len(conditions)}")
    keys = [(t, m) for t, m, _ in conditions]
    if len(set(keys)) != len(keys):
        raise SingularMatrixError("duplicate conditions make the system singular")
    return _solve_conditions(ps, conditions, True)


def frequency_omega(ode, quad_points=256, rtol=1e-8, max_points=1 << 16):
    """``max_j int_a^b |lambda_j(t)| dt`` over branch-matched eigenvalues.

    Composite 16-point Gauss-Legendre, doubling the panel count until the
    estimate settles to ``rtol``.
    """
    a, b = ode.interval
    xg, wg = np.polynomial.legendre.leggauss(16)
    panels = max(1, int(quad_points) // 16)
    prev = None
    while True:
        edges = np.linspace(a, b, panels + 1)
        hw = 0.5 * np.diff(edges)
        t = (hw[:, None] * xg[None, :] + 0.5 * (edges[:-1] + edges[1:])[:, None]).ravel()
        w = (hw[:, None] * wg[None, :]).ravel()
        lam = companion_eigs(ode.q(t).T)
        try:
            lam = _match_branches(lam, t)
        except TurningPointError:
            lam = np.sort_complex(lam)
        est = float(np.max(np.abs(lam).T @ w))
        if prev is not None and abs(est - prev) <= rtol * abs(est):
            return est
        if t.size >= max_points:
            return est
        prev = est
        panels *= 2
