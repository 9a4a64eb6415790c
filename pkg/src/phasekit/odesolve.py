"""Adaptive piecewise-Chebyshev solver for first-order systems.

Solves ``u' = F(t, u)`` with a condition at one point.  Intervals are taken
from a to-do list in order of integration (leftmost first when marching to
the right), solved on a k-point Chebyshev grid and accepted when the last two
Chebyshev coefficients of every component are small relative to the whole
expansion; otherwise the interval is split in half.  The initial value on
each interval comes from the previously accepted one.

Local problems are solved in integral form, ``u = w + S F(u)`` with S the
spectral integration matrix.  Linear problems need one dense solve;
nonlinear ones use a trapezoid predictor followed by Newton's method, each
step solving ``(I - S J) delta = w + S F(u) - u`` for the correction.

Problems are objects with a ``local_solve(nodes, S, w)`` method returning
``(values, ok, newton_iterations)``; see :class:`LinearProblem`,
:class:`NonlinearProblem` and :class:`RiccatiProblem`.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .chebkit import (
    PiecewiseCheb,
    cheb_nodes,
    coeff_tail_ratio,
    integration_matrix,
    vals_to_coeffs,
    _ref_integ,
    _ref_nodes,
)
from ._kernels_py import correction_solve, newton_loop
from .errors import BudgetExhaustedError, InvalidArgumentError
from .linalg import companion_matrix
from .riccati import riccati_system

__all__ = [
    "AdaptiveConfig",
    "SystemSolution",
    "LinearProblem",
    "NonlinearProblem",
    "RiccatiProblem",
    "companion_problem",
    "solve_local_linear",
    "solve_local_nonlinear",
    "solve_adaptive",
]

NEWTON_MAXIT = 20
NEWTON_TOL = 1e-13
#: an update that stalls below this (relative) level is the roundoff floor
NEWTON_STALL_TOL = 1e-6


@dataclass(frozen=True)
class AdaptiveConfig:
    k: int = 16
    eps: float = 1e-12
    max_intervals: int = 1 << 16
    max_depth: int = 50

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidArgumentError("eps must be positive")
        if self.k < 4:
            raise InvalidArgumentError("k must be at least 4")


# ---------------------------------------------------------------------------
# local solvers
# ---------------------------------------------------------------------------

def solve_local_linear(A, f, interval, u_c, k=16):
    """Solve ``u' = A(t) u + f(t)``, ``u(c) = u_c`` on one interval.

    ``A`` maps node arrays (k,) to (k, m, m); ``f`` maps them to (k, m) or
    is None.  ``u_c`` may be (m,) or (m, r) for several initial values at
    once.  Returns node values and a success flag.
    """
    grid = cheb_nodes(k, interval)
    S = integration_matrix(grid)
    Avals = np.asarray(A(grid.nodes), dtype=complex)
    fvals = None if f is None else np.asarray(f(grid.nodes), dtype=complex)
    return kernels.linear_local(S, Avals, fvals, np.asarray(u_c, dtype=complex))


def _trapezoid(F, jac, t, w):
    k, m = t.size, w.size
    U = np.empty((k, m), dtype=complex)
    U[0] = w
    Fp = F(t[:1], U[:1])[0]
    eye = np.eye(m)
    for p in range(1, k):
        h = t[p] - t[p - 1]
        base = U[p - 1] + 0.5 * h * Fp
        v = U[p - 1].copy()
        for _ in range(10):
            Fv = F(t[p:p + 1], v[None])[0]
            Jv = jac(t[p:p + 1], v[None])[0]
            try:
                dv = np.linalg.solve(eye - 0.5 * h * Jv, base + 0.5 * h * Fv - v)
            except np.linalg.LinAlgError:
                break
            v = v + dv
            if np.max(np.abs(dv)) <= 1e-14 * max(1.0, np.max(np.abs(v))):
                break
        U[p] = v
        Fp = F(t[p:p + 1], v[None])[0]
    return U


def _nonlinear_on_nodes(F, jac, t, S, w, maxit=NEWTON_MAXIT, tol=NEWTON_TOL):
    with np.errstate(all="ignore"):
        U = _trapezoid(F, jac, t, w)
        if not np.all(np.isfinite(U)):
            return U, False, 0

        def step(U):
            Fv = np.asarray(F(t, U), dtype=complex)
            J = np.asarray(jac(t, U), dtype=complex)
            delta, ok = correction_solve(S, J, w[None, :] + S @ Fv - U)
            return U + delta, ok

        U, converged, it, ok = newton_loop(step, U, maxit, tol, NEWTON_STALL_TOL)
    return U, bool(converged and ok), it


def solve_local_nonlinear(F, jac, interval, u_c, k=16, maxit=NEWTON_MAXIT, tol=NEWTON_TOL):
    """Trapezoid predictor and Newton refinement on one interval.

    ``F(t, U)`` and ``jac(t, U)`` take node arrays (N,) and values (N, m)
    and return (N, m) and (N, m, m).  Returns ``(values, ok)``; ``ok`` is
    False when Newton fails to converge within ``maxit`` iterations.
    """
    grid = cheb_nodes(k, interval)
    S = integration_matrix(grid)
    U, ok, _ = _nonlinear_on_nodes(F, jac, np.asarray(grid.nodes), S,
                                   np.asarray(u_c, dtype=complex), maxit, tol)
    return U, ok


# ---------------------------------------------------------------------------
# problem types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearProblem:
    """``u' = A(t) u + f(t)``; ``A`` and ``f`` are vectorized over t."""

    A: object
    f: object = None
    linear = True

    def local_solve(self, t, S, w):
        Avals = np.asarray(self.A(t), dtype=complex)
        fvals = None if self.f is None else np.asarray(self.f(t), dtype=complex)
        U, ok = kernels.linear_local(S, Avals, fvals, w)
        return U, ok, 0


@dataclass(frozen=True)
class NonlinearProblem:
    """``u' = F(t, u)`` with Jacobian ``jac``."""

    F: object
    jac: object
    linear = False

    def local_solve(self, t, S, w):
        return _nonlinear_on_nodes(self.F, self.jac, t, S, w)


@dataclass(frozen=True)
class RiccatiProblem:
    """First-order form of the Riccati equation of ``ode`` (see
    :class:`phasekit.riccati.RiccatiSystem`), solved by the compiled kernel
    when available."""

    ode: object
    linear = False

    def local_solve(self, t, S, w):
        sys = riccati_system(self.ode.order)
        q = self.ode.q(t).T
        with np.errstate(all="ignore"):
            U, conv, it, ok = kernels.riccati_local(
                S, t, q, w, sys.coef, sys.qidx, sys.exps, NEWTON_MAXIT, NEWTON_TOL,
                NEWTON_STALL_TOL)
        return U, bool(conv and ok), it

    def F(self, t, U):
        return riccati_system(self.ode.order).rhs(self.ode.q(t).T, U)

    def jac(self, t, U):
        return riccati_system(self.ode.order).jacobian(self.ode.q(t).T, U)


def companion_problem(ode, scale=1.0):
    """The scalar equation as a first-order linear system.

    The unknowns are ``z_m = y^(m) / scale^m`` for m = 0..n-1.  Choosing
    ``scale`` near the magnitude of the eigenvalues keeps the components of
    comparable size, which the per-component acceptance test needs when
    derivatives of high order dwarf the solution itself.
    """
    scale = float(scale)
    if not scale > 0:
        raise InvalidArgumentError("scale must be positive")
    powers = scale ** np.arange(ode.order)

    def A(t):
        C = companion_matrix(ode.q(t).T)
        return C * (powers[None, None, :] / powers[None, :, None])

    return LinearProblem(A)


# ---------------------------------------------------------------------------
# adaptive driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemSolution:
    """Piecewise solution of a first-order system.

    ``coeffs`` has shape (npieces, k, *shape) where ``shape`` is (m,) for a
    single solution or (m, r) when r initial values were propagated at once.
    """

    partition: np.ndarray
    coeffs: np.ndarray
    intervals_processed: int = 0
    newton_iterations: int = 0
    shape: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "shape", self.coeffs.shape[2:])

    @property
    def npieces(self):
        return self.coeffs.shape[0]

    def component(self, i, col=None):
        c = self.coeffs[:, :, i] if col is None else self.coeffs[:, :, i, col]
        return PiecewiseCheb(self.partition, c)

    @property
    def components(self):
        if len(self.shape) == 1:
            return [self.component(i) for i in range(self.shape[0])]
        return [[self.component(i, j) for j in range(self.shape[1])]
                for i in range(self.shape[0])]

    def __call__(self, t, deriv=0):
        """Values at ``t``, shape ``t.shape + self.shape``."""
        t = np.asarray(t, dtype=float)
        flat = self.coeffs.reshape(self.npieces, self.coeffs.shape[1], -1)
        out = [PiecewiseCheb(self.partition, flat[:, :, c])(t, deriv)
               for c in range(flat.shape[2])]
        return np.stack(out, axis=-1).reshape(t.shape + self.shape)

    def max_tail_ratio(self):
        c = np.moveaxis(self.coeffs, 1, -1)
        return float(np.max(coeff_tail_ratio(c)))

    @staticmethod
    def join(left, right):
        if left.partition[-1] != right.partition[0]:
            raise InvalidArgumentError("solutions do not abut")
        return SystemSolution(
            np.concatenate((left.partition, right.partition[1:])),
            np.concatenate((left.coeffs, right.coeffs)),
            left.intervals_processed + right.intervals_processed,
            left.newton_iterations + right.newton_iterations,
        )


def _march(problem, start, stop, w, config):
    """Solve from ``start`` toward ``stop`` (either direction)."""
    k = config.k
    forward = stop > start
    xref = _ref_nodes(k)
    Sref = _ref_integ(k)
    w = np.asarray(w, dtype=complex)

    # each entry: (near end, far end, depth); the stack top is nearest start
    todo = [(start, stop, 0)]
    pieces = []
    processed = 0
    newton_total = 0
    while todo:
        near, far, depth = todo.pop()
        processed += 1
        if processed > config.max_intervals:
            raise BudgetExhaustedError(
                f"interval budget of {config.max_intervals} exhausted near t={near:.16g}",
                partition=_breakpoints(pieces, start, forward), location=near)
        lo, hi = (near, far) if forward else (far, near)
        hw = 0.5 * (hi - lo)
        nodes = hw * xref + 0.5 * (hi + lo)
        nodes[0], nodes[-1] = lo, hi
        if forward:
            U, ok, its = problem.local_solve(nodes, Sref * hw, w)
        else:
            U, ok, its = problem.local_solve(nodes[::-1].copy(), -Sref * hw, w)
            if ok:
                U = U[::-1]
        newton_total += its
        if ok:
            coef = vals_to_coeffs(U)
            tail = coeff_tail_ratio(np.moveaxis(coef, 0, -1))
            ok = bool(np.all(np.isfinite(coef)) and np.max(tail) <= config.eps)
        if ok:
            pieces.append((lo, hi, coef))
            w = U[-1] if forward else U[0]
            continue
        mid = 0.5 * (near + far)
        if depth >= config.max_depth or not (min(near, far) < mid < max(near, far)):
            raise BudgetExhaustedError(
                f"could not resolve the solution near t={near:.16g} "
                f"(bisection depth {depth})",
                partition=_breakpoints(pieces, start, forward), location=near)
        todo.append((mid, far, depth + 1))
        todo.append((near, mid, depth + 1))

    if not forward:
        pieces.reverse()
    partition = np.array([p[0] for p in pieces] + [pieces[-1][1]])
    coeffs = np.array([p[2] for p in pieces])
    return SystemSolution(partition, coeffs, processed, newton_total)


def _breakpoints(pieces, start, forward):
    if not pieces:
        return np.array([start])
    ends = [p[1] for p in pieces] if forward else [p[0] for p in pieces]
    return np.array([start] + ends)


def solve_adaptive(problem, interval, v, config=None, eta=None):
    """Solve ``problem`` on ``interval`` with ``u(eta) = v``.

    ``eta`` defaults to the left endpoint.  For an interior ``eta`` the
    solver marches right from eta and left from eta and joins the results.
    """
    config = config or AdaptiveConfig()
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise InvalidArgumentError(f"degenerate interval ({a}, {b})")
    eta = a if eta is None else float(eta)
    if not a <= eta <= b:
        raise InvalidArgumentError(f"condition point {eta} outside ({a}, {b})")
    v = np.asarray(v, dtype=complex)
    if eta == a:
        return _march(problem, a, b, v, config)
    if eta == b:
        return _march(problem, b, a, v, config)
    left = _march(problem, eta, a, v, config)
    right = _march(problem, eta, b, v, config)
    return SystemSolution.join(left, right)
