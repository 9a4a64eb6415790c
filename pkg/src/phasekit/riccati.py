"""The (n-1)st order Riccati equation for a scalar order-n equation.

Substituting ``y = exp(int r)`` into the scalar equation gives
``y^(j) = P_j y`` with ``P_0 = 1`` and ``P_{j+1} = P_j' + r P_j``, so ``r``
must satisfy

    P_n + q_{n-1} P_{n-1} + ... + q_0 P_0 = 0.

Two representations are provided.  On a Chebyshev grid the recursion is run
with the spectral differentiation matrix (used by the Levin stage).
Pointwise, each ``P_j`` is a polynomial in the jet ``(r, r', ..., r^(j-1))``;
those polynomials drive the first-order system integrated by the adaptive
solver and the evaluation of basis derivatives.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .chebkit import ChebGrid, diff_matrix
from .errors import InvalidArgumentError

__all__ = [
    "RiccatiGridState",
    "pk_values",
    "riccati_residual",
    "riccati_jacobian",
    "JetPolynomial",
    "jet_polynomials",
    "RiccatiSystem",
    "riccati_system",
]


# ---------------------------------------------------------------------------
# grid form
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RiccatiGridState:
    """Candidate ``r`` sampled on a grid, with the coefficients there.

    ``q_vals`` has shape (n, k): row j holds q_j at the nodes.
    """

    grid: ChebGrid
    r_vals: np.ndarray
    q_vals: np.ndarray
    D: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r_vals, dtype=complex)
        q = np.atleast_2d(np.asarray(self.q_vals, dtype=complex))
        if r.shape != (self.grid.k,) or q.shape[1] != self.grid.k:
            raise InvalidArgumentError("values do not match the grid size")
        if q.shape[0] < 2:
            raise InvalidArgumentError("need order n >= 2")
        object.__setattr__(self, "r_vals", r)
        object.__setattr__(self, "q_vals", q)
        if self.D is None:
            object.__setattr__(self, "D", diff_matrix(self.grid))

    @property
    def n(self):
        return self.q_vals.shape[0]

    @cached_property
    def derivatives(self):
        """Rows r, r', ..., r^(n-2) obtained by repeated application of D."""
        rows = [self.r_vals]
        for _ in range(self.n - 2):
            rows.append(self.D @ rows[-1])
        return np.array(rows)


def pk_values(state, n=None):
    """Node values of P_0 .. P_n, shape (n + 1, k)."""
    n = state.n if n is None else n
    D, r = state.D, state.r_vals
    P = [np.ones_like(r)]
    for _ in range(n):
        P.append(D @ P[-1] + r * P[-1])
    return np.array(P)


def riccati_residual(state):
    n = state.n
    P = pk_values(state, n)
    return P[n] + np.einsum("jk,jk->k", state.q_vals, P[:n])


def riccati_jacobian(state):
    """Frechet derivative of the residual with respect to the node values of r.

    ``M_0 = 0``, ``M_{j+1} = (D + diag r) M_j + diag(P_j)`` and the result is
    ``M_n + sum_j diag(q_j) M_j``.
    """
    n = state.n
    D, r = state.D, state.r_vals
    P = pk_values(state, n - 1)
    L = D + np.diag(r)
    M = np.zeros(D.shape, dtype=complex)
    B = np.zeros(D.shape, dtype=complex)
    for j in range(n):
        # here M = M_j
        if j:
            B += state.q_vals[j][:, None] * M
        M = L @ M
        M[np.diag_indices_from(M)] += P[j]
    return B + M


# ---------------------------------------------------------------------------
# pointwise (jet) form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JetPolynomial:
    """``sum_t coef[t] * prod_i u_i ** exps[t, i]`` over jet variables u."""

    coef: np.ndarray
    exps: np.ndarray

    def __call__(self, jet):
        """Evaluate at jet values of shape (..., nvars)."""
        jet = np.asarray(jet)
        terms = np.prod(jet[..., None, :] ** self.exps, axis=-1)
        return terms @ self.coef


def _differentiate(poly, nvars):
    out = {}
    for e, c in poly.items():
        for i, ei in enumerate(e):
            if ei == 0:
                continue
            if i + 1 >= nvars:
                raise InvalidArgumentError("jet too short for differentiation")
            ne = list(e)
            ne[i] -= 1
            ne[i + 1] += 1
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c * ei
    return out


@lru_cache(maxsize=None)
def _jet_dicts(n):
    nvars = max(n, 1)
    zero = (0,) * nvars
    P = [{zero: 1}]
    for _ in range(n):
        prev = P[-1]
        nxt = _differentiate(prev, nvars)
        for e, c in prev.items():
            ne = (e[0] + 1,) + e[1:]
            nxt[ne] = nxt.get(ne, 0) + c
        P.append({e: c for e, c in nxt.items() if c})
    return tuple(P)


def _as_poly(d, nvars):
    keys = sorted(d)
    coef = np.array([d[e] for e in keys], dtype=float)
    exps = np.array([e[:nvars] for e in keys], dtype=np.int64).reshape(len(keys), nvars)
    return JetPolynomial(coef, exps)


@lru_cache(maxsize=None)
def jet_polynomials(n):
    """P_0 .. P_n as polynomials in the jet (r, r', ..., r^(n-1))."""
    return tuple(_as_poly(d, max(n, 1)) for d in _jet_dicts(n))


@dataclass(frozen=True)
class RiccatiSystem:
    """First-order form of the Riccati equation for ``u = (r, ..., r^(n-2))``.

    ``u_i' = u_{i+1}`` for i < n - 2 and ``u_{n-2}' = -G(t, u)`` where
    ``G = P_n - r^(n-1) + sum_j q_j P_j`` (P_n is linear in r^(n-1) with unit
    coefficient).  ``G`` is stored as a flat term list: term t contributes
    ``coef[t] * q_{qidx[t]} * prod u ** exps[t]`` with ``qidx == n`` meaning 1.
    """

    n: int
    coef: np.ndarray
    qidx: np.ndarray
    exps: np.ndarray

    @property
    def dim(self):
        return self.n - 1

    def _qext(self, q):
        # q: (N, n) -> (N, n + 1) with a trailing column of ones
        q = np.asarray(q, dtype=complex)
        return np.concatenate((q, np.ones(q.shape[:-1] + (1,), dtype=complex)), axis=-1)

    def g(self, q, u):
        """G at stacked points; q (N, n), u (N, n - 1)."""
        mono = np.prod(u[..., None, :] ** self.exps, axis=-1)
        return (mono * self._qext(q)[..., self.qidx]) @ self.coef

    def rhs(self, q, u):
        u = np.asarray(u, dtype=complex)
        out = np.empty_like(u)
        out[..., :-1] = u[..., 1:]
        out[..., -1] = -self.g(q, u)
        return out

    def jacobian(self, q, u):
        """d rhs / d u, shape (N, n - 1, n - 1)."""
        u = np.asarray(u, dtype=complex)
        m = self.dim
        J = np.zeros(u.shape + (m,), dtype=complex)
        idx = np.arange(m - 1)
        J[..., idx, idx + 1] = 1.0
        qe = self._qext(q)[..., self.qidx] * self.coef
        for i in range(m):
            e = self.exps.copy()
            factor = e[:, i].astype(float)
            e[:, i] = np.maximum(e[:, i] - 1, 0)
            mono = np.prod(u[..., None, :] ** e, axis=-1)
            J[..., m - 1, i] = -(mono * qe) @ factor
        return J


@lru_cache(maxsize=None)
def riccati_system(n):
    if n < 2:
        raise InvalidArgumentError("order must be at least 2")
    P = _jet_dicts(n)
    m = n - 1
    top = tuple(1 if i == m else 0 for i in range(n))
    coef, qidx, exps = [], [], []
    for e, c in P[n].items():
        if e == top:
            continue
        if e[m]:
            raise AssertionError("P_n is not linear in the top derivative")
        coef.append(c)
        qidx.append(n)
        exps.append(e[:m])
    for j in range(n):
        for e, c in P[j].items():
            coef.append(c)
            qidx.append(j)
            exps.append(e[:m])
    return RiccatiSystem(
        n,
        np.array(coef, dtype=float),
        np.array(qidx, dtype=np.int64),
        np.array(exps, dtype=np.int64).reshape(len(coef), m),
    )
