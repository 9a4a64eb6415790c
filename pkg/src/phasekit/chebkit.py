"""Chebyshev spectral primitives on extremal (Lobatto) grids.

Every function here works with the ``k`` point grid

    t_j = (b - a)/2 * cos(pi (k - j - 1)/(k - 1)) + (b + a)/2,  j = 0..k-1,

which runs from ``a`` to ``b`` in increasing order.  Coefficient vectors are
with respect to ``T_j`` of the affinely mapped argument in ``[-1, 1]``.

The module also provides :class:`PiecewiseCheb`, the container used for every
function the solver produces.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .errors import DomainError, InvalidArgumentError

__all__ = [
    "ChebGrid",
    "PiecewiseCheb",
    "cheb_nodes",
    "diff_matrix",
    "integration_matrix",
    "vals_to_coeffs",
    "coeffs_to_vals",
    "coeff_tail_ratio",
    "cheb_eval",
    "cheb_deriv_coeffs",
    "pw_eval",
    "chebfit_adaptive",
]


# ---------------------------------------------------------------------------
# reference-interval tables, cached per k
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _ref_nodes(k):
    # sin form is exactly antisymmetric, so the middle node is exactly 0
    j = np.arange(k)
    x = np.sin(np.pi * (2 * j - (k - 1)) / (2 * (k - 1)))
    x[0], x[-1] = -1.0, 1.0
    x.flags.writeable = False
    return x


@lru_cache(maxsize=None)
def _ref_diff(k):
    x = _ref_nodes(k)
    c = np.ones(k)
    c[0] = c[-1] = 2.0
    sign = (-1.0) ** np.arange(k)
    X = x[:, None] - x[None, :]
    np.fill_diagonal(X, 1.0)
    D = (np.outer(c * sign, 1.0 / (c * sign))) / X
    np.fill_diagonal(D, 0.0)
    # negative-sum trick: rows annihilate constants exactly
    D[np.diag_indices(k)] = -D.sum(axis=1)
    D.flags.writeable = False
    return D


@lru_cache(maxsize=None)
def _ref_vander(k):
    """``V[j, m] = T_m(x_j)``, built from the node angles."""
    theta = np.pi * (k - 1 - np.arange(k)) / (k - 1)
    V = np.cos(np.outer(theta, np.arange(k)))
    V.flags.writeable = False
    return V


@lru_cache(maxsize=None)
def _ref_vander_inv(k):
    N = k - 1
    V = _ref_vander(k)
    w = np.ones(k)
    w[0] = w[-1] = 0.5
    Vinv = (2.0 / N) * (V * w[:, None]).T
    Vinv[0] *= 0.5
    Vinv[-1] *= 0.5
    Vinv.flags.writeable = False
    return Vinv


@lru_cache(maxsize=None)
def _ref_integ(k):
    # values at the nodes of the exact (degree k) antiderivative of the
    # interpolant, vanishing at x = -1
    Q = npcheb.chebint(np.eye(k), lbnd=-1.0, axis=0)  # (k + 1, k)
    Vfull = npcheb.chebvander(_ref_nodes(k), k)  # (k, k + 1)
    S = Vfull @ Q @ _ref_vander_inv(k)
    S[0] = 0.0
    S.flags.writeable = False
    return S


# ---------------------------------------------------------------------------
# grids and matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChebGrid:
    """Extremal Chebyshev grid of ``k`` nodes on ``interval``."""

    k: int
    interval: tuple
    nodes: np.ndarray

    @property
    def a(self):
        return self.interval[0]

    @property
    def b(self):
        return self.interval[1]

    @property
    def half_width(self):
        return 0.5 * (self.interval[1] - self.interval[0])


def cheb_nodes(k, interval=(-1.0, 1.0)):
    """Return the ``k`` point extremal Chebyshev grid on ``interval``."""
    if int(k) != k or k < 2:
        raise InvalidArgumentError(f"need an integer k >= 2, got {k!r}")
    k = int(k)
    a, b = float(interval[0]), float(interval[1])
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise InvalidArgumentError(f"degenerate interval ({a}, {b})")
    t = 0.5 * (b - a) * _ref_nodes(k) + 0.5 * (b + a)
    t[0], t[-1] = a, b
    t.flags.writeable = False
    return ChebGrid(k, (a, b), t)


def diff_matrix(grid):
    """Spectral differentiation matrix on ``grid`` (exact for degree < k)."""
    return _ref_diff(grid.k) / grid.half_width


def integration_matrix(grid):
    """Matrix taking node values of f to node values of its integral from a."""
    return _ref_integ(grid.k) * grid.half_width


def vals_to_coeffs(values):
    """Chebyshev coefficients of the interpolant of node values.

    ``values`` may carry extra trailing axes; the first axis runs over nodes.
    """
    values = np.asarray(values)
    return np.tensordot(_ref_vander_inv(values.shape[0]), values, axes=1)


def coeffs_to_vals(coeffs):
    coeffs = np.asarray(coeffs)
    return np.tensordot(_ref_vander(coeffs.shape[0]), coeffs, axes=1)


def coeff_tail_ratio(coeffs):
    """Norm of the last two coefficients over the norm of all of them.

    Operates along the last axis.  Returns 0 where all coefficients vanish.
    """
    c = np.asarray(coeffs)
    if c.shape[-1] < 4:
        raise InvalidArgumentError("tail ratio needs at least 4 coefficients")
    mag = np.abs(c) ** 2
    total = mag.sum(axis=-1)
    tail = mag[..., -2:].sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sqrt(tail / total)
    ratio = np.where(total > 0, ratio, 0.0)
    return float(ratio) if ratio.ndim == 0 else ratio


def cheb_deriv_coeffs(coeffs, m=1, half_width=1.0):
    """Coefficients of the m-th derivative, scaled for an interval of the
    given half width.  Uses the backward recurrence
    ``c'_{j-1} = c'_{j+1} + 2 j c_j``; length is preserved (zero padded)."""
    c = np.array(coeffs, dtype=complex)
    k = c.shape[-1]
    for _ in range(m):
        d = np.zeros_like(c)
        for j in range(k - 1, 0, -1):
            d[..., j - 1] = 2.0 * j * c[..., j]
            if j + 1 < k:
                d[..., j - 1] += d[..., j + 1]
        d[..., 0] *= 0.5
        c = d / half_width
    return c


def cheb_eval(coeffs, x):
    """Clenshaw evaluation of Chebyshev series at reference points x.

    ``coeffs`` is either (k,) or (N, k) (one row per entry of ``x``).
    """
    c = np.asarray(coeffs)
    x = np.asarray(x, dtype=float)
    k = c.shape[-1]
    b1 = np.zeros(np.broadcast_shapes(c.shape[:-1], x.shape), dtype=complex)
    b2 = np.zeros_like(b1)
    two_x = 2.0 * x
    for j in range(k - 1, 0, -1):
        b1, b2 = c[..., j] + two_x * b1 - b2, b1
    return c[..., 0] + x * b1 - b2


# ---------------------------------------------------------------------------
# piecewise expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PiecewiseCheb:
    """Piecewise Chebyshev expansion of order k - 1 on a partition.

    Piece ``i`` covers ``[x_i, x_{i+1})``; the last piece is closed on the
    right, so every point of ``[x_0, x_m]`` has exactly one owner.
    """

    partition: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.partition, dtype=float)
        c = np.asarray(self.coeffs, dtype=complex)
        if p.ndim != 1 or p.size < 2:
            raise InvalidArgumentError("partition needs at least two points")
        if np.any(np.diff(p) <= 0):
            raise InvalidArgumentError("partition must be strictly increasing")
        if c.ndim != 2 or c.shape[0] != p.size - 1:
            raise InvalidArgumentError(
                f"expected {p.size - 1} coefficient blocks, got shape {c.shape}")
        p.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "partition", p)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, partition, values):
        """Build from node values, one row of k values per piece."""
        values = np.asarray(values)
        return cls(partition, vals_to_coeffs(values.T).T)

    @classmethod
    def from_function(cls, f, partition, k=16):
        """Interpolate a vectorized callable on each piece of ``partition``."""
        partition = np.asarray(partition, dtype=float)
        rows = [f(cheb_nodes(k, (partition[i], partition[i + 1])).nodes)
                for i in range(partition.size - 1)]
        return cls.from_values(partition, np.array(rows))

    @property
    def order(self):
        return self.coeffs.shape[1]

    @property
    def npieces(self):
        return self.coeffs.shape[0]

    @property
    def ncoeffs(self):
        return self.coeffs.size

    @property
    def domain(self):
        return float(self.partition[0]), float(self.partition[-1])

    def owner(self, t):
        """Index of the piece owning each point of ``t``."""
        t = np.asarray(t, dtype=float)
        a, b = self.domain
        if np.any((t < a) | (t > b)) or np.any(np.isnan(t)):
            raise DomainError(f"points outside [{a}, {b}]")
        idx = np.searchsorted(self.partition, t, side="right") - 1
        return np.minimum(idx, self.npieces - 1)

    def __call__(self, t, deriv=0):
        return pw_eval(self, t, deriv)

    def block_values(self):
        """Node values on every piece, shape (m, k)."""
        return coeffs_to_vals(self.coeffs.T).T

    def derivative(self, m=1):
        hw = 0.5 * np.diff(self.partition)[:, None]
        c = self.coeffs
        for _ in range(m):
            c = cheb_deriv_coeffs(c, 1, hw)
        return PiecewiseCheb(self.partition, c)

    def antiderivative(self, anchor=None, value=0.0):
        """Continuous antiderivative equal to ``value`` at ``anchor``
        (default: left end of the domain)."""
        # node values of each piece's exact integral, chained left to right;
        # re-interpolating keeps breakpoint values exact
        hw = 0.5 * np.diff(self.partition)
        vals = self.block_values()
        integ = (_ref_integ(self.order) @ vals.T).T * hw[:, None]
        integ += np.concatenate(([0.0], np.cumsum(integ[:, -1])[:-1]))[:, None]
        out = PiecewiseCheb.from_values(self.partition, integ)
        if anchor is None:
            anchor = self.partition[0]
        shift = value - out(anchor)
        c = out.coeffs.copy()
        c[:, 0] += shift
        return PiecewiseCheb(self.partition, c)

    def to_json(self):
        return {
            "order": int(self.order),
            "partition": [float(x) for x in self.partition],
            "blocks": [[float(z.real), float(z.imag)] for z in self.coeffs.ravel()],
        }

    @classmethod
    def from_json(cls, obj):
        k = int(obj["order"])
        partition = np.asarray(obj["partition"], dtype=float)
        pairs = np.asarray(obj["blocks"], dtype=float).reshape(-1, 2)
        coeffs = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(-1, k)
        return cls(partition, coeffs)

    @staticmethod
    def concatenate(left, right):
        """Join two expansions whose domains abut."""
        if left.order != right.order:
            raise InvalidArgumentError("cannot join expansions of different order")
        if left.partition[-1] != right.partition[0]:
            raise InvalidArgumentError("domains do not abut")
        return PiecewiseCheb(
            np.concatenate((left.partition, right.partition[1:])),
            np.vstack((left.coeffs, right.coeffs)),
        )


def pw_eval(f, t, deriv=0):
    """Evaluate ``f`` (or its ``deriv``-th derivative) at ``t``.

    Scalar in, complex scalar out; arrays are evaluated elementwise.
    """
    if deriv < 0 or deriv > f.order - 1:
        raise InvalidArgumentError(f"derivative order {deriv} out of range")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    idx = f.owner(t)
    lo = f.partition[idx]
    hi = f.partition[idx + 1]
    hw = 0.5 * (hi - lo)
    x = (t - lo) / hw - 1.0
    c = f.coeffs[idx]
    if deriv:
        c = cheb_deriv_coeffs(c, deriv, hw[:, None])
    out = cheb_eval(c, x)
    return complex(out[0]) if scalar else out


def chebfit_adaptive(f, a, b, k=16, eps=1e-12, max_pieces=1 << 16):
    """Adaptive piecewise interpolant of a vectorized callable.

    Bisects until the tail ratio on every piece is at most ``eps``.
    """
    todo = [(float(a), float(b))]
    parts, blocks = [], []
    while todo:
        c, d = todo.pop()
        coef = vals_to_coeffs(np.asarray(f(cheb_nodes(k, (c, d)).nodes), dtype=complex))
        mid = 0.5 * (c + d)
        if coeff_tail_ratio(coef) <= eps or not c < mid < d:
            parts.append(c)
            blocks.append(coef)
            if len(blocks) > max_pieces:
                raise InvalidArgumentError("piece budget exhausted")
        else:
            todo.append((mid, d))
            todo.append((c, mid))
    parts.append(float(b))
    return PiecewiseCheb(np.array(parts), np.array(blocks))
