"""Small dense complex linear algebra used by the solver.

The truncated least-squares solve is dispatched to the compiled kernel when
it is available; see :mod:`phasekit.kernels`.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, SingularMatrixError

__all__ = [
    "CompanionSpectrum",
    "companion_matrix",
    "companion_eigs",
    "truncated_lsq",
    "dense_solve",
    "DEFAULT_QR_TOL",
]

#: relative threshold on |R_jj| / |R_00| below which pivots are dropped
DEFAULT_QR_TOL = 1e2 * np.finfo(float).eps


@dataclass(frozen=True)
class CompanionSpectrum:
    order: int
    eigenvalues: np.ndarray


def companion_matrix(q):
    """Coefficient matrix of ``y^(n) + q_{n-1} y^(n-1) + ... + q_0 y = 0``.

    ``q`` has shape (n,) or (N, n); the result is (n, n) or (N, n, n).
    """
    q = np.asarray(q, dtype=complex)
    n = q.shape[-1]
    A = np.zeros(q.shape[:-1] + (n, n), dtype=complex)
    idx = np.arange(n - 1)
    A[..., idx, idx + 1] = 1.0
    A[..., n - 1, :] = -q
    return A


def companion_eigs(q):
    """Eigenvalues of the coefficient matrix, i.e. roots of
    ``z^n + q_{n-1} z^{n-1} + ... + q_0``.

    Accepts a stack of coefficient vectors (N, n) and then returns an (N, n)
    array instead of a :class:`CompanionSpectrum`.
    """
    q = np.asarray(q, dtype=complex)
    if q.shape[-1] < 2:
        raise InvalidArgumentError("companion_eigs needs n >= 2")
    if not np.all(np.isfinite(q)):
        raise InvalidArgumentError("non-finite coefficients")
    # LAPACK geev balances, reduces to Hessenberg form and runs shifted QR
    lam = np.linalg.eigvals(companion_matrix(q))
    if q.ndim == 1:
        return CompanionSpectrum(q.shape[0], lam)
    return lam


def truncated_lsq(B, rhs, tol=DEFAULT_QR_TOL):
    """Solve ``B x = rhs`` by column-pivoted QR, dropping weak pivots.

    Diagonal entries of R with ``|R_jj| < tol |R_00|`` are truncated and the
    corresponding pivot columns get a zero component.  ``rhs`` may be a
    matrix of several right-hand sides.
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    B = np.asarray(B, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or rhs.shape[0] != B.shape[0]:
        raise InvalidArgumentError(f"incompatible shapes {B.shape} and {rhs.shape}")
    return kernels.truncated_lsq(B, rhs, float(tol))


def dense_solve(M, rhs):
    """LU solve with partial pivoting; raises on an exactly singular pivot."""
    M = np.asarray(M, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or rhs.shape[0] != M.shape[0]:
        raise InvalidArgumentError(f"incompatible shapes {M.shape} and {rhs.shape}")
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
