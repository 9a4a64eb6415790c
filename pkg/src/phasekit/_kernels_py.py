"""Pure numpy versions of the hot kernels.

Used when the compiled extension :mod:`phasekit._kernels` is not built, and
as the cross-check for it in the test suite.  Signatures and results match
the compiled module exactly (up to rounding).
"""

import numpy as np
import scipy.linalg as sla

IMPLEMENTATION = "python"


def truncated_lsq(B, rhs, tol):
    k = B.shape[1]
    Q, R, piv = sla.qr(B, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.count_nonzero(d >= tol * d[0])) if d[0] > 0 else 0
    # |R_jj| is non-increasing under column pivoting, so kept pivots lead
    y = Q.conj().T @ rhs
    x = np.zeros((k,) + rhs.shape[1:], dtype=complex)
    if rank:
        x[piv[:rank]] = sla.solve_triangular(R[:rank, :rank], y[:rank])
    return x


def _solve(M, rhs):
    try:
        lu, piv = sla.lu_factor(M, check_finite=False)
    except (ValueError, np.linalg.LinAlgError):
        return None
    if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0):
        return None
    return sla.lu_solve((lu, piv), rhs, check_finite=False)


def _system(S, A):
    k, m = A.shape[0], A.shape[1]
    T = np.einsum("pq,qil->piql", S, A).reshape(k * m, k * m)
    return np.eye(k * m, dtype=complex) - T


def correction_solve(S, A, R):
    """Solve ``delta = R + S A delta`` (the Newton correction form).

    Returns ``(delta, ok)`` with delta of shape (k, m).
    """
    k, m = R.shape
    d = _solve(_system(S, A), R.reshape(k * m))
    if d is None or not np.all(np.isfinite(d)):
        return np.full((k, m), np.nan + 0j), False
    return d.reshape(k, m), True


def linear_local(S, A, f, uc):
    """Solve ``u = uc + S (A u + f)`` on one interval.

    S (k, k) integration matrix; A (k, m, m) coefficient at the nodes;
    f (k, m) or None; uc (m,) or (m, r).  Returns (U, ok) with U of shape
    (k, m) or (k, m, r).
    """
    k, m = A.shape[0], A.shape[1]
    single = uc.ndim == 1
    ucm = uc[:, None] if single else uc
    M = _system(S, A)
    rhs = np.broadcast_to(ucm, (k,) + ucm.shape).astype(complex)
    if f is not None:
        rhs = rhs + (S @ f)[:, :, None]
    U = _solve(M, rhs.reshape(k * m, -1))
    if U is None or not np.all(np.isfinite(U)):
        return np.full((k, m) if single else (k, m, ucm.shape[1]), np.nan + 0j), False
    U = U.reshape(k, m, -1)
    return (U[:, :, 0] if single else U), True


def _g_terms(coef, qidx, exps, qext, u, need_jac):
    # values of G and dG/du at the k nodes
    mono = np.prod(u[:, None, :] ** exps[None, :, :], axis=-1)
    w = qext[:, qidx] * coef
    g = (mono * w).sum(axis=1)
    if not need_jac:
        return g, None
    m = u.shape[1]
    dg = np.empty((u.shape[0], m), dtype=complex)
    for i in range(m):
        e = exps.copy()
        fac = e[:, i].astype(float)
        e[:, i] = np.maximum(e[:, i] - 1, 0)
        dg[:, i] = ((np.prod(u[:, None, :] ** e[None], axis=-1) * w) @ fac)
    return g, dg


def _rhs_jac(coef, qidx, exps, qext, u):
    g, dg = _g_terms(coef, qidx, exps, qext, u, True)
    k, m = u.shape
    F = np.empty_like(u)
    F[:, :-1] = u[:, 1:]
    F[:, -1] = -g
    J = np.zeros((k, m, m), dtype=complex)
    idx = np.arange(m - 1)
    J[:, idx, idx + 1] = 1.0
    J[:, m - 1, :] = -dg
    return F, J


def newton_loop(step, U, maxit, tol, stall_tol):
    """Iterate ``U <- step(U)`` until the update is below ``tol * scale``.

    An update that stops shrinking (from the second iteration on) while
    below ``stall_tol * scale`` has hit the roundoff floor of the local
    system and also counts as converged, as does a final update below that
    level.  Returns ``(U, converged, iterations, ok)``.
    """
    prev = np.inf
    delta = np.inf
    it = 0
    for it in range(1, maxit + 1):
        Unew, ok = step(U)
        if not ok or not np.all(np.isfinite(Unew)):
            return U, False, it, False
        delta = float(np.max(np.abs(Unew - U)))
        U = Unew
        scale = max(1.0, float(np.max(np.abs(U))))
        if delta <= tol * scale:
            return U, True, it, True
        if it >= 2 and delta >= prev and delta <= stall_tol * scale:
            return U, True, it, True
        prev = delta
    return U, bool(delta <= stall_tol * max(1.0, float(np.max(np.abs(U))))), it, True


def riccati_local(S, t, q, w, coef, qidx, exps, maxit, tol, stall_tol):
    """Trapezoid predictor plus Newton for the first-order Riccati system on
    one interval.

    S (k, k) integration matrix; t (k,) nodes; q (k, n) coefficients at the
    nodes; w (m,) initial value with m = n - 1.  Returns
    ``(U, converged, iterations, ok)``.
    """
    k, n = q.shape
    m = n - 1
    qext = np.concatenate((q, np.ones((k, 1), dtype=complex)), axis=1)

    # implicit trapezoid on the nodes themselves
    U = np.empty((k, m), dtype=complex)
    U[0] = w
    F0, _ = _rhs_jac(coef, qidx, exps, qext[:1], U[:1])
    Fp = F0[0]
    eye = np.eye(m)
    for p in range(1, k):
        h = t[p] - t[p - 1]
        v = U[p - 1].copy()
        base = U[p - 1] + 0.5 * h * Fp
        for _ in range(10):
            Fv, Jv = _rhs_jac(coef, qidx, exps, qext[p:p + 1], v[None])
            res = v - base - 0.5 * h * Fv[0]
            try:
                dv = np.linalg.solve(eye - 0.5 * h * Jv[0], -res)
            except np.linalg.LinAlgError:
                break
            v = v + dv
            if np.max(np.abs(dv)) <= 1e-14 * max(1.0, np.max(np.abs(v))):
                break
        if not np.all(np.isfinite(v)):
            return U, False, 0, False
        U[p] = v
        Fp, _ = _rhs_jac(coef, qidx, exps, qext[p:p + 1], v[None])
        Fp = Fp[0]

    def step(U):
        F, J = _rhs_jac(coef, qidx, exps, qext, U)
        delta, ok = correction_solve(S, J, w[None, :] + S @ F - U)
        return U + delta, ok

    U, converged, it, ok = newton_loop(step, U, maxit, tol, stall_tol)
    return U, converged, it, bool(ok and np.all(np.isfinite(U)))
