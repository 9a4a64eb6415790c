# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels.

Same call signatures and results as :mod:`phasekit._kernels_py`.  Dense
factorizations go straight to LAPACK through scipy's Cython bindings so the
per-interval cost is not dominated by Python call overhead.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, isfinite, INFINITY
from scipy.linalg.cython_lapack cimport zgesv, zgeqp3, zunmqr

cnp.import_array()

IMPLEMENTATION = "cython"

ctypedef double complex cplx


cdef inline double cabs(cplx z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef inline bint cfinite(cplx z) nogil:
    return isfinite(z.real) and isfinite(z.imag)


def truncated_lsq(B, rhs, double tol):
    cdef int k = B.shape[0]
    cdef int ncol = B.shape[1]
    single = rhs.ndim == 1
    cdef cplx[::1, :] a = np.array(B, dtype=np.complex128, order="F")
    cdef cplx[::1, :] c = np.array(rhs.reshape(k, -1), dtype=np.complex128, order="F")
    cdef int nrhs = c.shape[1]
    cdef int[::1] jpvt = np.zeros(ncol, dtype=np.intc)
    cdef cplx[::1] tau = np.empty(min(k, ncol), dtype=np.complex128)
    cdef double[::1] rwork = np.empty(2 * ncol, dtype=np.float64)
    cdef int lwork = -1, info = 0, kk = min(k, ncol)
    cdef cplx wq
    zgeqp3(&k, &ncol, &a[0, 0], &k, &jpvt[0], &tau[0], &wq, &lwork, &rwork[0], &info)
    lwork = max(<int>wq.real, 1)
    cdef cplx[::1] work = np.empty(max(lwork, nrhs * ncol + 64), dtype=np.complex128)
    lwork = work.shape[0]
    zgeqp3(&k, &ncol, &a[0, 0], &k, &jpvt[0], &tau[0], &work[0], &lwork, &rwork[0], &info)
    if info != 0:
        raise RuntimeError(f"zgeqp3 failed with info={info}")
    cdef char side = b"L"
    cdef char trans = b"C"
    zunmqr(&side, &trans, &k, &nrhs, &kk, &a[0, 0], &k, &tau[0], &c[0, 0], &k,
           &work[0], &lwork, &info)
    if info != 0:
        raise RuntimeError(f"zunmqr failed with info={info}")

    cdef double r00 = cabs(a[0, 0])
    cdef int rank = 0, i, j, col
    if r00 > 0:
        while rank < kk and cabs(a[rank, rank]) >= tol * r00:
            rank += 1
    cdef cplx s
    # back substitution on the leading rank x rank block
    for col in range(nrhs):
        for i in range(rank - 1, -1, -1):
            s = c[i, col]
            for j in range(i + 1, rank):
                s = s - a[i, j] * c[j, col]
            c[i, col] = s / a[i, i]
    out = np.zeros((ncol, nrhs), dtype=np.complex128)
    cdef cplx[:, ::1] o = out
    for col in range(nrhs):
        for i in range(rank):
            o[jpvt[i] - 1, col] = c[i, col]
    return out[:, 0] if single else out


cdef int _dense_solve(cplx[::1, :] M, cplx[::1, :] rhs, int[::1] ipiv) noexcept nogil:
    cdef int N = M.shape[0], nrhs = rhs.shape[1], info = 0
    zgesv(&N, &nrhs, &M[0, 0], &N, &ipiv[0], &rhs[0, 0], &N, &info)
    return info


cdef int _linear_local(const double[:, ::1] S, const cplx[:, :, ::1] A,
                       const cplx[:, ::1] f, bint has_f, const cplx[:, ::1] uc,
                       cplx[::1, :] M, cplx[::1, :] rhs, int[::1] ipiv,
                       const cplx* sub=NULL) noexcept nogil:
    # unknown (p, i) sits at row p * m + i; ``sub`` (k, m), when given, is
    # subtracted from the right-hand side (Newton correction form)
    cdef int k = A.shape[0], m = A.shape[1], nr = uc.shape[1]
    cdef int p, q, i, l, r
    cdef double spq
    cdef cplx acc
    for q in range(k):
        for l in range(m):
            for p in range(k):
                spq = S[p, q]
                for i in range(m):
                    M[p * m + i, q * m + l] = -spq * A[q, i, l]
    for p in range(k * m):
        M[p, p] = M[p, p] + 1.0
    for p in range(k):
        for i in range(m):
            acc = 0
            if has_f:
                for q in range(k):
                    acc = acc + S[p, q] * f[q, i]
            if sub != NULL:
                acc = acc - sub[p * m + i]
            for r in range(nr):
                rhs[p * m + i, r] = uc[i, r] + acc
    return _dense_solve(M, rhs, ipiv)


def linear_local(S, A, f, uc):
    cdef int k = A.shape[0], m = A.shape[1]
    single = uc.ndim == 1
    ucm = np.ascontiguousarray((uc[:, None] if single else uc), dtype=np.complex128)
    cdef int nr = ucm.shape[1]
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef const cplx[:, :, ::1] Av = np.ascontiguousarray(A, dtype=np.complex128)
    cdef bint has_f = f is not None
    cdef const cplx[:, ::1] fv = np.ascontiguousarray(f if has_f else np.zeros((k, m)), dtype=np.complex128)
    cdef cplx[:, ::1] ucv = ucm
    rhs = np.empty((k * m, nr), dtype=np.complex128, order="F")
    cdef cplx[::1, :] Mv = np.empty((k * m, k * m), dtype=np.complex128, order="F")
    cdef cplx[::1, :] rv = rhs
    cdef int[::1] ipiv = np.empty(k * m, dtype=np.intc)
    cdef int info
    with nogil:
        info = _linear_local(Sv, Av, fv, has_f, ucv, Mv, rv, ipiv)
    U = rhs.reshape(k, m, nr)
    if info != 0 or not np.all(np.isfinite(U)):
        shape = (k, m, nr)
        return np.full(shape[:2] if single else shape, np.nan + 0j), False
    return (np.ascontiguousarray(U[:, :, 0]) if single else U), True


cdef inline cplx _ipow(cplx z, long e) noexcept nogil:
    cdef cplx out = 1
    while e > 0:
        out = out * z
        e -= 1
    return out


cdef void _rhs_jac(const double[::1] coef, const long[::1] qidx, const long[:, ::1] exps,
                   const cplx[:, ::1] q, int p, const cplx* u, int m,
                   cplx* F, cplx* J, bint need_jac) noexcept nogil:
    # F (m,), J (m, m) row-major, for node p at jet u
    cdef int nt = coef.shape[0], n = q.shape[1]
    cdef int t, i, l
    cdef cplx w, mono, g = 0, dmono
    for i in range(m - 1):
        F[i] = u[i + 1]
    if need_jac:
        for i in range(m * m):
            J[i] = 0
        for i in range(m - 1):
            J[i * m + i + 1] = 1.0
    for t in range(nt):
        w = coef[t]
        if qidx[t] < n:
            w = w * q[p, qidx[t]]
        mono = 1
        for i in range(m):
            mono = mono * _ipow(u[i], exps[t, i])
        g = g + w * mono
        if need_jac:
            for i in range(m):
                if exps[t, i] > 0:
                    dmono = exps[t, i]
                    for l in range(m):
                        if l == i:
                            dmono = dmono * _ipow(u[l], exps[t, l] - 1)
                        else:
                            dmono = dmono * _ipow(u[l], exps[t, l])
                    J[(m - 1) * m + i] = J[(m - 1) * m + i] - w * dmono
    F[m - 1] = -g


cdef bint _small_solve(cplx* A, cplx* b, int m) noexcept nogil:
    # in-place Gaussian elimination with partial pivoting, A row-major (m, m)
    cdef int i, j, r, piv
    cdef double best, v
    cdef cplx tmp, fac
    for i in range(m):
        piv = i
        best = cabs(A[i * m + i])
        for r in range(i + 1, m):
            v = cabs(A[r * m + i])
            if v > best:
                best = v
                piv = r
        if best == 0:
            return False
        if piv != i:
            for j in range(m):
                tmp = A[i * m + j]
                A[i * m + j] = A[piv * m + j]
                A[piv * m + j] = tmp
            tmp = b[i]
            b[i] = b[piv]
            b[piv] = tmp
        for r in range(i + 1, m):
            fac = A[r * m + i] / A[i * m + i]
            for j in range(i, m):
                A[r * m + j] = A[r * m + j] - fac * A[i * m + j]
            b[r] = b[r] - fac * b[i]
    for i in range(m - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, m):
            tmp = tmp - A[i * m + j] * b[j]
        b[i] = tmp / A[i * m + i]
    return True


def riccati_local(S, t, q, w, coef, qidx, exps, int maxit, double tol, double stall_tol):
    cdef int k = q.shape[0], n = q.shape[1]
    cdef int m = n - 1
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const cplx[:, ::1] qv = np.ascontiguousarray(q, dtype=np.complex128)
    cdef const double[::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const long[::1] iv = np.ascontiguousarray(qidx, dtype=np.int_)
    cdef const long[:, ::1] ev = np.ascontiguousarray(exps, dtype=np.int_)
    Uarr = np.empty((k, m), dtype=np.complex128)
    cdef cplx[:, ::1] U = Uarr
    cdef cplx[:, ::1] wv = np.ascontiguousarray(np.asarray(w, dtype=np.complex128).reshape(m, 1))
    cdef cplx[:, :, ::1] Jall = np.empty((k, m, m), dtype=np.complex128)
    cdef cplx[:, ::1] fall = np.empty((k, m), dtype=np.complex128)
    cdef cplx[::1, :] M = np.empty((k * m, k * m), dtype=np.complex128, order="F")
    cdef cplx[::1, :] rhs = np.empty((k * m, 1), dtype=np.complex128, order="F")
    cdef int[::1] ipiv = np.empty(k * m, dtype=np.intc)
    cdef cplx[::1] Fp = np.empty(m, dtype=np.complex128)
    cdef cplx[::1] Fv = np.empty(m, dtype=np.complex128)
    cdef cplx[::1] Jv = np.empty(m * m, dtype=np.complex128)
    cdef cplx[::1] v = np.empty(m, dtype=np.complex128)
    cdef cplx[::1] res = np.empty(m, dtype=np.complex128)
    cdef int p, i, l, it, inner, info
    cdef double h, dmax, umax, dd
    cdef bint converged = False, ok = True
    cdef double prev = INFINITY
    dmax = INFINITY
    cdef cplx acc

    with nogil:
        for i in range(m):
            U[0, i] = wv[i, 0]
        _rhs_jac(cv, iv, ev, qv, 0, &U[0, 0], m, &Fp[0], &Jv[0], False)
        # implicit trapezoid predictor on the nodes
        for p in range(1, k):
            h = tv[p] - tv[p - 1]
            for i in range(m):
                v[i] = U[p - 1, i]
            for inner in range(10):
                _rhs_jac(cv, iv, ev, qv, p, &v[0], m, &Fv[0], &Jv[0], True)
                for i in range(m):
                    res[i] = -(v[i] - U[p - 1, i] - 0.5 * h * (Fp[i] + Fv[i]))
                    for l in range(m):
                        Jv[i * m + l] = -0.5 * h * Jv[i * m + l]
                    Jv[i * m + i] = Jv[i * m + i] + 1.0
                if not _small_solve(&Jv[0], &res[0], m):
                    break
                dmax = 0
                umax = 1.0
                for i in range(m):
                    v[i] = v[i] + res[i]
                    dd = cabs(res[i])
                    if dd > dmax:
                        dmax = dd
                    if cabs(v[i]) > umax:
                        umax = cabs(v[i])
                if dmax <= 1e-14 * umax:
                    break
            for i in range(m):
                if not cfinite(v[i]):
                    ok = False
                U[p, i] = v[i]
            if not ok:
                break
            _rhs_jac(cv, iv, ev, qv, p, &v[0], m, &Fp[0], &Jv[0], False)

        it = 0
        while ok and it < maxit:
            it += 1
            for p in range(k):
                _rhs_jac(cv, iv, ev, qv, p, &U[p, 0], m, &fall[p, 0], &Jall[p, 0, 0], True)
            # correction form: (I - S J) delta = w + S F(U) - U
            info = _linear_local(Sv, Jall, fall, True, wv, M, rhs, ipiv, &U[0, 0])
            if info != 0:
                ok = False
                break
            dmax = 0
            umax = 1.0
            for p in range(k):
                for i in range(m):
                    dd = cabs(rhs[p * m + i, 0])
                    if not cfinite(rhs[p * m + i, 0]):
                        ok = False
                    if dd > dmax:
                        dmax = dd
                    acc = U[p, i] + rhs[p * m + i, 0]
                    U[p, i] = acc
                    if cabs(acc) > umax:
                        umax = cabs(acc)
            if not ok:
                break
            if dmax <= tol * umax:
                converged = True
                break
            # roundoff floor: the update stopped shrinking at a small level
            if it >= 2 and dmax >= prev and dmax <= stall_tol * umax:
                converged = True
                break
            prev = dmax
        if ok and not converged and dmax <= stall_tol * umax:
            converged = True
    return Uarr, bool(converged), int(it), bool(ok)
