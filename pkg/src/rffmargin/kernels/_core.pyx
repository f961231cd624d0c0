# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel core.

Mirrors ``kernels.numpy_backend`` exactly: same algorithms, same meaning of
every argument, same consumption of the pre-drawn random arrays. See that
module for the shared conventions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, log, isfinite

cnp.import_array()

BACKEND_NAME = "compiled"


cdef double _eval_h(
    const double[::1] q,
    const double[:, ::1] A,
    const double[::1] b,
    double c0,
    const double[:, ::1] omegas,
    const double[::1] bc,
    const double[::1] bs,
    double bbias,
    double y,
    double lam,
    double C,
    double[::1] grad,
    double[::1] ct,
    double[::1] st,
) noexcept nogil:
    cdef Py_ssize_t m = q.shape[0]
    cdef Py_ssize_t M = omegas.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double t, s, margin, coef, U, g

    s = bbias
    for j in range(M):
        t = 0.0
        for k in range(m):
            t += omegas[j, k] * q[k]
        ct[j] = cos(t)
        st[j] = sin(t)
        s += bc[j] * ct[j] + bs[j] * st[j]
    margin = C * (1.0 - y * s)
    U = c0 + (lam + margin) * (lam + margin) / (2.0 * lam)
    coef = (lam + margin) / lam * (-C * y)

    for i in range(m):
        g = -b[i]
        for k in range(m):
            g += A[i, k] * q[k]
        grad[i] = g
        # 0.5 q'Aq - b'q accumulated via Aq = g + b
        U += 0.5 * q[i] * (g - b[i])
    for j in range(M):
        g = coef * (bs[j] * ct[j] - bc[j] * st[j])
        for k in range(m):
            grad[k] += g * omegas[j, k]
    return U


cdef double _eval_omega(
    const double[::1] q,
    const double[::1] pmean,
    const double[:, ::1] pprec,
    const double[:, ::1] H,
    const double[::1] s_rest,
    double bcj,
    double bsj,
    const double[::1] y,
    const double[::1] lam,
    double C,
    double[::1] grad,
) noexcept nogil:
    cdef Py_ssize_t m = q.shape[0]
    cdef Py_ssize_t N = H.shape[1]
    cdef Py_ssize_t i, k, n
    cdef double t, s, margin, w, U, g, ctn, stn

    U = 0.0
    for i in range(m):
        g = 0.0
        for k in range(m):
            g += pprec[i, k] * (q[k] - pmean[k])
        grad[i] = g
        U += 0.5 * (q[i] - pmean[i]) * g
    for n in range(N):
        t = 0.0
        for k in range(m):
            t += q[k] * H[k, n]
        ctn = cos(t)
        stn = sin(t)
        s = s_rest[n] + bcj * ctn + bsj * stn
        margin = C * (1.0 - y[n] * s)
        U += (lam[n] + margin) * (lam[n] + margin) / (2.0 * lam[n])
        w = (lam[n] + margin) / lam[n] * (-C * y[n]) * (bsj * ctn - bcj * stn)
        for k in range(m):
            grad[k] += w * H[k, n]
    return U


def h_potential_grad(h, A, b, c0, omegas, bc, bs, bbias, y, lam, C):
    h = np.ascontiguousarray(h, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    bc = np.ascontiguousarray(bc, dtype=np.float64)
    bs = np.ascontiguousarray(bs, dtype=np.float64)
    grad = np.empty(h.shape[0], dtype=np.float64)
    ct = np.empty(omegas.shape[0], dtype=np.float64)
    st = np.empty(omegas.shape[0], dtype=np.float64)
    cdef double U = _eval_h(
        h, A, b, c0, omegas, bc, bs, bbias, y, lam, C, grad, ct, st
    )
    return float(U), grad


def omega_potential_grad(omega, pmean, pprec, H, s_rest, bcj, bsj, y, lam, C):
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    pmean = np.ascontiguousarray(pmean, dtype=np.float64)
    pprec = np.ascontiguousarray(pprec, dtype=np.float64)
    H = np.ascontiguousarray(H, dtype=np.float64)
    s_rest = np.ascontiguousarray(s_rest, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    grad = np.empty(omega.shape[0], dtype=np.float64)
    cdef double U = _eval_omega(
        omega, pmean, pprec, H, s_rest, bcj, bsj, y, lam, C, grad
    )
    return float(U), grad


def h_block_update(H, A, B, omegas, bc, bs, bbias, y, lam, C, eps, L, momenta, u_acc):
    H = np.ascontiguousarray(H, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    bc = np.ascontiguousarray(bc, dtype=np.float64)
    bs = np.ascontiguousarray(bs, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    momenta = np.ascontiguousarray(momenta, dtype=np.float64)
    u_acc = np.ascontiguousarray(u_acc, dtype=np.float64)

    cdef double[:, ::1] Hv = H
    cdef double[:, ::1] Bv = B
    cdef double[:, ::1] momv = momenta
    cdef double[::1] uv = u_acc
    cdef double[::1] yv = y
    cdef double[::1] lamv = lam
    cdef Py_ssize_t m = H.shape[0]
    cdef Py_ssize_t N = H.shape[1]
    cdef Py_ssize_t M = omegas.shape[0]
    cdef double epsd = eps, Cd = C, bb = bbias
    cdef Py_ssize_t Ld = L

    out = H.copy()
    accept = np.zeros(N, dtype=bool)
    cdef double[:, ::1] outv = out
    cdef cnp.uint8_t[::1] accv = accept.view(np.uint8)

    q_arr = np.empty(m, dtype=np.float64)
    p_arr = np.empty(m, dtype=np.float64)
    g_arr = np.empty(m, dtype=np.float64)
    bcol_arr = np.empty(m, dtype=np.float64)
    ct_arr = np.empty(M, dtype=np.float64)
    st_arr = np.empty(M, dtype=np.float64)
    cdef double[::1] q = q_arr
    cdef double[::1] p = p_arr
    cdef double[::1] g = g_arr
    cdef double[::1] bcol = bcol_arr
    cdef double[::1] ct = ct_arr
    cdef double[::1] st = st_arr

    cdef Py_ssize_t n, k, step
    cdef double U0, U1, K0, K1, dH
    cdef int n_div = 0

    for n in range(N):
        for k in range(m):
            q[k] = Hv[k, n]
            p[k] = momv[k, n]
            bcol[k] = Bv[k, n]
        U0 = _eval_h(q, A, bcol, 0.0, omegas, bc, bs, bb, yv[n], lamv[n], Cd, g, ct, st)
        K0 = 0.0
        for k in range(m):
            K0 += 0.5 * p[k] * p[k]
            p[k] -= 0.5 * epsd * g[k]
        for step in range(Ld):
            for k in range(m):
                q[k] += epsd * p[k]
            U1 = _eval_h(
                q, A, bcol, 0.0, omegas, bc, bs, bb, yv[n], lamv[n], Cd, g, ct, st
            )
            if step < Ld - 1:
                for k in range(m):
                    p[k] -= epsd * g[k]
        K1 = 0.0
        for k in range(m):
            p[k] -= 0.5 * epsd * g[k]
            K1 += 0.5 * p[k] * p[k]
        dH = (U1 + K1) - (U0 + K0)
        if not isfinite(dH):
            n_div += 1
            continue
        if log(uv[n]) < -dH:
            accv[n] = 1
            for k in range(m):
                outv[k, n] = q[k]
    return out, accept, n_div


def omega_block_update(
    omegas, cosP, sinP, H, bc, bs, bbias, y, lam, C, pmean, pprec, eps, L, momenta, u_acc
):
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    H = np.ascontiguousarray(H, dtype=np.float64)
    bc = np.ascontiguousarray(bc, dtype=np.float64)
    bs = np.ascontiguousarray(bs, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    pmean = np.ascontiguousarray(pmean, dtype=np.float64)
    pprec = np.ascontiguousarray(pprec, dtype=np.float64)
    momenta = np.ascontiguousarray(momenta, dtype=np.float64)
    u_acc = np.ascontiguousarray(u_acc, dtype=np.float64)

    cdef double[:, ::1] cosPv = cosP
    cdef double[:, ::1] sinPv = sinP
    cdef double[:, ::1] Hv = H
    cdef double[::1] bcv = bc
    cdef double[::1] bsv = bs
    cdef double[::1] yv = y
    cdef double[::1] lamv = lam
    cdef double[:, ::1] pmeanv = pmean
    cdef double[:, :, ::1] pprecv = pprec
    cdef double[:, ::1] momv = momenta
    cdef double[::1] uv = u_acc
    cdef Py_ssize_t M = omegas.shape[0]
    cdef Py_ssize_t m = omegas.shape[1]
    cdef Py_ssize_t N = H.shape[1]
    cdef double epsd = eps, Cd = C, bb = bbias
    cdef Py_ssize_t Ld = L

    out = omegas.copy()
    accept = np.zeros(M, dtype=bool)
    cdef double[:, ::1] outv = out
    cdef cnp.uint8_t[::1] accv = accept.view(np.uint8)

    scores_arr = np.empty(N, dtype=np.float64)
    srest_arr = np.empty(N, dtype=np.float64)
    q_arr = np.empty(m, dtype=np.float64)
    p_arr = np.empty(m, dtype=np.float64)
    g_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] scores = scores_arr
    cdef double[::1] srest = srest_arr
    cdef double[::1] q = q_arr
    cdef double[::1] p = p_arr
    cdef double[::1] g = g_arr

    cdef Py_ssize_t j, k, n, step
    cdef double U0, U1, K0, K1, dH, t
    cdef int n_div = 0

    for n in range(N):
        t = bb
        for j in range(M):
            t += bcv[j] * cosPv[j, n] + bsv[j] * sinPv[j, n]
        scores[n] = t

    for j in range(M):
        for n in range(N):
            srest[n] = scores[n] - bcv[j] * cosPv[j, n] - bsv[j] * sinPv[j, n]
        for k in range(m):
            q[k] = outv[j, k]
            p[k] = momv[j, k]
        U0 = _eval_omega(
            q, pmeanv[j], pprecv[j], Hv, srest, bcv[j], bsv[j], yv, lamv, Cd, g
        )
        K0 = 0.0
        for k in range(m):
            K0 += 0.5 * p[k] * p[k]
            p[k] -= 0.5 * epsd * g[k]
        for step in range(Ld):
            for k in range(m):
                q[k] += epsd * p[k]
            U1 = _eval_omega(
                q, pmeanv[j], pprecv[j], Hv, srest, bcv[j], bsv[j], yv, lamv, Cd, g
            )
            if step < Ld - 1:
                for k in range(m):
                    p[k] -= epsd * g[k]
        K1 = 0.0
        for k in range(m):
            p[k] -= 0.5 * epsd * g[k]
            K1 += 0.5 * p[k] * p[k]
        dH = (U1 + K1) - (U0 + K0)
        if not isfinite(dH):
            n_div += 1
            continue
        if log(uv[j]) < -dH:
            accv[j] = 1
            for k in range(m):
                outv[j, k] = q[k]
            for n in range(N):
                t = 0.0
                for k in range(m):
                    t += q[k] * Hv[k, n]
                cosPv[j, n] = cos(t)
                sinPv[j, n] = sin(t)
                scores[n] = srest[n] + bcv[j] * cosPv[j, n] + bsv[j] * sinPv[j, n]
    return out, accept, n_div
