"""Pure-NumPy implementations of the hot sampling kernels.

These mirror the compiled core in ``_core.pyx`` exactly (same algorithm,
same consumption order of the pre-drawn random numbers) so either backend
can drive the sampler. All randomness is passed in as arrays; the kernels
themselves are deterministic.

Conventions shared by both backends:

* ``H`` is (m, N): latent codes as columns.
* ``omegas`` is (M, m): one random frequency per row.
* ``bc``, ``bs`` are the cosine/sine classifier weights already divided by
  sqrt(M); ``bbias`` is the bias weight, so the decision score of column n
  is ``bc @ cos(omegas @ h_n) + bs @ sin(omegas @ h_n) + bbias``.
* Potentials omit additive constants that cancel in Metropolis ratios.
"""

import numpy as np


def h_potential_grad(h, A, b, c0, omegas, bc, bs, bbias, y, lam, C):
    """Potential and gradient for one latent code.

    U(h) = 0.5 h'Ah - b'h + c0 + (lam + m(h))^2 / (2 lam) with hinge margin
    m(h) = C (1 - y s(h)).
    """
    t = omegas @ h
    ct = np.cos(t)
    st = np.sin(t)
    s = ct @ bc + st @ bs + bbias
    margin = C * (1.0 - y * s)
    U = 0.5 * h @ (A @ h) - b @ h + c0 + (lam + margin) ** 2 / (2.0 * lam)
    coef = (lam + margin) / lam * (-C * y)
    grad = A @ h - b + coef * ((bs * ct - bc * st) @ omegas)
    return float(U), grad


def omega_potential_grad(omega, pmean, pprec, H, s_rest, bcj, bsj, y, lam, C):
    """Potential and gradient for one frequency vector.

    Gaussian mixture-component prior (mean pmean, precision pprec) plus the
    hinge-augmentation term summed over instances; ``s_rest`` holds each
    instance's score with this frequency's contribution removed.
    """
    t = H.T @ omega
    ct = np.cos(t)
    st = np.sin(t)
    s = s_rest + bcj * ct + bsj * st
    margin = C * (1.0 - y * s)
    d = omega - pmean
    Pd = pprec @ d
    U = 0.5 * d @ Pd + np.sum((lam + margin) ** 2 / (2.0 * lam))
    coef = (lam + margin) / lam * (-C * y)
    grad = Pd + H @ (coef * (bsj * ct - bcj * st))
    return float(U), grad


def _h_potential_all(Q, A, B, omegas, bc, bs, bbias, y, lam, C):
    """Batched potential/gradient over all columns of Q (constants dropped)."""
    T = omegas @ Q
    ct = np.cos(T)
    st = np.sin(T)
    s = bc @ ct + bs @ st + bbias
    margin = C * (1.0 - y * s)
    AQ = A @ Q
    U = (
        0.5 * np.einsum("in,in->n", Q, AQ)
        - np.einsum("in,in->n", B, Q)
        + (lam + margin) ** 2 / (2.0 * lam)
    )
    coef = (lam + margin) / lam * (-C * y)
    grad = AQ - B + (omegas.T @ (bs[:, None] * ct - bc[:, None] * st)) * coef
    return U, grad


def h_block_update(H, A, B, omegas, bc, bs, bbias, y, lam, C, eps, L, momenta, u_acc):
    """One HMC step for every latent code at once (independent chains).

    Returns (H_new, accept mask, number of divergent trajectories).
    """
    Q = H.copy()
    P = momenta.copy()
    U0, g = _h_potential_all(Q, A, B, omegas, bc, bs, bbias, y, lam, C)
    K0 = 0.5 * np.sum(P * P, axis=0)
    P -= 0.5 * eps * g
    for step in range(L):
        Q += eps * P
        U1, g = _h_potential_all(Q, A, B, omegas, bc, bs, bbias, y, lam, C)
        if step < L - 1:
            P -= eps * g
    P -= 0.5 * eps * g
    dH = (U1 + 0.5 * np.sum(P * P, axis=0)) - (U0 + K0)
    finite = np.isfinite(dH)
    with np.errstate(invalid="ignore"):
        accept = finite & (np.log(u_acc) < -dH)
    H_new = np.where(accept[None, :], Q, H)
    return H_new, accept, int(np.count_nonzero(~finite))


def omega_block_update(
    omegas, cosP, sinP, H, bc, bs, bbias, y, lam, C, pmean, pprec, eps, L, momenta, u_acc
):
    """One HMC step per frequency, scanning j in order.

    ``cosP``/``sinP`` (M, N) hold cos/sin of omegas @ H and are updated in
    place for accepted moves, as is the running score vector.
    Returns (omegas_new, accept mask, number of divergent trajectories).
    """
    M = omegas.shape[0]
    out = omegas.copy()
    scores = bc @ cosP + bs @ sinP + bbias
    accept = np.zeros(M, dtype=bool)
    n_div = 0
    for j in range(M):
        s_rest = scores - bc[j] * cosP[j] - bs[j] * sinP[j]
        q = out[j].copy()
        p = momenta[j].copy()
        U0, g = omega_potential_grad(
            q, pmean[j], pprec[j], H, s_rest, bc[j], bs[j], y, lam, C
        )
        K0 = 0.5 * p @ p
        p = p - 0.5 * eps * g
        for step in range(L):
            q = q + eps * p
            U1, g = omega_potential_grad(
                q, pmean[j], pprec[j], H, s_rest, bc[j], bs[j], y, lam, C
            )
            if step < L - 1:
                p -= eps * g
        p -= 0.5 * eps * g
        dH = (U1 + 0.5 * p @ p) - (U0 + K0)
        if not np.isfinite(dH):
            n_div += 1
            continue
        if np.log(u_acc[j]) < -dH:
            accept[j] = True
            out[j] = q
            t = H.T @ q
            cosP[j] = np.cos(t)
            sinP[j] = np.sin(t)
            scores = s_rest + bc[j] * cosP[j] + bs[j] * sinP[j]
    return out, accept, n_div
