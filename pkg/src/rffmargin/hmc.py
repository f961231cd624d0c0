"""Hamiltonian Monte Carlo engine (leapfrog + Metropolis correction) and the
two model potentials: one for a shared latent code, one for a random
frequency. Gradients are analytic; the potential evaluations route through
the kernels backend so the compiled core is used when available."""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import RngStream, chol_with_jitter
from .errors import InvalidParameterError

PotentialEval = namedtuple("PotentialEval", ["value", "grad"])


@dataclass
class HmcConfig:
    """Step size, trajectory length, and the burn-in adaptation target band."""

    step_size: float = 0.1
    leapfrog_steps: int = 10
    adapt_lo: float = 0.6
    adapt_hi: float = 0.9

    def __post_init__(self):
        if self.step_size <= 0:
            raise InvalidParameterError("step size must be positive")
        if self.leapfrog_steps < 1:
            raise InvalidParameterError("at least one leapfrog step is required")


def leapfrog(q, p, potential, eps, n_steps):
    """Half-kick / drift / half-kick integration; deterministic given inputs.

    Returns (q', p', diverged); a non-finite potential anywhere along the
    trajectory marks the proposal divergent.
    """
    q = np.array(q, dtype=float)
    p = np.array(p, dtype=float)
    value, grad = potential(q)
    if not np.isfinite(value):
        return q, p, True
    p = p - 0.5 * eps * grad
    for step in range(n_steps):
        q = q + eps * p
        value, grad = potential(q)
        if not np.all(np.isfinite(grad)) or not np.isfinite(value):
            return q, p, True
        if step < n_steps - 1:
            p = p - eps * grad
    p = p - 0.5 * eps * grad
    return q, p, False


def hmc_step(q, potential, config: HmcConfig, rng: RngStream):
    """One momentum refresh + trajectory + Metropolis decision.

    Returns (q_new, accepted, diverged); a rejected or divergent proposal
    leaves the position unchanged.
    """
    q = np.asarray(q, dtype=float)
    p = rng.gen.standard_normal(q.shape)
    u = rng.gen.random()
    U0, _ = potential(q)
    H0 = U0 + 0.5 * float(p @ p)
    q1, p1, diverged = leapfrog(q, p, potential, config.step_size, config.leapfrog_steps)
    if diverged:
        return q, False, True
    U1, _ = potential(q1)
    dH = (U1 + 0.5 * float(p1 @ p1)) - H0
    if not np.isfinite(dH):
        return q, False, True
    if np.log(u) < -dH:
        return q1, True, False
    return q, False, False


def adapt_step_size(eps, accept_rate, config: HmcConfig, up=1.1, down=0.9):
    """Multiplicative burn-in tuning toward the target acceptance band."""
    if accept_rate < config.adapt_lo:
        return max(eps * down, 1e-8)
    if accept_rate > config.adapt_hi:
        return min(eps * up, 1e3)
    return eps


def split_beta(beta, n_frequencies):
    """Partition classifier weights into scaled cos/sin blocks and the bias.

    The returned blocks are pre-divided by sqrt(M) so the decision score of a
    code h is bc @ cos(omegas h) + bs @ sin(omegas h) + bias.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.size != 2 * n_frequencies + 1:
        raise InvalidParameterError(
            f"beta has {beta.size} entries, expected {2 * n_frequencies + 1}"
        )
    root_m = np.sqrt(n_frequencies)
    return beta[:n_frequencies] / root_m, beta[n_frequencies:-1] / root_m, float(beta[-1])


def make_h_potential(view_params, x_cols, u_cols, omegas, beta, y_n, lam_n, C):
    """Potential over one shared latent code h.

    U(h) = ||h||^2/2 + sum_i tau_i/2 ||x_i - W_i h - V_i u_i||^2
           + (lam + C(1 - y beta' phi(h)))^2 / (2 lam).
    The quadratic part is folded into A, b, c0 once; evaluations then cost
    O(m^2 + M m).
    """
    m = view_params[0].W.shape[1]
    A = np.eye(m)
    b = np.zeros(m)
    c0 = 0.0
    for vp, x, u in zip(view_params, x_cols, u_cols):
        e = np.asarray(x, float) - vp.V @ np.asarray(u, float)
        A += vp.tau * (vp.W.T @ vp.W)
        b += vp.tau * (vp.W.T @ e)
        c0 += 0.5 * vp.tau * float(e @ e)
    bc, bs, bbias = split_beta(beta, omegas.shape[0])

    def potential(h):
        value, grad = kernels.h_potential_grad(
            h, A, b, c0, omegas, bc, bs, bbias, float(y_n), float(lam_n), float(C)
        )
        return PotentialEval(value, grad)

    return potential


def make_omega_potential(prior_mean, prior_cov, H, s_rest, bc_j, bs_j, y, lam, C):
    """Potential over one frequency vector.

    Gaussian prior from its mixture component plus the hinge-augmentation
    term summed over instances; ``s_rest`` holds per-instance scores with
    this frequency's contribution removed. Evaluations cost O(N m).
    """
    prior_cov = np.asarray(prior_cov, dtype=float)
    L = chol_with_jitter(prior_cov)
    Linv = np.linalg.solve(L, np.eye(prior_cov.shape[0]))
    prec = Linv.T @ Linv
    H = np.ascontiguousarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)

    def potential(omega):
        value, grad = kernels.omega_potential_grad(
            omega, prior_mean, prec, H, s_rest, float(bc_j), float(bs_j), y, lam, float(C)
        )
        return PotentialEval(value, grad)

    return potential
