"""Random Fourier feature map and the DP Gaussian-mixture prior over frequencies.

The mixture over frequency vectors is sampled with a slice sampler: auxiliary
uniforms truncate the infinite stick-breaking measure to finitely many
eligible components per sweep (slice draw, stick extension, assignment,
conjugate component update, weight redraw).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import (
    RngStream,
    beta_draw,
    chol_with_jitter,
    dirichlet_draw,
    invwishart_draw,
    mvn_draw,
)
from .errors import DegenerateSliceError, InvalidParameterError, RffMarginError

STICK_EXTEND_CAP = 10_000
WEIGHT_SUM_TOL = 1e-12


def feature_map(h, bank):
    """Augmented random Fourier features of one latent code.

    Returns (cos(w_1'h),...,cos(w_M'h), sin(w_1'h),...,sin(w_M'h)) / sqrt(M)
    with a trailing constant 1 (bias slot); the trigonometric block has unit
    norm by the cos^2+sin^2 identity.
    """
    omegas = bank.omegas if isinstance(bank, FrequencyBank) else np.asarray(bank, float)
    h = np.asarray(h, dtype=float)
    if h.shape != (omegas.shape[1],):
        raise InvalidParameterError(
            f"latent dimension mismatch: got {h.shape}, frequencies expect "
            f"({omegas.shape[1]},)"
        )
    t = omegas @ h
    root_m = np.sqrt(omegas.shape[0])
    return np.concatenate([np.cos(t) / root_m, np.sin(t) / root_m, [1.0]])


def project_trig(omegas, H):
    """cos and sin of omegas @ H, each (M, N)."""
    t = omegas @ H
    return np.cos(t), np.sin(t)


def feature_matrix(omegas, H):
    """Column-wise feature map: (2M+1, N) for latent codes in the columns of H."""
    cosP, sinP = project_trig(omegas, H)
    return features_from_trig(cosP, sinP)


def features_from_trig(cosP, sinP):
    root_m = np.sqrt(cosP.shape[0])
    return np.vstack([cosP / root_m, sinP / root_m, np.ones((1, cosP.shape[1]))])


@dataclass
class NiwBase:
    """Normal-Inverse-Wishart base measure over (mean, covariance)."""

    mu0: np.ndarray
    kappa0: float
    psi0: np.ndarray
    nu0: float

    def __post_init__(self):
        self.mu0 = np.asarray(self.mu0, dtype=float)
        self.psi0 = np.asarray(self.psi0, dtype=float)
        d = self.mu0.size
        if self.kappa0 <= 0:
            raise InvalidParameterError("kappa0 must be positive")
        if self.nu0 <= d - 1:
            raise InvalidParameterError("nu0 must exceed dim - 1")
        if self.psi0.shape != (d, d):
            raise InvalidParameterError("psi0 shape must match mu0")

    @staticmethod
    def default(dim: int) -> "NiwBase":
        # Broad base over frequency space; nu0 minimal for a finite mean.
        return NiwBase(np.zeros(dim), 0.01, np.eye(dim), dim + 2)

    def draw(self, rng: RngStream):
        sigma = invwishart_draw(self.psi0, self.nu0, rng)
        mu = mvn_draw(self.mu0, sigma / self.kappa0, rng)
        return mu, sigma

    def posterior(self, points) -> "NiwBase":
        """Conjugate update given rows of observed frequency vectors."""
        points = np.asarray(points, dtype=float).reshape(-1, self.mu0.size)
        s = points.shape[0]
        if s == 0:
            return self
        xbar = points.mean(axis=0)
        kn = self.kappa0 + s
        nun = self.nu0 + s
        mun = (self.kappa0 * self.mu0 + s * xbar) / kn
        dev = points - xbar
        dm = (xbar - self.mu0)[:, None]
        psin = self.psi0 + dev.T @ dev + (self.kappa0 * s / kn) * (dm @ dm.T)
        return NiwBase(mun, kn, psin, nun)


class MixtureComponents:
    """Active components of the stick-broken DP Gaussian mixture."""

    def __init__(self, means, covs, weights, remainder, sticks, alpha):
        self.means = [np.asarray(mu, dtype=float) for mu in means]
        self.covs = [np.asarray(c, dtype=float) for c in covs]
        self.weights = np.asarray(weights, dtype=float)
        self.remainder = float(remainder)
        self.sticks = np.asarray(sticks, dtype=float)
        self.alpha = float(alpha)

    @property
    def n_active(self) -> int:
        return len(self.means)

    def validate(self):
        if abs(self.weights.sum() + self.remainder - 1.0) > WEIGHT_SUM_TOL:
            raise RffMarginError("mixture weights do not sum to one")
        if np.any(self.weights < 0) or self.remainder < 0:
            raise RffMarginError("negative mixture weight")
        for c in self.covs:
            chol_with_jitter(c)

    def log_densities(self, omegas):
        """(K, M) log Gaussian densities of every frequency under every component."""
        out = np.empty((self.n_active, omegas.shape[0]))
        for k in range(self.n_active):
            out[k] = _mvn_logpdf_rows(omegas, self.means[k], self.covs[k])
        return out

    def precisions(self):
        """Per-component inverse covariances (list of (m, m))."""
        eye = np.eye(self.means[0].size)
        out = []
        for c in self.covs:
            L = chol_with_jitter(c)
            Linv = np.linalg.solve(L, eye)
            out.append(Linv.T @ Linv)
        return out

    @staticmethod
    def initial(base: NiwBase, alpha: float, rng: RngStream) -> "MixtureComponents":
        # One component off a single deterministic stick break at the
        # Beta(1, alpha) mean; the chain grows structure from there.
        mu, sigma = base.draw(rng)
        nu1 = 1.0 / (1.0 + alpha)
        return MixtureComponents(
            [mu], [sigma], [nu1], 1.0 - nu1, [nu1], alpha
        )


class FrequencyBank:
    """Random frequencies with their component assignments and slice variables."""

    def __init__(self, omegas, z, t):
        self.omegas = np.asarray(omegas, dtype=float)
        self.z = np.asarray(z, dtype=np.int64)
        self.t = np.asarray(t, dtype=float)

    @property
    def size(self) -> int:
        return self.omegas.shape[0]

    def validate(self, mixture: MixtureComponents):
        if np.any(self.z < 0) or np.any(self.z >= mixture.n_active):
            raise RffMarginError("assignment indexes an inactive component")
        bound = mixture.weights[self.z]
        if np.any(self.t <= 0) or np.any(self.t > bound):
            raise RffMarginError("slice variable outside (0, weight of assigned component]")

    @staticmethod
    def initial(n_frequencies, mixture, rng: RngStream) -> "FrequencyBank":
        dim = mixture.means[0].size
        omegas = rng.gen.standard_normal((n_frequencies, dim))
        z = np.zeros(n_frequencies, dtype=np.int64)
        t = rng.gen.uniform(0.0, mixture.weights[0], size=n_frequencies)
        return FrequencyBank(omegas, z, t)


def _mvn_logpdf_rows(x, mean, cov):
    L = chol_with_jitter(cov)
    dev = np.linalg.solve(L, (np.atleast_2d(x) - mean).T)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    d = mean.size
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + np.sum(dev * dev, axis=0))


def slice_step(bank: FrequencyBank, mixture: MixtureComponents, rng: RngStream):
    """Draw t_j ~ Uniform(0, weight of assigned component); returns (t, min t)."""
    bound = mixture.weights[bank.z]
    bank.t = rng.gen.uniform(0.0, bound)
    return bank.t, float(bank.t.min())


def stick_extend(mixture: MixtureComponents, t_star, base: NiwBase, rng: RngStream):
    """Break new sticks until the leftover mass drops below the smallest slice."""
    n_new = 0
    while mixture.remainder >= t_star:
        if n_new >= STICK_EXTEND_CAP:
            raise DegenerateSliceError(
                f"stick breaking needed more than {STICK_EXTEND_CAP} components "
                f"(t* = {t_star:.3e})"
            )
        nu = beta_draw(1.0, mixture.alpha, rng)
        mu, sigma = base.draw(rng)
        mixture.means.append(mu)
        mixture.covs.append(sigma)
        mixture.weights = np.append(mixture.weights, mixture.remainder * nu)
        mixture.sticks = np.append(mixture.sticks, nu)
        mixture.remainder = mixture.remainder * (1.0 - nu)
        n_new += 1
    return n_new


def assign_components(bank: FrequencyBank, mixture: MixtureComponents, rng: RngStream):
    """Resample assignments among components whose weight clears each slice."""
    logd = mixture.log_densities(bank.omegas)
    eligible = mixture.weights[:, None] >= bank.t[None, :]
    if not np.all(eligible.any(axis=0)):
        raise RffMarginError(
            "no eligible component for some slice; stick extension missing"
        )
    logd = np.where(eligible, logd, -np.inf)
    shifted = logd - logd.max(axis=0)
    p = np.exp(shifted)
    p /= p.sum(axis=0)
    u = rng.gen.random(bank.size)
    bank.z = (np.cumsum(p, axis=0) < u[None, :]).sum(axis=0).astype(np.int64)
    return bank.z


def sample_component_params(points, base: NiwBase, rng: RngStream):
    """Draw (mean, covariance) from the NIW posterior given assigned frequencies."""
    post = base.posterior(points)
    sigma = invwishart_draw(post.psi0, post.nu0, rng)
    mu = mvn_draw(post.mu0, sigma / post.kappa0, rng)
    return mu, sigma


def sample_weights(counts, alpha, rng: RngStream):
    """Dirichlet(counts..., alpha) over active weights plus the remainder."""
    counts = np.asarray(counts, dtype=float)
    draw = dirichlet_draw(np.append(counts, alpha), rng)
    return draw[:-1], float(draw[-1])


def prune_empty(bank: FrequencyBank, mixture: MixtureComponents):
    """Drop components with no assignments, renumbering the bank."""
    counts = np.bincount(bank.z, minlength=mixture.n_active)
    keep = np.flatnonzero(counts > 0)
    relabel = np.full(mixture.n_active, -1, dtype=np.int64)
    relabel[keep] = np.arange(keep.size)
    bank.z = relabel[bank.z]
    mixture.means = [mixture.means[k] for k in keep]
    mixture.covs = [mixture.covs[k] for k in keep]
    mixture.weights = mixture.weights[keep]
    mixture.sticks = mixture.sticks[keep]
    return counts[keep]


def _recompute_sticks(mixture: MixtureComponents):
    left = 1.0
    sticks = np.empty_like(mixture.weights)
    for k, w in enumerate(mixture.weights):
        sticks[k] = w / left if left > 0 else 0.0
        left -= w
    mixture.sticks = sticks


def dpmm_sweep(bank: FrequencyBank, mixture: MixtureComponents, base: NiwBase, rng: RngStream):
    """One full slice-sampler sweep over the frequency mixture.

    Runs slices, stick extension, assignments, the conjugate component
    update, pruning of empties, and the weight redraw; slices are refreshed
    at the end so the stored state stays consistent with the new weights.
    """
    _, t_star = slice_step(bank, mixture, rng)
    stick_extend(mixture, t_star, base, rng)
    assign_components(bank, mixture, rng)
    for k in range(mixture.n_active):
        pts = bank.omegas[bank.z == k]
        mixture.means[k], mixture.covs[k] = sample_component_params(pts, base, rng)
    counts = prune_empty(bank, mixture)
    mixture.weights, mixture.remainder = sample_weights(counts, mixture.alpha, rng)
    _recompute_sticks(mixture)
    bank.t = rng.gen.uniform(0.0, mixture.weights[bank.z])
    return {"n_active": mixture.n_active, "counts": counts}
