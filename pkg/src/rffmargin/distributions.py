"""Random variate backbone used by every sampler block.

Every draw goes through an :class:`RngStream` so that a whole run is
reproducible from one master seed and independent blocks (or instances)
can own independent substreams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidParameterError, NumericalDegeneracyError

# Smallest chi the GIG(1/2, a, chi) draw will accept; a zero hinge margin is
# clamped here so the chain stays defined.
CHI_FLOOR = 1e-12

_JITTER_SCALES = tuple(1e-10 * 10.0**k for k in range(7))  # 1e-10 .. 1e-4


class RngStream:
    """Seeded generator stream; the pair (seed, stream) pins the sequence."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.gen = np.random.default_rng([self.seed, self.stream])

    def substream(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


@dataclass
class GigHalfParams:
    """Parameters of GIG(p=1/2, a, chi), density ~ x^{-1/2} exp(-(a*x + chi/x)/2)."""

    a: float = 1.0
    chi: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.chi)):
            raise InvalidParameterError("GIG parameters must be finite")
        if self.a <= 0 or self.chi < 0:
            raise InvalidParameterError("GIG requires a > 0 and chi >= 0")


def _invgauss_draws(mu, lam, rng: RngStream):
    """Inverse-Gaussian draws, cancellation-safe for large mu*y/lam."""
    y = rng.gen.standard_normal(np.shape(mu)) ** 2
    w = mu * y / lam
    # x1 = mu * (1 + (w - sqrt(w^2 + 4w)) / 2), rewritten to avoid cancellation
    x1 = mu * (1.0 - 2.0 * w / (np.sqrt(w * w + 4.0 * w) + w))
    u = rng.gen.random(np.shape(mu))
    return np.where(u <= mu / (mu + x1), x1, mu * mu / x1)


def gig_half_draws(chi, rng: RngStream, a: float = 1.0):
    """Vector of GIG(1/2, a, chi_i) draws via the reciprocal inverse-Gaussian map.

    Exact for order p = 1/2: if Z ~ InvGauss(sqrt(a/chi), a) then 1/Z has the
    target law. chi entries below CHI_FLOOR are clamped.
    """
    chi = np.asarray(chi, dtype=float)
    if not np.all(np.isfinite(chi)) or not np.isfinite(a):
        raise InvalidParameterError("GIG parameters must be finite")
    if a <= 0 or np.any(chi < 0):
        raise InvalidParameterError("GIG requires a > 0 and chi >= 0")
    chi = np.maximum(chi, CHI_FLOOR)
    mu = np.sqrt(a / chi)
    return 1.0 / _invgauss_draws(mu, a, rng)


def gig_half_draw(params: GigHalfParams, rng: RngStream) -> float:
    """Single GIG(1/2, a, chi) draw."""
    return float(gig_half_draws(np.array(params.chi), rng, a=params.a))


def gamma_draw(shape, rate, rng: RngStream) -> float:
    """Gamma draw with mean shape/rate."""
    if not (np.isfinite(shape) and np.isfinite(rate)) or shape <= 0 or rate <= 0:
        raise InvalidParameterError(
            f"gamma_draw requires shape > 0 and rate > 0, got ({shape}, {rate})"
        )
    return float(rng.gen.gamma(shape, 1.0 / rate))


def gamma_draws(shape, rate, size, rng: RngStream):
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(rate) <= 0):
        raise InvalidParameterError("gamma_draws requires positive shape and rate")
    return rng.gen.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def beta_draw(a, b, rng: RngStream) -> float:
    if a <= 0 or b <= 0:
        raise InvalidParameterError("beta_draw requires positive parameters")
    return float(rng.gen.beta(a, b))


def dirichlet_draw(concentrations, rng: RngStream):
    c = np.asarray(concentrations, dtype=float)
    if np.any(c <= 0) or not np.all(np.isfinite(c)):
        raise InvalidParameterError("dirichlet_draw requires positive concentrations")
    g = rng.gen.gamma(c, 1.0)
    total = g.sum()
    if total <= 0.0:  # all gamma draws underflowed; fall back to the mean
        return c / c.sum()
    return g / total


def uniform_draw(low, high, rng: RngStream) -> float:
    if not (np.isfinite(low) and np.isfinite(high)) or high < low:
        raise InvalidParameterError("uniform_draw requires finite low <= high")
    return float(rng.gen.uniform(low, high))


def categorical_from_logs(log_weights, rng: RngStream) -> int:
    """Draw an index from unnormalized log weights (log-sum-exp normalized)."""
    lw = np.asarray(log_weights, dtype=float)
    m = np.max(lw)
    if not np.isfinite(m):
        raise InvalidParameterError("categorical_from_logs needs a finite maximum")
    p = np.exp(lw - m)
    p /= p.sum()
    return int(np.searchsorted(np.cumsum(p), rng.gen.random(), side="right"))


def chol_with_jitter(matrix):
    """Cholesky factor with an escalating diagonal jitter policy.

    Jitter starts at 1e-10 times the mean diagonal (absolute 1e-10 for a zero
    diagonal) and escalates tenfold up to 1e-4 before giving up.
    """
    a = np.asarray(matrix, dtype=float)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    d = float(np.mean(np.diag(a)))
    base = d if d > 0 else 1.0
    eye = np.eye(a.shape[0])
    for scale in _JITTER_SCALES:
        try:
            return np.linalg.cholesky(a + (base * scale) * eye)
        except np.linalg.LinAlgError:
            continue
    raise NumericalDegeneracyError(
        "Cholesky factorization failed after maximum jitter"
    )


def mvn_draw(mean, covariance, rng: RngStream):
    """Multivariate normal draw; covariance is stabilized by the jitter policy."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise InvalidParameterError("covariance shape does not match mean")
    if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
        raise InvalidParameterError("mvn_draw requires finite parameters")
    if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-12):
        raise InvalidParameterError("covariance must be symmetric")
    L = chol_with_jitter(cov)
    return mean + L @ rng.gen.standard_normal(mean.size)


def invwishart_draw(psi, nu, rng: RngStream):
    """Inverse-Wishart draw via the Bartlett decomposition.

    Sigma^{-1} ~ Wishart(Psi^{-1}, nu) is realized as B A A^T B^T with
    B B^T = Psi^{-1}; only triangular solves are used.
    """
    psi = np.asarray(psi, dtype=float)
    d = psi.shape[0]
    if nu <= d - 1:
        raise InvalidParameterError(f"invwishart_draw requires nu > d-1, got nu={nu}")
    if not np.allclose(psi, psi.T, rtol=1e-8, atol=1e-12):
        raise InvalidParameterError("scale matrix must be symmetric")
    L = chol_with_jitter(psi)
    A = np.zeros((d, d))
    for i in range(d):
        A[i, i] = np.sqrt(rng.gen.chisquare(nu - i))
        A[i, :i] = rng.gen.standard_normal(i)
    # Sigma = (A^{-1} L^T)^T (A^{-1} L^T)
    M = solve_triangular(A, L.T, lower=True)
    return M.T @ M
