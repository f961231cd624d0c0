"""Hinge-loss pseudo-likelihood, its scale-mixture augmentation, and the
conjugate conditionals for the classifier weights and the augmentation
variables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .distributions import RngStream, chol_with_jitter, gig_half_draws
from .errors import InvalidParameterError


@dataclass
class Classifier:
    """Max-margin weights with Gaussian prior N(0, I/v) and hinge scale C."""

    beta: np.ndarray
    v: float = 1e-2
    C: float = 1.0

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if self.v <= 0 or self.C <= 0:
            raise InvalidParameterError("v and C must be positive")
        if not np.all(np.isfinite(self.beta)):
            raise InvalidParameterError("beta must be finite")


@dataclass
class Augmentation:
    """Per-instance positive scale variables of the hinge augmentation."""

    lambdas: np.ndarray = field(default_factory=lambda: np.ones(0))

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if np.any(self.lambdas <= 0) or not np.all(np.isfinite(self.lambdas)):
            raise InvalidParameterError("lambdas must be positive and finite")


def pseudo_likelihood(y, score, C):
    """exp(-2C max(0, 1 - y*score)); equals 1 exactly at or beyond the margin."""
    return np.exp(-2.0 * C * np.maximum(0.0, 1.0 - np.asarray(y) * np.asarray(score)))


def augmented_joint(lam, margin):
    """Unnormalized augmented density (2 pi lam)^{-1/2} exp(-(lam+margin)^2/(2 lam)).

    Integrating over lam in (0, inf) recovers exp(-2 max(0, margin)).
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise InvalidParameterError("augmentation variable must be positive")
    return np.exp(-((lam + margin) ** 2) / (2.0 * lam)) / np.sqrt(2.0 * np.pi * lam)


def beta_conditional(features, y, lambdas, v, C):
    """Precision matrix and unscaled mean vector of the Gaussian conditional.

    features is (d, N) with one augmented feature column per instance. The
    conditional has covariance P^{-1} and mean P^{-1} rhs.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    d, n = features.shape
    P = v * np.eye(d)
    rhs = np.zeros(d)
    if n:
        y = np.asarray(y, dtype=float)
        lambdas = np.asarray(lambdas, dtype=float)
        weighted = features / lambdas
        P = P + C**2 * (weighted @ features.T)
        rhs = features @ (((C * lambdas + C**2) / lambdas) * y)
    return P, rhs


def sample_beta(features, y, lambdas, v, C, rng: RngStream):
    """Draw classifier weights from their Gaussian conditional via Cholesky solves."""
    if np.any(np.asarray(lambdas) <= 0):
        raise InvalidParameterError("all augmentation variables must be positive")
    P, rhs = beta_conditional(features, y, lambdas, v, C)
    L = chol_with_jitter(P)
    mean = solve_triangular(L.T, solve_triangular(L, rhs, lower=True), lower=False)
    z = rng.gen.standard_normal(mean.size)
    return mean + solve_triangular(L.T, z, lower=False)


def margin_chi(y, score, C):
    """GIG chi parameter of the augmentation conditional: C^2 (1 - y*score)^2."""
    return (C * (1.0 - np.asarray(y) * np.asarray(score))) ** 2


def sample_lambdas(y, scores, C, rng: RngStream):
    """Resample every augmentation variable from GIG(1/2, 1, chi)."""
    return gig_half_draws(margin_chi(y, scores, C), rng)


def sample_lambda(y_n, score_n, C, rng: RngStream) -> float:
    return float(sample_lambdas(np.array(y_n), np.array(score_n), C, rng))


def predict_score(beta, features):
    """Decision score(s) beta' phi for feature vector or (d, N) matrix."""
    beta = np.asarray(beta, dtype=float)
    features = np.asarray(features, dtype=float)
    if features.shape[0] != beta.size:
        raise InvalidParameterError(
            f"feature dimension {features.shape[0]} does not match beta ({beta.size})"
        )
    return beta @ features


def predict_label(scores):
    """Sign of the score with ties broken toward +1."""
    return np.where(np.asarray(scores) >= 0.0, 1, -1)
