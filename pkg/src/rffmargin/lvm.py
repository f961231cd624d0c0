"""Multi-view linear-Gaussian latent variable model.

Each view i is generated as x_i = W_i h + V_i u_i + noise(1/tau_i), with a
shared latent code h, a small view-private code u_i, ARD column precisions
on W_i, and a shared column precision eta on V_i. This module holds the
containers, forward generation, all conjugate Gibbs conditionals, and
test-time inference of h with the private codes marginalized out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .distributions import RngStream, chol_with_jitter, gamma_draws
from .errors import DataError, InvalidParameterError


class MultiViewDataset:
    """Column-aligned feature matrices, one (D_i, N) per view, plus ±1 labels."""

    def __init__(self, views, labels=None):
        # Contiguous layout keeps BLAS results bit-reproducible across the
        # in-memory and file-ingested paths.
        self.views = [np.ascontiguousarray(v, dtype=float) for v in views]
        if not self.views:
            raise DataError("a dataset needs at least one view")
        counts = [v.shape[1] for v in self.views]
        if len(set(counts)) != 1:
            raise DataError(f"views disagree on instance count: {counts}")
        self.n = counts[0]
        self.dims = [v.shape[0] for v in self.views]
        self.n_views = len(self.views)
        if labels is None:
            self.labels = None
        else:
            labels = np.asarray(labels, dtype=float)
            if labels.shape != (self.n,):
                raise DataError(
                    f"labels have length {labels.size}, expected {self.n}"
                )
            if not np.all(np.isin(labels, (-1.0, 1.0))):
                bad = labels[~np.isin(labels, (-1.0, 1.0))][0]
                raise DataError(f"labels must be +1 or -1, found {bad}")
            self.labels = labels


@dataclass
class ViewParams:
    """Loadings, noise precision, and ARD precisions of one view."""

    W: np.ndarray
    V: np.ndarray
    tau: float
    r: np.ndarray
    eta: float

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.tau <= 0 or self.eta <= 0:
            raise InvalidParameterError("tau and eta must be positive")
        if np.any(self.r <= 0):
            raise InvalidParameterError("ARD precisions must be positive")
        if self.W.shape[0] != self.V.shape[0]:
            raise InvalidParameterError("W and V must share the feature dimension")
        if self.r.shape != (self.W.shape[1],):
            raise InvalidParameterError("one ARD precision per W column required")

    def validate(self):
        if not (
            np.all(np.isfinite(self.W))
            and np.all(np.isfinite(self.V))
            and np.isfinite(self.tau)
            and self.tau > 0
            and np.all(self.r > 0)
        ):
            raise InvalidParameterError("view parameters left their support")


@dataclass
class LatentState:
    """Shared codes H (m, N) and per-view private codes U_i (K_i, N)."""

    H: np.ndarray
    U: list

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.U = [np.asarray(u, dtype=float) for u in self.U]
        n = self.H.shape[1]
        if any(u.shape[1] != n for u in self.U):
            raise InvalidParameterError("latent blocks disagree on instance count")

    def validate(self):
        if not np.all(np.isfinite(self.H)):
            raise InvalidParameterError("shared latents are not finite")
        for u in self.U:
            if not np.all(np.isfinite(u)):
                raise InvalidParameterError("private latents are not finite")


@dataclass
class LvmHyper:
    """Gamma hyperparameters for the ARD and noise precisions, plus eta."""

    a_r: float = 1e-1
    b_r: float = 1e-5
    a_tau: float = 1e-2
    b_tau: float = 1e-5
    eta: float = 1e3

    def __post_init__(self):
        for name in ("a_r", "b_r", "a_tau", "b_tau", "eta"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")


def generate_synthetic(view_params, n, rng: RngStream):
    """Forward-simulate the generative process; returns (dataset, true latents)."""
    if n <= 0:
        raise InvalidParameterError("instance count must be positive")
    m = view_params[0].W.shape[1]
    H = rng.gen.standard_normal((m, n))
    U = [rng.gen.standard_normal((vp.V.shape[1], n)) for vp in view_params]
    views = []
    for vp, u in zip(view_params, U):
        noise = rng.gen.standard_normal((vp.W.shape[0], n)) / np.sqrt(vp.tau)
        views.append(vp.W @ H + vp.V @ u + noise)
    return MultiViewDataset(views), LatentState(H, U)


def init_view_params(dims, m, ks, hyper: LvmHyper, rng: RngStream):
    """Diffuse start: small random loadings, unit noise, prior-mean ARD."""
    params = []
    for d, k in zip(dims, ks):
        params.append(
            ViewParams(
                W=rng.gen.normal(0.0, 0.1, size=(d, m)),
                V=rng.gen.normal(0.0, 0.1, size=(d, k)),
                tau=1.0,
                r=np.full(m, hyper.a_r / hyper.b_r),
                eta=hyper.eta,
            )
        )
    return params


def init_latent(n, m, ks, rng: RngStream) -> LatentState:
    return LatentState(
        rng.gen.standard_normal((m, n)),
        [rng.gen.standard_normal((k, n)) for k in ks],
    )


# ---------------------------------------------------------------------------
# Gibbs conditionals. The *_conditional helpers expose the exact Gaussian /
# Gamma parameters (used directly by the numeric-integration tests); the
# sample_* functions draw from them, batched where the structure allows.
# ---------------------------------------------------------------------------


def u_conditional(vp: ViewParams, resid_col):
    """Gaussian conditional of one private code given the residual x - W h."""
    k = vp.V.shape[1]
    prec = np.eye(k) + vp.tau * (vp.V.T @ vp.V)
    L = chol_with_jitter(prec)
    cov = cho_solve((L, True), np.eye(k))
    mean = cho_solve((L, True), vp.V.T @ np.asarray(resid_col, float) * vp.tau)
    return cov, mean


def sample_u_block(vp: ViewParams, resid, rng: RngStream):
    """Draw all private codes of one view at once; resid is X - W H, (D, N)."""
    k = vp.V.shape[1]
    prec = np.eye(k) + vp.tau * (vp.V.T @ vp.V)
    L = chol_with_jitter(prec)
    mean = cho_solve((L, True), vp.V.T @ resid * vp.tau)
    z = rng.gen.standard_normal(mean.shape)
    return mean + solve_triangular(L.T, z, lower=False)


def w_column_conditional(tau, prior_prec, latent_row, resid_excl):
    """Per-column Gaussian (variance, mean) shared by the W and V updates.

    resid_excl is the residual with this column's contribution added back,
    latent_row the matching row of H (or U).
    """
    prec = prior_prec + tau * float(latent_row @ latent_row)
    mean = (tau / prec) * (resid_excl @ latent_row)
    return 1.0 / prec, mean


def sample_w_columns(vp: ViewParams, H, resid, rng: RngStream):
    """Column-wise Gibbs sweep over W; updates vp.W and the residual in place."""
    for j in range(vp.W.shape[1]):
        hj = H[j]
        resid += np.outer(vp.W[:, j], hj)
        var, mean = w_column_conditional(vp.tau, vp.r[j], hj, resid)
        vp.W[:, j] = mean + np.sqrt(var) * rng.gen.standard_normal(mean.size)
        resid -= np.outer(vp.W[:, j], hj)


def sample_v_columns(vp: ViewParams, U_view, resid, rng: RngStream):
    """Column-wise Gibbs sweep over V; same structure as W with prior eta."""
    for j in range(vp.V.shape[1]):
        uj = U_view[j]
        resid += np.outer(vp.V[:, j], uj)
        var, mean = w_column_conditional(vp.tau, vp.eta, uj, resid)
        vp.V[:, j] = mean + np.sqrt(var) * rng.gen.standard_normal(mean.size)
        resid -= np.outer(vp.V[:, j], uj)


def r_conditional(hyper: LvmHyper, w_col):
    """Gamma (shape, rate) for one ARD precision."""
    d = w_col.size
    return hyper.a_r + d / 2.0, hyper.b_r + 0.5 * float(w_col @ w_col)


def sample_r(vp: ViewParams, hyper: LvmHyper, rng: RngStream):
    shapes = np.full(vp.W.shape[1], hyper.a_r + vp.W.shape[0] / 2.0)
    rates = hyper.b_r + 0.5 * np.sum(vp.W * vp.W, axis=0)
    return gamma_draws(shapes, rates, None, rng)


def tau_conditional(hyper: LvmHyper, resid):
    """Gamma (shape, rate) for the noise precision given the full residual."""
    d, n = resid.shape
    return hyper.a_tau + n * d / 2.0, hyper.b_tau + 0.5 * float(np.sum(resid * resid))


def sample_tau(vp: ViewParams, hyper: LvmHyper, resid, rng: RngStream) -> float:
    shape, rate = tau_conditional(hyper, resid)
    return float(gamma_draws(shape, rate, None, rng))


def h_lvm_conditional(view_params, resid_wless):
    """Gaussian conditional of H given private codes (labels not involved).

    resid_wless holds X_i - V_i U_i per view; returns (precision, mean matrix).
    """
    m = view_params[0].W.shape[1]
    prec = np.eye(m)
    rhs = 0.0
    for vp, e in zip(view_params, resid_wless):
        prec = prec + vp.tau * (vp.W.T @ vp.W)
        rhs = rhs + vp.tau * (vp.W.T @ e)
    L = chol_with_jitter(prec)
    return prec, cho_solve((L, True), rhs)


def sample_h_block(view_params, resid_wless, rng: RngStream):
    """Draw all shared codes from the label-free conditional (batched)."""
    prec, mean = h_lvm_conditional(view_params, resid_wless)
    L = chol_with_jitter(prec)
    z = rng.gen.standard_normal(mean.shape)
    return mean + solve_triangular(L.T, z, lower=False)


def infer_test_latent(x_views, view_params):
    """Exact Gaussian over h given the views, private codes marginalized.

    Uses the Woodbury identity on Psi_i = V_i V_i' + I/tau_i so no D_i x D_i
    matrix is ever formed. x_views holds (D_i,) vectors or (D_i, N) matrices;
    returns (mean, covariance) with mean matching the input arity.
    """
    m = view_params[0].W.shape[1]
    single = np.asarray(x_views[0]).ndim == 1
    prec = np.eye(m)
    rhs = np.zeros((m, 1 if single else np.atleast_2d(x_views[0]).shape[-1]))
    for vp, x in zip(view_params, x_views):
        x = np.asarray(x, dtype=float)
        x = x[:, None] if x.ndim == 1 else x
        if x.shape[0] != vp.W.shape[0]:
            raise InvalidParameterError(
                f"view has {x.shape[0]} features, parameters expect {vp.W.shape[0]}"
            )
        k = vp.V.shape[1]
        if k:
            G = vp.V.T @ vp.W
            Lk = chol_with_jitter(np.eye(k) + vp.tau * (vp.V.T @ vp.V))
            prec += vp.tau * (vp.W.T @ vp.W) - vp.tau**2 * (G.T @ cho_solve((Lk, True), G))
            rhs += vp.tau * (vp.W.T @ x) - vp.tau**2 * (
                G.T @ cho_solve((Lk, True), vp.V.T @ x)
            )
        else:
            prec += vp.tau * (vp.W.T @ vp.W)
            rhs += vp.tau * (vp.W.T @ x)
    L = chol_with_jitter(prec)
    cov = cho_solve((L, True), np.eye(m))
    mean = cho_solve((L, True), rhs)
    return (mean[:, 0] if single else mean), cov
