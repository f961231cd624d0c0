"""Synthetic data generators and a label-free Gibbs loop shared by tests."""

import numpy as np

from rffmargin.lvm import (
    LvmHyper,
    MultiViewDataset,
    ViewParams,
    sample_h_block,
    sample_r,
    sample_tau,
    sample_u_block,
    sample_v_columns,
    sample_w_columns,
)

# Median of a chi(2) radius: classes are balanced when thresholding ||h||.
RADIAL_THRESHOLD = float(np.sqrt(2.0 * np.log(2.0)))


def radial_two_view_data(n, seed, dims=(6, 5), noise_sd=0.05, margin=0.0):
    """Two views driven by a 2-d latent; labels flip sign at a radius.

    Instances whose radius falls inside the optional margin band are resampled
    so the boundary stays learnable at small n.
    """
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((2, n))
    if margin > 0:
        radius = np.linalg.norm(H, axis=0)
        bad = np.abs(radius - RADIAL_THRESHOLD) < margin
        while np.any(bad):
            H[:, bad] = rng.standard_normal((2, int(bad.sum())))
            radius = np.linalg.norm(H, axis=0)
            bad = np.abs(radius - RADIAL_THRESHOLD) < margin
    labels = np.where(np.linalg.norm(H, axis=0) > RADIAL_THRESHOLD, 1.0, -1.0)
    views = []
    for d in dims:
        W = rng.standard_normal((d, 2))
        views.append(W @ H + noise_sd * rng.standard_normal((d, n)))
    return MultiViewDataset(views, labels), H


def linear_two_view_data(n, seed, dims=(6, 5), noise_sd=0.1, margin=0.4):
    """Linearly separable two-view data (labels from one latent direction)."""
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((2, n))
    keep = np.abs(H[0]) > margin
    while not np.all(keep):
        H[:, ~keep] = rng.standard_normal((2, int((~keep).sum())))
        keep = np.abs(H[0]) > margin
    labels = np.sign(H[0])
    views = []
    for d in dims:
        W = rng.standard_normal((d, 2))
        views.append(W @ H + noise_sd * rng.standard_normal((d, n)))
    return MultiViewDataset(views, labels), H


def lvm_gibbs_sweep(view_params, dataset, latent, hyper: LvmHyper, rng):
    """One label-free Gibbs sweep: H, then per view U, W, V, r, tau."""
    resid_wless = [
        x - vp.V @ u for vp, x, u in zip(view_params, dataset.views, latent.U)
    ]
    latent.H = sample_h_block(view_params, resid_wless, rng)
    for i, vp in enumerate(view_params):
        resid = dataset.views[i] - vp.W @ latent.H
        latent.U[i] = sample_u_block(vp, resid, rng)
        resid -= vp.V @ latent.U[i]
        sample_w_columns(vp, latent.H, resid, rng)
        sample_v_columns(vp, latent.U[i], resid, rng)
        vp.r = sample_r(vp, hyper, rng)
        vp.tau = sample_tau(vp, hyper, resid, rng)


def make_view_params(rng, d, m, k, tau=1.0, w_scale=1.0, v_scale=1.0, eta=1.0):
    return ViewParams(
        W=w_scale * rng.standard_normal((d, m)),
        V=v_scale * rng.standard_normal((d, k)) if k else np.zeros((d, 0)),
        tau=tau,
        r=np.ones(m),
        eta=eta,
    )
