"""Full posterior sweep orchestration, burn-in/collection policy, and
ensemble prediction.

A sweep updates, in order: classifier weights, augmentation variables, the
frequency bank and shared codes by HMC, the DP mixture (slice sampler), then
the conjugate LVM block (private codes, loadings, ARD and noise precisions).
Sweeps are strictly sequential; every random draw goes through named
substreams of one master seed, so runs are bit-reproducible.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .distributions import RngStream
from .errors import DataError, InvalidParameterError, RffMarginError, SweepError
from .hmc import HmcConfig, adapt_step_size, split_beta
from .lvm import (
    LatentState,
    LvmHyper,
    MultiViewDataset,
    ViewParams,
    infer_test_latent,
    init_latent,
    init_view_params,
    sample_r,
    sample_tau,
    sample_u_block,
    sample_v_columns,
    sample_w_columns,
)
from .maxmargin import Augmentation, Classifier, predict_label, sample_beta, sample_lambdas
from .rff_dpmm import (
    FrequencyBank,
    MixtureComponents,
    NiwBase,
    dpmm_sweep,
    features_from_trig,
    project_trig,
)

# Fixed substream ids per sampler block.
_STREAMS = {"init": 0, "beta": 1, "lambda": 2, "omega": 3, "h": 4, "dpmm": 5, "lvm": 6}


@dataclass
class SamplerConfig:
    """Model sizes, hyperparameters, and the iteration/collection policy."""

    m: int = 20
    M: int = 100
    K: int | list = 5
    eta: float = 1e3
    alpha: float = 1.0
    C: float = 1.0
    v: float = 1e-2
    a_r: float = 1e-1
    b_r: float = 1e-5
    a_tau: float = 1e-2
    b_tau: float = 1e-5
    max_iter: int = 1000
    burn_in: int = 800
    thinning: int = 1
    collect_count: int | None = None
    seed: int = 0
    cv_folds: int = 5
    hmc_step_h: float = 0.1
    hmc_step_omega: float = 0.1
    hmc_leapfrog: int = 10

    def __post_init__(self):
        if self.collect_count is None:
            self.collect_count = (self.max_iter - self.burn_in) // self.thinning
        if min(self.m, self.M, self.max_iter, self.thinning, self.collect_count) < 1:
            raise InvalidParameterError("all sampler counts must be positive")
        if self.burn_in < 0 or self.burn_in + self.collect_count * self.thinning > self.max_iter:
            raise InvalidParameterError(
                "need burn_in + collect_count * thinning <= max_iter"
            )
        for name in ("eta", "alpha", "C", "v", "a_r", "b_r", "a_tau", "b_tau"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")

    def ks_for(self, n_views: int):
        if isinstance(self.K, int):
            return [self.K] * n_views
        if len(self.K) != n_views:
            raise InvalidParameterError("one K per view required")
        return list(self.K)

    def hyper(self) -> LvmHyper:
        return LvmHyper(self.a_r, self.b_r, self.a_tau, self.b_tau, self.eta)


class ModelState:
    """Everything one sweep reads and writes, plus the trig caches."""

    def __init__(self, dataset, latent, views, bank, mixture, base, classifier,
                 augmentation, hmc_h, hmc_omega, hyper):
        self.dataset = dataset
        self.latent = latent
        self.views = views
        self.bank = bank
        self.mixture = mixture
        self.base = base
        self.classifier = classifier
        self.augmentation = augmentation
        self.hmc_h = hmc_h
        self.hmc_omega = hmc_omega
        self.hyper = hyper
        self.cosP, self.sinP = project_trig(bank.omegas, latent.H)

    def validate(self):
        self.latent.validate()
        for vp in self.views:
            vp.validate()
        self.mixture.validate()
        self.bank.validate(self.mixture)
        if np.any(self.augmentation.lambdas <= 0):
            raise RffMarginError("augmentation variables left their support")
        if not np.all(np.isfinite(self.classifier.beta)):
            raise RffMarginError("classifier weights are not finite")
        m = self.latent.H.shape[0]
        if self.bank.omegas.shape[1] != m:
            raise RffMarginError("frequency dimension does not match latents")

    def set_dataset(self, dataset):
        """Swap the data (shapes must match); trig caches stay valid."""
        if dataset.dims != self.dataset.dims or dataset.n != self.dataset.n:
            raise DataError("replacement dataset has different shapes")
        self.dataset = dataset


def init_state(dataset: MultiViewDataset, config: SamplerConfig, rng: RngStream) -> ModelState:
    """Diffuse-but-finite start for every block."""
    if dataset.labels is None:
        raise DataError("training requires labels")
    ks = config.ks_for(dataset.n_views)
    hyper = config.hyper()
    views = init_view_params(dataset.dims, config.m, ks, hyper, rng)
    latent = init_latent(dataset.n, config.m, ks, rng)
    base = NiwBase.default(config.m)
    mixture = MixtureComponents.initial(base, config.alpha, rng)
    bank = FrequencyBank.initial(config.M, mixture, rng)
    classifier = Classifier(np.zeros(2 * config.M + 1), v=config.v, C=config.C)
    augmentation = Augmentation(np.ones(dataset.n))
    state = ModelState(
        dataset, latent, views, bank, mixture, base, classifier, augmentation,
        HmcConfig(config.hmc_step_h, config.hmc_leapfrog),
        HmcConfig(config.hmc_step_omega, config.hmc_leapfrog),
        hyper,
    )
    state.validate()
    return state


def make_streams(seed: int):
    return {name: RngStream(seed, sid) for name, sid in _STREAMS.items()}


def sweep(state: ModelState, streams, sweep_index: int = 0):
    """One full update of every block; returns per-sweep diagnostics."""
    step = "start"
    try:
        ds = state.dataset
        y = ds.labels
        n = ds.n
        clf = state.classifier
        n_freq = state.bank.size

        step = "beta"
        phi = features_from_trig(state.cosP, state.sinP)
        clf.beta = sample_beta(
            phi, y, state.augmentation.lambdas, clf.v, clf.C, streams["beta"]
        )

        step = "lambda"
        scores = clf.beta @ phi
        state.augmentation.lambdas = sample_lambdas(y, scores, clf.C, streams["lambda"])

        step = "omega"
        bc, bs, bbias = split_beta(clf.beta, n_freq)
        precs = state.mixture.precisions()
        pmean = np.stack([state.mixture.means[k] for k in state.bank.z])
        pprec = np.stack([precs[k] for k in state.bank.z])
        gen_o = streams["omega"].gen
        momenta = gen_o.standard_normal((n_freq, state.latent.H.shape[0]))
        u_acc = gen_o.random(n_freq)
        state.bank.omegas, acc_o, div_o = kernels.omega_block_update(
            state.bank.omegas, state.cosP, state.sinP, state.latent.H,
            bc, bs, bbias, y, state.augmentation.lambdas, clf.C,
            pmean, pprec, state.hmc_omega.step_size, state.hmc_omega.leapfrog_steps,
            momenta, u_acc,
        )

        step = "h"
        m = state.latent.H.shape[0]
        A = np.eye(m)
        B = np.zeros((m, n))
        for vp, x, u in zip(state.views, ds.views, state.latent.U):
            A += vp.tau * (vp.W.T @ vp.W)
            B += vp.tau * (vp.W.T @ (x - vp.V @ u))
        gen_h = streams["h"].gen
        momenta = gen_h.standard_normal((m, n))
        u_acc = gen_h.random(n)
        state.latent.H, acc_h, div_h = kernels.h_block_update(
            state.latent.H, A, B, state.bank.omegas, bc, bs, bbias,
            y, state.augmentation.lambdas, clf.C,
            state.hmc_h.step_size, state.hmc_h.leapfrog_steps, momenta, u_acc,
        )
        state.cosP, state.sinP = project_trig(state.bank.omegas, state.latent.H)

        step = "dpmm"
        dpmm_sweep(state.bank, state.mixture, state.base, streams["dpmm"])

        step = "lvm"
        gen_l = streams["lvm"]
        for i, vp in enumerate(state.views):
            resid = ds.views[i] - vp.W @ state.latent.H
            state.latent.U[i] = sample_u_block(vp, resid, gen_l)
            resid -= vp.V @ state.latent.U[i]
            sample_w_columns(vp, state.latent.H, resid, gen_l)
            sample_v_columns(vp, state.latent.U[i], resid, gen_l)
            vp.r = sample_r(vp, state.hyper, gen_l)
            vp.tau = sample_tau(vp, state.hyper, resid, gen_l)
    except RffMarginError as exc:
        raise SweepError(
            sweep_index, step, exc,
            diagnostics={"n": state.dataset.n, "m": state.latent.H.shape[0],
                         "M": state.bank.size, "n_active": state.mixture.n_active},
        ) from exc

    scores = clf.beta @ features_from_trig(state.cosP, state.sinP)
    hinge = float(np.mean(np.maximum(0.0, 1.0 - y * scores)))
    return {
        "hinge": hinge,
        "accept_h": float(np.mean(acc_h)),
        "accept_omega": float(np.mean(acc_o)),
        "divergences": int(div_h + div_o),
        "n_active": state.mixture.n_active,
    }


def _snapshot(state: ModelState):
    snap = {
        "views": [
            {"W": vp.W.copy(), "V": vp.V.copy(), "tau": float(vp.tau)}
            for vp in state.views
        ],
        "omegas": state.bank.omegas.copy(),
        "beta": state.classifier.beta.copy(),
        "n_active": state.mixture.n_active,
        "weights": np.append(state.mixture.weights, state.mixture.remainder),
    }
    for view in snap["views"]:
        view["W"].flags.writeable = False
        view["V"].flags.writeable = False
    snap["omegas"].flags.writeable = False
    snap["beta"].flags.writeable = False
    snap["weights"].flags.writeable = False
    return snap


@dataclass
class PosteriorSamples:
    """Immutable post-burn-in snapshots used for ensemble prediction."""

    m: int
    M: int
    ks: list
    dims: list
    snapshots: list = field(default_factory=list)

    @property
    def n_views(self) -> int:
        return len(self.dims)

    def to_jsonable(self):
        return {
            "m": self.m,
            "M": self.M,
            "ks": list(self.ks),
            "dims": list(self.dims),
            "snapshots": [
                {
                    "views": [
                        {"W": v["W"].tolist(), "V": v["V"].tolist(), "tau": v["tau"]}
                        for v in s["views"]
                    ],
                    "omegas": s["omegas"].tolist(),
                    "beta": s["beta"].tolist(),
                    "n_active": s["n_active"],
                    "weights": s["weights"].tolist(),
                }
                for s in self.snapshots
            ],
        }

    @staticmethod
    def from_jsonable(obj) -> "PosteriorSamples":
        snaps = []
        for s in obj["snapshots"]:
            snap = {
                "views": [
                    {
                        "W": np.asarray(v["W"], dtype=float),
                        "V": np.asarray(v["V"], dtype=float),
                        "tau": float(v["tau"]),
                    }
                    for v in s["views"]
                ],
                "omegas": np.asarray(s["omegas"], dtype=float),
                "beta": np.asarray(s["beta"], dtype=float),
                "n_active": int(s["n_active"]),
                "weights": np.asarray(s["weights"], dtype=float),
            }
            snaps.append(snap)
        return PosteriorSamples(
            m=int(obj["m"]), M=int(obj["M"]), ks=list(obj["ks"]),
            dims=list(obj["dims"]), snapshots=snaps,
        )


def train(dataset: MultiViewDataset, config: SamplerConfig):
    """Run the sampler; returns (PosteriorSamples, diagnostics).

    Step sizes adapt multiplicatively during burn-in toward the target
    acceptance band, then freeze. Snapshots are collected after burn-in at
    the thinning interval.
    """
    streams = make_streams(config.seed)
    state = init_state(dataset, config, streams["init"])
    samples = PosteriorSamples(
        m=config.m, M=config.M, ks=config.ks_for(dataset.n_views), dims=list(dataset.dims)
    )
    diag = {
        "hinge": [], "accept_h": [], "accept_omega": [], "divergences": [],
        "n_active": [], "seconds_per_sweep": [],
    }
    for it in range(config.max_iter):
        t0 = time.perf_counter()
        stats = sweep(state, streams, sweep_index=it)
        diag["seconds_per_sweep"].append(time.perf_counter() - t0)
        for key in ("hinge", "accept_h", "accept_omega", "divergences", "n_active"):
            diag[key].append(stats[key])
        if it < config.burn_in:
            state.hmc_h.step_size = adapt_step_size(
                state.hmc_h.step_size, stats["accept_h"], state.hmc_h
            )
            state.hmc_omega.step_size = adapt_step_size(
                state.hmc_omega.step_size, stats["accept_omega"], state.hmc_omega
            )
        elif (it - config.burn_in) % config.thinning == 0 and len(
            samples.snapshots
        ) < config.collect_count:
            samples.snapshots.append(_snapshot(state))
    diag["final_step_size_h"] = state.hmc_h.step_size
    diag["final_step_size_omega"] = state.hmc_omega.step_size
    return samples, diag


def _snapshot_view_params(snap, ks, eta=1.0):
    return [
        ViewParams(
            W=v["W"], V=v["V"], tau=v["tau"],
            r=np.ones(v["W"].shape[1]), eta=eta,
        )
        for v in snap["views"]
    ]


def predict(samples: PosteriorSamples, test_views, latent_mode: str = "per-sample"):
    """Ensemble prediction over collected snapshots.

    "per-sample" infers the posterior-mean test code under each snapshot's
    parameters before scoring with that snapshot's frequencies and weights;
    "point" infers a single code from snapshot-averaged view parameters and
    scores it under every snapshot. Final scores are snapshot means; labels
    are their signs with ties toward +1.
    """
    if latent_mode not in ("per-sample", "point"):
        raise InvalidParameterError(f"unknown latent mode: {latent_mode!r}")
    if not samples.snapshots:
        raise InvalidParameterError("no snapshots to predict from")
    views = [np.asarray(v, dtype=float) for v in test_views]
    if len(views) != samples.n_views:
        raise InvalidParameterError(
            f"{len(views)} test views supplied, model has {samples.n_views}"
        )
    for v, d in zip(views, samples.dims):
        if v.shape[0] != d:
            raise InvalidParameterError(
                f"test view has {v.shape[0]} features, model expects {d}"
            )
    root_m = np.sqrt(samples.M)
    point_h = None
    if latent_mode == "point":
        mean_snap = copy.deepcopy(samples.snapshots[0])
        for view_idx in range(samples.n_views):
            mean_snap["views"][view_idx]["W"] = np.mean(
                [s["views"][view_idx]["W"] for s in samples.snapshots], axis=0
            )
            mean_snap["views"][view_idx]["V"] = np.mean(
                [s["views"][view_idx]["V"] for s in samples.snapshots], axis=0
            )
            mean_snap["views"][view_idx]["tau"] = float(
                np.mean([s["views"][view_idx]["tau"] for s in samples.snapshots])
            )
        point_h, _ = infer_test_latent(
            views, _snapshot_view_params(mean_snap, samples.ks)
        )
    total = 0.0
    for snap in samples.snapshots:
        if latent_mode == "per-sample":
            h_star, _ = infer_test_latent(views, _snapshot_view_params(snap, samples.ks))
        else:
            h_star = point_h
        t = snap["omegas"] @ h_star
        beta = snap["beta"]
        n_freq = samples.M
        scores = (
            beta[:n_freq] @ np.cos(t) + beta[n_freq:-1] @ np.sin(t)
        ) / root_m + beta[-1]
        total += scores
    scores = total / len(samples.snapshots)
    return scores, predict_label(scores)


def samples_to_json(samples: PosteriorSamples) -> str:
    return json.dumps(samples.to_jsonable(), sort_keys=True, separators=(",", ":"))


def samples_from_json(text: str) -> PosteriorSamples:
    return PosteriorSamples.from_jsonable(json.loads(text))
