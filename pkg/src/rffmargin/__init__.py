"""Multi-view Bayesian max-margin classification with adaptive random
Fourier feature kernels, trained by a hybrid Gibbs/HMC/slice sampler."""

from .distributions import RngStream
from .lvm import MultiViewDataset
from .sampler import PosteriorSamples, SamplerConfig, predict, train

__version__ = "0.1.0"

__all__ = [
    "MultiViewDataset",
    "PosteriorSamples",
    "RngStream",
    "SamplerConfig",
    "predict",
    "train",
    "__version__",
]
