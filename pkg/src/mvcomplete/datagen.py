"""Synthetic multi-view problems: low-rank factors, sparse outliers, noise."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument
from .loss import LossKind
from .model import LatentBlocks, MultiViewProblem, ViewData, select_block


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_low_rank(d: int, n: int, r: int, seed=None) -> np.ndarray:
    """``U @ V.T`` with standard normal ``U`` (d x r) and ``V`` (n x r)."""
    if r < 0 or r > min(d, n):
        raise InvalidArgument(f"rank {r} invalid for a {d}x{n} matrix")
    rng = _rng(seed)
    u = rng.standard_normal((d, r))
    v = rng.standard_normal((n, r))
    return u @ v.T


def gen_sparse_outliers(d: int, n: int, density: float, a: float, seed=None) -> np.ndarray:
    """Exactly ``floor(density * d * n)`` entries drawn from ``Uniform[-a, a]``."""
    if not 0.0 <= density <= 1.0:
        raise InvalidArgument("density must lie in [0, 1]")
    if not a > 0:
        raise InvalidArgument("outlier scale must be positive")
    rng = _rng(seed)
    k = int(math.floor(density * d * n + 1e-9))
    out = np.zeros(d * n)
    idx = rng.choice(d * n, size=k, replace=False)
    out[idx] = rng.uniform(-a, a, size=k)
    return out.reshape(d, n)


def sample_mask(d: int, n: int, fraction: float, seed=None) -> np.ndarray:
    """Boolean mask with exactly ``floor(fraction * d * n)`` True cells."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgument("observed fraction must lie in (0, 1]")
    rng = _rng(seed)
    k = int(math.floor(fraction * d * n + 1e-9))
    mask = np.zeros(d * n, dtype=bool)
    mask[rng.choice(d * n, size=k, replace=False)] = True
    return mask.reshape(d, n)


@dataclass(frozen=True)
class SynthSpec:
    n: int = 200
    dims: tuple = (100, 100)
    ranks: Optional[tuple] = None
    outlier_density: float = 0.1
    outlier_scale: Optional[float] = None
    noise_sd: float = 1.0
    observed_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.ranks is None:
            r = math.ceil(0.05 * min(min(self.dims), self.n))
            object.__setattr__(self, "ranks", (r,) * (len(self.dims) + 1))
        else:
            object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if self.outlier_scale is None:
            object.__setattr__(self, "outlier_scale", 10.0 * (self.noise_sd or 1.0))
        if len(self.ranks) != len(self.dims) + 1:
            raise InvalidArgument("need one shared rank plus one rank per view")
        if self.ranks[0] > min(sum(self.dims), self.n):
            raise InvalidArgument("shared rank too large")
        for r, d in zip(self.ranks[1:], self.dims):
            if r > min(d, self.n):
                raise InvalidArgument("view rank too large")
        if not 0.0 <= self.outlier_density <= 1.0:
            raise InvalidArgument("outlier density must lie in [0, 1]")
        if self.noise_sd < 0:
            raise InvalidArgument("noise_sd must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        d["ranks"] = list(self.ranks)
        return d


@dataclass
class SynthData:
    """A generated problem with its ground truth and held-out cells."""

    problem: MultiViewProblem
    truth: LatentBlocks
    y: list
    train_masks: list
    spec: SynthSpec

    @property
    def test_masks(self) -> list:
        return [~m for m in self.train_masks]

    def signal(self, k: int) -> np.ndarray:
        """Noise- and outlier-free part ``P_k X0 + X_k`` of view ``k``."""
        return select_block(self.truth.x0, k, self.problem.dims) + self.truth.xk[k]


def gen_synthetic_problem(spec: SynthSpec) -> SynthData:
    """``Y_k = P_k X0 + X_k + S_k + E_k`` observed on a random fraction of cells."""
    rng = np.random.default_rng(spec.seed)
    dims, n = spec.dims, spec.n
    x0 = gen_low_rank(sum(dims), n, spec.ranks[0], rng)
    xk = [gen_low_rank(d, n, r, rng) for d, r in zip(dims, spec.ranks[1:])]
    sk = [gen_sparse_outliers(d, n, spec.outlier_density, spec.outlier_scale, rng) for d in dims]
    truth = LatentBlocks(x0, xk, sk)
    ys, masks, views = [], [], []
    for k, d in enumerate(dims):
        noise = spec.noise_sd * rng.standard_normal((d, n))
        y = select_block(x0, k, dims) + xk[k] + sk[k] + noise
        mask = sample_mask(d, n, spec.observed_fraction, rng)
        ys.append(y)
        masks.append(mask)
        views.append(ViewData.from_dense(y, mask, LossKind.SQUARED))
    return SynthData(MultiViewProblem.from_views(views), truth, ys, masks, spec)


def reference_problem(seed: int = 0, n: int = 20, d: int = 20,
                      observed_fraction: float = 0.6) -> MultiViewProblem:
    """Small fixed two-view squared-loss instance used for solver cross-checks."""
    spec = SynthSpec(n=n, dims=(d, d), ranks=(2, 2, 2), outlier_density=0.1,
                     outlier_scale=5.0, noise_sd=0.3, observed_fraction=observed_fraction,
                     seed=seed)
    return gen_synthetic_problem(spec).problem



def gen_multilabel(n: int = 60, d1: int = 20, d2: int = 6, rank: int = 3,
                   noise_sd: float = 0.5, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Features and +/-1 labels driven by one shared Gaussian factor.

    ``features = U1 V^T + noise`` and ``labels = sign(U2 V^T + noise)``,
    a small stand-in for a multi-label dataset.
    """
    rng = _rng(seed)
    v = rng.standard_normal((n, rank))
    features = rng.standard_normal((d1, rank)) @ v.T + noise_sd * rng.standard_normal((d1, n))
    scores = rng.standard_normal((d2, rank)) @ v.T + noise_sd * rng.standard_normal((d2, n))
    return features, np.where(scores >= 0, 1.0, -1.0)
