"""Strategies for combining feature rows f and prediction rows g into the
discriminator input.

The multilinear map is the per-row flattened outer product f (x) g, whose
inner products factor exactly as <f,f'><g,g'>. When d_f * d_g exceeds the
dimension threshold, a randomized surrogate (1/sqrt(d)) (R_f f) .* (R_g g)
built from fixed unit-variance random matrices approximates those inner
products without bias. Feature-only / prediction-only / concatenation are the
ablation baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialize
from . import tensor as T
from .tensor import Tensor

FEATURE_ONLY = "feature_only"
PREDICTION_ONLY = "prediction_only"
CONCAT = "concat"
MULTILINEAR = "multilinear"
RANDOMIZED_MULTILINEAR = "randomized_multilinear"

STRATEGY_TAGS = (FEATURE_ONLY, PREDICTION_ONLY, CONCAT, MULTILINEAR, RANDOMIZED_MULTILINEAR)
SAMPLERS = ("gaussian", "uniform")

DEFAULT_DIM_THRESHOLD = 4096
# Default output width when the randomized map is forced at desk scale;
# small enough to stay well below d_f * d_g for the default players.
DEFAULT_RANDOMIZED_DIM = 64

# Half-width of the zero-mean unit-variance uniform law.
_UNIFORM_HALF_WIDTH = float(np.sqrt(3.0))

_STREAM_PROJECTION = 12


@dataclass(frozen=True)
class ConditioningStrategy:
    tag: str
    d: int = DEFAULT_RANDOMIZED_DIM
    sampler: str = "gaussian"
    normalize_features: bool = False

    def __post_init__(self):
        if self.tag not in STRATEGY_TAGS:
            raise ValueError(f"unknown conditioning strategy {self.tag!r}, expected one of {STRATEGY_TAGS}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}, expected one of {SAMPLERS}")
        if self.tag == RANDOMIZED_MULTILINEAR and self.d < 1:
            raise ValueError(f"randomized dimension must be >= 1, got {self.d}")


@dataclass(frozen=True)
class RandomProjection:
    """The fixed matrices of the randomized map, sampled once per experiment."""

    r_f: Tensor
    r_g: Tensor
    sampler: str
    seed: int

    @property
    def d(self) -> int:
        return self.r_f.shape[0]

    @property
    def d_f(self) -> int:
        return self.r_f.shape[1]

    @property
    def d_g(self) -> int:
        return self.r_g.shape[1]


def multilinear_map(f: Tensor, g: Tensor) -> Tensor:
    """Rows f (n, d_f) and g (n, d_g) -> flattened outer products (n, d_f*d_g)."""
    return T.rowwise_outer(f, g)


def sample_projection(d: int, d_f: int, d_g: int, sampler: str, seed: int) -> RandomProjection:
    """Draw R_f (d, d_f) and R_g (d, d_g) i.i.d. from a symmetric unit-variance law."""
    if min(d, d_f, d_g) < 1:
        raise ValueError(f"projection dims must be >= 1, got d={d}, d_f={d_f}, d_g={d_g}")
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}, expected one of {SAMPLERS}")
    rng = np.random.default_rng([int(seed), _STREAM_PROJECTION])
    if sampler == "gaussian":
        r_f = rng.standard_normal((d, d_f))
        r_g = rng.standard_normal((d, d_g))
    else:
        r_f = rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH, size=(d, d_f))
        r_g = rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH, size=(d, d_g))
    return RandomProjection(r_f=Tensor(r_f), r_g=Tensor(r_g), sampler=sampler, seed=int(seed))


def randomized_multilinear_map(f: Tensor, g: Tensor, proj: RandomProjection) -> Tensor:
    """(1/sqrt(d)) (R_f f) .* (R_g g) per row; gradients reach f and g only."""
    if f.shape[1] != proj.d_f or g.shape[1] != proj.d_g:
        raise ValueError(
            f"projection expects rows of widths ({proj.d_f}, {proj.d_g}), got ({f.shape[1]}, {g.shape[1]})"
        )
    a = T.matmul(f, _transposed(proj.r_f))
    b = T.matmul(g, _transposed(proj.r_g))
    return T.scale(T.mul(a, b), 1.0 / np.sqrt(proj.d))


def _transposed(t: Tensor) -> Tensor:
    return Tensor(t.data.T)


def select_strategy(d_f: int, d_g: int, threshold: int = DEFAULT_DIM_THRESHOLD) -> str:
    """Exact multilinear map iff d_f * d_g fits the threshold, else randomized."""
    if min(d_f, d_g) < 1:
        raise ValueError(f"dims must be >= 1, got d_f={d_f}, d_g={d_g}")
    return MULTILINEAR if d_f * d_g <= threshold else RANDOMIZED_MULTILINEAR


def conditioned_dim(strategy: ConditioningStrategy, d_f: int, d_g: int) -> int:
    """Width of the discriminator input as a pure function of the strategy."""
    if strategy.tag == FEATURE_ONLY:
        return d_f
    if strategy.tag == PREDICTION_ONLY:
        return d_g
    if strategy.tag == CONCAT:
        return d_f + d_g
    if strategy.tag == MULTILINEAR:
        return d_f * d_g
    return strategy.d


def condition(f: Tensor, g: Tensor, strategy: ConditioningStrategy,
              proj: RandomProjection | None = None) -> Tensor:
    """Dispatch rows (f, g) to the discriminator input for the given strategy."""
    if strategy.tag == FEATURE_ONLY:
        return f
    if strategy.tag == PREDICTION_ONLY:
        return g
    if strategy.tag == CONCAT:
        return T.concat(f, g, axis=1)
    if strategy.tag == MULTILINEAR:
        return multilinear_map(f, g)
    if proj is None:
        raise ValueError("randomized multilinear conditioning requires a sampled projection")
    if strategy.normalize_features:
        f = T.l2_normalize_rows(f)
    return randomized_multilinear_map(f, g, proj)


def save_projection(proj: RandomProjection, path) -> None:
    serialize.write_arrays(
        path,
        {"proj.R_f": proj.r_f.data, "proj.R_g": proj.r_g.data},
        meta={"proj.sampler": proj.sampler, "proj.seed": str(proj.seed)},
    )


def load_projection(path) -> RandomProjection:
    arrays, meta = serialize.read_arrays(path)
    return projection_from_arrays(arrays, meta)


def projection_from_arrays(arrays: dict[str, np.ndarray], meta: dict[str, str]) -> RandomProjection:
    return RandomProjection(
        r_f=Tensor(arrays["proj.R_f"]),
        r_g=Tensor(arrays["proj.R_g"]),
        sampler=meta.get("proj.sampler", "gaussian"),
        seed=int(meta.get("proj.seed", "0")),
    )
