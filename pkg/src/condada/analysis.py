"""Diagnostics: accuracy, proxy A-distance, the randomized-map Monte Carlo
verifier, entropy/correctness grouping, and feature export."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import networks as N
from . import tensor as T
from .datagen import LabeledSet
from .tensor import Tensor

_STREAM_ADIST_INIT = 21

# A deliberately small probe: enough capacity to detect macro-separation of
# the two domains, not enough to memorize residual per-point differences.
_ADIST_HIDDEN = 4
_ADIST_EPOCHS = 200
_ADIST_LR = 0.05
_ADIST_MOMENTUM = 0.9


@dataclass
class EpochMetrics:
    epoch: int
    step: int
    lr: float
    lambda_eff: float
    loss_cls: float
    loss_d: float
    acc_src: float
    acc_tgt: float
    mean_w_correct: float | None
    mean_w_incorrect: float | None


@dataclass
class MetricsRecord:
    epochs: list[EpochMetrics] = field(default_factory=list)
    a_distance: float | None = None

    @property
    def final_target_accuracy(self) -> float:
        return self.epochs[-1].acc_tgt


def accuracy(g_probs: np.ndarray, labels: np.ndarray) -> float:
    """Argmax accuracy; ties break toward the lowest class index."""
    g_probs = np.asarray(g_probs)
    labels = np.asarray(labels)
    return float(np.mean(np.argmax(g_probs, axis=1) == labels))


def a_distance_from_error(eps: float) -> float:
    """dist_A = 2(1 - 2*eps) with eps clamped to <= 0.5 (worse than chance
    means no separability)."""
    return 2.0 * (1.0 - 2.0 * min(float(eps), 0.5))


def proxy_a_distance(f_src: np.ndarray, f_tgt: np.ndarray, seed: int) -> float:
    """Train a fresh 2-layer domain classifier on a 50/50 split of each domain
    and plug its held-out error into dist_A = 2(1 - 2*eps).

    The output layer starts at zero, which makes training equivariant to
    swapping the two domains (the learned logits just flip sign), so the
    measure is symmetric in its arguments up to float summation order.
    """
    f_src = np.asarray(f_src, dtype=np.float64)
    f_tgt = np.asarray(f_tgt, dtype=np.float64)
    if f_src.shape[0] < 40 or f_tgt.shape[0] < 40:
        raise ValueError(f"need >= 40 rows per domain, got {f_src.shape[0]} and {f_tgt.shape[0]}")

    # Interleaved 50/50 split: deterministic, class-balanced for block-ordered
    # rows, and independent of which argument holds which domain.
    src_train, src_test = f_src[0::2], f_src[1::2]
    tgt_train, tgt_test = f_tgt[0::2], f_tgt[1::2]

    x_train = np.vstack([src_train, tgt_train])
    y_train = np.concatenate([np.ones(src_train.shape[0]), np.zeros(tgt_train.shape[0])])

    dim = x_train.shape[1]
    init_rng = np.random.default_rng([seed, _STREAM_ADIST_INIT])
    a = np.sqrt(6.0 / (dim + _ADIST_HIDDEN))
    w1 = Tensor(init_rng.uniform(-a, a, size=(dim, _ADIST_HIDDEN)), requires_grad=True)
    b1 = Tensor(np.zeros(_ADIST_HIDDEN), requires_grad=True)
    w2 = Tensor(np.zeros((_ADIST_HIDDEN, 1)), requires_grad=True)
    b2 = Tensor(np.zeros(1), requires_grad=True)
    params = [w1, b1, w2, b2]
    velocity = [np.zeros_like(p.data) for p in params]

    x_const = Tensor(x_train)
    y_const = Tensor(y_train)
    n = x_train.shape[0]
    for _ in range(_ADIST_EPOCHS):
        p = _domain_prob(x_const, w1, b1, w2, b2)
        one_minus_y = Tensor(1.0 - y_train)
        one_minus_p = T.add(T.scale(p, -1.0), Tensor(np.ones(n)))
        ll = T.add(T.mul(y_const, T.log(p)), T.mul(one_minus_y, T.log(one_minus_p)))
        loss = T.scale(T.tsum(ll), -1.0 / n)
        T.backward(loss)
        for i, prm in enumerate(params):
            velocity[i] = _ADIST_MOMENTUM * velocity[i] + prm.grad
            prm.data = prm.data - _ADIST_LR * velocity[i]
            prm.grad = None

    def test_error(rows: np.ndarray, label: float) -> np.ndarray:
        p = _domain_prob(Tensor(rows), w1, b1, w2, b2).data
        return (p > 0.5).astype(np.float64) != label

    errors = np.concatenate([test_error(src_test, 1.0), test_error(tgt_test, 0.0)])
    return a_distance_from_error(errors.mean())


def _domain_prob(x: Tensor, w1, b1, w2, b2) -> Tensor:
    h = T.relu(T.add(T.matmul(x, w1), b1))
    z = T.add(T.matmul(h, w2), b2)
    return T.reshape(T.sigmoid(z), (x.shape[0],))


@dataclass(frozen=True)
class Theorem1Result:
    exact: float
    mc_mean: float
    mc_var: float
    standard_error: float
    d: int
    n_resamples: int
    sampler: str

    @property
    def err_in_se(self) -> float:
        return abs(self.mc_mean - self.exact) / self.standard_error

    def unbiased_within(self, k: float = 3.0) -> bool:
        return abs(self.mc_mean - self.exact) < k * self.standard_error


_UNIFORM_HALF_WIDTH = float(np.sqrt(3.0))
_RESAMPLE_CHUNK = 512
_STREAM_RESAMPLE = 40


def theorem1_verify(f: np.ndarray, g: np.ndarray, f2: np.ndarray, g2: np.ndarray,
                    d: int, n_resamples: int, sampler: str, seed: int) -> Theorem1Result:
    """Monte Carlo check that the randomized map's inner product is an unbiased
    estimate of <f,f2><g,g2>.

    Resamples are drawn in fixed-size chunks, each chunk from its own rng
    stream derived from (seed, chunk index). The estimate vector is therefore
    a pure function of the master seed, and any parallel schedule over chunks
    reproduces it bit for bit.
    """
    if n_resamples < 1000:
        raise ValueError(f"n_resamples must be >= 1000, got {n_resamples}")
    if sampler not in ("gaussian", "uniform"):
        raise ValueError(f"unknown sampler {sampler!r}")
    f, g, f2, g2 = (np.asarray(v, dtype=np.float64).reshape(-1) for v in (f, g, f2, g2))
    df, dg = f.size, g.size
    exact = float(np.dot(f, f2) * np.dot(g, g2))

    estimates = np.empty(n_resamples)
    for chunk_index, start in enumerate(range(0, n_resamples, _RESAMPLE_CHUNK)):
        k = min(_RESAMPLE_CHUNK, n_resamples - start)
        rng = np.random.default_rng([seed, _STREAM_RESAMPLE, chunk_index])
        if sampler == "gaussian":
            block = rng.standard_normal((k, d, df + dg))
        else:
            block = rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH, size=(k, d, df + dg))
        rf, rg = block[:, :, :df], block[:, :, df:]
        a, a2 = rf @ f, rf @ f2
        b, b2 = rg @ g, rg @ g2
        estimates[start : start + k] = (a * a2 * b * b2).sum(axis=1) / d

    mc_var = float(estimates.var(ddof=1))
    return Theorem1Result(
        exact=exact,
        mc_mean=float(estimates.mean()),
        mc_var=mc_var,
        standard_error=float(np.sqrt(mc_var / n_resamples)),
        d=d,
        n_resamples=n_resamples,
        sampler=sampler,
    )


def entropy_exp_neg(g_probs: np.ndarray) -> np.ndarray:
    """Per-row e^{-H(g)}: the confidence weight before the +1 shift."""
    g = np.asarray(g_probs)
    logs = np.where(g > 0.0, np.log(np.maximum(g, 1e-300)), 0.0)
    h = -(g * logs).sum(axis=1)
    return np.exp(-h)


def entropy_correctness_report(g_probs_tgt: np.ndarray, labels_tgt: np.ndarray) -> tuple[float | None, float | None]:
    """Mean e^{-H} over correctly vs. incorrectly predicted examples.

    An empty group is reported as None (absent), never as zero.
    """
    conf = entropy_exp_neg(g_probs_tgt)
    correct = np.argmax(np.asarray(g_probs_tgt), axis=1) == np.asarray(labels_tgt)
    mean_correct = float(conf[correct].mean()) if correct.any() else None
    mean_incorrect = float(conf[~correct].mean()) if (~correct).any() else None
    return mean_correct, mean_incorrect


def export_features(bundle: N.ModelBundle, sets, path) -> None:
    """Write one CSV row per example: feature coordinates, label, domain."""
    if isinstance(sets, LabeledSet):
        sets = [sets]
    d_f = bundle.d_f
    with open(path, "w") as fh:
        fh.write(",".join(f"f{i}" for i in range(d_f)) + ",label,domain\n")
        for labeled in sets:
            feats = N.forward_F(bundle, Tensor(labeled.x)).data
            for row, label in zip(feats, labeled.y):
                fh.write(",".join(repr(v) for v in row.tolist()) + f",{label},{labeled.domain}\n")
