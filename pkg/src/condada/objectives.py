"""Loss surface of the adversarial adaptation game.

A single training step builds one graph: source cross-entropy plus the
conditional discriminator's binary loss, with the discriminator's inputs
routed through gradient reversal scaled by the effective adversarial
coefficient. One backward pass then hands every player its own gradient:
D descends its loss while F and G ascend it, scaled by lambda, on top of
descending the classifier loss.

Entropy weights are per-example constants within a step: they prioritize
confident examples in the discriminator's loss (for both players) but carry
no gradient themselves. Letting the generator differentiate through the
weights opens a confidence-manipulation channel that destabilizes desk-scale
runs.

Target labels never enter any loss; they exist only for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conditioning as C
from . import networks as N
from . import tensor as T
from .tensor import Tensor


@dataclass
class LossBreakdown:
    classifier_loss: float
    discriminator_loss: float
    adversarial_term: float  # lambda-weighted adversarial summand of the generator objective
    total_G: float
    entropy_weights: np.ndarray | None  # source rows then target rows, when entropy conditioning is on
    objective: Tensor  # graph scalar whose backward drives all three players


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"label out of range [0, {n_classes}): found {labels.min()}..{labels.max()}")
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def cross_entropy(g_probs: Tensor, labels: np.ndarray) -> Tensor:
    """Mean over the batch of -log p[true label], with the clamped log."""
    hot = Tensor(one_hot(labels, g_probs.shape[1]))
    picked = T.tsum(T.mul(T.log(g_probs), hot), axis=1)
    return T.scale(T.tsum(picked), -1.0 / g_probs.shape[0])


def entropy(g_probs: Tensor) -> Tensor:
    """Per-row prediction entropy H = -sum_c g_c log g_c, shape (n,).

    Zero probabilities contribute zero: the clamped log is finite there and
    the multiplication by g_c = 0 kills the term.
    """
    return T.scale(T.tsum(T.mul(g_probs, T.log(g_probs)), axis=1), -1.0)


def entropy_weight(h: Tensor) -> Tensor:
    """w = 1 + e^{-H}: strictly decreasing, range (1, 2] for H >= 0."""
    return T.add(T.exp(T.scale(h, -1.0)), Tensor(np.ones(h.shape)))


def _weighted_mean(values: Tensor, weights: Tensor | None) -> Tensor:
    if weights is None:
        return T.tmean(values)
    if weights.shape != values.shape:
        raise ValueError(f"weight shape {weights.shape} does not match value shape {values.shape}")
    return T.div(T.tsum(T.mul(values, weights)), T.tsum(weights))


def adversarial_losses(d_src: Tensor, d_tgt: Tensor,
                       weights_src: Tensor | None = None,
                       weights_tgt: Tensor | None = None) -> tuple[Tensor, Tensor]:
    """Weighted discriminator loss -mean_w log d_src - mean_w log(1 - d_tgt).

    Weighted means are normalized by the batch weight sum, so rescaling all
    weights leaves the loss unchanged. Returns (loss_D, loss_adv): the same
    scalar in two roles. loss_D is what D descends; when the discriminator
    inputs were routed through gradient reversal, the identical node also
    serves as the adversarial quantity that F and G ascend.
    """
    loss_src = _weighted_mean(T.scale(T.log(d_src), -1.0), weights_src)
    one_minus = T.add(T.scale(d_tgt, -1.0), Tensor(np.ones(d_tgt.shape)))
    loss_tgt = _weighted_mean(T.scale(T.log(one_minus), -1.0), weights_tgt)
    loss = T.add(loss_src, loss_tgt)
    return loss, loss


def cdan_step_losses(x_src: np.ndarray, y_src: np.ndarray, x_tgt: np.ndarray,
                     bundle: N.ModelBundle, strategy: C.ConditioningStrategy,
                     proj: C.RandomProjection | None = None,
                     lambda_eff: float = 1.0, entropy_weighting: bool = False) -> LossBreakdown:
    """One simultaneous minimax step's losses over a source and a target batch."""
    if lambda_eff < 0.0:
        raise ValueError(f"lambda_eff must be >= 0, got {lambda_eff}")

    f_src = N.forward_F(bundle, Tensor(x_src))
    _, g_src = N.forward_G(bundle, f_src)
    f_tgt = N.forward_F(bundle, Tensor(x_tgt))
    _, g_tgt = N.forward_G(bundle, f_tgt)

    cls = cross_entropy(g_src, y_src)

    w_src = w_tgt = None
    if entropy_weighting:
        # Constant leaves: weights prioritize, they do not backpropagate.
        w_src = entropy_weight(entropy(Tensor(g_src.data)))
        w_tgt = entropy_weight(entropy(Tensor(g_tgt.data)))

    h_src = C.condition(f_src, g_src, strategy, proj)
    h_tgt = C.condition(f_tgt, g_tgt, strategy, proj)
    d_src = N.forward_D(bundle, T.gradient_reversal(h_src, lambda_eff))
    d_tgt = N.forward_D(bundle, T.gradient_reversal(h_tgt, lambda_eff))

    loss_d, loss_adv = adversarial_losses(d_src, d_tgt, w_src, w_tgt)
    objective = T.add(cls, loss_adv)

    weights = None
    if entropy_weighting:
        weights = np.concatenate([w_src.data, w_tgt.data])

    cls_value = cls.item()
    d_value = loss_d.item()
    return LossBreakdown(
        classifier_loss=cls_value,
        discriminator_loss=d_value,
        adversarial_term=-lambda_eff * d_value,
        total_G=cls_value - lambda_eff * d_value,
        entropy_weights=weights,
        objective=objective,
    )
