"""SGD with classical momentum plus the two annealing schedules.

Learning rate decays as eta_p = eta0 * (1 + alpha*p)^(-beta) and the
adversarial coefficient ramps as lambda * (1 - e^(-delta*p)) / (1 + e^(-delta*p)),
both over training progress p in [0, 1] (completed steps / total steps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tensor import Tensor


@dataclass(frozen=True)
class ScheduleParams:
    eta0: float = 0.01
    alpha: float = 10.0
    beta: float = 0.75
    delta: float = 10.0
    momentum: float = 0.9
    lam: float = 1.0

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ConfigError(f"eta0 must be > 0, got {self.eta0}")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")
        if self.delta <= 0:
            raise ConfigError(f"delta must be > 0, got {self.delta}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")


def _check_progress(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"training progress must be in [0, 1], got {p}")
    return p


def lr_schedule(p: float, sp: ScheduleParams) -> float:
    p = _check_progress(p)
    return sp.eta0 * (1.0 + sp.alpha * p) ** (-sp.beta)


def lambda_schedule(p: float, delta: float) -> float:
    p = _check_progress(p)
    e = np.exp(-delta * p)
    return float((1.0 - e) / (1.0 + e))


def sgd_momentum_step(params: list[np.ndarray], grads: list[np.ndarray],
                      velocity: list[np.ndarray], eta: float,
                      momentum: float) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Classical momentum: v <- momentum*v + grad; param <- param - eta*v."""
    if len(params) != len(grads) or len(params) != len(velocity):
        raise ValueError("params, grads and velocity must have equal lengths")
    new_params, new_velocity = [], []
    for p, g, v in zip(params, grads, velocity):
        if p.shape != g.shape or p.shape != v.shape:
            raise ValueError(f"shape mismatch in SGD step: param {p.shape}, grad {g.shape}, velocity {v.shape}")
        v_next = momentum * v + g
        new_params.append(p - eta * v_next)
        new_velocity.append(v_next)
    return new_params, new_velocity


class SgdMomentum:
    """Stateful wrapper over sgd_momentum_step with per-group learning-rate multipliers.

    Groups hold live parameter tensors; step() consumes and clears their grads.
    """

    def __init__(self, groups: list[tuple[list[Tensor], float]], momentum: float):
        self.groups = groups
        self.momentum = momentum
        self.velocity = [[np.zeros_like(t.data) for t in params] for params, _ in groups]

    def step(self, eta: float) -> None:
        # Same recurrence as sgd_momentum_step, applied in place.
        for gi, (params, mult) in enumerate(self.groups):
            lr = eta * mult
            for t, v in zip(params, self.velocity[gi]):
                v *= self.momentum
                if t.grad is not None:
                    v += t.grad
                t.data -= lr * v
                t.grad = None
