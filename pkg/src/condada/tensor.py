"""Dense float64 tensors with reverse-mode automatic differentiation.

Arrays are numpy-backed, row-major, rank <= 2 (a batch axis plus at most one
feature axis). Every differentiable op records a backward closure on the
output node; calling :func:`backward` on a scalar loss walks the recorded
tape once in reverse topological order and accumulates gradients into every
reachable node with ``requires_grad``.

No higher-order gradients, no in-place graph mutation: build a fresh graph
per training step.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

# Floor applied to log arguments and sigmoid outputs so that saturated
# discriminator probabilities keep the adversarial losses finite.
LOG_CLAMP = 1e-12


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_backward_done")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 2:
            raise ValueError(f"rank {arr.ndim} tensor not supported (max rank 2): shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents: tuple = ()
        self._backward: Optional[Callable[[], None]] = None
        self._backward_done = False

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Small operator sugar; the module-level functions are the primary API.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other), -1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self) -> None:
        backward(self)


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        # Copy: g may alias another node's grad buffer (identity-like backwards).
        t.grad = np.array(g)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _node(data: np.ndarray, parents: tuple, backward_fn: Callable[[], None]) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every reachable leaf.

    The tape is single-use: a second call on the same loss raises.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward() requires a scalar loss, got shape {loss.shape}")
    if loss._backward_done:
        raise RuntimeError("backward() already called on this graph; rebuild the graph before differentiating again")
    loss._backward_done = True

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited and parent.requires_grad:
                stack.append((parent, False))

    _accumulate(loss, np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward()


# ---------------------------------------------------------------------------
# primitive ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def _bw():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    out = _node(out_data, (a, b), _bw)
    return out


def add(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def _bw():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.shape))

    out = _node(out_data, (a, b), _bw)
    return out


def mul(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def _bw():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.shape))

    out = _node(out_data, (a, b), _bw)
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data / b.data

    def _bw():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    out = _node(out_data, (a, b), _bw)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    out_data = a.data * c

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * c)

    out = _node(out_data, (a,), _bw)
    return out


def relu(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0.0
    out_data = np.where(mask, a.data, 0.0)

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * mask)

    out = _node(out_data, (a,), _bw)
    return out


def log(a: Tensor) -> Tensor:
    """Natural log with the argument clamped to >= LOG_CLAMP.

    Below the clamp the function is constant, so the derivative there is zero.
    """
    a = _as_tensor(a)
    clamped = np.maximum(a.data, LOG_CLAMP)
    out_data = np.log(clamped)
    mask = a.data > LOG_CLAMP

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * mask / clamped)

    out = _node(out_data, (a,), _bw)
    return out


def exp(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out_data = np.exp(a.data)

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * out_data)

    out = _node(out_data, (a,), _bw)
    return out


def sqrt(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out_data = np.sqrt(a.data)

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * 0.5 / np.maximum(out_data, LOG_CLAMP))

    out = _node(out_data, (a,), _bw)
    return out


def sigmoid(a: Tensor) -> Tensor:
    """Numerically stable sigmoid, output clamped into (0, 1).

    The clamp mirrors the log clamp: a saturated discriminator emits
    probabilities at distance LOG_CLAMP from {0, 1} rather than exactly on them.
    """
    a = _as_tensor(a)
    x = a.data
    out_data = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out_data = np.clip(out_data, LOG_CLAMP, 1.0 - LOG_CLAMP)

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * out_data * (1.0 - out_data))

    out = _node(out_data, (a,), _bw)
    return out


def softmax_rows(a: Tensor) -> Tensor:
    """Softmax over the last axis with max-subtraction for stability."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def _bw():
        if a.requires_grad:
            g = out.grad
            inner = (g * out_data).sum(axis=-1, keepdims=True)
            _accumulate(a, out_data * (g - inner))

    out = _node(out_data, (a,), _bw)
    return out


def concat(a: Tensor, b: Tensor, axis: int) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != b.data.ndim:
        raise ValueError(f"concat rank mismatch: {a.shape} vs {b.shape}")
    out_data = np.concatenate([a.data, b.data], axis=axis)
    split = a.shape[axis]

    def _bw():
        g = out.grad
        ga, gb = np.split(g, [split], axis=axis)
        if a.requires_grad:
            _accumulate(a, ga)
        if b.requires_grad:
            _accumulate(b, gb)

    out = _node(out_data, (a, b), _bw)
    return out


def reshape(a: Tensor, shape: tuple) -> Tensor:
    a = _as_tensor(a)
    out_data = a.data.reshape(shape)

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad.reshape(a.shape))

    out = _node(out_data, (a,), _bw)
    return out


def tsum(a: Tensor, axis: Optional[int] = None) -> Tensor:
    a = _as_tensor(a)
    out_data = a.data.sum(axis=axis)

    def _bw():
        if a.requires_grad:
            g = out.grad
            if axis is not None:
                g = np.expand_dims(g, axis=axis)
            _accumulate(a, np.broadcast_to(g, a.shape).copy())

    out = _node(np.asarray(out_data), (a,), _bw)
    return out


def tmean(a: Tensor, axis: Optional[int] = None) -> Tensor:
    count = a.data.size if axis is None else a.shape[axis]
    return scale(tsum(a, axis=axis), 1.0 / count)


def gradient_reversal(a: Tensor, coeff: float) -> Tensor:
    """Identity in the forward pass; backward multiplies the upstream gradient by -coeff."""
    a = _as_tensor(a)
    coeff = float(coeff)
    if coeff < 0.0:
        raise ValueError(f"gradient reversal coefficient must be nonnegative, got {coeff}")

    def _bw():
        if a.requires_grad:
            _accumulate(a, out.grad * -coeff)

    out = _node(a.data, (a,), _bw)
    return out


def rowwise_outer(a: Tensor, b: Tensor) -> Tensor:
    """Per-row flattened outer product: out[n, i*db + j] = a[n, i] * b[n, j]."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError(f"rowwise_outer shape mismatch: {a.shape} vs {b.shape}")
    n, da = a.shape
    db = b.shape[1]
    out_data = np.einsum("ni,nj->nij", a.data, b.data).reshape(n, da * db)

    def _bw():
        g = out.grad.reshape(n, da, db)
        if a.requires_grad:
            _accumulate(a, np.einsum("nij,nj->ni", g, b.data))
        if b.requires_grad:
            _accumulate(b, np.einsum("nij,ni->nj", g, a.data))

    out = _node(out_data, (a, b), _bw)
    return out


def l2_normalize_rows(a: Tensor, eps: float = 1e-24) -> Tensor:
    """Divide each row by its Euclidean norm (eps keeps zero rows finite)."""
    sq = tsum(mul(a, a), axis=-1 if a.data.ndim == 1 else 1)
    norm = sqrt(add(sq, Tensor(np.full(sq.shape, eps))))
    if a.data.ndim == 2:
        norm = reshape(norm, (a.shape[0], 1))
    return div(a, norm)
