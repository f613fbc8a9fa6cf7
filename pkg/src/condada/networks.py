"""The three players: feature extractor F, classifier head G, domain discriminator D.

All three are plain MLPs over the tensor tape. G emits softmax probabilities
(the rows that enter both the conditioning map and the entropy weights); D
emits a per-row probability of "source" through a sigmoid head.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import serialize
from . import tensor as T
from .errors import ConfigError
from .tensor import Tensor

_HEADS = ("linear", "softmax", "sigmoid")

# Per-network init streams derived from the model seed.
_STREAM_F, _STREAM_G, _STREAM_D = 1, 2, 3


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first) plus the output head transform."""

    widths: tuple[int, ...]
    head: str = "linear"
    hidden: str = "relu"

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ConfigError(f"MlpSpec needs at least one layer (>=2 widths), got {self.widths}")
        if any(w < 1 for w in self.widths):
            raise ConfigError(f"MlpSpec widths must all be >= 1, got {self.widths}")
        if self.head not in _HEADS:
            raise ConfigError(f"unknown head {self.head!r}, expected one of {_HEADS}")
        if self.hidden != "relu":
            raise ConfigError(f"unsupported hidden activation {self.hidden!r}")

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def output_dim(self) -> int:
        return self.widths[-1]


@dataclass
class ModelBundle:
    spec_f: MlpSpec
    spec_g: MlpSpec
    spec_d: MlpSpec
    layers_f: list[tuple[Tensor, Tensor]] = field(repr=False, default_factory=list)
    layers_g: list[tuple[Tensor, Tensor]] = field(repr=False, default_factory=list)
    layers_d: list[tuple[Tensor, Tensor]] = field(repr=False, default_factory=list)

    @property
    def d_f(self) -> int:
        return self.spec_f.output_dim

    @property
    def d_g(self) -> int:
        return self.spec_g.output_dim

    def params_f(self) -> list[Tensor]:
        return [t for pair in self.layers_f for t in pair]

    def params_g(self) -> list[Tensor]:
        return [t for pair in self.layers_g for t in pair]

    def params_d(self) -> list[Tensor]:
        return [t for pair in self.layers_d for t in pair]

    def all_params(self) -> list[Tensor]:
        return self.params_f() + self.params_g() + self.params_d()


def _init_layers(spec: MlpSpec, rng: np.random.Generator) -> list[tuple[Tensor, Tensor]]:
    layers = []
    for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w = Tensor(rng.uniform(-a, a, size=(fan_in, fan_out)), requires_grad=True)
        b = Tensor(np.zeros(fan_out), requires_grad=True)
        layers.append((w, b))
    return layers


def init_model(spec_f: MlpSpec, spec_g: MlpSpec, spec_d: MlpSpec, seed: int) -> ModelBundle:
    """Glorot-uniform weights, zero biases, one derived stream per network."""
    if spec_g.input_dim != spec_f.output_dim:
        raise ConfigError(
            f"classifier input width {spec_g.input_dim} does not match feature width {spec_f.output_dim}"
        )
    if spec_d.output_dim != 1:
        raise ConfigError(f"discriminator must end in a single unit, got {spec_d.output_dim}")
    return ModelBundle(
        spec_f=spec_f,
        spec_g=spec_g,
        spec_d=spec_d,
        layers_f=_init_layers(spec_f, np.random.default_rng([seed, _STREAM_F])),
        layers_g=_init_layers(spec_g, np.random.default_rng([seed, _STREAM_G])),
        layers_d=_init_layers(spec_d, np.random.default_rng([seed, _STREAM_D])),
    )


def _forward_mlp(layers: list[tuple[Tensor, Tensor]], spec: MlpSpec, x: Tensor) -> Tensor:
    if x.data.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ValueError(f"expected batch of shape (n, {spec.input_dim}), got {x.shape}")
    h = x
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        h = T.add(T.matmul(h, w), b)
        if i < last:
            h = T.relu(h)
    return h


def forward_F(bundle: ModelBundle, x: Tensor) -> Tensor:
    """Batch of inputs -> batch of feature rows."""
    return _forward_mlp(bundle.layers_f, bundle.spec_f, x)


def forward_G(bundle: ModelBundle, f: Tensor) -> tuple[Tensor, Tensor]:
    """Feature rows -> (logits, softmax probability rows)."""
    logits = _forward_mlp(bundle.layers_g, bundle.spec_g, f)
    return logits, T.softmax_rows(logits)


def forward_D(bundle: ModelBundle, conditioned: Tensor) -> Tensor:
    """Conditioned rows -> per-row source probability in (0, 1), shape (n,)."""
    out = _forward_mlp(bundle.layers_d, bundle.spec_d, conditioned)
    return T.reshape(T.sigmoid(out), (conditioned.shape[0],))


def save_model(bundle: ModelBundle, path, extra_arrays: dict[str, np.ndarray] | None = None,
               meta: dict[str, str] | None = None) -> None:
    arrays: dict[str, np.ndarray] = {}
    for tag, layers in (("F", bundle.layers_f), ("G", bundle.layers_g), ("D", bundle.layers_d)):
        for i, (w, b) in enumerate(layers):
            arrays[f"{tag}.{i}.W"] = w.data
            arrays[f"{tag}.{i}.b"] = b.data
    arrays.update(extra_arrays or {})
    full_meta = {"F.head": bundle.spec_f.head, "G.head": bundle.spec_g.head, "D.head": bundle.spec_d.head}
    full_meta.update(meta or {})
    serialize.write_arrays(path, arrays, meta=full_meta)


def load_model(path) -> tuple[ModelBundle, dict[str, np.ndarray], dict[str, str]]:
    """Rebuild a bundle from a saved file; extra (non-layer) arrays come back verbatim."""
    arrays, meta = serialize.read_arrays(path)
    layers_by_tag: dict[str, list[tuple[Tensor, Tensor]]] = {}
    extras: dict[str, np.ndarray] = {}
    grouped: dict[str, dict[int, dict[str, np.ndarray]]] = {"F": {}, "G": {}, "D": {}}
    for name, arr in arrays.items():
        parts = name.split(".")
        if len(parts) == 3 and parts[0] in grouped and parts[2] in ("W", "b"):
            grouped[parts[0]].setdefault(int(parts[1]), {})[parts[2]] = arr
        else:
            extras[name] = arr
    specs = {}
    for tag, by_index in grouped.items():
        layers = []
        widths = []
        for i in sorted(by_index):
            w, b = by_index[i]["W"], by_index[i]["b"]
            if not widths:
                widths.append(w.shape[0])
            widths.append(w.shape[1])
            layers.append((Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)))
        if not layers:
            raise ValueError(f"{path}: no layers found for network {tag}")
        layers_by_tag[tag] = layers
        specs[tag] = MlpSpec(tuple(widths), head=meta.get(f"{tag}.head", "linear"))
    bundle = ModelBundle(
        spec_f=specs["F"], spec_g=specs["G"], spec_d=specs["D"],
        layers_f=layers_by_tag["F"], layers_g=layers_by_tag["G"], layers_d=layers_by_tag["D"],
    )
    return bundle, extras, meta
