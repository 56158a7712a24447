"""Feed-forward dense networks with explicit parameter layout.

Weights are stored as (out, in) matrices so the final layer of a network is
directly addressable for Gaussian perturbation and for head-only re-evaluation
from cached hidden activations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import Tensor, add, as_tensor, matmul, relu, transpose

logger = logging.getLogger(__name__)

ACTIVATIONS = ("identity", "relu")


@dataclass
class Layer:
    weight: Tensor  # (out, in)
    bias: Tensor  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.data.ndim != 2 or self.bias.data.ndim != 1:
            raise ValueError("layer expects a 2-D weight and 1-D bias")
        if self.weight.data.shape[0] != self.bias.data.shape[0]:
            raise ValueError(
                f"bias length {self.bias.data.shape[0]} does not match "
                f"weight output dim {self.weight.data.shape[0]}"
            )

    @property
    def in_dim(self) -> int:
        return self.weight.data.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.data.shape[0]


def _apply(layer: Layer, x: Tensor) -> Tensor:
    z = add(matmul(x, transpose(layer.weight)), layer.bias)
    return relu(z) if layer.activation == "relu" else z


class DenseNet:
    """An ordered stack of dense layers with chained dimensions."""

    def __init__(self, layers: Sequence[Layer]):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )
        for layer in layers:
            if not (np.isfinite(layer.weight.data).all() and np.isfinite(layer.bias.data).all()):
                raise ValueError("layer parameters must be finite")
        self.layers = layers

    @classmethod
    def build(
        cls,
        dims: Sequence[int],
        activations: Sequence[str] | None,
        rng: np.random.Generator,
        dtype=np.float32,
    ) -> "DenseNet":
        """Create a net with the given layer widths.

        Weights are uniform in +/- sqrt(6 / (fan_in + fan_out)), biases zero.
        ``activations`` defaults to relu on hidden layers, identity on the last.
        """
        if len(dims) < 2:
            raise ValueError("dims must list at least input and output widths")
        n_layers = len(dims) - 1
        if activations is None:
            activations = ["relu"] * (n_layers - 1) + ["identity"]
        if len(activations) != n_layers:
            raise ValueError("one activation per layer required")
        layers = []
        for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype)
            b = np.zeros(fan_out, dtype=dtype)
            layers.append(Layer(Tensor(w, requires_grad=True), Tensor(b, requires_grad=True), act))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dtype(self):
        return self.layers[0].weight.data.dtype

    def parameters(self) -> list[Tensor]:
        params = []
        for layer in self.layers:
            params.append(layer.weight)
            params.append(layer.bias)
        return params

    def topology(self) -> list[tuple[int, int, str]]:
        return [(l.in_dim, l.out_dim, l.activation) for l in self.layers]

    def _prepare(self, x) -> tuple[Tensor, bool]:
        t = as_tensor(x, dtype=self.dtype)
        squeeze = t.data.ndim == 1
        if squeeze:
            t = Tensor(t.data.reshape(1, -1), requires_grad=t.requires_grad, parents=(t,))
            src = t._parents[0]

            def bw(g):
                if src.requires_grad:
                    src._accumulate(g.reshape(-1))

            t._bw = bw
        if t.data.shape[-1] != self.in_dim:
            raise ValueError(
                f"input width {t.data.shape[-1]} does not match net input dim {self.in_dim}"
            )
        return t, squeeze

    def forward(self, x) -> Tensor:
        """Run all layers; accepts a single vector or an (n, in_dim) batch."""
        t, squeeze = self._prepare(x)
        for layer in self.layers:
            t = _apply(layer, t)
        if squeeze:
            out = Tensor(t.data.reshape(-1), requires_grad=t.requires_grad, parents=(t,))
            src = t

            def bw(g):
                if src.requires_grad:
                    src._accumulate(g.reshape(1, -1))

            out._bw = bw
            return out
        return t

    __call__ = forward

    def layer_outputs(self, x) -> list[Tensor]:
        """Post-activation output of every layer, batched."""
        t, _ = self._prepare(x)
        outs = []
        for layer in self.layers:
            t = _apply(layer, t)
            outs.append(t)
        return outs

    def head_forward(self, hidden) -> Tensor:
        """Apply only the final layer to cached penultimate activations."""
        t = as_tensor(hidden, dtype=self.dtype)
        return _apply(self.layers[-1], t)

    def copy(self) -> "DenseNet":
        layers = [
            Layer(
                Tensor(l.weight.data.copy(), requires_grad=l.weight.requires_grad),
                Tensor(l.bias.data.copy(), requires_grad=l.bias.requires_grad),
                l.activation,
            )
            for l in self.layers
        ]
        return DenseNet(layers)


def perturb_last_layer(
    net: DenseNet,
    sigma: float,
    rng: np.random.Generator | int,
    include_bias: bool = True,
) -> DenseNet:
    """Copy ``net`` with final-layer parameters drawn from N(original, sigma^2).

    The source network is never touched and non-final layers of the copy are
    bitwise-equal to the source. ``sigma <= 0`` degenerates to a plain copy and
    is logged, since it produces a hypothesis identical to the original.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    out = net.copy()
    if sigma <= 0:
        logger.warning("perturb_last_layer called with sigma=%s; returning identity copy", sigma)
        return out
    last = out.layers[-1]
    dtype = last.weight.data.dtype
    noise_w = rng.normal(0.0, sigma, size=last.weight.data.shape)
    last.weight.data = (last.weight.data + noise_w).astype(dtype)
    if include_bias:
        noise_b = rng.normal(0.0, sigma, size=last.bias.data.shape)
        last.bias.data = (last.bias.data + noise_b).astype(dtype)
    return out
