"""Chain networks and the global block-triangular operator algebra.

A depth-L chain network with layer widths n_1..n_L acts on stacked
"global" vectors in R^n, n = n_1 + ... + n_L, holding one contiguous
block per layer. The global weight operator W carries W_l on the
subdiagonal block (l, l-1) and is strictly lower block-triangular, so
W^L = 0 (and likewise for its transpose). W is never materialized as a
dense matrix; :func:`apply_global_W` and :func:`apply_global_Wt` are
its action, one per-layer matvec per block.

The private ``*_array`` helpers operate on raw ndarrays of shape (n,)
for a single state or (n, B) for B independent states stacked as
columns; every public operation wraps them behind the
:class:`GlobalVector` interface.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NumericError, ShapeError

__all__ = [
    "Activation",
    "LayerSpec",
    "LayerParams",
    "NetworkParams",
    "GlobalVector",
    "random_network",
    "forward_pass",
    "beta_drive",
    "apply_global_W",
    "apply_global_Wt",
    "forward_field",
    "local_derivative_diag",
]


class Activation(enum.Enum):
    """Elementwise layer nonlinearity with its exact derivative."""

    IDENTITY = "Identity"
    TANH = "Tanh"
    SIGMOID = "Sigmoid"
    RELU = "ReLU"

    @classmethod
    def from_name(cls, name: str) -> "Activation":
        key = str(name).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ConfigError(f"unknown activation {name!r}")

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self is Activation.IDENTITY:
            return v.copy()
        if self is Activation.TANH:
            return np.tanh(v)
        if self is Activation.SIGMOID:
            return expit(v)
        return np.maximum(v, 0)

    def derivative(self, v: np.ndarray) -> np.ndarray:
        """Exact elementwise derivative at pre-activation v.

        For ReLU the derivative at exactly 0 is defined as 0; every
        gradient method in the package must share this convention or the
        exact-equality claims between them break at kink points.
        """
        if self is Activation.IDENTITY:
            return np.ones_like(v)
        if self is Activation.TANH:
            t = np.tanh(v)
            return 1.0 - t * t
        if self is Activation.SIGMOID:
            p = expit(v)
            return p * (1.0 - p)
        return (v > 0).astype(v.dtype)


@dataclass(frozen=True)
class LayerSpec:
    """Width and nonlinearity of one layer."""

    width: int
    activation: Activation

    def __post_init__(self) -> None:
        if not isinstance(self.width, (int, np.integer)) or self.width < 1:
            raise ValueError(f"layer width must be a positive integer, got {self.width!r}")


@dataclass(frozen=True, eq=False)
class LayerParams:
    """One layer's spec together with its weight matrix and bias vector."""

    spec: LayerSpec
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        if self.weight.ndim != 2 or self.weight.shape[0] != self.spec.width:
            raise ShapeError(
                f"weight shape {self.weight.shape} does not match layer width {self.spec.width}"
            )
        if self.bias.shape != (self.spec.width,):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match layer width {self.spec.width}"
            )
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")


@dataclass(frozen=True, eq=False)
class NetworkParams:
    """The full parameter set of a depth-L chain network.

    Layers are ordered from input to output; ``layers[i].weight`` has
    shape (n_{i+1}, n_i) with n_0 = ``input_dim``.
    """

    input_dim: int
    layers: tuple[LayerParams, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.input_dim, (int, np.integer)) or self.input_dim < 1:
            raise ValueError("input_dim must be a positive integer")
        if len(self.layers) < 1:
            raise ValueError("a network needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        fan_in = self.input_dim
        for i, lp in enumerate(self.layers):
            if lp.weight.shape[1] != fan_in:
                raise ShapeError(
                    f"layer {i + 1} expects fan-in {lp.weight.shape[1]}, "
                    f"previous width is {fan_in}"
                )
            fan_in = lp.spec.width
        offsets = np.concatenate([[0], np.cumsum([lp.spec.width for lp in self.layers])])
        object.__setattr__(self, "_offsets", tuple(int(o) for o in offsets))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(lp.spec.width for lp in self.layers)

    @property
    def offsets(self) -> tuple[int, ...]:
        return self._offsets  # type: ignore[attr-defined]

    @property
    def state_size(self) -> int:
        return self.offsets[-1]

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].weight.dtype

    def block_slice(self, layer: int) -> slice:
        """Slice of global indices for layer ``layer`` (1-based)."""
        if not 1 <= layer <= self.depth:
            raise ShapeError(f"layer index {layer} outside 1..{self.depth}")
        return slice(self.offsets[layer - 1], self.offsets[layer])

    @property
    def output_slice(self) -> slice:
        return self.block_slice(self.depth)

    def astype(self, dtype) -> "NetworkParams":
        dtype = np.dtype(dtype)
        return NetworkParams(
            self.input_dim,
            tuple(
                LayerParams(lp.spec, lp.weight.astype(dtype), lp.bias.astype(dtype))
                for lp in self.layers
            ),
        )

    def global_vector(self, data: np.ndarray) -> "GlobalVector":
        data = np.asarray(data)
        if data.shape != (self.state_size,):
            raise ShapeError(
                f"global vector has shape {data.shape}, expected ({self.state_size},)"
            )
        return GlobalVector(data, self.offsets)

    def zeros_global(self) -> "GlobalVector":
        return GlobalVector(np.zeros(self.state_size, dtype=self.dtype), self.offsets)


@dataclass(frozen=True, eq=False)
class GlobalVector:
    """A stacked state in R^n with per-layer block indexing (1-based)."""

    data: np.ndarray
    offsets: tuple[int, ...]

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "offsets", tuple(int(o) for o in self.offsets))
        if data.ndim != 1:
            raise ShapeError("GlobalVector data must be one-dimensional")
        if self.offsets[0] != 0 or any(
            a >= b for a, b in zip(self.offsets, self.offsets[1:])
        ):
            raise ShapeError("block offsets must start at 0 and strictly increase")
        if data.shape[0] != self.offsets[-1]:
            raise ShapeError(
                f"data length {data.shape[0]} does not match offsets end {self.offsets[-1]}"
            )

    @property
    def n_layers(self) -> int:
        return len(self.offsets) - 1

    def block(self, layer: int) -> np.ndarray:
        """View of the entries of layer ``layer`` (1-based)."""
        if not 1 <= layer <= self.n_layers:
            raise ShapeError(f"layer index {layer} outside 1..{self.n_layers}")
        return self.data[self.offsets[layer - 1] : self.offsets[layer]]

    def copy(self) -> "GlobalVector":
        return GlobalVector(self.data.copy(), self.offsets)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


def _check_input(params: NetworkParams, x0: np.ndarray) -> np.ndarray:
    x0 = np.asarray(x0)
    if x0.ndim not in (1, 2) or x0.shape[0] != params.input_dim:
        raise ShapeError(
            f"input has shape {x0.shape}, expected ({params.input_dim},) or "
            f"({params.input_dim}, B)"
        )
    if not np.isfinite(x0).all():
        raise NumericError("network input contains non-finite entries")
    return x0


def _conform(params: NetworkParams, v: GlobalVector) -> np.ndarray:
    if v.offsets != params.offsets:
        raise ShapeError(
            f"global vector blocks {v.offsets} do not match network blocks {params.offsets}"
        )
    return v.data


def _block_slices(params: NetworkParams) -> list[slice]:
    offs = params.offsets
    return [slice(offs[i], offs[i + 1]) for i in range(params.depth)]


def _bias_like(bias: np.ndarray, arr: np.ndarray) -> np.ndarray:
    # Broadcast a (width,) bias across the batch axis when present.
    return bias if arr.ndim == 1 else bias[:, None]


def beta_array(params: NetworkParams, x0: np.ndarray) -> np.ndarray:
    """Constant drive beta(x_0): block 1 = W_1 x_0 + b_1, block l>1 = b_l."""
    dtype = np.result_type(params.dtype, x0.dtype)
    shape = (params.state_size,) if x0.ndim == 1 else (params.state_size, x0.shape[1])
    out = np.empty(shape, dtype=dtype)
    slices = _block_slices(params)
    first = params.layers[0]
    out[slices[0]] = first.weight @ x0 + _bias_like(first.bias, x0)
    for i in range(1, params.depth):
        out[slices[i]] = _bias_like(params.layers[i].bias, out)
    return out


def apply_w_array(params: NetworkParams, arr: np.ndarray) -> np.ndarray:
    """Action of the global W: block 1 -> 0, block l -> W_l @ block(l-1)."""
    out = np.zeros_like(arr)
    slices = _block_slices(params)
    for i in range(1, params.depth):
        out[slices[i]] = params.layers[i].weight @ arr[slices[i - 1]]
    return out


def apply_wt_array(params: NetworkParams, arr: np.ndarray) -> np.ndarray:
    """Action of the global W transpose: block L -> 0, block l -> W_{l+1}^T @ block(l+1)."""
    out = np.zeros_like(arr)
    slices = _block_slices(params)
    for i in range(params.depth - 1):
        out[slices[i]] = params.layers[i + 1].weight.T @ arr[slices[i + 1]]
    return out


def sigma_array(params: NetworkParams, pre: np.ndarray) -> np.ndarray:
    """Blockwise activation sigma applied to a stacked pre-activation."""
    out = np.empty_like(pre)
    for sl, lp in zip(_block_slices(params), params.layers):
        out[sl] = lp.spec.activation.apply(pre[sl])
    return out


def sigma_prime_array(params: NetworkParams, pre: np.ndarray) -> np.ndarray:
    """Blockwise exact activation derivative at a stacked pre-activation."""
    out = np.empty_like(pre)
    for sl, lp in zip(_block_slices(params), params.layers):
        out[sl] = lp.spec.activation.derivative(pre[sl])
    return out


def forward_layers(
    params: NetworkParams, x0: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Layer-by-layer forward pass; returns (pre-activations, activations)."""
    pres: list[np.ndarray] = []
    acts: list[np.ndarray] = []
    a = x0
    for lp in params.layers:
        pre = lp.weight @ a + _bias_like(lp.bias, a)
        a = lp.spec.activation.apply(pre)
        pres.append(pre)
        acts.append(a)
    return pres, acts


def forward_pass(
    params: NetworkParams, x0: np.ndarray
) -> tuple[list[np.ndarray], GlobalVector]:
    """Run the network forward.

    Args:
        params: network parameters.
        x0: input vector of length ``params.input_dim``.

    Returns:
        The per-layer activations ``[a_1, ..., a_L]`` and their stacked
        concatenation as a :class:`GlobalVector`.
    """
    x0 = _check_input(params, x0)
    _, acts = forward_layers(params, x0)
    stacked = np.concatenate(acts, axis=0)
    return acts, GlobalVector(stacked, params.offsets)


def beta_drive(params: NetworkParams, x0: np.ndarray) -> GlobalVector:
    """Stack the constant input-and-bias drive beta(x_0)."""
    x0 = _check_input(params, x0)
    return GlobalVector(beta_array(params, x0), params.offsets)


def apply_global_W(params: NetworkParams, v: GlobalVector) -> GlobalVector:
    """Apply the strictly lower block-triangular global weight operator."""
    arr = _conform(params, v)
    return GlobalVector(apply_w_array(params, arr), params.offsets)


def apply_global_Wt(params: NetworkParams, v: GlobalVector) -> GlobalVector:
    """Apply the transpose of the global weight operator."""
    arr = _conform(params, v)
    return GlobalVector(apply_wt_array(params, arr), params.offsets)


def forward_field(params: NetworkParams, x0: np.ndarray, a: GlobalVector) -> GlobalVector:
    """Forward vector field F(a) = sigma(W a + beta(x_0)) - a.

    Its unique fixed point is the stacked forward pass.
    """
    x0 = _check_input(params, x0)
    arr = _conform(params, a)
    pre = apply_w_array(params, arr) + beta_array(params, x0)
    return GlobalVector(sigma_array(params, pre) - arr, params.offsets)


def local_derivative_diag(
    params: NetworkParams, x0: np.ndarray, m: GlobalVector
) -> GlobalVector:
    """Diagonal of D(m) = diag(sigma'(W m + beta(x_0))) as a stacked vector."""
    x0 = _check_input(params, x0)
    arr = _conform(params, m)
    pre = apply_w_array(params, arr) + beta_array(params, x0)
    return GlobalVector(sigma_prime_array(params, pre), params.offsets)


def random_network(
    input_dim: int,
    widths: Sequence[int],
    activations,
    rng: np.random.Generator,
    bias_std: float = 0.0,
    dtype=np.float64,
) -> NetworkParams:
    """Draw a network with Gaussian weights of std 1/sqrt(fan_in).

    Args:
        input_dim: width of the input layer.
        widths: output width of each layer, input to output.
        activations: one :class:`Activation` for all layers or a
            sequence with one entry per layer.
        rng: seeded generator; the draw is deterministic given it.
        bias_std: biases are zero when 0, else Gaussian with this std.
        dtype: parameter dtype (float64 or float32).
    """
    widths = [int(w) for w in widths]
    if isinstance(activations, Activation):
        acts = [activations] * len(widths)
    else:
        acts = list(activations)
        if len(acts) != len(widths):
            raise ValueError("need one activation per layer")
    layers = []
    fan_in = int(input_dim)
    for w, act in zip(widths, acts):
        weight = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(w, fan_in))
        bias = rng.normal(0.0, bias_std, size=w) if bias_std > 0 else np.zeros(w)
        layers.append(
            LayerParams(LayerSpec(w, act), weight.astype(dtype), bias.astype(dtype))
        )
        fan_in = w
    return NetworkParams(int(input_dim), tuple(layers))
