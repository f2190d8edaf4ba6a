"""Independent gradient oracles: classical backprop, central finite
differences, and the Neumann closed form for the stacked sensitivities.

These three share no algorithmic structure with the relaxation dynamics
and serve as the references every dynamics-derived gradient is checked
against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError
from .losses import LossSpec
from .network import (
    GlobalVector,
    NetworkParams,
    _check_input,
    apply_wt_array,
    beta_array,
    forward_layers,
    sigma_prime_array,
    apply_w_array,
)

__all__ = [
    "GradientBundle",
    "classical_backprop",
    "finite_difference_grad",
    "neumann_stress",
]


@dataclass(frozen=True, eq=False)
class GradientBundle:
    """Per-layer weight and bias gradients, the output of any gradient method."""

    weight_grads: tuple[np.ndarray, ...]
    bias_grads: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight_grads", tuple(self.weight_grads))
        object.__setattr__(self, "bias_grads", tuple(self.bias_grads))
        if len(self.weight_grads) != len(self.bias_grads):
            raise ShapeError("weight and bias gradient lists must have equal length")
        for gw, gb in zip(self.weight_grads, self.bias_grads):
            if gw.ndim != 2 or gb.ndim != 1 or gw.shape[0] != gb.shape[0]:
                raise ShapeError("gradient shapes do not form layer pairs")
            if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
                raise NumericError("gradient bundle contains non-finite entries")

    @property
    def depth(self) -> int:
        return len(self.weight_grads)

    def check_conformal(self, params: NetworkParams) -> None:
        if self.depth != params.depth:
            raise ShapeError("bundle depth does not match network depth")
        for lp, gw in zip(params.layers, self.weight_grads):
            if gw.shape != lp.weight.shape:
                raise ShapeError(
                    f"weight gradient shape {gw.shape} != weight shape {lp.weight.shape}"
                )

    def layer_flat(self, i: int) -> np.ndarray:
        """Concatenated (W, b) gradients of layer i (0-based), flattened."""
        return np.concatenate([self.weight_grads[i].ravel(), self.bias_grads[i]])

    def flat(self) -> np.ndarray:
        """Full flattened concatenation, layer by layer."""
        return np.concatenate([self.layer_flat(i) for i in range(self.depth)])

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    @classmethod
    def zeros_like(cls, params: NetworkParams) -> "GradientBundle":
        return cls(
            tuple(np.zeros_like(lp.weight) for lp in params.layers),
            tuple(np.zeros_like(lp.bias) for lp in params.layers),
        )


def classical_backprop(
    params: NetworkParams, x0: np.ndarray, loss: LossSpec
) -> tuple[GradientBundle, GlobalVector]:
    """Classical backpropagation.

    Runs the layer recursion delta_L = grad C . sigma'_L(z_L),
    delta_l = (W_{l+1}^T delta_{l+1}) . sigma'_l(z_l) and assembles the
    outer-product gradients dC/dW_l = delta_l a_{l-1}^T, dC/db_l = delta_l.

    Returns:
        The gradient bundle and the stacked activation sensitivities
        dC/da_l (block l is W_{l+1}^T delta_{l+1} for l < L and the loss
        gradient at l = L), the quantity the stress variable of the
        doubled dynamics converges to.
    """
    x0 = _check_input(params, x0)
    pres, acts = forward_layers(params, x0)
    depth = params.depth
    grad = loss.gradient(acts[-1])

    sens: list[np.ndarray] = [np.empty(0)] * depth
    deltas: list[np.ndarray] = [np.empty(0)] * depth
    sens[depth - 1] = grad
    deltas[depth - 1] = (
        params.layers[depth - 1].spec.activation.derivative(pres[depth - 1]) * grad
    )
    for i in range(depth - 2, -1, -1):
        sens[i] = params.layers[i + 1].weight.T @ deltas[i + 1]
        deltas[i] = params.layers[i].spec.activation.derivative(pres[i]) * sens[i]

    prev = [x0] + acts[:-1]
    weight_grads = tuple(np.outer(deltas[i], prev[i]) for i in range(depth))
    bias_grads = tuple(deltas[i].copy() for i in range(depth))
    bundle = GradientBundle(weight_grads, bias_grads)
    return bundle, GlobalVector(np.concatenate(sens), params.offsets)


def finite_difference_grad(
    params: NetworkParams, x0: np.ndarray, loss: LossSpec, h: float = 1e-5
) -> GradientBundle:
    """Central-difference gradient, one fresh forward pass per evaluation.

    Every parameter entry is perturbed by +/- h and the loss difference
    quotient (C(theta + h e) - C(theta - h e)) / 2h is recorded. Purely a
    test oracle; cost grows with the parameter count.
    """
    if not h > 0:
        raise ValueError("finite-difference step h must be positive")
    x0 = _check_input(params, x0)
    weights = [lp.weight.astype(np.float64).copy() for lp in params.layers]
    biases = [lp.bias.astype(np.float64).copy() for lp in params.layers]
    specs = [lp.spec for lp in params.layers]

    def loss_value() -> float:
        a = x0
        for w, b, spec in zip(weights, biases, specs):
            a = spec.activation.apply(w @ a + b)
        return loss.value(a)

    def central(arr: np.ndarray, idx) -> float:
        orig = arr[idx]
        arr[idx] = orig + h
        plus = loss_value()
        arr[idx] = orig - h
        minus = loss_value()
        arr[idx] = orig
        return (plus - minus) / (2.0 * h)

    weight_grads = []
    bias_grads = []
    for w, b in zip(weights, biases):
        gw = np.empty_like(w)
        for idx in np.ndindex(w.shape):
            gw[idx] = central(w, idx)
        gb = np.empty_like(b)
        for j in range(b.shape[0]):
            gb[j] = central(b, j)
        weight_grads.append(gw)
        bias_grads.append(gb)
    return GradientBundle(tuple(weight_grads), tuple(bias_grads))


def neumann_stress(
    params: NetworkParams, x0: np.ndarray, loss: LossSpec
) -> GlobalVector:
    """Closed-form equilibrium stress via the finite Neumann series.

    Because W^T D is nilpotent of index L, the fixed point of
    s = W^T D s + g has the exact finite sum
    s = sum_{k=0}^{L-1} (W^T D)^k g, with D evaluated at the forward
    fixed point and g the loss gradient embedded in the output block.
    """
    x0 = _check_input(params, x0)
    _, acts = forward_layers(params, x0)
    stacked = np.concatenate(acts, axis=0)
    pre = apply_w_array(params, stacked) + beta_array(params, x0)
    dbar = sigma_prime_array(params, pre)

    g = np.zeros_like(stacked)
    g[params.output_slice] = loss.gradient(acts[-1])
    s = g.copy()
    term = g
    for _ in range(params.depth - 1):
        term = apply_wt_array(params, dbar * term)
        s += term
    return GlobalVector(s, params.offsets)


def backprop_batch(
    params: NetworkParams, x0: np.ndarray, loss: LossSpec
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Batched classical backprop over column-stacked samples.

    Returns per-layer weight and bias gradients averaged over the batch
    (the mean of the per-sample bundles).
    """
    x0 = _check_input(params, x0)
    batch = x0.shape[1]
    pres, acts = forward_layers(params, x0)
    depth = params.depth
    delta = params.layers[depth - 1].spec.activation.derivative(pres[depth - 1]) * (
        loss.gradient(acts[-1])
    )
    prev = [x0] + acts[:-1]
    weight_grads = [np.empty(0)] * depth
    bias_grads = [np.empty(0)] * depth
    for i in range(depth - 1, -1, -1):
        weight_grads[i] = (delta @ prev[i].T) / batch
        bias_grads[i] = delta.mean(axis=1)
        if i > 0:
            delta = params.layers[i - 1].spec.activation.derivative(pres[i - 1]) * (
                params.layers[i].weight.T @ delta
            )
    return weight_grads, bias_grads
