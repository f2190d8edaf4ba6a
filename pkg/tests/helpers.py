"""Shared random-instance builders for the test suite."""

import numpy as np

from dyadicbp import Activation, LossKind, LossSpec, random_network

SMOOTH_ACTS = (Activation.IDENTITY, Activation.TANH, Activation.SIGMOID)
ALL_ACTS = SMOOTH_ACTS + (Activation.RELU,)


def make_chain(
    rng,
    depth=None,
    max_width=8,
    acts=SMOOTH_ACTS,
    input_dim=None,
    dtype=np.float64,
    identity_output=False,
):
    """Draw a random chain network with the given activation pool."""
    if depth is None:
        depth = int(rng.integers(1, 6))
    if input_dim is None:
        input_dim = int(rng.integers(1, max_width + 1))
    widths = tuple(int(rng.integers(1, max_width + 1)) for _ in range(depth))
    activations = [acts[int(rng.integers(len(acts)))] for _ in range(depth)]
    if identity_output:
        activations[-1] = Activation.IDENTITY
    params = random_network(input_dim, widths, activations, rng)
    if np.dtype(dtype) != np.float64:
        params = params.astype(dtype)
    return params


def make_loss(rng, out_dim, kind=None, dtype=np.float64):
    """Draw a random loss spec with a conforming target."""
    if kind is None:
        kind = LossKind.MSE if rng.integers(2) == 0 else LossKind.SOFTMAX_CROSS_ENTROPY
    if kind is LossKind.MSE:
        target = rng.standard_normal(out_dim)
    else:
        target = np.zeros(out_dim)
        target[int(rng.integers(out_dim))] = 1.0
    return LossSpec(kind, target.astype(dtype))


def make_instance(rng, **chain_kwargs):
    """A random (params, input, loss) triple."""
    params = make_chain(rng, **chain_kwargs)
    x0 = rng.standard_normal(params.input_dim).astype(params.dtype)
    loss = make_loss(rng, params.widths[-1], dtype=params.dtype)
    return params, x0, loss
