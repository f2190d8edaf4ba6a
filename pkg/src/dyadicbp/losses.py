"""Task losses evaluated on the network's output block.

Softmax is folded into the cross-entropy loss, so the network output
stays a plain elementwise-activated block (use an Identity output layer
for classification) and the loss gradient is softmax(a_L) - y.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import ConfigError, NumericError, ShapeError

__all__ = ["LossKind", "LossSpec"]


class LossKind(enum.Enum):
    MSE = "MSE"
    SOFTMAX_CROSS_ENTROPY = "SoftmaxCrossEntropy"

    @classmethod
    def from_name(cls, name: str) -> "LossKind":
        key = str(name).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ConfigError(f"unknown loss kind {name!r}")


@dataclass(frozen=True, eq=False)
class LossSpec:
    """A loss kind together with its target y.

    The target has shape (n_L,) for a single sample or (n_L, B) for a
    batch evaluated columnwise. For cross-entropy each target column
    must be a probability vector.
    """

    kind: LossKind
    target: np.ndarray

    def __post_init__(self) -> None:
        target = np.asarray(self.target)
        object.__setattr__(self, "target", target)
        if target.ndim not in (1, 2):
            raise ShapeError("loss target must be a vector or a column batch")
        if not np.isfinite(target).all():
            raise ValueError("loss target must be finite")
        if self.kind is LossKind.SOFTMAX_CROSS_ENTROPY:
            sums = target.sum(axis=0)
            if target.min() < 0 or not np.allclose(sums, 1.0, atol=1e-6):
                raise ValueError(
                    "cross-entropy targets must be probability vectors summing to 1"
                )

    def _check_output(self, output: np.ndarray) -> np.ndarray:
        output = np.asarray(output)
        if output.shape != self.target.shape:
            raise ShapeError(
                f"output shape {output.shape} does not match target shape "
                f"{self.target.shape}"
            )
        return output

    def value(self, output: np.ndarray):
        """C(output, y); a scalar for a single sample, a (B,) array batched."""
        output = self._check_output(output)
        if self.kind is LossKind.MSE:
            diff = output - self.target
            val = 0.5 * np.sum(diff * diff, axis=0)
        else:
            val = logsumexp(output, axis=0) - np.sum(self.target * output, axis=0)
        if not np.isfinite(val).all():
            raise NumericError("loss value is not finite")
        return float(val) if output.ndim == 1 else val

    def gradient(self, output: np.ndarray) -> np.ndarray:
        """Gradient of C with respect to the output block, columnwise."""
        output = self._check_output(output)
        if self.kind is LossKind.MSE:
            grad = output - self.target
        else:
            grad = softmax(output, axis=0) - self.target
        if not np.isfinite(grad).all():
            raise NumericError("loss gradient is not finite")
        return grad
