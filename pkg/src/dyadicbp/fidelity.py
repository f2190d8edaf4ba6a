"""Gradient-fidelity metrics between two gradient bundles.

All metrics are computed in float64 regardless of the bundles' storage
precision; the storage precision only sets the clamp floor used for the
log-misalignment, so a 32-bit run plateaus at the 32-bit floor instead
of producing spurious -inf values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError
from .reference import GradientBundle

__all__ = [
    "FLOOR_64",
    "FLOOR_32",
    "FidelityReport",
    "compare",
    "log_misalignment",
]

FLOOR_64 = 1e-16
FLOOR_32 = 1e-8


def log_misalignment(cos: float, precision_floor: float) -> float:
    """log10(1 - cos), clamped below at the precision floor.

    The clamp keeps a perfectly aligned pair at the finite machine
    plateau (-16 in 64-bit, -8 in 32-bit) instead of -inf.
    """
    if cos > 1.0 + 1e-12:
        raise ValueError("cosine similarity cannot exceed 1")
    return math.log10(max(1.0 - cos, precision_floor))


def _cosine(t: np.ndarray, r: np.ndarray) -> float:
    # Identical vectors get an exact 1.0; the norm product below would
    # otherwise smear it by a couple of ulps through the square roots.
    if np.array_equal(t, r):
        return 1.0
    nt = float(np.linalg.norm(t))
    nr = float(np.linalg.norm(r))
    if nt == 0.0 or nr == 0.0:
        return 0.0
    return float(np.clip(np.dot(t, r) / (nt * nr), -1.0, 1.0))


@dataclass(frozen=True)
class FidelityReport:
    """The metric set comparing a test bundle against a reference bundle.

    The ratio metrics are None (serialized as an empty CSV field / JSON
    null) when the reference gradient is exactly zero; the SNR is +inf
    when the two bundles are identical.
    """

    cosine_similarity: float
    relative_error: Optional[float]
    norm_ratio: Optional[float]
    snr: Optional[float]
    per_layer_cosine: tuple[float, ...]
    per_layer_log_misalignment: tuple[float, ...]
    precision_floor: float

    def to_record(self) -> dict:
        """Flat record with fixed column names for CSV/JSON emission."""
        record: dict = {
            "cos": self.cosine_similarity,
            "rel_err": self.relative_error,
            "norm_ratio": self.norm_ratio,
            "snr": self.snr,
        }
        for i, (c, lm) in enumerate(
            zip(self.per_layer_cosine, self.per_layer_log_misalignment), start=1
        ):
            record[f"layer_{i}_cos"] = c
            record[f"layer_{i}_logmis"] = lm
        return record

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def compare(
    test: GradientBundle,
    reference: GradientBundle,
    precision_floor: Optional[float] = None,
) -> FidelityReport:
    """Compute all fidelity metrics of ``test`` against ``reference``.

    The global metrics use the full flattened concatenation of each
    bundle; the per-layer metrics use each layer's concatenated (W, b)
    gradients. When no floor is given it is chosen from the bundles'
    storage precision (32-bit wins if either side stores float32).
    """
    if test.depth != reference.depth:
        raise ShapeError("bundles compare layer by layer; depths differ")
    for gt, gr in zip(test.weight_grads, reference.weight_grads):
        if gt.shape != gr.shape:
            raise ShapeError(f"weight gradient shapes differ: {gt.shape} vs {gr.shape}")
    if precision_floor is None:
        dtypes = [g.dtype for g in test.weight_grads + reference.weight_grads]
        precision_floor = FLOOR_32 if any(dt == np.float32 for dt in dtypes) else FLOOR_64

    t = test.flat().astype(np.float64)
    r = reference.flat().astype(np.float64)
    nt = float(np.linalg.norm(t))
    nr = float(np.linalg.norm(r))
    diff = float(np.linalg.norm(t - r))

    cos = _cosine(t, r)
    if nr > 0.0:
        relative_error: Optional[float] = diff / nr
        norm_ratio: Optional[float] = nt / nr
        snr: Optional[float] = math.inf if diff == 0.0 else (nr * nr) / (diff * diff)
    else:
        relative_error = norm_ratio = snr = None

    per_cos = []
    per_logmis = []
    for i in range(test.depth):
        c = _cosine(
            test.layer_flat(i).astype(np.float64),
            reference.layer_flat(i).astype(np.float64),
        )
        per_cos.append(c)
        per_logmis.append(log_misalignment(c, precision_floor))

    return FidelityReport(
        cosine_similarity=cos,
        relative_error=relative_error,
        norm_ratio=norm_ratio,
        snr=snr,
        per_layer_cosine=tuple(per_cos),
        per_layer_log_misalignment=tuple(per_logmis),
        precision_floor=precision_floor,
    )
