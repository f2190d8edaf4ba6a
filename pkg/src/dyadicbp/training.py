"""Experiment harness: configs, SGD training with any gradient method,
gradient-fidelity trials, and step-size sweeps.

Every run is deterministic given the config: dataset draws, weight
init, the train/test split, and batch shuffling all derive from the
seed, and none of them depend on the gradient method, so runs that
differ only in the method see identical data and identical initial
parameters.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .datasets import DatasetKind, DatasetSpec, generate_dataset
from .dynamics import (
    RelaxConfig,
    RelaxMode,
    relax_batch,
    relax_dyadic,
    relax_mean_stress,
    relax_split,
    relax_twoL,
)
from .errors import ConfigError, NumericError
from .fidelity import FidelityReport, compare
from .losses import LossKind, LossSpec
from .network import (
    Activation,
    LayerParams,
    NetworkParams,
    forward_layers,
    random_network,
)
from .reference import (
    GradientBundle,
    backprop_batch,
    classical_backprop,
    finite_difference_grad,
)

__all__ = [
    "GradientMethod",
    "ExperimentConfig",
    "TrainResult",
    "train",
    "check_gradients",
    "sweep_eta",
    "TRAIN_FIELDS",
    "CHECK_FIELDS",
    "SWEEP_FIELDS",
    "format_cell",
    "write_csv",
]


class GradientMethod(enum.Enum):
    """How per-batch parameter gradients are produced."""

    BP = "BP"
    DYADIC = "Dyadic"
    MEAN_STRESS = "MeanStress"
    TWO_L = "TwoL"
    SPLIT = "Split"
    FINITE_DIFF = "FiniteDiff"

    @classmethod
    def from_name(cls, name: str) -> "GradientMethod":
        key = name.strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ConfigError(f"unknown gradient method {name!r}")


_RELAX_MODE = {
    GradientMethod.DYADIC: RelaxMode.DYADIC,
    GradientMethod.MEAN_STRESS: RelaxMode.MEAN_STRESS,
    GradientMethod.TWO_L: RelaxMode.TWO_L,
    GradientMethod.SPLIT: RelaxMode.SPLIT,
}

# Methods whose behaviour depends on the relaxation step size.
_ETA_DRIVEN = frozenset(
    {GradientMethod.DYADIC, GradientMethod.MEAN_STRESS, GradientMethod.SPLIT}
)

_DESK_HIDDEN = (32,) * 8


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment.

    ``widths`` and ``activations`` default to the reference depth-9
    network: eight Tanh hidden layers of 32 units and an identity
    output layer sized to the dataset's class count.  Learning rates
    default to the cosine schedule endpoints 0.035 and 0.0002, scaled
    by ``batch_size / 64``.
    """

    seed: int = 0
    precision: int = 64
    method: GradientMethod = GradientMethod.DYADIC
    out_dir: str = "."
    # network
    input_dim: int = 2
    widths: Optional[tuple] = None
    activation: Activation = Activation.TANH
    activations: Optional[tuple] = None
    loss_kind: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY
    # relaxation
    eta: float = 1.0
    k_max: int = 1000
    tol: float = 1e-6
    # optimizer
    lr_max: Optional[float] = None
    lr_min: Optional[float] = None
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 100
    batch_size: int = 64
    test_fraction: float = 0.2
    # misc
    fd_step: float = 1e-5
    strict: bool = False
    dataset: DatasetSpec = field(default_factory=DatasetSpec)

    def __post_init__(self) -> None:
        if self.precision not in (32, 64):
            raise ConfigError(f"precision must be 32 or 64, got {self.precision}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in [0, 1)")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.weight_decay < 0.0:
            raise ConfigError("weight_decay must be >= 0")
        if self.fd_step <= 0.0:
            raise ConfigError("fd_step must be positive")
        if self.widths is not None:
            object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
            if any(w < 1 for w in self.widths):
                raise ConfigError("widths must be positive")
        if self.activations is not None:
            object.__setattr__(self, "activations", tuple(self.activations))

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self.precision == 32 else np.float64)

    def resolved_widths(self, classes: int) -> tuple:
        if self.widths is not None:
            return self.widths
        return _DESK_HIDDEN + (classes,)

    def resolved_activations(self, depth: int) -> tuple:
        if self.activations is not None:
            if len(self.activations) != depth:
                raise ConfigError(
                    f"activations has {len(self.activations)} entries for depth {depth}"
                )
            return self.activations
        return (self.activation,) * (depth - 1) + (Activation.IDENTITY,)

    def resolved_lr(self) -> tuple:
        scale = self.batch_size / 64.0
        lr_max = self.lr_max if self.lr_max is not None else 0.035 * scale
        lr_min = self.lr_min if self.lr_min is not None else 0.0002 * scale
        if lr_max <= 0.0 or lr_min <= 0.0:
            raise ConfigError("learning rates must be positive")
        return lr_max, lr_min

    def relax_config(self) -> RelaxConfig:
        mode = _RELAX_MODE.get(self.method, RelaxMode.DYADIC)
        return RelaxConfig(eta=self.eta, k_max=self.k_max, tol=self.tol, mode=mode)

    def to_canonical(self) -> dict:
        """Plain nested dict of the config, for hashing and logs.

        Excludes ``out_dir`` and ``strict``: neither changes a computed
        number, so runs differing only there share a hash.
        """
        return {
            "seed": self.seed,
            "precision": self.precision,
            "method": self.method.value,
            "loss": self.loss_kind.value,
            "fd_step": self.fd_step,
            "network": {
                "input_dim": self.input_dim,
                "widths": list(self.widths) if self.widths is not None else None,
                "activation": self.activation.value,
                "activations": [a.value for a in self.activations]
                if self.activations is not None
                else None,
            },
            "relax": {"eta": self.eta, "k_max": self.k_max, "tol": self.tol},
            "optimizer": {
                "lr_max": self.lr_max,
                "lr_min": self.lr_min,
                "momentum": self.momentum,
                "weight_decay": self.weight_decay,
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "test_fraction": self.test_fraction,
            },
            "dataset": {
                "kind": self.dataset.kind.value,
                "n_samples": self.dataset.n_samples,
                "noise": self.dataset.noise,
                "classes": self.dataset.classes,
                "path": self.dataset.path,
            },
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.to_canonical(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        """Build a config from a parsed YAML mapping.

        Accepts the same nested sections `to_canonical` emits.  Unknown
        keys anywhere raise ConfigError so typos fail loudly.
        """
        if not isinstance(mapping, dict):
            raise ConfigError("config root must be a mapping")
        kwargs: dict = {}
        top_allowed = {
            "seed",
            "precision",
            "method",
            "out_dir",
            "loss",
            "strict",
            "fd_step",
            "network",
            "relax",
            "optimizer",
            "dataset",
        }
        unknown = set(mapping) - top_allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def section(name: str, allowed: set) -> dict:
            sub = mapping.get(name) or {}
            if not isinstance(sub, dict):
                raise ConfigError(f"config section {name!r} must be a mapping")
            extra = set(sub) - allowed
            if extra:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(extra)}")
            return sub

        for key in ("seed", "precision", "out_dir", "strict", "fd_step"):
            if key in mapping and mapping[key] is not None:
                kwargs[key] = mapping[key]
        if mapping.get("method") is not None:
            kwargs["method"] = GradientMethod.from_name(str(mapping["method"]))
        if mapping.get("loss") is not None:
            kwargs["loss_kind"] = LossKind.from_name(str(mapping["loss"]))

        net = section("network", {"input_dim", "widths", "activation", "activations"})
        if net.get("input_dim") is not None:
            kwargs["input_dim"] = int(net["input_dim"])
        if net.get("widths") is not None:
            kwargs["widths"] = tuple(int(w) for w in net["widths"])
        if net.get("activation") is not None:
            kwargs["activation"] = Activation.from_name(str(net["activation"]))
        if net.get("activations") is not None:
            kwargs["activations"] = tuple(
                Activation.from_name(str(a)) for a in net["activations"]
            )

        relax = section("relax", {"eta", "k_max", "tol"})
        for key in ("eta", "k_max", "tol"):
            if relax.get(key) is not None:
                kwargs[key] = relax[key]

        opt = section(
            "optimizer",
            {
                "lr_max",
                "lr_min",
                "momentum",
                "weight_decay",
                "epochs",
                "batch_size",
                "test_fraction",
            },
        )
        for key in opt:
            if opt[key] is not None:
                kwargs[key] = opt[key]

        ds = section("dataset", {"kind", "n_samples", "noise", "classes", "path"})
        ds_kwargs: dict = {}
        if ds.get("kind") is not None:
            ds_kwargs["kind"] = DatasetKind.from_name(str(ds["kind"]))
        for key in ("n_samples", "noise", "classes", "path"):
            if ds.get(key) is not None:
                ds_kwargs[key] = ds[key]
        if ds_kwargs:
            kwargs["dataset"] = DatasetSpec(**ds_kwargs)

        return cls(**kwargs)


# ---------------------------------------------------------------------------
# CSV plumbing shared by train / check / sweep and the CLI.

TRAIN_FIELDS = (
    "epoch",
    "lr",
    "train_loss",
    "train_acc",
    "test_acc",
    "mean_iterations",
    "frac_converged",
    "fid_cos",
    "fid_rel_err",
    "fid_norm_ratio",
    "fid_snr",
)

# check.csv rows extend these with the FidelityReport columns, whose
# per-layer entries depend on the network depth.
CHECK_FIELDS = ("trial", "method", "iterations", "converged")

SWEEP_FIELDS = (
    "eta",
    "mean_iterations",
    "max_iterations",
    "frac_converged",
    "mean_cos",
    "min_cos",
    "mean_rel_err",
    "max_rel_err",
    "mean_norm_ratio",
    "min_norm_ratio",
    "max_norm_ratio",
    "worst_logmis",
)


def format_cell(value) -> str:
    """Render one CSV field; floats round-trip exactly via repr."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _provenance(seed: int, config_hash: str) -> str:
    return f"# seed: {seed}\n# config: {config_hash}\n"


def write_csv(
    path,
    fieldnames: Sequence[str],
    rows: Iterable[dict],
    seed: int,
    config_hash: str,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_provenance(seed, config_hash))
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(row.get(name)) for name in fieldnames) + "\n")


class _IncrementalCsv:
    """Row-at-a-time CSV writer that flushes eagerly.

    Training can abort mid-run on numeric failure; everything logged
    so far must already be on disk when that happens.
    """

    def __init__(self, path, fieldnames: Sequence[str], seed: int, config_hash: str):
        self.fieldnames = tuple(fieldnames)
        self._fh: IO[str] = open(path, "w", encoding="utf-8", newline="")
        self._fh.write(_provenance(seed, config_hash))
        self._fh.write(",".join(self.fieldnames) + "\n")
        self._fh.flush()

    def write_row(self, row: dict) -> None:
        cells = ",".join(format_cell(row.get(name)) for name in self.fieldnames)
        self._fh.write(cells + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


# ---------------------------------------------------------------------------
# Gradient dispatch.


def _as_bundle(weight_grads, bias_grads) -> GradientBundle:
    return GradientBundle(tuple(weight_grads), tuple(bias_grads))


def _fd_batch(
    params: NetworkParams, xb: np.ndarray, targets: np.ndarray, config: ExperimentConfig
) -> tuple:
    """Mean finite-difference gradient over the columns of ``xb``."""
    batch = xb.shape[1]
    acc_w = [np.zeros_like(lp.weight, dtype=np.float64) for lp in params.layers]
    acc_b = [np.zeros_like(lp.bias, dtype=np.float64) for lp in params.layers]
    for j in range(batch):
        loss = LossSpec(config.loss_kind, targets[:, j])
        bundle = finite_difference_grad(params, xb[:, j], loss, h=config.fd_step)
        for i in range(len(acc_w)):
            acc_w[i] += bundle.weight_grads[i]
            acc_b[i] += bundle.bias_grads[i]
    dtype = params.dtype
    return (
        [(w / batch).astype(dtype) for w in acc_w],
        [(b / batch).astype(dtype) for b in acc_b],
    )


def _batch_gradients(
    params: NetworkParams, xb: np.ndarray, targets: np.ndarray, config: ExperimentConfig
) -> tuple:
    """Per-batch mean gradients plus relaxation bookkeeping.

    Returns (weight_grads, bias_grads, iterations, converged) where the
    last two are per-sample arrays for relaxation methods and None for
    BP and finite differences.
    """
    if config.method is GradientMethod.BP:
        loss = LossSpec(config.loss_kind, targets)
        ws, bs = backprop_batch(params, xb, loss)
        return ws, bs, None, None
    if config.method is GradientMethod.FINITE_DIFF:
        ws, bs = _fd_batch(params, xb, targets, config)
        return ws, bs, None, None
    loss = LossSpec(config.loss_kind, targets)
    ws, bs, iters, conv = relax_batch(params, xb, loss, config.relax_config())
    return ws, bs, iters, conv


# ---------------------------------------------------------------------------
# Training.


@dataclass
class TrainResult:
    rows: list
    params: NetworkParams
    config_hash: str
    classes: int


def _cosine_lr(epoch: int, epochs: int, lr_max: float, lr_min: float) -> float:
    """Learning rate for 1-based ``epoch``; hits lr_max at 1, lr_min at end."""
    if epochs <= 1:
        return lr_max
    t = (epoch - 1) / (epochs - 1)
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * t))


def _evaluate(
    params: NetworkParams, x_cols: np.ndarray, onehot_rows: np.ndarray, kind: LossKind
) -> tuple:
    """Mean loss and accuracy over a sample set held as columns."""
    _, acts = forward_layers(params, x_cols)
    out = acts[-1]
    loss = LossSpec(kind, onehot_rows.T.astype(out.dtype)).value(out)
    mean_loss = float(np.asarray(loss, dtype=np.float64).mean())
    pred = np.argmax(out, axis=0)
    label = np.argmax(onehot_rows, axis=1)
    acc = float(np.mean(pred == label))
    return mean_loss, acc


def _with_arrays(params: NetworkParams, weights, biases) -> NetworkParams:
    layers = tuple(
        LayerParams(lp.spec, w, b)
        for lp, w, b in zip(params.layers, weights, biases)
    )
    return NetworkParams(params.input_dim, layers)


def _mean_or_none(values) -> Optional[float]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return float(np.mean(vals))


def train(config: ExperimentConfig, csv_path=None) -> TrainResult:
    """SGD with Nesterov momentum and cosine annealing.

    The epoch log starts with an epoch-0 row for the untrained network,
    then one row per epoch.  When ``csv_path`` is given the log is
    flushed row by row, so a divergence abort still leaves a complete
    partial log behind.  Gradient methods other than BP also log mean
    fidelity of their batch gradients against batch BP.
    """
    rng = np.random.default_rng(config.seed)
    features, onehot = generate_dataset(config.dataset, config.seed)
    n, input_dim = features.shape
    classes = onehot.shape[1]
    widths = config.resolved_widths(classes)
    if widths[-1] != classes:
        raise ConfigError(
            f"output width {widths[-1]} does not match {classes} classes"
        )
    acts = config.resolved_activations(len(widths))
    params = random_network(input_dim, widths, acts, rng)
    if config.precision == 32:
        params = params.astype(np.float32)
    dtype = params.dtype

    n_test = int(round(config.test_fraction * n))
    perm = rng.permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    if train_idx.size == 0:
        raise ConfigError("test_fraction leaves no training samples")
    x_train = np.ascontiguousarray(features[train_idx].T.astype(dtype))
    y_train = onehot[train_idx]
    x_test = np.ascontiguousarray(features[test_idx].T.astype(dtype))
    y_test = onehot[test_idx]
    y_train_cols = np.ascontiguousarray(y_train.T.astype(dtype))

    lr_max, lr_min = config.resolved_lr()
    vel_w = [np.zeros_like(lp.weight) for lp in params.layers]
    vel_b = [np.zeros_like(lp.bias) for lp in params.layers]

    writer = None
    if csv_path is not None:
        writer = _IncrementalCsv(csv_path, TRAIN_FIELDS, config.seed, config.config_hash())
    rows: list = []

    def log(row: dict) -> None:
        rows.append(row)
        if writer is not None:
            writer.write_row(row)

    try:
        train_loss, train_acc = _evaluate(params, x_train, y_train, config.loss_kind)
        if x_test.shape[1] > 0:
            _, test_acc = _evaluate(params, x_test, y_test, config.loss_kind)
        else:
            test_acc = None
        log(
            {
                "epoch": 0,
                "lr": None,
                "train_loss": train_loss,
                "train_acc": train_acc,
                "test_acc": test_acc,
            }
        )

        n_train = x_train.shape[1]
        mu = config.momentum
        wd = config.weight_decay
        for epoch in range(1, config.epochs + 1):
            lr = _cosine_lr(epoch, config.epochs, lr_max, lr_min)
            order = rng.permutation(n_train)
            iter_counts: list = []
            conv_flags: list = []
            fid_reports: list = []
            for start in range(0, n_train, config.batch_size):
                idx = order[start : start + config.batch_size]
                xb = x_train[:, idx]
                yb = y_train_cols[:, idx]
                ws, bs, iters, conv = _batch_gradients(params, xb, yb, config)
                if iters is not None:
                    iter_counts.append(float(np.mean(iters)))
                    conv_flags.append(float(np.mean(conv)))
                if config.method is not GradientMethod.BP:
                    ref_w, ref_b = backprop_batch(
                        params, xb, LossSpec(config.loss_kind, yb)
                    )
                    fid_reports.append(
                        compare(_as_bundle(ws, bs), _as_bundle(ref_w, ref_b))
                    )

                new_w, new_b = [], []
                for i, lp in enumerate(params.layers):
                    gw = ws[i] + wd * lp.weight
                    gb = bs[i] + wd * lp.bias
                    vel_w[i] = mu * vel_w[i] + gw
                    vel_b[i] = mu * vel_b[i] + gb
                    new_w.append((lp.weight - lr * (gw + mu * vel_w[i])).astype(dtype))
                    new_b.append((lp.bias - lr * (gb + mu * vel_b[i])).astype(dtype))
                for arr in new_w + new_b:
                    if not np.all(np.isfinite(arr)):
                        raise NumericError(
                            f"parameters diverged in epoch {epoch}; partial log kept"
                        )
                params = _with_arrays(params, new_w, new_b)

            train_loss, train_acc = _evaluate(params, x_train, y_train, config.loss_kind)
            if x_test.shape[1] > 0:
                _, test_acc = _evaluate(params, x_test, y_test, config.loss_kind)
            else:
                test_acc = None
            log(
                {
                    "epoch": epoch,
                    "lr": lr,
                    "train_loss": train_loss,
                    "train_acc": train_acc,
                    "test_acc": test_acc,
                    "mean_iterations": _mean_or_none(iter_counts),
                    "frac_converged": _mean_or_none(conv_flags),
                    "fid_cos": _mean_or_none(
                        r.cosine_similarity for r in fid_reports
                    ),
                    "fid_rel_err": _mean_or_none(
                        r.relative_error for r in fid_reports
                    ),
                    "fid_norm_ratio": _mean_or_none(
                        r.norm_ratio for r in fid_reports
                    ),
                    "fid_snr": _mean_or_none(r.snr for r in fid_reports),
                }
            )
    finally:
        if writer is not None:
            writer.close()

    return TrainResult(
        rows=rows, params=params, config_hash=config.config_hash(), classes=classes
    )


# ---------------------------------------------------------------------------
# Gradient checking and step-size sweeps.


def _random_instance(
    config: ExperimentConfig, rng: np.random.Generator
) -> tuple:
    """One random (params, input, loss) triple for a fidelity trial."""
    classes = config.dataset.classes
    widths = config.resolved_widths(classes)
    acts = config.resolved_activations(len(widths))
    params = random_network(config.input_dim, widths, acts, rng)
    x0 = rng.standard_normal(config.input_dim)
    out_dim = widths[-1]
    if config.loss_kind is LossKind.MSE:
        target = rng.standard_normal(out_dim)
    else:
        target = np.zeros(out_dim)
        target[int(rng.integers(out_dim))] = 1.0
    if config.precision == 32:
        params = params.astype(np.float32)
        x0 = x0.astype(np.float32)
        target = target.astype(np.float32)
    return params, x0.astype(params.dtype), LossSpec(config.loss_kind, target)


def _trial_gradient(
    params: NetworkParams,
    x0: np.ndarray,
    loss: LossSpec,
    config: ExperimentConfig,
) -> tuple:
    """Gradient bundle for one sample plus (iterations, converged)."""
    method = config.method
    if method is GradientMethod.BP:
        bundle, _ = classical_backprop(params, x0, loss)
        return bundle, None, True
    if method is GradientMethod.FINITE_DIFF:
        bundle = finite_difference_grad(params, x0, loss, h=config.fd_step)
        return bundle, None, True
    if method is GradientMethod.TWO_L:
        _, _, bundle = relax_twoL(params, x0, loss)
        return bundle, 2 * params.depth, True
    cfg = config.relax_config()
    if method is GradientMethod.DYADIC:
        _, _, bundle, trace = relax_dyadic(params, x0, loss, cfg)
    elif method is GradientMethod.MEAN_STRESS:
        _, _, bundle, trace = relax_mean_stress(params, x0, loss, cfg)
    else:
        _, _, bundle, trace = relax_split(params, x0, loss, cfg)
    return bundle, trace.iterations_used, trace.converged


def check_gradients(config: ExperimentConfig, trials: int = 20) -> list:
    """Compare the configured method against classical backprop.

    Each trial draws a fresh random network and input, computes the
    gradient both ways, and records the fidelity metrics as one row.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rng = np.random.default_rng(config.seed)
    rows = []
    for t in range(trials):
        params, x0, loss = _random_instance(config, rng)
        bundle, iterations, converged = _trial_gradient(params, x0, loss, config)
        ref, _ = classical_backprop(params, x0, loss)
        report = compare(bundle, ref)
        row = {
            "trial": t,
            "method": config.method.value,
            "iterations": iterations,
            "converged": bool(converged),
        }
        row.update(report.to_record())
        rows.append(row)
    return rows


def sweep_eta(
    config: ExperimentConfig, eta_list: Sequence[float], trials: int = 20
) -> list:
    """Fidelity of the configured relaxation method across step sizes.

    The same random instances are reused for every eta so rows differ
    only through the step size.  Only step-size-driven methods make
    sense here; TwoL, BP and finite differences are rejected.
    """
    if config.method not in _ETA_DRIVEN:
        raise ConfigError(
            f"sweep requires a step-size-driven method, got {config.method.value}"
        )
    etas = [float(e) for e in eta_list]
    if not etas:
        raise ConfigError("eta list is empty")
    if any(e <= 0.0 for e in etas):
        raise ConfigError("eta values must be positive")
    if trials < 1:
        raise ConfigError("trials must be >= 1")

    rng = np.random.default_rng(config.seed)
    instances = [_random_instance(config, rng) for _ in range(trials)]
    references = [
        classical_backprop(params, x0, loss)[0] for params, x0, loss in instances
    ]

    rows = []
    for eta in etas:
        eta_config = dataclasses.replace(config, eta=eta)
        reports = []
        iters = []
        convs = []
        for (params, x0, loss), ref in zip(instances, references):
            bundle, iterations, converged = _trial_gradient(
                params, x0, loss, eta_config
            )
            reports.append(compare(bundle, ref))
            iters.append(iterations)
            convs.append(float(converged))
        cosines = [r.cosine_similarity for r in reports]
        rel_errs = [r.relative_error for r in reports if r.relative_error is not None]
        ratios = [r.norm_ratio for r in reports if r.norm_ratio is not None]
        logmis = [
            max(r.per_layer_log_misalignment) for r in reports
        ]
        rows.append(
            {
                "eta": eta,
                "mean_iterations": float(np.mean(iters)),
                "max_iterations": int(np.max(iters)),
                "frac_converged": float(np.mean(convs)),
                "mean_cos": float(np.mean(cosines)),
                "min_cos": float(np.min(cosines)),
                "mean_rel_err": float(np.mean(rel_errs)) if rel_errs else None,
                "max_rel_err": float(np.max(rel_errs)) if rel_errs else None,
                "mean_norm_ratio": float(np.mean(ratios)) if ratios else None,
                "min_norm_ratio": float(np.min(ratios)) if ratios else None,
                "max_norm_ratio": float(np.max(ratios)) if ratios else None,
                "worst_logmis": float(np.max(logmis)),
            }
        )
    return rows
