"""
Training loops for the delay encoder alone and for the kernel and encoder jointly.

Both minimize the mean over a batch of ||tau_i - E(y_i)||_1. In joint mode the
samples are regenerated from the current kernel at every step and enter the graph
through `linear_response`, so the kernel's raw coordinates receive
    dL/dp = sum_{b,l,n} dL/dy[b,n] * a[b,l] * d r(t_n - tau[b,l]) / dp
with r the pulse response. Noise is drawn per step from a standard normal, scaled
to the example's SNR against the current clean samples, and treated as a constant.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .autodiff import (
    AdamW,
    Node,
    Parameter,
    abs_,
    backward,
    cosine_lr,
    linear_response,
    multiply,
    reduce_sum,
    subtract,
)
from .encoder import EncoderModel
from .errors import ConfigError, NumericError
from .io.exports import write_csv, write_json
from .kernels import Kernel, LearnableKernel
from .metrics import mean_db, nmse_db_batch
from .models import FloatArray, GenerationRanges, PulseShape, SampleGrid, parse_pulse
from .sampler import SnrPolicy, forward_batch
from .signals import draw_batch

__all__ = [
    "TrainMode",
    "TrainConfig",
    "TrainReport",
    "BatchStream",
    "TrainingBatch",
    "loss_l1",
    "regenerate_batch_with_gradient",
    "scaled_noise",
    "train",
]

log = logging.getLogger(__name__)

TrainMode = Literal["encoder-only", "joint"]

# stream index reserved for the held-out validation set
_VALIDATION_STREAM = 2**31 - 1


@dataclass(frozen=True)
class TrainConfig:
    mode: TrainMode = "joint"
    epochs: int = 50
    batch_size: int = 8192
    examples_per_epoch: int = 100_000
    lr_encoder: float = 1e-3
    lr_kernel: float = 1e-3
    lr_min: float = 0.0
    weight_decay: float = 1e-2
    kernel_weight_decay: float = 0.0
    snr: str = "5:40"
    pulse: str = "dirac"
    seed: int = 0
    checkpoint_every: int = 1
    validation_count: int = 1000
    validation_snr_db: float = 40.0
    kernel_trace_points: int = 121

    def __post_init__(self) -> None:
        if self.mode not in ("encoder-only", "joint"):
            raise ConfigError(f"mode must be 'encoder-only' or 'joint', got {self.mode!r}")
        for name in ("epochs", "batch_size", "examples_per_epoch", "validation_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if self.lr_encoder < 0 or self.lr_kernel < 0 or self.lr_min < 0:
            raise ConfigError("learning rates must be non-negative")
        if self.kernel_trace_points < 2:
            raise ConfigError("kernel_trace_points must be >= 2")
        # fail early on unparsable strings
        SnrPolicy.parse(self.snr)
        parse_pulse(self.pulse)

    @classmethod
    def budget(cls, name: str, **overrides: Any) -> TrainConfig:
        """`desk`: 1e5 examples x 50 epochs. `full`: 1e6 examples x 2000 epochs."""
        presets: dict[str, dict[str, Any]] = {
            "desk": {"examples_per_epoch": 100_000, "epochs": 50},
            "full": {"examples_per_epoch": 1_000_000, "epochs": 2000},
        }
        if name not in presets:
            raise ConfigError(f"unknown budget {name!r} (expected 'desk' or 'full')")
        return cls(**{**presets[name], **overrides})

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(self.examples_per_epoch / self.batch_size)

    @property
    def snr_policy(self) -> SnrPolicy:
        return SnrPolicy.parse(self.snr)

    @property
    def pulse_shape(self) -> PulseShape:
        return parse_pulse(self.pulse)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "examples_per_epoch": self.examples_per_epoch,
            "lr_encoder": self.lr_encoder,
            "lr_kernel": self.lr_kernel,
            "lr_min": self.lr_min,
            "weight_decay": self.weight_decay,
            "kernel_weight_decay": self.kernel_weight_decay,
            "snr": self.snr,
            "pulse": self.pulse,
            "seed": self.seed,
            "checkpoint_every": self.checkpoint_every,
            "validation_count": self.validation_count,
            "validation_snr_db": self.validation_snr_db,
            "kernel_trace_points": self.kernel_trace_points,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrainConfig:
        known = set(cls().to_dict())
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad training config: {e}") from e


@dataclass
class TrainReport:
    mode: TrainMode
    loss_trace: list[float] = field(default_factory=list)
    val_nmse_trace: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_nmse_db: float = math.inf
    final_kernel: dict[str, Any] = field(default_factory=dict)
    kernel_trace_t: list[float] = field(default_factory=list)
    kernel_trace: list[dict[str, Any]] = field(default_factory=list)
    parameter_count: int = 0
    steps: int = 0
    wall_clock_s: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "epochs": len(self.loss_trace),
            "steps": self.steps,
            "parameter_count": self.parameter_count,
            "loss_trace": self.loss_trace,
            "val_nmse_trace": self.val_nmse_trace,
            "best_epoch": self.best_epoch,
            "best_val_nmse_db": self.best_val_nmse_db,
            "final_kernel": self.final_kernel,
            "kernel_trace_t": self.kernel_trace_t,
            "kernel_trace": self.kernel_trace,
        }
        if include_timing:
            out["wall_clock_s"] = self.wall_clock_s
        return out


# ----------------------------------------------------------------------------
# Data
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrainingBatch:
    amplitudes: FloatArray  # B x L
    delays: FloatArray  # B x L, sorted
    snr_db: FloatArray  # B
    noise: FloatArray  # B x N standard normal, scaled per step

    @property
    def size(self) -> int:
        return int(self.delays.shape[0])


@dataclass(frozen=True)
class BatchStream:
    """Seed-indexed batches: batch (epoch, step) is the same no matter who draws it."""

    ranges: GenerationRanges
    grid: SampleGrid
    snr_policy: SnrPolicy
    seed: int = 0

    def batch(self, epoch: int, step: int, size: int) -> TrainingBatch:
        rng = np.random.default_rng([self.seed, epoch, step])
        a, tau = draw_batch(self.ranges, size, rng)
        snr = self.snr_policy.draw(rng, size)
        z = rng.standard_normal((size, self.grid.n))
        return TrainingBatch(a, tau, snr, z)

    def epoch(self, epoch: int, examples: int, batch_size: int) -> Iterator[TrainingBatch]:
        done, step = 0, 0
        while done < examples:
            size = min(batch_size, examples - done)
            yield self.batch(epoch, step, size)
            done += size
            step += 1

    def validation(self, count: int, snr_db: float) -> TrainingBatch:
        rng = np.random.default_rng([self.seed, _VALIDATION_STREAM])
        a, tau = draw_batch(self.ranges, count, rng)
        z = rng.standard_normal((count, self.grid.n))
        return TrainingBatch(a, tau, np.full(count, snr_db), z)


def scaled_noise(clean: FloatArray, snr_db: FloatArray, z: FloatArray) -> FloatArray:
    """
    Scale standard-normal draws `z` row-wise to the target SNR of `clean`.
    Rows with +inf SNR or no signal power get no noise.
    """
    power = np.mean(np.square(clean), axis=1)
    finite = np.isfinite(snr_db) & (power > 0.0)
    var = np.where(finite, power / 10.0 ** (np.where(finite, snr_db, 0.0) / 10.0), 0.0)
    return np.asarray(z * np.sqrt(var)[:, None], dtype=np.float64)


# ----------------------------------------------------------------------------
# Objective
# ----------------------------------------------------------------------------


def loss_l1(pred: Node, target: FloatArray) -> Node:
    """Batch mean of sum_l |pred - target|."""
    t = np.asarray(target, dtype=np.float64)
    if pred.shape != t.shape:
        raise ConfigError(f"loss_l1: shape mismatch {pred.shape} vs {t.shape}")
    total = reduce_sum(abs_(subtract(pred, t)))
    return multiply(total, 1.0 / t.shape[0])


def regenerate_batch_with_gradient(
    kernel: Kernel,
    amplitudes: FloatArray,
    delays: FloatArray,
    noise: FloatArray,
    pulse: PulseShape,
    grid: SampleGrid,
    raw: Parameter | None = None,
) -> Node:
    """
    Samples y = forward(a, tau; theta) + noise as a graph node.

    With `raw` given, the node's backward maps dL/dy onto the kernel's raw
    coordinates; `noise` is a constant and receives no gradient.
    """
    a = np.atleast_2d(np.asarray(amplitudes, dtype=np.float64))
    tau = np.atleast_2d(np.asarray(delays, dtype=np.float64))
    clean = forward_batch(a, tau, pulse, kernel, grid)
    value = clean + np.asarray(noise, dtype=np.float64)
    if raw is None:
        return Node(value)
    if not isinstance(kernel, LearnableKernel):
        raise ConfigError(f"{kernel.kind} kernel has no trainable parameters")
    if raw.shape != (kernel.n_params,):
        raise ConfigError(f"raw parameter shape {raw.shape} vs kernel with {kernel.n_params}")
    t = grid.instants[None, None, :] - tau[:, :, None]

    def vjp(g: FloatArray) -> FloatArray:
        cot = a[:, :, None] * g[:, None, :]
        return kernel.pulse_vjp_raw(pulse, t, cot)

    return linear_response(value, vjp, raw)


# ----------------------------------------------------------------------------
# Loop
# ----------------------------------------------------------------------------


def _check_shapes(encoder: EncoderModel, grid: SampleGrid, ranges: GenerationRanges) -> None:
    if encoder.n_samples != grid.n:
        raise ConfigError(f"encoder expects N={encoder.n_samples} but the grid has N={grid.n}")
    if encoder.order != ranges.order:
        raise ConfigError(f"encoder predicts L={encoder.order} but data has L={ranges.order}")


def _validate(
    encoder: EncoderModel,
    kernel: Kernel,
    pulse: PulseShape,
    grid: SampleGrid,
    val: TrainingBatch,
) -> float:
    clean = forward_batch(val.amplitudes, val.delays, pulse, kernel, grid)
    y = clean + scaled_noise(clean, val.snr_db, val.noise)
    pred = encoder.forward(Node(y)).value
    return mean_db(nmse_db_batch(val.delays, pred))


def _save(
    path: Path,
    encoder: EncoderModel,
    kernel: Kernel,
    meta: dict[str, Any],
) -> None:
    tensors = {"kernel.raw": kernel.raw_params()} if isinstance(kernel, LearnableKernel) else {}
    encoder.save(path, {**meta, "kernel": kernel.to_dict()}, tensors)


def train(
    config: TrainConfig,
    kernel: Kernel,
    encoder: EncoderModel,
    stream: BatchStream,
    out_dir: Path | None = None,
) -> tuple[TrainReport, Kernel]:
    """
    Run the configured loop. Returns the report and the selected kernel; the encoder
    is left holding the parameters of the epoch with the best held-out NMSE.
    """
    joint = config.mode == "joint"
    if joint and not isinstance(kernel, LearnableKernel):
        raise ConfigError(f"joint mode needs a learnable kernel, got {kernel.kind}")
    _check_shapes(encoder, stream.grid, stream.ranges)
    pulse = config.pulse_shape
    grid = stream.grid

    enc_opt = AdamW(encoder.parameters(), config.lr_encoder, weight_decay=config.weight_decay)
    learnable = kernel if joint and isinstance(kernel, LearnableKernel) else None
    raw: Parameter | None = None
    kern_opt: AdamW | None = None
    # a zero kernel rate freezes the kernel exactly
    if learnable is not None and config.lr_kernel > 0.0:
        raw = Parameter(kernel.raw_params(), "kernel.raw")
        kern_opt = AdamW([raw], config.lr_kernel, weight_decay=config.kernel_weight_decay)

    val = stream.validation(config.validation_count, config.validation_snr_db)
    sup = kernel.support
    trace_t = np.linspace(sup.t_min, sup.t_max, config.kernel_trace_points)
    report = TrainReport(
        mode=config.mode,
        parameter_count=encoder.parameter_count(),
        kernel_trace_t=[float(x) for x in trace_t],
    )
    total_steps = config.epochs * config.steps_per_epoch
    best_state = encoder.state_dict()
    best_kernel = kernel
    last_good: Path | None = None
    started = time.perf_counter()

    step = 0
    for epoch in range(1, config.epochs + 1):
        losses: list[float] = []
        weights: list[int] = []
        for batch in stream.epoch(epoch, config.examples_per_epoch, config.batch_size):
            clean = forward_batch(batch.amplitudes, batch.delays, pulse, kernel, grid)
            noise = scaled_noise(clean, batch.snr_db, batch.noise)
            y = regenerate_batch_with_gradient(
                kernel, batch.amplitudes, batch.delays, noise, pulse, grid, raw
            )
            loss = loss_l1(encoder.forward(y), batch.delays)
            value = float(loss.value)
            if not math.isfinite(value):
                raise NumericError(
                    f"non-finite loss at epoch {epoch} step {step}; "
                    f"last good checkpoint: {last_good or 'none'}"
                )
            enc_opt.zero_grad()
            if kern_opt is not None:
                kern_opt.zero_grad()
            backward(loss)
            try:
                enc_opt.step(cosine_lr(step, total_steps, config.lr_encoder, config.lr_min))
                if kern_opt is not None and raw is not None and learnable is not None:
                    kern_opt.step(cosine_lr(step, total_steps, config.lr_kernel, config.lr_min))
                    learnable = learnable.with_raw_params(raw.value)
                    kernel = learnable
            except NumericError as e:
                raise NumericError(f"{e}; last good checkpoint: {last_good or 'none'}") from e
            losses.append(value)
            weights.append(batch.size)
            step += 1
            log.debug("epoch %d step %d loss %.6g", epoch, step, value)

        epoch_loss = float(np.average(losses, weights=weights))
        val_db = _validate(encoder, kernel, pulse, grid, val)
        report.loss_trace.append(epoch_loss)
        report.val_nmse_trace.append(val_db)
        if val_db < report.best_val_nmse_db:
            report.best_val_nmse_db = val_db
            report.best_epoch = epoch
            best_state = encoder.state_dict()
            best_kernel = kernel
        log.info(
            "epoch %d/%d loss %.5f val NMSE %.2f dB", epoch, config.epochs, epoch_loss, val_db
        )

        if config.checkpoint_every and epoch % config.checkpoint_every == 0:
            report.kernel_trace.append(
                {"epoch": epoch, "g": [float(v) for v in kernel.evaluate(trace_t)]}
            )
            if out_dir is not None:
                path = out_dir / "checkpoints" / f"epoch_{epoch:04d}.bin"
                meta = {
                    "epoch": epoch,
                    "step": step,
                    "loss": epoch_loss,
                    "val_nmse_db": val_db,
                    "optimizer": {
                        "encoder": enc_opt.hyperparameters(),
                        "kernel": kern_opt.hyperparameters() if kern_opt else None,
                    },
                }
                _save(path, encoder, kernel, meta)
                last_good = path

    encoder.load_state_dict(best_state)
    report.steps = step
    report.final_kernel = best_kernel.to_dict()
    report.wall_clock_s = time.perf_counter() - started

    if out_dir is not None:
        _save(
            out_dir / "best.bin",
            encoder,
            best_kernel,
            {"epoch": report.best_epoch, "val_nmse_db": report.best_val_nmse_db},
        )
        write_json(best_kernel.to_dict(), out_dir / "kernel.json")
        # wall clock lives in timing.json only
        write_json(report.to_dict(include_timing=False), out_dir / "report.json")
        write_json({"wall_clock_s": report.wall_clock_s}, out_dir / "timing.json")
        write_csv(
            [
                {"epoch": i + 1, "loss": loss, "val_nmse_db": v}
                for i, (loss, v) in enumerate(
                    zip(report.loss_trace, report.val_nmse_trace, strict=True)
                )
            ],
            out_dir / "loss.csv",
            fieldnames=["epoch", "loss", "val_nmse_db"],
        )
        log.info("wrote training artifacts to %s", out_dir)
    return report, best_kernel
