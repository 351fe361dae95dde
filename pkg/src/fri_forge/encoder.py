"""
Delay encoder: a compact 1-D CNN mapping N samples to L delay estimates.

    samples (B x N)
      -> peak normalization (per example, max-abs)
      -> [conv1d k=3 -> +bias -> GELU] x len(conv_channels)
      -> flatten
      -> [linear -> GELU] x len(hidden)
      -> linear to L (no activation)

Hidden widths are tuned at build time so the parameter count lands near a
target; the realized widths are written back into the config so a saved model
rebuilds to the same shapes.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from .autodiff import (
    Node,
    Parameter,
    add,
    conv1d,
    flatten,
    gelu,
    load_checkpoint,
    matmul,
    peak_normalize,
    reshape,
    save_checkpoint,
)
from .errors import ConfigError
from .models import FloatArray, SampleVector

__all__ = [
    "DEFAULT_PARAM_TARGET",
    "PARAM_TOLERANCE",
    "EncoderConfig",
    "EncoderModel",
    "build_encoder",
    "count_parameters",
    "predict_delays",
    "load_encoder",
]

log = logging.getLogger(__name__)

DEFAULT_PARAM_TARGET = 115_000
PARAM_TOLERANCE = 0.10


@dataclass(frozen=True)
class EncoderConfig:
    n_samples: int
    order: int
    conv_channels: tuple[int, ...] = (32, 64, 64)
    kernel_size: int = 3
    hidden: tuple[int, ...] = (256,)
    param_target: int | None = DEFAULT_PARAM_TARGET
    tune_hidden: bool = True
    normalize_input: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1 or self.order < 1:
            raise ConfigError(f"need N >= 1 and L >= 1, got N={self.n_samples} L={self.order}")
        if not self.conv_channels or any(c < 1 for c in self.conv_channels):
            raise ConfigError(f"conv channel widths must be positive, got {self.conv_channels}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden widths must be positive, got {self.hidden}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"conv kernel size must be odd, got {self.kernel_size}")
        if self.param_target is not None and self.param_target < 1:
            raise ConfigError(f"parameter target must be positive, got {self.param_target}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "N": self.n_samples,
            "L": self.order,
            "conv_channels": list(self.conv_channels),
            "kernel_size": self.kernel_size,
            "hidden": list(self.hidden),
            "param_target": self.param_target,
            "tune_hidden": self.tune_hidden,
            "normalize_input": self.normalize_input,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EncoderConfig:
        try:
            target = d.get("param_target", DEFAULT_PARAM_TARGET)
            return cls(
                n_samples=int(d["N"]),
                order=int(d["L"]),
                conv_channels=tuple(int(c) for c in d.get("conv_channels", (32, 64, 64))),
                kernel_size=int(d.get("kernel_size", 3)),
                hidden=tuple(int(h) for h in d.get("hidden", (256,))),
                param_target=None if target is None else int(target),
                tune_hidden=bool(d.get("tune_hidden", True)),
                normalize_input=bool(d.get("normalize_input", True)),
                seed=int(d.get("seed", 0)),
            )
        except KeyError as e:
            raise ConfigError(f"encoder config missing field {e.args[0]!r}") from e
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad encoder config: {e}") from e


# ----------------------------------------------------------------------------
# Parameter budget
# ----------------------------------------------------------------------------


def count_parameters(
    n_samples: int,
    order: int,
    conv_channels: Sequence[int],
    kernel_size: int,
    hidden: Sequence[int],
) -> int:
    total = 0
    c_in = 1
    for c_out in conv_channels:
        total += c_out * c_in * kernel_size + c_out
        c_in = c_out
    f_in = c_in * n_samples
    for h in (*hidden, order):
        total += f_in * h + h
        f_in = h
    return total


def _tune_hidden(cfg: EncoderConfig) -> tuple[int, ...]:
    """Scale the hidden widths uniformly so the count is as close to the target as possible."""
    target = cfg.param_target
    if target is None or not cfg.hidden:
        return cfg.hidden

    def widths(scale: float) -> tuple[int, ...]:
        return tuple(max(1, round(h * scale)) for h in cfg.hidden)

    def count(ws: tuple[int, ...]) -> int:
        return count_parameters(cfg.n_samples, cfg.order, cfg.conv_channels, cfg.kernel_size, ws)

    best = widths(1.0)
    best_err = abs(count(best) - target)
    lo, hi = 0.0, 64.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        ws = widths(mid)
        n = count(ws)
        err = abs(n - target)
        if err < best_err or (err == best_err and ws < best):
            best, best_err = ws, err
        if n < target:
            lo = mid
        else:
            hi = mid
    log.debug("hidden widths %s -> %s for target %d", cfg.hidden, best, target)
    return best


# ----------------------------------------------------------------------------
# Model
# ----------------------------------------------------------------------------


@dataclass
class ConvBlock:
    weight: Parameter  # O x C x K
    bias: Parameter  # O x 1


@dataclass
class DenseBlock:
    weight: Parameter  # F x H
    bias: Parameter  # H
    activation: bool


@dataclass
class EncoderModel:
    config: EncoderConfig
    convs: list[ConvBlock] = field(default_factory=list)
    dense: list[DenseBlock] = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.config.n_samples

    @property
    def order(self) -> int:
        return self.config.order

    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for c in self.convs:
            out += [c.weight, c.bias]
        for d in self.dense:
            out += [d.weight, d.bias]
        return out

    def parameter_count(self) -> int:
        return sum(int(p.value.size) for p in self.parameters())

    def forward(self, samples: Node) -> Node:
        """B x N samples -> B x L raw delay estimates."""
        if samples.value.ndim != 2 or samples.shape[1] != self.n_samples:
            raise ConfigError(
                f"encoder expects B x {self.n_samples} samples, got shape {samples.shape}"
            )
        x = peak_normalize(samples) if self.config.normalize_input else samples
        x = reshape(x, (x.shape[0], 1, self.n_samples))
        for c in self.convs:
            x = gelu(add(conv1d(x, c.weight), c.bias))
        x = flatten(x)
        for d in self.dense:
            x = add(matmul(x, d.weight), d.bias)
            if d.activation:
                x = gelu(x)
        return x

    # ---- persistence ----

    def state_dict(self) -> dict[str, FloatArray]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def load_state_dict(self, tensors: dict[str, FloatArray]) -> None:
        for p in self.parameters():
            if p.name not in tensors:
                raise ConfigError(f"checkpoint has no tensor {p.name!r}")
            v = tensors[p.name]
            if v.shape != p.value.shape:
                raise ConfigError(f"{p.name}: checkpoint shape {v.shape} vs model {p.shape}")
            p.value = np.array(v, dtype=np.float64)

    def save(
        self,
        path: Path,
        extra: dict[str, Any] | None = None,
        tensors: dict[str, FloatArray] | None = None,
    ) -> None:
        """Checkpoint the weights (plus any extra `tensors`) with the config in the sidecar."""
        meta = {"encoder": self.config.to_dict(), **(extra or {})}
        save_checkpoint(path, {**self.state_dict(), **(tensors or {})}, meta)

    def layer_table(self) -> list[dict[str, Any]]:
        rows: list[dict[str, Any]] = []
        for i, c in enumerate(self.convs):
            rows.append(
                {
                    "layer": f"conv{i}",
                    "kind": "conv1d+gelu",
                    "shape": "x".join(str(s) for s in c.weight.shape),
                    "params": int(c.weight.value.size + c.bias.value.size),
                }
            )
        for i, d in enumerate(self.dense):
            rows.append(
                {
                    "layer": f"dense{i}",
                    "kind": "linear+gelu" if d.activation else "linear",
                    "shape": "x".join(str(s) for s in d.weight.shape),
                    "params": int(d.weight.value.size + d.bias.value.size),
                }
            )
        return rows


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> FloatArray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def build_encoder(config: EncoderConfig) -> EncoderModel:
    """
    Build and initialize the model. Weights are fan-in scaled uniform, biases zero.

    Raises ConfigError when the realized parameter count misses the target by more
    than 10%.
    """
    hidden = _tune_hidden(config) if config.tune_hidden else config.hidden
    cfg = replace(config, hidden=hidden, tune_hidden=False)
    n = count_parameters(cfg.n_samples, cfg.order, cfg.conv_channels, cfg.kernel_size, hidden)
    if cfg.param_target is not None:
        rel = abs(n - cfg.param_target) / cfg.param_target
        if rel > PARAM_TOLERANCE:
            raise ConfigError(
                f"encoder has {n} parameters, {rel:.1%} away from the target "
                f"{cfg.param_target}; change conv_channels / hidden or the target"
            )

    rng = np.random.default_rng(cfg.seed)
    model = EncoderModel(cfg)
    c_in, K = 1, cfg.kernel_size
    for i, c_out in enumerate(cfg.conv_channels):
        w = _uniform(rng, (c_out, c_in, K), c_in * K)
        model.convs.append(
            ConvBlock(
                Parameter(w, f"conv{i}.weight"), Parameter(np.zeros((c_out, 1)), f"conv{i}.bias")
            )
        )
        c_in = c_out
    f_in = c_in * cfg.n_samples
    widths = (*hidden, cfg.order)
    for i, h in enumerate(widths):
        w = _uniform(rng, (f_in, h), f_in)
        model.dense.append(
            DenseBlock(
                Parameter(w, f"dense{i}.weight"),
                Parameter(np.zeros(h), f"dense{i}.bias"),
                activation=i < len(widths) - 1,
            )
        )
        f_in = h
    log.info(
        "encoder N=%d L=%d conv=%s hidden=%s params=%d",
        cfg.n_samples,
        cfg.order,
        list(cfg.conv_channels),
        list(hidden),
        n,
    )
    return model


def load_encoder(path: Path) -> EncoderModel:
    """Rebuild a model from a checkpoint whose sidecar holds the encoder config."""
    tensors, meta = load_checkpoint(path)
    if "encoder" not in meta:
        raise ConfigError(f"checkpoint {path} has no encoder config in its sidecar")
    model = build_encoder(EncoderConfig.from_dict(meta["encoder"]))
    model.load_state_dict(tensors)
    return model


def _as_batch(samples: npt.ArrayLike | Sequence[SampleVector]) -> FloatArray:
    if isinstance(samples, SampleVector):
        return samples.values[None, :]
    if isinstance(samples, Sequence) and samples and isinstance(samples[0], SampleVector):
        return np.stack([s.values for s in samples if isinstance(s, SampleVector)])
    return np.atleast_2d(np.asarray(samples, dtype=np.float64))


def predict_delays(
    model: EncoderModel,
    samples: npt.ArrayLike | Sequence[SampleVector],
    sort: bool = True,
    chunk: int = 8192,
) -> FloatArray:
    """B x L delay estimates; `sort` orders each row ascending."""
    y = _as_batch(samples)
    if y.shape[1] != model.n_samples:
        raise ConfigError(f"sample length {y.shape[1]} does not match encoder N={model.n_samples}")
    parts = [model.forward(Node(y[i : i + chunk])).value for i in range(0, y.shape[0], chunk)]
    out = np.concatenate(parts, axis=0) if parts else np.zeros((0, model.order))
    return np.sort(out, axis=1) if sort else out
