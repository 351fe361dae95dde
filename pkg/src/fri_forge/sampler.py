"""
Forward measurement model.

    y[n] = sum_l a_l * (h * g)(t_n - tau_l),   t_n = t_start + n T_s

plus white Gaussian noise scaled per example to a target SNR, where signal
power is the mean of the squared noiseless samples.

Streams are indexed by (seed, example index) so any worker can regenerate any
slice of a dataset without coordinating with the others.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, NumericError
from .kernels import Kernel
from .models import (
    CLEAN_SNR_DB,
    FloatArray,
    FriSignal,
    GenerationRanges,
    KernelSupport,
    PulseShape,
    SampleGrid,
    SampleVector,
)
from .signals import draw_signal

__all__ = [
    "CAUSAL_LEAD",
    "GridConvention",
    "SnrPolicy",
    "build_grid",
    "grid_from_period",
    "grid_for_kernel",
    "forward_samples",
    "forward_batch",
    "add_noise",
    "add_noise_batch",
    "noise_sigma",
    "stream_dataset",
    "example_rng",
]

log = logging.getLogger(__name__)

GridConvention = Literal["full", "delays"]

# a causal kernel on the "delays" window starts this many periods late so the last
# delay still has two samples after it
CAUSAL_LEAD = 3


# ----------------------------------------------------------------------------
# Grids
# ----------------------------------------------------------------------------


def _check_grid(grid: SampleGrid, support: KernelSupport, order: int | None) -> None:
    if grid.period >= support.length:
        raise ConfigError(
            f"T_s = {grid.period:.6g} must be smaller than the kernel support length "
            f"{support.length:.6g}, or filtered pulses can fall between samples"
        )
    if order is not None and grid.n < 2 * order:
        log.warning("N=%d samples is below 2L=%d for L=%d pulses", grid.n, 2 * order, order)


def build_grid(
    support: KernelSupport,
    tau_min: float,
    tau_max: float,
    n: int,
    convention: GridConvention = "full",
    order: int | None = None,
) -> SampleGrid:
    """
    N samples covering the filtered-signal support with T_s = span / N.

    "full":   span = (t_max + tau_max) - (t_min + tau_min), starting at t_min + tau_min
    "delays": span = tau_max - tau_min, starting at tau_min, or at
              tau_min + CAUSAL_LEAD * T_s when the kernel is causal (t_min >= 0)
    """
    if n < 2:
        raise ConfigError(f"need N >= 2 samples, got {n}")
    if convention == "full":
        t_start = support.t_min + tau_min
        span = (support.t_max + tau_max) - t_start
    elif convention == "delays":
        span = tau_max - tau_min
        t_start = tau_min
        if support.t_min >= 0.0:
            t_start += CAUSAL_LEAD * span / n
    else:
        raise ConfigError(f"unknown grid convention {convention!r}")
    if not span > 0:
        raise ConfigError(f"non-positive sampling span {span}")
    grid = SampleGrid(n, t_start, span / n)
    _check_grid(grid, support, order)
    log.debug("grid N=%d t_start=%.6g T_s=%.6g (%s)", n, t_start, grid.period, convention)
    return grid


def grid_from_period(
    t_start: float,
    period: float,
    n: int,
    support: KernelSupport,
    order: int | None = None,
) -> SampleGrid:
    """Grid with a user-specified sampling period."""
    grid = SampleGrid(n, t_start, period)
    _check_grid(grid, support, order)
    return grid


def grid_for_kernel(
    kernel: Kernel,
    ranges: GenerationRanges,
    n: int,
    convention: str | None = None,
    period: float | None = None,
    t_start: float | None = None,
) -> SampleGrid:
    """
    The grid a run uses when only N is given. An explicit `period` wins; otherwise
    causal kernels default to the "delays" window and everything else to "full".
    """
    if period is not None:
        start = ranges.tau_min if t_start is None else t_start
        return grid_from_period(start, period, n, kernel.support, ranges.order)
    conv = convention or ("delays" if kernel.support.t_min >= 0.0 else "full")
    if conv not in ("full", "delays"):
        raise ConfigError(f"unknown grid convention {conv!r}")
    mode: GridConvention = "delays" if conv == "delays" else "full"
    return build_grid(kernel.support, ranges.tau_min, ranges.tau_max, n, mode, ranges.order)


# ----------------------------------------------------------------------------
# Noiseless samples
# ----------------------------------------------------------------------------


def forward_batch(
    amplitudes: FloatArray,
    delays: FloatArray,
    pulse: PulseShape,
    kernel: Kernel,
    grid: SampleGrid,
) -> FloatArray:
    """Vectorized samples for a batch: amplitudes and delays are B x L, result is B x N."""
    a = np.atleast_2d(np.asarray(amplitudes, dtype=np.float64))
    tau = np.atleast_2d(np.asarray(delays, dtype=np.float64))
    if a.shape != tau.shape:
        raise ConfigError(f"amplitude shape {a.shape} does not match delay shape {tau.shape}")
    t = grid.instants[None, None, :] - tau[:, :, None]
    r = kernel.pulse_response(pulse, t)
    return np.asarray(np.einsum("bl,bln->bn", a, r), dtype=np.float64)


def forward_samples(
    signal: FriSignal, pulse: PulseShape, kernel: Kernel, grid: SampleGrid
) -> SampleVector:
    values = forward_batch(signal.a[None, :], signal.tau[None, :], pulse, kernel, grid)[0]
    return SampleVector(values, grid, CLEAN_SNR_DB)


# ----------------------------------------------------------------------------
# Noise
# ----------------------------------------------------------------------------


def noise_sigma(values: FloatArray, snr_db: float) -> float:
    """Noise standard deviation giving `snr_db` for the given noiseless samples."""
    power = float(np.mean(np.square(values)))
    if power == 0.0:
        raise NumericError("SNR is undefined for an all-zero sample vector")
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def add_noise(samples: SampleVector, snr_db: float, rng: np.random.Generator) -> SampleVector:
    if math.isnan(snr_db):
        raise ConfigError("snr_db is NaN")
    if math.isinf(snr_db) and snr_db > 0:
        return samples
    if math.isinf(snr_db):
        raise ConfigError("snr_db = -inf would need infinite noise power")
    sigma = noise_sigma(samples.values, snr_db)
    noisy = samples.values + rng.normal(0.0, sigma, size=samples.values.shape)
    return SampleVector(noisy, samples.grid, float(snr_db))


def add_noise_batch(
    values: FloatArray, snr_db: FloatArray, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    """
    Row-wise noise at per-row SNR. Rows with +inf SNR are left clean, and so are
    all-zero rows (no pulse reached the grid, so there is no power to scale to).
    Returns (noisy values, the noise that was added).
    """
    y = np.atleast_2d(values)
    snr = np.broadcast_to(np.asarray(snr_db, dtype=np.float64), (y.shape[0],))
    power = np.mean(np.square(y), axis=1)
    noisy_rows = np.isfinite(snr) & (power > 0.0)
    var = np.where(noisy_rows, power / 10.0 ** (np.where(noisy_rows, snr, 0.0) / 10.0), 0.0)
    noise = rng.standard_normal(y.shape) * np.sqrt(var)[:, None]
    return y + noise, noise


@dataclass(frozen=True)
class SnrPolicy:
    """Per-example SNR: a fixed value, uniform over a dB range, or clean."""

    kind: Literal["fixed", "uniform", "clean"]
    low: float = CLEAN_SNR_DB
    high: float = CLEAN_SNR_DB

    @classmethod
    def fixed(cls, snr_db: float) -> SnrPolicy:
        return cls("fixed", snr_db, snr_db)

    @classmethod
    def uniform(cls, low: float, high: float) -> SnrPolicy:
        if low > high:
            raise ConfigError(f"SNR range low > high ({low} > {high})")
        return cls("uniform", low, high)

    @classmethod
    def clean(cls) -> SnrPolicy:
        return cls("clean")

    @classmethod
    def parse(cls, spec: str) -> SnrPolicy:
        """`clean`, `15` or `5:40`."""
        s = spec.strip().lower()
        try:
            if s in {"clean", "inf"}:
                return cls.clean()
            if ":" in s:
                lo, hi = s.split(":", 1)
                return cls.uniform(float(lo), float(hi))
            return cls.fixed(float(s))
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad SNR policy {spec!r}") from e

    def to_str(self) -> str:
        if self.kind == "clean":
            return "clean"
        if self.kind == "fixed":
            return f"{self.low:g}"
        return f"{self.low:g}:{self.high:g}"

    def draw(self, rng: np.random.Generator, count: int) -> FloatArray:
        if self.kind == "clean":
            return np.full(count, CLEAN_SNR_DB)
        if self.kind == "fixed":
            return np.full(count, self.low)
        return rng.uniform(self.low, self.high, size=count)


# ----------------------------------------------------------------------------
# Streams
# ----------------------------------------------------------------------------


def example_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for example `index` of the stream seeded by `seed`."""
    return np.random.default_rng([seed, index])


def stream_dataset(
    ranges: GenerationRanges,
    pulse: PulseShape,
    kernel: Kernel,
    grid: SampleGrid,
    snr_policy: SnrPolicy,
    count: int,
    seed: int,
    offset: int = 0,
) -> Iterator[tuple[SampleVector, FriSignal]]:
    """
    Lazy, seed-indexed stream of `count` labeled examples starting at example
    index `offset`. Worker i of W can consume offset = i * count.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    for i in range(offset, offset + count):
        rng = example_rng(seed, i)
        signal = draw_signal(ranges, rng)
        snr = float(snr_policy.draw(rng, 1)[0])
        clean = forward_samples(signal, pulse, kernel, grid)
        if not np.any(clean.values):
            log.debug("example %d: no pulse reaches the grid, kept noiseless", i)
            yield clean, signal
            continue
        yield add_noise(clean, snr, rng), signal
