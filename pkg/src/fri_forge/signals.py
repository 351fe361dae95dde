"""
Random FRI signal generation.

Amplitudes are i.i.d. uniform on [a_min, a_max]; delays are i.i.d. uniform on
[tau_min, tau_max] and then sorted. With a resolution floor the delay draw is
rejection-sampled (the whole delay vector is redrawn) so the marginal stays the
uniform order statistic conditioned on the gap, not a hand-built spacing.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import ConfigError, InfeasibleDataError
from .models import FloatArray, FriSignal, GenerationRanges

__all__ = [
    "MAX_REJECTION_ATTEMPTS",
    "draw_signal",
    "draw_batch",
    "draw_batch_separated",
    "resolution",
    "min_gaps",
]

log = logging.getLogger(__name__)

MAX_REJECTION_ATTEMPTS = 10_000


def min_gaps(delays: FloatArray) -> FloatArray:
    """Row-wise minimum adjacent gap of sorted delays (B x L); +inf for L == 1."""
    d = np.atleast_2d(np.asarray(delays, dtype=np.float64))
    if d.shape[1] < 2:
        return np.full(d.shape[0], np.inf)
    return np.min(np.diff(d, axis=1), axis=1)


def _delays_ok(delays: FloatArray, ranges: GenerationRanges) -> FloatArray:
    gaps = min_gaps(delays)
    if ranges.min_separation is None:
        # ties have probability zero but still violate strict ordering
        return gaps > 0
    return gaps >= ranges.min_separation


def draw_signal(ranges: GenerationRanges, rng: np.random.Generator) -> FriSignal:
    L = ranges.order
    amplitudes = rng.uniform(ranges.a_min, ranges.a_max, size=L)
    for attempt in range(1, MAX_REJECTION_ATTEMPTS + 1):
        delays = np.sort(rng.uniform(ranges.tau_min, ranges.tau_max, size=L))
        if L == 1 or bool(_delays_ok(delays[None, :], ranges)[0]):
            if attempt > 1:
                log.debug("delay draw accepted after %d attempts", attempt)
            return FriSignal(
                tuple(float(a) for a in amplitudes), tuple(float(t) for t in delays)
            )
    raise InfeasibleDataError(
        f"no delay vector with min gap >= {ranges.min_separation} after "
        f"{MAX_REJECTION_ATTEMPTS} attempts (L={L}, tau in [{ranges.tau_min}, {ranges.tau_max}])"
    )


def draw_batch(
    ranges: GenerationRanges, count: int, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    """Vectorized draw of `count` signals: returns (amplitudes, delays), each count x L."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    L = ranges.order
    amplitudes = rng.uniform(ranges.a_min, ranges.a_max, size=(count, L))
    delays = np.sort(rng.uniform(ranges.tau_min, ranges.tau_max, size=(count, L)), axis=1)
    if L == 1:
        return amplitudes, delays

    bad = ~_delays_ok(delays, ranges)
    attempts = 1
    while bad.any():
        if attempts >= MAX_REJECTION_ATTEMPTS:
            raise InfeasibleDataError(
                f"{int(bad.sum())} rows still violate min gap {ranges.min_separation} "
                f"after {MAX_REJECTION_ATTEMPTS} attempts"
            )
        n_bad = int(bad.sum())
        delays[bad] = np.sort(
            rng.uniform(ranges.tau_min, ranges.tau_max, size=(n_bad, L)), axis=1
        )
        bad[bad] = ~_delays_ok(delays[bad], ranges)
        attempts += 1
    if attempts > 1:
        log.debug("batch rejection sampling finished after %d rounds", attempts)
    return amplitudes, delays


def resolution(signal: FriSignal) -> float:
    """Minimum adjacent delay gap. A single pulse has infinite resolution."""
    if signal.order < 2:
        return math.inf
    return float(np.min(np.diff(signal.tau)))


def draw_batch_separated(
    ranges: GenerationRanges, separation: float, count: int, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    """
    Batch with every adjacent gap equal to `separation`: the first delay is uniform
    on [tau_min, tau_max - (L-1) * separation], the rest follow on a fixed comb.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if not separation > 0:
        raise ConfigError(f"separation must be > 0, got {separation}")
    L = ranges.order
    span = (L - 1) * separation
    if span > ranges.tau_max - ranges.tau_min:
        raise InfeasibleDataError(
            f"{L} pulses spaced {separation} do not fit in [{ranges.tau_min}, {ranges.tau_max}]"
        )
    amplitudes = rng.uniform(ranges.a_min, ranges.a_max, size=(count, L))
    first = rng.uniform(ranges.tau_min, ranges.tau_max - span, size=(count, 1))
    delays = first + separation * np.arange(L, dtype=np.float64)[None, :]
    return amplitudes, delays
