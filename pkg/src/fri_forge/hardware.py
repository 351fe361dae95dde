"""
Analog realization of the two-pole kernel as a unity-gain Sallen-Key low-pass.

The circuit's time constants 1/a1 and 1/a2 are tied to its components by

    1/a1 + 1/a2   = C2 (R1 + R2)
    1/(a1 a2)     = C1 C2 R1 R2

so for given capacitors R1 and R2 are the roots of x^2 - S x + P with
S = (1/a1 + 1/a2) / C2 and P = 1 / (a1 a2 C1 C2). R1 always takes the larger
root. With C1 == C2 == C the roots are exactly 1/(a1 C) and 1/(a2 C).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .amplitudes import AmplitudeProblem, estimate_amplitudes_ls
from .encoder import EncoderModel, predict_delays
from .errors import ConfigError, NumericError
from .kernels import TwoExpKernel
from .metrics import mean_db, nmse_db, nmse_db_batch
from .models import (
    FloatArray,
    FriSignal,
    GenerationRanges,
    PulseShape,
    Rectangle,
    SampleGrid,
    SampleVector,
)
from .sampler import forward_batch, forward_samples
from .signals import draw_batch

__all__ = [
    "DEFAULT_CAPACITANCE",
    "E12",
    "E24",
    "E96",
    "SERIES",
    "Series",
    "RcRealization",
    "RealizationReport",
    "BenchResult",
    "poles_to_rc",
    "rc_to_poles",
    "round_to_series",
    "realization_report",
    "simulate_bench",
]

log = logging.getLogger(__name__)

DEFAULT_CAPACITANCE = 1e-6

# preferred-number mantissas, in units of the last significant digit
E12 = (10, 12, 15, 18, 22, 27, 33, 39, 47, 56, 68, 82)
E24 = (
    10, 11, 12, 13, 15, 16, 18, 20, 22, 24, 27, 30,
    33, 36, 39, 43, 47, 51, 56, 62, 68, 75, 82, 91,
)  # fmt: skip
E96 = (
    100, 102, 105, 107, 110, 113, 115, 118, 121, 124, 127, 130,
    133, 137, 140, 143, 147, 150, 154, 158, 162, 165, 169, 174,
    178, 182, 187, 191, 196, 200, 205, 210, 215, 221, 226, 232,
    237, 243, 249, 255, 261, 267, 274, 280, 287, 294, 301, 309,
    316, 324, 332, 340, 348, 357, 365, 374, 383, 392, 402, 412,
    422, 432, 442, 453, 464, 475, 487, 499, 511, 523, 536, 549,
    562, 576, 590, 604, 619, 634, 649, 665, 681, 698, 715, 732,
    750, 768, 787, 806, 825, 845, 866, 887, 909, 931, 953, 976,
)  # fmt: skip

Series = Literal["E12", "E24", "E96"]
SERIES: dict[str, tuple[int, ...]] = {"E12": E12, "E24": E24, "E96": E96}


# ----------------------------------------------------------------------------
# Poles <-> components
# ----------------------------------------------------------------------------


def rc_to_poles(r1: float, r2: float, c1: float, c2: float) -> tuple[float, float]:
    """Poles (a1 < a2) of the circuit; complex poles raise NumericError."""
    if min(r1, r2, c1, c2) <= 0:
        raise ConfigError(f"components must be positive, got R=({r1}, {r2}) C=({c1}, {c2})")
    s = c2 * (r1 + r2)
    p = c1 * c2 * r1 * r2
    disc = s * s - 4.0 * p
    if disc < 0:
        raise NumericError(
            f"R=({r1:g}, {r2:g}) C=({c1:g}, {c2:g}) gives complex poles (underdamped); "
            "the two-exponential kernel needs two real poles"
        )
    tau_slow = 0.5 * (s + math.sqrt(disc))
    tau_fast = p / tau_slow
    return 1.0 / tau_slow, 1.0 / tau_fast


@dataclass(frozen=True)
class RcRealization:
    r1: float
    r2: float
    c1: float
    c2: float
    alpha1: float
    alpha2: float

    def __post_init__(self) -> None:
        if min(self.r1, self.r2, self.c1, self.c2) <= 0:
            raise ConfigError("all components must be positive")

    @classmethod
    def from_components(cls, r1: float, r2: float, c1: float, c2: float) -> RcRealization:
        a1, a2 = rc_to_poles(r1, r2, c1, c2)
        return cls(r1, r2, c1, c2, a1, a2)

    def drift(self, alpha1: float, alpha2: float) -> tuple[float, float]:
        """Relative deviation of the implied poles from (alpha1, alpha2)."""
        return (self.alpha1 - alpha1) / alpha1, (self.alpha2 - alpha2) / alpha2

    def kernel(self, horizon_factor: float | None = None) -> TwoExpKernel:
        """Two-pole kernel with the implied poles (bounds widened to contain them)."""
        kw: dict[str, Any] = {}
        if horizon_factor is not None:
            kw["horizon_factor"] = horizon_factor
        return TwoExpKernel(
            self.alpha1,
            self.alpha2,
            alpha_min=min(1.0, self.alpha1),
            alpha_max=max(100.0, self.alpha2),
            min_gap=0.0,
            **kw,
        )

    def to_dict(self) -> dict[str, float]:
        return {
            "R1": self.r1,
            "R2": self.r2,
            "C1": self.c1,
            "C2": self.c2,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
        }


def poles_to_rc(
    alpha1: float,
    alpha2: float,
    c1: float = DEFAULT_CAPACITANCE,
    c2: float = DEFAULT_CAPACITANCE,
) -> RcRealization:
    if not 0 < alpha1 < alpha2:
        raise ConfigError(f"need 0 < alpha1 < alpha2, got ({alpha1}, {alpha2})")
    if c1 <= 0 or c2 <= 0:
        raise ConfigError(f"capacitors must be positive, got ({c1}, {c2})")
    if c1 == c2:
        r1, r2 = 1.0 / (alpha1 * c1), 1.0 / (alpha2 * c1)
    else:
        S = (1.0 / alpha1 + 1.0 / alpha2) / c2
        P = 1.0 / (alpha1 * alpha2 * c1 * c2)
        disc = S * S - 4.0 * P
        if disc < 0:
            need = 4.0 * alpha1 * alpha2 / (alpha1 + alpha2) ** 2
            raise NumericError(
                f"no real resistor pair for C1/C2 = {c1 / c2:.4g}; "
                f"need C1/C2 >= {need:.4g} for poles ({alpha1}, {alpha2})"
            )
        r1 = 0.5 * (S + math.sqrt(disc))
        r2 = P / r1
    return RcRealization(r1, r2, c1, c2, alpha1, alpha2)


def round_to_series(value: float, series: Series | str = "E24") -> float:
    """Nearest preferred value on a log scale."""
    if not value > 0:
        raise ConfigError(f"value must be positive, got {value}")
    try:
        mantissas = SERIES[series]
    except KeyError as e:
        raise ConfigError(f"unknown series {series!r} (expected E12, E24 or E96)") from e
    digits = len(str(mantissas[0])) - 1
    decade = math.floor(math.log10(value))
    best, best_d = value, math.inf
    for k in (decade - 1, decade, decade + 1):
        scale = 10.0 ** (k - digits)
        for m in mantissas:
            # round away the float noise of m * 10^k
            cand = float(f"{m * scale:.12g}")
            d = abs(math.log(cand / value))
            if d < best_d:
                best, best_d = cand, d
    return best


# ----------------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------------


@dataclass
class RealizationReport:
    learned: tuple[float, float]
    realization: RcRealization
    drift: tuple[float, float]
    max_deviation: float
    l2_deviation: float
    encoder_nmse_db: float | None = None
    series: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "learned": {"alpha1": self.learned[0], "alpha2": self.learned[1]},
            "realization": self.realization.to_dict(),
            "drift": {"alpha1": self.drift[0], "alpha2": self.drift[1]},
            "impulse_response": {"max_abs": self.max_deviation, "l2": self.l2_deviation},
            "encoder_nmse_db": self.encoder_nmse_db,
            "series": self.series,
        }


def realization_report(
    learned: TwoExpKernel,
    realization: RcRealization,
    points: int = 4001,
    encoder: EncoderModel | None = None,
    grid: SampleGrid | None = None,
    pulse: PulseShape | None = None,
    ranges: GenerationRanges | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> RealizationReport:
    """
    Pole drift, impulse-response deviation over the learned kernel's horizon and,
    with an encoder and grid, the frozen encoder's NMSE on noiseless samples drawn
    through the realized kernel.
    """
    built = realization.kernel(learned.horizon_factor)
    horizon = max(learned.horizon, built.horizon)
    t = np.linspace(0.0, horizon, points)
    diff = learned.evaluate(t) - built.evaluate(t)
    dt = t[1] - t[0]
    report = RealizationReport(
        learned=(learned.alpha1, learned.alpha2),
        realization=realization,
        drift=realization.drift(learned.alpha1, learned.alpha2),
        max_deviation=float(np.max(np.abs(diff))),
        l2_deviation=float(math.sqrt(float(np.sum(diff * diff)) * dt)),
    )
    if encoder is not None and grid is not None:
        rng = np.random.default_rng(seed)
        rr = ranges or GenerationRanges.default(order=encoder.order)
        a, tau = draw_batch(rr, trials, rng)
        y = forward_batch(a, tau, pulse or Rectangle(0.002), built, grid)
        est = predict_delays(encoder, y)
        report.encoder_nmse_db = mean_db(nmse_db_batch(tau, est))
    return report


@dataclass(frozen=True, eq=False)
class BenchResult:
    capture_t: FloatArray
    capture_y: FloatArray
    samples: SampleVector
    delays: FloatArray
    amplitudes: FloatArray
    tau_hat: FloatArray
    a_hat: FloatArray
    nmse_db: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": [float(x) for x in self.delays],
            "a": [float(x) for x in self.amplitudes],
            "tau_hat": [float(x) for x in self.tau_hat],
            "a_hat": [float(x) for x in self.a_hat],
            "nmse_db": self.nmse_db,
            "samples": [float(v) for v in self.samples.values],
            "grid": self.samples.grid.to_dict(),
        }


def simulate_bench(
    realization: RcRealization,
    encoder: EncoderModel,
    grid: SampleGrid,
    delays: tuple[float, ...] = (0.2, 0.5),
    amplitudes: tuple[float, ...] = (1.0, 1.0),
    pulse_width: float = 0.002,
    capture_rate: float = 200.0,
) -> BenchResult:
    """
    Bench scenario: unit rectangles of `pulse_width` seconds at `delays` through the
    realized circuit. The encoder sees the exact circuit output at its own grid
    instants; a `capture_rate` Hz trace over the same window is kept for plotting.
    """
    if len(delays) != encoder.order:
        raise ConfigError(f"{len(delays)} bench pulses but the encoder predicts L={encoder.order}")
    if capture_rate <= 0:
        raise ConfigError(f"capture rate must be > 0, got {capture_rate}")
    kernel = realization.kernel()
    pulse = Rectangle(pulse_width)
    signal = FriSignal.from_arrays(amplitudes, delays)

    n_cap = int(math.floor((grid.t_end - grid.t_start) * capture_rate)) + 1
    capture = SampleGrid(n_cap, grid.t_start, 1.0 / capture_rate)
    capture_y = forward_samples(signal, pulse, kernel, capture).values

    samples = forward_samples(signal, pulse, kernel, grid)
    tau_hat = predict_delays(encoder, samples.values[None, :])[0]
    a_hat = estimate_amplitudes_ls(AmplitudeProblem(samples, tau_hat, kernel, pulse))
    score = nmse_db(signal.tau, tau_hat)
    log.info("bench: tau_hat=%s NMSE %.2f dB", np.round(tau_hat, 4).tolist(), score)
    return BenchResult(
        capture.instants, capture_y, samples, signal.tau, signal.a, tau_hat, a_hat, score
    )
