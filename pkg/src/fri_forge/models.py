from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, TypedDict

import numpy as np
import numpy.typing as npt

from .errors import ConfigError

FloatArray = npt.NDArray[np.float64]

# Sentinel for noiseless sample vectors.
CLEAN_SNR_DB = math.inf


@dataclass(frozen=True)
class KernelSupport:
    t_min: float
    t_max: float

    def __post_init__(self) -> None:
        if not self.t_min < self.t_max:
            raise ConfigError(
                f"kernel support needs t_min < t_max, got [{self.t_min}, {self.t_max}]"
            )

    @property
    def length(self) -> float:
        return self.t_max - self.t_min

    def contains(self, t: npt.ArrayLike) -> npt.NDArray[np.bool_]:
        tt = np.asarray(t, dtype=np.float64)
        return (tt >= self.t_min) & (tt <= self.t_max)

    def to_list(self) -> list[float]:
        return [self.t_min, self.t_max]


@dataclass(frozen=True)
class Dirac:
    def to_str(self) -> str:
        return "dirac"


@dataclass(frozen=True)
class Rectangle:
    """Unit-height pulse on [0, width]."""

    width: float

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ConfigError(f"rectangle width must be > 0, got {self.width}")

    def to_str(self) -> str:
        return f"rectangle:{self.width!r}"


PulseShape = Dirac | Rectangle


def parse_pulse(spec: str) -> PulseShape:
    """`dirac` or `rectangle:<width seconds>`."""
    s = spec.strip().lower()
    if s == "dirac":
        return Dirac()
    if s.startswith("rectangle:"):
        try:
            return Rectangle(float(s.split(":", 1)[1]))
        except ValueError as e:
            raise ConfigError(f"bad rectangle width in {spec!r}") from e
    raise ConfigError(f"unknown pulse shape {spec!r} (expected 'dirac' or 'rectangle:<w>')")


@dataclass(frozen=True)
class GenerationRanges:
    a_min: float
    a_max: float
    tau_min: float
    tau_max: float
    order: int
    min_separation: float | None = None

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ConfigError(f"model order L must be >= 1, got {self.order}")
        if self.a_min > self.a_max:
            raise ConfigError(f"a_min > a_max ({self.a_min} > {self.a_max})")
        if self.tau_min > self.tau_max:
            raise ConfigError(f"tau_min > tau_max ({self.tau_min} > {self.tau_max})")
        # a degenerate delay interval can only hold a single pulse
        if self.tau_min == self.tau_max and self.order > 1:
            raise ConfigError("tau_min == tau_max leaves no room for L > 1 ordered delays")
        if self.min_separation is not None:
            if self.min_separation <= 0:
                raise ConfigError(f"min_separation must be > 0, got {self.min_separation}")
            if self.min_separation * (self.order - 1) > self.tau_max - self.tau_min:
                raise ConfigError(
                    f"min_separation {self.min_separation} x (L-1) exceeds the delay range "
                    f"[{self.tau_min}, {self.tau_max}]"
                )

    @classmethod
    def default(cls, order: int = 2, min_separation: float | None = None) -> GenerationRanges:
        return cls(0.5, 10.0, -0.48, 0.52, order, min_separation)

    def to_dict(self) -> dict[str, Any]:
        return {
            "a_min": self.a_min,
            "a_max": self.a_max,
            "tau_min": self.tau_min,
            "tau_max": self.tau_max,
            "L": self.order,
            "min_separation": self.min_separation,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GenerationRanges:
        try:
            return cls(
                a_min=float(d["a_min"]),
                a_max=float(d["a_max"]),
                tau_min=float(d["tau_min"]),
                tau_max=float(d["tau_max"]),
                order=int(d.get("L", d.get("order", 2))),
                min_separation=(
                    None if d.get("min_separation") is None else float(d["min_separation"])
                ),
            )
        except KeyError as e:
            raise ConfigError(f"generation ranges missing field {e.args[0]!r}") from e


@dataclass(frozen=True)
class FriSignal:
    amplitudes: tuple[float, ...]
    delays: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.amplitudes) != len(self.delays):
            raise ConfigError(
                f"{len(self.amplitudes)} amplitudes but {len(self.delays)} delays"
            )
        if not self.delays:
            raise ConfigError("a signal needs at least one pulse")
        if any(b <= a for a, b in zip(self.delays, self.delays[1:], strict=False)):
            raise ConfigError(f"delays must be strictly increasing, got {list(self.delays)}")

    @classmethod
    def from_arrays(cls, amplitudes: npt.ArrayLike, delays: npt.ArrayLike) -> FriSignal:
        a = np.asarray(amplitudes, dtype=np.float64).ravel()
        tau = np.asarray(delays, dtype=np.float64).ravel()
        order = np.argsort(tau, kind="stable")
        return cls(tuple(float(x) for x in a[order]), tuple(float(x) for x in tau[order]))

    @property
    def order(self) -> int:
        return len(self.delays)

    @property
    def a(self) -> FloatArray:
        return np.asarray(self.amplitudes, dtype=np.float64)

    @property
    def tau(self) -> FloatArray:
        return np.asarray(self.delays, dtype=np.float64)

    def to_record(self) -> dict[str, list[float]]:
        return {"a": list(self.amplitudes), "tau": list(self.delays)}

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> FriSignal:
        return cls.from_arrays(rec["a"], rec["tau"])


@dataclass(frozen=True)
class SampleGrid:
    n: int
    t_start: float
    period: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"grid needs N >= 1 samples, got {self.n}")
        if not self.period > 0:
            raise ConfigError(f"sampling period must be > 0, got {self.period}")

    @property
    def instants(self) -> FloatArray:
        return self.t_start + self.period * np.arange(self.n, dtype=np.float64)

    @property
    def t_end(self) -> float:
        return self.t_start + self.period * (self.n - 1)

    def to_dict(self) -> dict[str, float | int]:
        return {"N": self.n, "t_start": self.t_start, "T_s": self.period}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SampleGrid:
        return cls(int(d["N"]), float(d["t_start"]), float(d["T_s"]))


@dataclass(frozen=True, eq=False)
class SampleVector:
    values: FloatArray
    grid: SampleGrid
    snr_db: float = CLEAN_SNR_DB

    def __post_init__(self) -> None:
        if self.values.shape != (self.grid.n,):
            raise ConfigError(
                f"sample vector shape {self.values.shape} does not match grid N={self.grid.n}"
            )

    @property
    def is_clean(self) -> bool:
        return math.isinf(self.snr_db)


class ExampleRecord(TypedDict, total=False):
    # labeled example
    y: list[float]
    tau: list[float]
    a: list[float]
    snr_db: float | None
    grid: dict[str, float | int]

    # filled in by estimators
    tau_hat: list[float]
    a_hat: list[float]
    residual: float


def example_record(samples: SampleVector, signal: FriSignal) -> ExampleRecord:
    # JSON has no infinity; clean examples record null
    snr: float | None = None if samples.is_clean else float(samples.snr_db)
    return ExampleRecord(
        y=[float(v) for v in samples.values],
        tau=list(signal.delays),
        a=list(signal.amplitudes),
        snr_db=snr,
        grid=samples.grid.to_dict(),
    )


def record_samples(rec: dict[str, Any]) -> SampleVector:
    grid = SampleGrid.from_dict(rec["grid"])
    snr = rec.get("snr_db")
    return SampleVector(
        np.asarray(rec["y"], dtype=np.float64),
        grid,
        CLEAN_SNR_DB if snr is None else float(snr),
    )

