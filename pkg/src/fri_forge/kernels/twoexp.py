"""
Two-pole kernel h(t) = A0 (exp(-a1 t) - exp(-a2 t)) u(t), A0 = a1 a2 / (a2 - a1).

A0 makes the DC gain exactly one. The response is truncated at
t_horizon = horizon_factor / a1 (tail mass below 1e-8 for the default factor 20)
so every sampler works on a compact window.

Pole constraints a_min <= a1 < a2 <= a_max with a2 - a1 >= min_gap are enforced
by a logistic reparameterization:

    a1 = a_min + (a_max - a_min - gap) * s(p1)
    a2 = a1 + gap + (a_max - a1 - gap) * s(p2)

which keeps every point reachable by the optimizer feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
import numpy.typing as npt
from scipy.special import expit, logit

from ..errors import ConfigError
from ..models import FloatArray, KernelSupport
from .base import LearnableKernel

__all__ = [
    "DEFAULT_ALPHA_MIN",
    "DEFAULT_ALPHA_MAX",
    "DEFAULT_MIN_GAP",
    "HORIZON_FACTOR",
    "TwoExpKernel",
    "peak_time_from_poles",
]

DEFAULT_ALPHA_MIN = 1.0
DEFAULT_ALPHA_MAX = 100.0
DEFAULT_MIN_GAP = 1e-2
HORIZON_FACTOR = 20.0


def peak_time_from_poles(alpha1: float, alpha2: float) -> float:
    """argmax of the two-pole impulse response: ln(a2/a1) / (a2 - a1)."""
    if not 0 < alpha1 < alpha2:
        raise ConfigError(f"need 0 < alpha1 < alpha2, got ({alpha1}, {alpha2})")
    d = alpha2 - alpha1
    return math.log1p(d / alpha1) / d


@dataclass(frozen=True)
class TwoExpKernel(LearnableKernel):
    alpha1: float
    alpha2: float
    alpha_min: float = DEFAULT_ALPHA_MIN
    alpha_max: float = DEFAULT_ALPHA_MAX
    min_gap: float = DEFAULT_MIN_GAP
    horizon_factor: float = HORIZON_FACTOR

    kind: ClassVar[str] = "two_exp"

    def __post_init__(self) -> None:
        if not 0 < self.alpha_min < self.alpha_max:
            raise ConfigError(
                f"pole bounds need 0 < alpha_min < alpha_max, got ({self.alpha_min}, "
                f"{self.alpha_max})"
            )
        if self.min_gap < 0:
            raise ConfigError(f"min_gap must be >= 0, got {self.min_gap}")
        if not self.alpha_min <= self.alpha1 < self.alpha2 <= self.alpha_max:
            raise ConfigError(
                f"poles must satisfy {self.alpha_min} <= alpha1 < alpha2 <= {self.alpha_max}, "
                f"got ({self.alpha1}, {self.alpha2})"
            )
        # relative slack absorbs the rounding of a1 + gap in with_raw_params
        if self.alpha2 - self.alpha1 < self.min_gap - 1e-12 * self.alpha_max:
            raise ConfigError(
                f"pole gap {self.alpha2 - self.alpha1:.3g} below the minimum {self.min_gap}"
            )

    # ------------------------------------------------------------------ #
    # Derived quantities
    # ------------------------------------------------------------------ #

    @property
    def gain(self) -> float:
        """A0 = a1 a2 / (a2 - a1); derived, never stored."""
        return self.alpha1 * self.alpha2 / (self.alpha2 - self.alpha1)

    @property
    def horizon(self) -> float:
        return self.horizon_factor / self.alpha1

    @property
    def support(self) -> KernelSupport:
        return KernelSupport(0.0, self.horizon)

    @property
    def param_names(self) -> tuple[str, ...]:
        return ("alpha1", "alpha2")

    def peak_time(self) -> float:
        return peak_time_from_poles(self.alpha1, self.alpha2)

    # ------------------------------------------------------------------ #
    # Values
    # ------------------------------------------------------------------ #

    def _exps(self, t: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
        """e1 = exp(-a1 t), e2 = exp(-a2 t), and e1 - e2 computed without cancellation."""
        d = self.alpha2 - self.alpha1
        e1 = np.exp(-self.alpha1 * t)
        e2 = np.exp(-self.alpha2 * t)
        diff = -e1 * np.expm1(-d * t)
        return e1, e2, diff

    def evaluate(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        inside = self.support.contains(tt)
        tc = np.clip(tt, 0.0, self.horizon)
        _, _, diff = self._exps(tc)
        return np.where(inside, self.gain * diff, 0.0)

    def step_response(self, t: npt.ArrayLike) -> FloatArray:
        # H(t) = 1 - e1 (1 - a1 expm1(-d t) / d)
        tt = np.asarray(t, dtype=np.float64)
        tc = np.clip(tt, 0.0, self.horizon)
        d = self.alpha2 - self.alpha1
        e1 = np.exp(-self.alpha1 * tc)
        return 1.0 - e1 * (1.0 - self.alpha1 * np.expm1(-d * tc) / d)

    # ------------------------------------------------------------------ #
    # Gradients with respect to (alpha1, alpha2)
    # ------------------------------------------------------------------ #

    def param_gradient(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        inside = self.support.contains(tt)
        tc = np.clip(tt, 0.0, self.horizon)
        a1, a2 = self.alpha1, self.alpha2
        d = a2 - a1
        e1, e2, diff = self._exps(tc)
        A0 = self.gain
        # dA0/da1 = a2^2 / d^2, dA0/da2 = -a1^2 / d^2
        g1 = (a2**2 / d**2) * diff - A0 * tc * e1
        g2 = -(a1**2 / d**2) * diff + A0 * tc * e2
        out = np.stack([g1, g2], axis=-1)
        return np.where(inside[..., None], out, 0.0)

    def step_gradient(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        tc = np.clip(tt, 0.0, self.horizon)
        a1, a2 = self.alpha1, self.alpha2
        d = a2 - a1
        e1 = np.exp(-a1 * tc)
        e2 = np.exp(-a2 * tc)
        num = a2 * e1 - a1 * e2
        g1 = -((-a2 * tc * e1 - e2) * d + num) / d**2
        g2 = -((e1 + a1 * tc * e2) * d - num) / d**2
        return np.stack([g1, g2], axis=-1)

    # ------------------------------------------------------------------ #
    # Learnable interface
    # ------------------------------------------------------------------ #

    def params(self) -> FloatArray:
        return np.array([self.alpha1, self.alpha2])

    def _span1(self) -> float:
        return self.alpha_max - self.alpha_min - self.min_gap

    def raw_params(self) -> FloatArray:
        s1 = (self.alpha1 - self.alpha_min) / self._span1()
        s2 = (self.alpha2 - self.alpha1 - self.min_gap) / (
            self.alpha_max - self.alpha1 - self.min_gap
        )
        return np.array([logit(s1), logit(s2)], dtype=np.float64)

    def with_raw_params(self, raw: npt.ArrayLike) -> TwoExpKernel:
        p = np.asarray(raw, dtype=np.float64).ravel()
        if p.size != 2:
            raise ConfigError(f"expected 2 raw pole coordinates, got {p.size}")
        s1, s2 = float(expit(p[0])), float(expit(p[1]))
        a1 = self.alpha_min + self._span1() * s1
        a2 = a1 + self.min_gap + (self.alpha_max - a1 - self.min_gap) * s2
        # guard the strict a1 < a2 against s2 rounding to 0 when min_gap == 0
        a2 = min(max(a2, math.nextafter(a1, math.inf)), self.alpha_max)
        return TwoExpKernel(
            a1, a2, self.alpha_min, self.alpha_max, self.min_gap, self.horizon_factor
        )

    def raw_jacobian(self) -> FloatArray:
        p = self.raw_params()
        s1, s2 = float(expit(p[0])), float(expit(p[1]))
        da1_dp1 = self._span1() * s1 * (1.0 - s1)
        da2_dp1 = da1_dp1 * (1.0 - s2)
        da2_dp2 = (self.alpha_max - self.alpha1 - self.min_gap) * s2 * (1.0 - s2)
        return np.array([[da1_dp1, 0.0], [da2_dp1, da2_dp2]])

    def params_dict(self) -> dict[str, Any]:
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
            "min_gap": self.min_gap,
            "horizon_factor": self.horizon_factor,
        }
