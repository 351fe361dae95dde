"""
Fixed Gaussian kernels: a single truncated Gaussian and a pair of truncated
Gaussians. Neither is learnable here; their rectangle responses use the error
function in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np
import numpy.typing as npt
from scipy.special import erf

from ..errors import ConfigError
from ..models import FloatArray, KernelSupport
from .base import Kernel

__all__ = [
    "DEFAULT_SUPPORT",
    "DEFAULT_SIGMA",
    "TruncatedGaussianKernel",
    "GaussianPairKernel",
]

DEFAULT_SUPPORT = KernelSupport(-0.3, 0.3)
DEFAULT_SIGMA = 0.038  # about T_s / 2 at N = 21


def _gauss_integral(lo: FloatArray, hi: FloatArray, center: float, sigma: float) -> FloatArray:
    """Integral of exp(-(s-center)^2 / (2 sigma^2)) over [lo, hi] (zero when hi <= lo)."""
    scale = sigma * math.sqrt(2.0)
    val = (
        sigma * math.sqrt(math.pi / 2.0) * (erf((hi - center) / scale) - erf((lo - center) / scale))
    )
    return np.where(hi > lo, val, 0.0)


@dataclass(frozen=True)
class TruncatedGaussianKernel(Kernel):
    sigma: float = DEFAULT_SIGMA
    window: KernelSupport = field(default=DEFAULT_SUPPORT)

    kind: ClassVar[str] = "truncated_gaussian"

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")

    @property
    def support(self) -> KernelSupport:
        return self.window

    def evaluate(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        g = np.exp(-(tt**2) / (2.0 * self.sigma**2))
        return np.where(self.window.contains(tt), g, 0.0)

    def step_response(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        lo = np.full_like(tt, self.window.t_min)
        hi = np.clip(tt, self.window.t_min, self.window.t_max)
        return _gauss_integral(lo, hi, 0.0, self.sigma)

    def params_dict(self) -> dict[str, Any]:
        return {"sigma": self.sigma}


@dataclass(frozen=True)
class GaussianPairKernel(Kernel):
    gain_a: float = 1.4
    gain_b: float = 1.4
    center_1: float = -0.2
    center_2: float = 0.2
    sigma: float = DEFAULT_SIGMA
    window: KernelSupport = field(default=DEFAULT_SUPPORT)

    kind: ClassVar[str] = "gaussian_pair"

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        for c in (self.center_1, self.center_2):
            if not self.window.t_min < c < self.window.t_max:
                raise ConfigError(
                    f"lobe center {c} outside the open support "
                    f"({self.window.t_min}, {self.window.t_max})"
                )

    @property
    def support(self) -> KernelSupport:
        return self.window

    def evaluate(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        two_var = 2.0 * self.sigma**2
        g = self.gain_a * np.exp(-((tt - self.center_1) ** 2) / two_var) + self.gain_b * np.exp(
            -((tt - self.center_2) ** 2) / two_var
        )
        return np.where(self.window.contains(tt), g, 0.0)

    def step_response(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        lo = np.full_like(tt, self.window.t_min)
        hi = np.clip(tt, self.window.t_min, self.window.t_max)
        return self.gain_a * _gauss_integral(
            lo, hi, self.center_1, self.sigma
        ) + self.gain_b * _gauss_integral(lo, hi, self.center_2, self.sigma)

    def params_dict(self) -> dict[str, Any]:
        return {
            "A": self.gain_a,
            "B": self.gain_b,
            "t1": self.center_1,
            "t2": self.center_2,
            "sigma": self.sigma,
        }
