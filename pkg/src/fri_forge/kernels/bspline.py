"""
Piecewise-linear kernel: a weighted sum of first-order B-splines (hat functions)
on knots k*T, k = -K..K, truncated to [-K*T, K*T].

Coefficient array index i corresponds to knot k = i - K. The kernel is linear in
its coefficients, so every gradient is a fixed basis evaluation; the trainer only
ever needs contractions of those gradients, which are done with sparse
accumulation instead of dense M x (2K+1) matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
import numpy.typing as npt

from ..errors import ConfigError
from ..models import Dirac, FloatArray, KernelSupport, PulseShape, Rectangle
from .base import LearnableKernel

__all__ = ["DEFAULT_HALF_WIDTH", "DEFAULT_K", "BSplineKernel", "hat"]

DEFAULT_K = 52
DEFAULT_HALF_WIDTH = 0.3


def hat(u: npt.ArrayLike) -> FloatArray:
    """First-order B-spline: 1 - |u| on [-1, 1], zero elsewhere."""
    uu = np.asarray(u, dtype=np.float64)
    return np.maximum(0.0, 1.0 - np.abs(uu))


@dataclass(frozen=True)
class BSplineKernel(LearnableKernel):
    coefficients: tuple[float, ...]
    spacing: float

    kind: ClassVar[str] = "bspline"

    def __post_init__(self) -> None:
        n = len(self.coefficients)
        if n < 3 or n % 2 == 0:
            raise ConfigError(f"need an odd number (>= 3) of coefficients, got {n}")
        if not self.spacing > 0:
            raise ConfigError(f"knot spacing must be > 0, got {self.spacing}")

    # ------------------------------------------------------------------ #
    # Construction
    # ------------------------------------------------------------------ #

    @classmethod
    def from_coefficients(
        cls, coefficients: npt.ArrayLike, half_width: float = DEFAULT_HALF_WIDTH
    ) -> BSplineKernel:
        c = np.asarray(coefficients, dtype=np.float64).ravel()
        K = (c.size - 1) // 2
        if K < 1:
            raise ConfigError("need at least 3 coefficients")
        return cls(tuple(float(x) for x in c), half_width / K)

    @classmethod
    def from_gaussian(
        cls,
        sigma: float,
        K: int = DEFAULT_K,
        half_width: float = DEFAULT_HALF_WIDTH,
    ) -> BSplineKernel:
        """Coefficients sampled from exp(-t^2 / 2 sigma^2) at the knots."""
        T = half_width / K
        knots = T * np.arange(-K, K + 1)
        return cls(tuple(float(x) for x in np.exp(-(knots**2) / (2.0 * sigma**2))), T)

    @classmethod
    def smooth_init(
        cls,
        rng: np.random.Generator,
        K: int = DEFAULT_K,
        half_width: float = DEFAULT_HALF_WIDTH,
        level: float = 0.1,
        jitter: float = 0.02,
        smoothing: int = 9,
    ) -> BSplineKernel:
        """Small positive constant plus a low-amplitude, moving-average-smoothed perturbation."""
        P = 2 * K + 1
        noise = rng.standard_normal(P + smoothing - 1)
        box = np.ones(smoothing) / smoothing
        smooth = np.convolve(noise, box, mode="valid")
        smooth /= max(float(np.max(np.abs(smooth))), 1e-12)
        return cls(tuple(float(x) for x in level + jitter * smooth), half_width / K)

    # ------------------------------------------------------------------ #
    # Geometry
    # ------------------------------------------------------------------ #

    @property
    def half_knots(self) -> int:
        return (len(self.coefficients) - 1) // 2

    @property
    def support(self) -> KernelSupport:
        h = self.half_knots * self.spacing
        return KernelSupport(-h, h)

    @property
    def param_names(self) -> tuple[str, ...]:
        K = self.half_knots
        return tuple(f"c[{k}]" for k in range(-K, K + 1))

    def _coef(self) -> FloatArray:
        return np.asarray(self.coefficients, dtype=np.float64)

    def _locate(self, t: FloatArray) -> tuple[npt.NDArray[np.intp], FloatArray]:
        """Segment index j (left knot, array index) and fraction f in [0, 1] of clipped t."""
        K = self.half_knots
        h = K * self.spacing
        s = (np.clip(t, -h, h) + h) / self.spacing
        j = np.clip(np.floor(s).astype(np.intp), 0, 2 * K - 1)
        return j, s - j

    # ------------------------------------------------------------------ #
    # Values
    # ------------------------------------------------------------------ #

    def evaluate(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        c = self._coef()
        j, f = self._locate(tt)
        val = c[j] * (1.0 - f) + c[j + 1] * f
        return np.where(self.support.contains(tt), val, 0.0)

    def _cumulative(self) -> FloatArray:
        """Integral from the support start to each knot."""
        c = self._coef()
        seg = 0.5 * self.spacing * (c[:-1] + c[1:])
        return np.concatenate(([0.0], np.cumsum(seg)))

    def step_response(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        c = self._coef()
        j, f = self._locate(tt)
        cum = self._cumulative()
        T = self.spacing
        return cum[j] + T * (c[j] * f + 0.5 * (c[j + 1] - c[j]) * f**2)

    # ------------------------------------------------------------------ #
    # Gradients (the kernel is linear in c)
    # ------------------------------------------------------------------ #

    def param_gradient(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        P = len(self.coefficients)
        j, f = self._locate(tt)
        inside = self.support.contains(tt)
        out = np.zeros(tt.shape + (P,))
        flat = out.reshape(-1, P)
        rows = np.arange(flat.shape[0])
        flat[rows, j.ravel()] += np.where(inside, 1.0 - f, 0.0).ravel()
        flat[rows, j.ravel() + 1] += np.where(inside, f, 0.0).ravel()
        return out

    def step_gradient(self, t: npt.ArrayLike) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        P = len(self.coefficients)
        T = self.spacing
        j, f = self._locate(tt)
        m = np.arange(P)
        jj = j[..., None]
        # knot-integral part: T/2 ([m < j] + [1 <= m <= j])
        out = 0.5 * T * ((m < jj).astype(np.float64) + ((m >= 1) & (m <= jj)).astype(np.float64))
        flat = out.reshape(-1, P)
        rows = np.arange(flat.shape[0])
        ff = f.ravel()
        flat[rows, j.ravel()] += T * (ff - 0.5 * ff**2)
        flat[rows, j.ravel() + 1] += 0.5 * T * ff**2
        return out

    def _dirac_vjp(self, t: FloatArray, w: FloatArray) -> FloatArray:
        P = len(self.coefficients)
        j, f = self._locate(t)
        w = np.where(self.support.contains(t), w, 0.0)
        jr, fr, wr = j.ravel(), f.ravel(), w.ravel()
        return np.bincount(jr, wr * (1.0 - fr), minlength=P) + np.bincount(
            jr + 1, wr * fr, minlength=P
        )

    def _step_vjp(self, t: FloatArray, w: FloatArray) -> FloatArray:
        P = len(self.coefficients)
        T = self.spacing
        j, f = self._locate(t)
        jr, fr, wr = j.ravel(), f.ravel(), w.ravel()
        grad = np.bincount(jr, wr * T * (fr - 0.5 * fr**2), minlength=P)
        grad += np.bincount(jr + 1, wr * 0.5 * T * fr**2, minlength=P)
        W = np.bincount(jr, wr, minlength=P)
        ge = np.cumsum(W[::-1])[::-1]  # sum_{j >= m}
        gt = ge - W  # sum_{j > m}
        grad += 0.5 * T * gt
        grad[1:] += 0.5 * T * ge[1:]
        return np.asarray(grad, dtype=np.float64)

    def pulse_vjp(
        self, pulse: PulseShape, t: npt.ArrayLike, cotangent: npt.ArrayLike
    ) -> FloatArray:
        tt = np.asarray(t, dtype=np.float64)
        w = np.broadcast_to(np.asarray(cotangent, dtype=np.float64), tt.shape)
        if isinstance(pulse, Dirac):
            return self._dirac_vjp(tt, w)
        if isinstance(pulse, Rectangle):
            return self._step_vjp(tt, w) - self._step_vjp(tt - pulse.width, w)
        raise ConfigError(f"unsupported pulse shape {pulse!r}")

    # ------------------------------------------------------------------ #
    # Learnable interface
    # ------------------------------------------------------------------ #

    def params(self) -> FloatArray:
        return self._coef()

    def raw_params(self) -> FloatArray:
        return self._coef()

    def with_raw_params(self, raw: npt.ArrayLike) -> BSplineKernel:
        c = np.asarray(raw, dtype=np.float64).ravel()
        if c.size != len(self.coefficients):
            raise ConfigError(f"expected {len(self.coefficients)} coefficients, got {c.size}")
        return BSplineKernel(tuple(float(x) for x in c), self.spacing)

    def raw_jacobian(self) -> FloatArray:
        return np.eye(len(self.coefficients))

    def pulse_vjp_raw(
        self, pulse: PulseShape, t: npt.ArrayLike, cotangent: npt.ArrayLike
    ) -> FloatArray:
        return self.pulse_vjp(pulse, t, cotangent)

    def params_dict(self) -> dict[str, Any]:
        return {
            "K": self.half_knots,
            "T": self.spacing,
            "coefficients": list(self.coefficients),
        }

    def __repr__(self) -> str:
        c = self._coef()
        return (
            f"BSplineKernel(K={self.half_knots}, T={self.spacing:.6g}, "
            f"|c|_2={math.sqrt(float(c @ c)):.4g})"
        )
