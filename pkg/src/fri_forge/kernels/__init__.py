"""
fri_forge.kernels

Sampling kernels g_theta(t) and a JSON codec for them.

Module-level functions mirror the kernel methods so callers can write
`evaluate(kernel, t)` in the same style as the rest of the pipeline.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from ..errors import ConfigError
from ..models import FloatArray, KernelSupport, PulseShape
from .base import Kernel, LearnableKernel
from .bspline import DEFAULT_HALF_WIDTH, DEFAULT_K, BSplineKernel, hat
from .gaussian import DEFAULT_SIGMA, DEFAULT_SUPPORT, GaussianPairKernel, TruncatedGaussianKernel
from .twoexp import HORIZON_FACTOR, TwoExpKernel, peak_time_from_poles

__all__ = [
    "Kernel",
    "LearnableKernel",
    "TruncatedGaussianKernel",
    "GaussianPairKernel",
    "BSplineKernel",
    "TwoExpKernel",
    "DEFAULT_SIGMA",
    "DEFAULT_SUPPORT",
    "DEFAULT_K",
    "DEFAULT_HALF_WIDTH",
    "HORIZON_FACTOR",
    "hat",
    "evaluate",
    "pulse_response",
    "param_gradient",
    "peak_time",
    "peak_time_from_poles",
    "kernel_from_dict",
    "load_kernel",
    "dump_kernel_points",
]


def evaluate(kernel: Kernel, t: npt.ArrayLike) -> FloatArray:
    return kernel.evaluate(t)


def pulse_response(kernel: Kernel, pulse: PulseShape, t: npt.ArrayLike) -> FloatArray:
    return kernel.pulse_response(pulse, t)


def param_gradient(kernel: Kernel, t: npt.ArrayLike) -> FloatArray:
    return kernel.param_gradient(t)


def peak_time(kernel: TwoExpKernel) -> float:
    return kernel.peak_time()


def _support(d: dict[str, Any], default: KernelSupport) -> KernelSupport:
    s = d.get("support")
    if s is None:
        return default
    if not isinstance(s, (list, tuple)) or len(s) != 2:
        raise ConfigError(f"support must be [t_min, t_max], got {s!r}")
    return KernelSupport(float(s[0]), float(s[1]))


def kernel_from_dict(d: dict[str, Any]) -> Kernel:
    """Inverse of `Kernel.to_dict()`: {"type": ..., "params": {...}, "support": [a, b]}."""
    kind = d.get("type")
    p: dict[str, Any] = dict(d.get("params") or {})
    try:
        if kind == TruncatedGaussianKernel.kind:
            return TruncatedGaussianKernel(
                float(p.get("sigma", DEFAULT_SIGMA)), _support(d, DEFAULT_SUPPORT)
            )
        if kind == GaussianPairKernel.kind:
            return GaussianPairKernel(
                gain_a=float(p.get("A", 1.4)),
                gain_b=float(p.get("B", 1.4)),
                center_1=float(p.get("t1", -0.2)),
                center_2=float(p.get("t2", 0.2)),
                sigma=float(p.get("sigma", DEFAULT_SIGMA)),
                window=_support(d, DEFAULT_SUPPORT),
            )
        if kind == BSplineKernel.kind:
            K = int(p.get("K", DEFAULT_K))
            sup = _support(d, KernelSupport(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH))
            half = 0.5 * sup.length
            coeffs = p.get("coefficients")
            if coeffs is not None:
                return BSplineKernel.from_coefficients(coeffs, half)
            init = str(p.get("init", "gaussian"))
            if init == "gaussian":
                return BSplineKernel.from_gaussian(float(p.get("sigma", DEFAULT_SIGMA)), K, half)
            if init == "smooth":
                rng = np.random.default_rng(int(p.get("seed", 0)))
                return BSplineKernel.smooth_init(rng, K, half)
            raise ConfigError(f"unknown bspline init {init!r} (expected 'gaussian' or 'smooth')")
        if kind == TwoExpKernel.kind:
            return TwoExpKernel(
                alpha1=float(p["alpha1"]),
                alpha2=float(p["alpha2"]),
                alpha_min=float(p.get("alpha_min", 1.0)),
                alpha_max=float(p.get("alpha_max", 100.0)),
                min_gap=float(p.get("min_gap", 1e-2)),
                horizon_factor=float(p.get("horizon_factor", HORIZON_FACTOR)),
            )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad {kind} kernel config: {e}") from e
    raise ConfigError(f"unknown kernel type {kind!r}")


def load_kernel(path: Path) -> Kernel:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read kernel config {path}: {e}") from e
    return kernel_from_dict(data)


def dump_kernel_points(kernel: Kernel, points: int) -> list[dict[str, float]]:
    """`points` evenly spaced (t, g(t)) rows across the kernel support."""
    if points < 2:
        raise ConfigError(f"need at least 2 points, got {points}")
    sup = kernel.support
    t = np.linspace(sup.t_min, sup.t_max, points)
    g = kernel.evaluate(t)
    return [{"t": float(a), "g": float(b)} for a, b in zip(t, g, strict=True)]
