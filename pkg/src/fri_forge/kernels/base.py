from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, ClassVar

import numpy as np
import numpy.typing as npt

from ..errors import ConfigError
from ..models import Dirac, FloatArray, KernelSupport, PulseShape, Rectangle

__all__ = ["Kernel", "LearnableKernel"]


def _as_array(t: npt.ArrayLike) -> FloatArray:
    return np.asarray(t, dtype=np.float64)


class Kernel(ABC):
    """
    Continuous-time sampling kernel g(t) with compact support.

    All methods are vectorized over `t`; gradients append a trailing parameter axis.
    Subclasses are frozen dataclasses, so a kernel is an immutable value object.
    """

    kind: ClassVar[str] = "kernel"

    @property
    @abstractmethod
    def support(self) -> KernelSupport: ...

    @property
    def param_names(self) -> tuple[str, ...]:
        return ()

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def learnable(self) -> bool:
        return False

    @abstractmethod
    def evaluate(self, t: npt.ArrayLike) -> FloatArray:
        """g(t); exactly zero outside the support."""

    @abstractmethod
    def step_response(self, t: npt.ArrayLike) -> FloatArray:
        """Integral of g from the support start up to t (constant past the support end)."""

    def param_gradient(self, t: npt.ArrayLike) -> FloatArray:
        tt = _as_array(t)
        return np.zeros(tt.shape + (0,))

    def step_gradient(self, t: npt.ArrayLike) -> FloatArray:
        tt = _as_array(t)
        return np.zeros(tt.shape + (0,))

    # ------------------------------------------------------------------ #
    # Pulse responses
    # ------------------------------------------------------------------ #

    def pulse_response(self, pulse: PulseShape, t: npt.ArrayLike) -> FloatArray:
        """(h * g)(t) for a unit pulse h placed at the origin."""
        tt = _as_array(t)
        if isinstance(pulse, Dirac):
            return self.evaluate(tt)
        if isinstance(pulse, Rectangle):
            return self.step_response(tt) - self.step_response(tt - pulse.width)
        raise ConfigError(f"unsupported pulse shape {pulse!r}")

    def pulse_gradient(self, pulse: PulseShape, t: npt.ArrayLike) -> FloatArray:
        tt = _as_array(t)
        if isinstance(pulse, Dirac):
            return self.param_gradient(tt)
        if isinstance(pulse, Rectangle):
            return self.step_gradient(tt) - self.step_gradient(tt - pulse.width)
        raise ConfigError(f"unsupported pulse shape {pulse!r}")

    def pulse_vjp(
        self, pulse: PulseShape, t: npt.ArrayLike, cotangent: npt.ArrayLike
    ) -> FloatArray:
        """sum_i cotangent[i] * d(pulse_response(t[i]))/d(theta), shape (P,)."""
        g = self.pulse_gradient(pulse, t)
        w = _as_array(cotangent)
        return np.asarray(np.tensordot(w, g, axes=w.ndim), dtype=np.float64)

    # ------------------------------------------------------------------ #
    # Serialization
    # ------------------------------------------------------------------ #

    @abstractmethod
    def params_dict(self) -> dict[str, Any]: ...

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.kind, "params": self.params_dict(), "support": self.support.to_list()}


class LearnableKernel(Kernel):
    """
    Kernel whose parameters theta are moved by the trainer through an
    unconstrained coordinate vector p (theta = theta(p)).
    """

    @property
    def learnable(self) -> bool:
        return True

    @abstractmethod
    def params(self) -> FloatArray:
        """Current theta."""

    @abstractmethod
    def raw_params(self) -> FloatArray:
        """Unconstrained coordinates p."""

    @abstractmethod
    def with_raw_params(self, raw: npt.ArrayLike) -> LearnableKernel:
        """New kernel with theta = theta(raw)."""

    @abstractmethod
    def raw_jacobian(self) -> FloatArray:
        """d theta / d p as a P x P matrix."""

    def pulse_vjp_raw(
        self, pulse: PulseShape, t: npt.ArrayLike, cotangent: npt.ArrayLike
    ) -> FloatArray:
        """Vector-Jacobian product with respect to the raw coordinates."""
        return self.pulse_vjp(pulse, t, cotangent) @ self.raw_jacobian()
