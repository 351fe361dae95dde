"""
Amplitude recovery for known (estimated) delays.

The samples are linear in the amplitudes, y = G a with
G[n, l] = pulse_response(t_n - tau_l), so least squares is exact; the
gradient-descent variant minimizes the same mean-squared error from a
standard-normal start and is kept as a cross-check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import ConfigError, NumericError
from .kernels import Kernel
from .models import FloatArray, PulseShape, SampleGrid, SampleVector

__all__ = [
    "RIDGE",
    "DIVERGENCE_PATIENCE",
    "AmplitudeProblem",
    "design_matrix",
    "estimate_amplitudes_ls",
    "estimate_amplitudes_gd",
]

log = logging.getLogger(__name__)

RIDGE = 1e-10
DIVERGENCE_PATIENCE = 10
# relative singular-value floor below which G is treated as rank deficient
_RANK_TOL = 1e-9


def design_matrix(
    kernel: Kernel, pulse: PulseShape, grid: SampleGrid, delays: npt.ArrayLike
) -> FloatArray:
    """N x L matrix of pulse responses at t_n - tau_l."""
    tau = np.asarray(delays, dtype=np.float64).ravel()
    t = grid.instants[:, None] - tau[None, :]
    return kernel.pulse_response(pulse, t)


@dataclass(frozen=True, eq=False)
class AmplitudeProblem:
    samples: SampleVector
    delays: FloatArray
    kernel: Kernel
    pulse: PulseShape

    def __post_init__(self) -> None:
        d = np.asarray(self.delays, dtype=np.float64).ravel()
        object.__setattr__(self, "delays", d)
        if d.size < 1:
            raise ConfigError("need at least one delay")
        if self.samples.grid.n < d.size:
            raise ConfigError(
                f"N={self.samples.grid.n} samples cannot determine L={d.size} amplitudes"
            )

    @property
    def grid(self) -> SampleGrid:
        return self.samples.grid

    @property
    def y(self) -> FloatArray:
        return self.samples.values

    def matrix(self) -> FloatArray:
        return design_matrix(self.kernel, self.pulse, self.grid, self.delays)

    def mse(self, amplitudes: npt.ArrayLike) -> float:
        r = self.matrix() @ np.asarray(amplitudes, dtype=np.float64) - self.y
        return float(np.mean(r * r))


def _check_rank(G: FloatArray, delays: FloatArray) -> None:
    s = np.linalg.svd(G, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise NumericError("design matrix is zero: no delay reaches any sampling instant")
    if s[-1] / s[0] > _RANK_TOL:
        return
    # name the closest pair of near-collinear columns
    norms = np.linalg.norm(G, axis=0)
    worst, pair = -1.0, (0, 1)
    for i in range(G.shape[1]):
        if norms[i] == 0.0:
            raise NumericError(
                f"delay {delays[i]:.6g} produces no samples on the grid (empty column)"
            )
        for j in range(i + 1, G.shape[1]):
            c = abs(float(G[:, i] @ G[:, j])) / (norms[i] * norms[j])
            if c > worst:
                worst, pair = c, (i, j)
    i, j = pair
    raise NumericError(
        f"rank-deficient amplitude problem: delays {delays[i]:.6g} and {delays[j]:.6g} collide"
    )


def estimate_amplitudes_ls(problem: AmplitudeProblem) -> FloatArray:
    """Normal equations (G^T G + ridge I) a = G^T y."""
    G = problem.matrix()
    _check_rank(G, problem.delays)
    A = G.T @ G + RIDGE * np.eye(G.shape[1])
    return np.asarray(np.linalg.solve(A, G.T @ problem.y), dtype=np.float64)


def estimate_amplitudes_gd(
    problem: AmplitudeProblem,
    steps: int = 10_000,
    lr: float | None = None,
    seed: int = 0,
    tol: float = 1e-10,
) -> FloatArray:
    """
    Gradient descent on (1/N)||G a - y||^2 from a ~ N(0, I).

    `lr=None` uses 1 / lambda_max of the Hessian (2/N) G^T G, which converges
    monotonically. Stops early once the gradient norm falls below `tol`. Raises
    NumericError when the loss rises for DIVERGENCE_PATIENCE consecutive steps.
    """
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    G = problem.matrix()
    y = problem.y
    N = G.shape[0]
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(G.shape[1])
    if steps == 0:
        return a
    H = (2.0 / N) * (G.T @ G)
    if lr is None:
        lam = float(np.linalg.eigvalsh(H)[-1])
        if lam <= 0.0:
            raise NumericError("amplitude problem has a zero Hessian; cannot pick a step size")
        eta = 1.0 / lam
    else:
        eta = lr
    if eta == 0.0:
        return a

    b = (2.0 / N) * (G.T @ y)
    prev = np.inf
    rising = 0
    for k in range(steps):
        grad = H @ a - b
        if float(np.linalg.norm(grad)) < tol:
            log.debug("amplitude GD converged after %d steps", k)
            break
        a = a - eta * grad
        r = G @ a - y
        loss = float(np.mean(r * r))
        if not np.isfinite(loss):
            raise NumericError(f"amplitude GD produced a non-finite loss; use a step below {eta:g}")
        rising = rising + 1 if loss > prev else 0
        if rising >= DIVERGENCE_PATIENCE:
            raise NumericError(
                f"amplitude GD diverging (loss rose {DIVERGENCE_PATIENCE} steps in a row); "
                f"use a step below {eta:g}"
            )
        prev = loss
    return a
