"""
Exhaustive grid-search reference estimator.

Enumerates every strictly increasing L-tuple of candidate delays on a uniform
grid, solves least-squares amplitudes for each and keeps the tuple with the
smallest residual. No learning and no local refinement, so its answer is the
ground truth for "what the forward model alone can explain".
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .amplitudes import RIDGE, design_matrix
from .errors import ConfigError
from .kernels import Kernel
from .models import FloatArray, PulseShape, SampleVector

__all__ = ["MAX_ORDER", "MAX_TUPLES", "OracleResult", "candidate_delays", "grid_search"]

log = logging.getLogger(__name__)

MAX_ORDER = 3
MAX_TUPLES = 10_000_000
_CHUNK = 200_000


@dataclass(frozen=True, eq=False)
class OracleResult:
    delays: FloatArray
    amplitudes: FloatArray
    residual: float  # ||y - G a||^2 at the returned tuple
    tuples: int

    def to_record(self) -> dict[str, Any]:
        return {
            "tau_hat": [float(x) for x in self.delays],
            "a_hat": [float(x) for x in self.amplitudes],
            "residual": self.residual,
        }


def candidate_delays(tau_min: float, tau_max: float, step: float) -> FloatArray:
    """tau_min + k * step for every k that stays within tau_max (rounding-tolerant)."""
    if not step > 0:
        raise ConfigError(f"grid step must be > 0, got {step}")
    if tau_max < tau_min:
        raise ConfigError(f"tau_max < tau_min ({tau_max} < {tau_min})")
    n = int(math.floor((tau_max - tau_min) / step + 1e-9)) + 1
    return tau_min + step * np.arange(n, dtype=np.float64)


def grid_search(
    samples: SampleVector,
    kernel: Kernel,
    pulse: PulseShape,
    order: int,
    tau_min: float,
    tau_max: float,
    step: float | None = None,
) -> OracleResult:
    """
    Best L-tuple on the candidate grid. `step` defaults to T_s / 32.

    Raises ConfigError for L > 3 or more than 10^7 candidate tuples.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"grid search supports 1 <= L <= {MAX_ORDER}, got L={order}")
    grid = samples.grid
    dt = grid.period / 32.0 if step is None else step
    cand = candidate_delays(tau_min, tau_max, dt)
    n_tuples = math.comb(cand.size, order)
    if n_tuples > MAX_TUPLES:
        raise ConfigError(
            f"{n_tuples} candidate tuples exceed the limit of {MAX_TUPLES}; use a coarser step"
        )
    if n_tuples == 0:
        raise ConfigError(f"only {cand.size} candidate delays for L={order}")

    y = samples.values
    Gc = design_matrix(kernel, pulse, grid, cand)  # N x M
    gram = Gc.T @ Gc
    rhs = Gc.T @ y
    yy = float(y @ y)
    ridge = RIDGE * np.eye(order)

    best_res = np.inf
    best_idx: tuple[int, ...] = tuple(range(order))
    combos = itertools.combinations(range(cand.size), order)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.asarray(chunk, dtype=np.intp)  # C x L
        A = gram[idx[:, :, None], idx[:, None, :]] + ridge
        b = rhs[idx]
        a = np.linalg.solve(A, b[:, :, None])[:, :, 0]
        res = yy - np.einsum("cl,cl->c", b, a)
        k = int(np.argmin(res))
        if res[k] < best_res:
            best_res = float(res[k])
            best_idx = tuple(int(i) for i in idx[k])

    delays = cand[list(best_idx)]
    G = Gc[:, list(best_idx)]
    amps, *_ = np.linalg.lstsq(G, y, rcond=None)
    r = G @ amps - y
    log.debug("grid search: %d tuples, best %s", n_tuples, delays)
    return OracleResult(delays, np.asarray(amps, dtype=np.float64), float(r @ r), n_tuples)
