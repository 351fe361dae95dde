# src/fri_forge/metrics.py
from __future__ import annotations

import math

import numpy as np
import numpy.typing as npt

from .errors import ConfigError, NumericError
from .models import FloatArray

__all__ = ["NMSE_FLOOR_DB", "nmse_db", "nmse_db_batch", "mean_db"]

# exact matches are reported at this floor so tables stay finite
NMSE_FLOOR_DB = -150.0


def nmse_db(truth: npt.ArrayLike, estimate: npt.ArrayLike, sort: bool = True) -> float:
    """
    10 log10(||truth - estimate||^2 / ||truth||^2). With `sort` both vectors are
    ordered ascending first (delays); amplitudes are compared slot by slot.
    """
    t = np.asarray(truth, dtype=np.float64).ravel()
    e = np.asarray(estimate, dtype=np.float64).ravel()
    if sort:
        t, e = np.sort(t), np.sort(e)
    if t.shape != e.shape:
        raise ConfigError(f"truth has {t.size} entries but estimate has {e.size}")
    den = float(t @ t)
    if den == 0.0:
        raise NumericError("NMSE is undefined for an all-zero truth vector")
    num = float((t - e) @ (t - e))
    if num == 0.0:
        return NMSE_FLOOR_DB
    return max(NMSE_FLOOR_DB, 10.0 * math.log10(num / den))


def nmse_db_batch(
    truth: npt.ArrayLike, estimate: npt.ArrayLike, sort: bool = True
) -> FloatArray:
    """Row-wise `nmse_db` for B x L arrays."""
    t = np.atleast_2d(np.asarray(truth, dtype=np.float64))
    e = np.atleast_2d(np.asarray(estimate, dtype=np.float64))
    if sort:
        t, e = np.sort(t, axis=1), np.sort(e, axis=1)
    if t.shape != e.shape:
        raise ConfigError(f"truth shape {t.shape} does not match estimate shape {e.shape}")
    den = np.sum(t * t, axis=1)
    if np.any(den == 0.0):
        raise NumericError("NMSE is undefined for an all-zero truth vector")
    num = np.sum((t - e) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(num / den)
    return np.maximum(db, NMSE_FLOOR_DB)


def mean_db(values: npt.ArrayLike) -> float:
    """Average of per-trial dB values (not of linear ratios)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ConfigError("cannot average an empty set of NMSE values")
    return float(np.mean(v))
