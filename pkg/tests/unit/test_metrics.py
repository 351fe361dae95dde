# tests/unit/test_metrics.py
import numpy as np
import pytest

from fri_forge.errors import ConfigError, NumericError
from fri_forge.metrics import NMSE_FLOOR_DB, mean_db, nmse_db, nmse_db_batch


def test_bench_pair_nmse() -> None:
    assert nmse_db([0.2, 0.5], [0.202, 0.498]) == pytest.approx(-45.6, abs=0.05)


def test_exact_estimate_hits_floor() -> None:
    assert nmse_db([0.2, 0.5], [0.2, 0.5]) == NMSE_FLOOR_DB
    assert nmse_db([1.0], [1.0 + 1e-300]) == NMSE_FLOOR_DB


def test_zero_truth_and_shape_errors() -> None:
    with pytest.raises(NumericError):
        nmse_db([0.0, 0.0], [0.1, 0.2])
    with pytest.raises(ConfigError):
        nmse_db([0.1, 0.2], [0.1])
    with pytest.raises(NumericError):
        nmse_db_batch([[0.0, 0.0]], [[0.1, 0.2]])


def test_sort_flag() -> None:
    truth, est = [0.2, 0.5], [0.498, 0.202]
    assert nmse_db(truth, est) == pytest.approx(-45.6, abs=0.05)
    assert nmse_db(truth, est, sort=False) > -10.0


def test_batch_matches_scalar() -> None:
    rng = np.random.default_rng(0)
    t = rng.uniform(-0.5, 0.5, (50, 3))
    e = t + rng.normal(0.0, 0.01, t.shape)
    batch = nmse_db_batch(t, e)
    assert np.allclose(batch, [nmse_db(a, b) for a, b in zip(t, e, strict=True)])
    assert np.all(nmse_db_batch(t, t) == NMSE_FLOOR_DB)


def test_mean_db_averages_decibels() -> None:
    assert mean_db([-10.0, -30.0]) == -20.0
    with pytest.raises(ConfigError):
        mean_db([])
