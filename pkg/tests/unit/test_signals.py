# tests/unit/test_signals.py
import math

import numpy as np
import pytest
from scipy import stats

from fri_forge.errors import ConfigError, InfeasibleDataError
from fri_forge.models import Dirac, FriSignal, GenerationRanges, Rectangle, parse_pulse
from fri_forge.signals import (
    draw_batch,
    draw_batch_separated,
    draw_signal,
    min_gaps,
    resolution,
)


def test_draw_signal_default_ranges() -> None:
    ranges = GenerationRanges.default()
    s = draw_signal(ranges, np.random.default_rng(0))
    assert s.order == 2
    assert list(s.delays) == sorted(s.delays)
    assert all(-0.48 <= t <= 0.52 for t in s.delays)
    assert all(0.5 <= a <= 10.0 for a in s.amplitudes)


def test_draw_signal_degenerate_interval() -> None:
    ranges = GenerationRanges(0.5, 10.0, 0.0, 0.0, 1)
    s = draw_signal(ranges, np.random.default_rng(3))
    assert s.delays == (0.0,)


def test_draw_signal_is_deterministic() -> None:
    ranges = GenerationRanges.default()
    a = draw_signal(ranges, np.random.default_rng(42))
    b = draw_signal(ranges, np.random.default_rng(42))
    assert a == b


def test_min_separation_is_respected() -> None:
    ranges = GenerationRanges.default(order=3, min_separation=0.2)
    _, tau = draw_batch(ranges, 500, np.random.default_rng(1))
    assert np.all(np.diff(tau, axis=1) >= 0.2)
    assert np.all(tau >= -0.48) and np.all(tau <= 0.52)


def test_unreachable_separation_raises() -> None:
    # (L-1) * sep fills the interval exactly: accepted draws have probability zero
    ranges = GenerationRanges(0.5, 10.0, 0.0, 1.0, 3, min_separation=0.5)
    with pytest.raises(InfeasibleDataError):
        draw_signal(ranges, np.random.default_rng(0))


def test_resolution_examples() -> None:
    assert resolution(FriSignal((1.0, 1.0), (0.2, 0.5))) == pytest.approx(0.3)
    assert resolution(FriSignal((1.0, 1.0, 1.0), (0.0, 0.05, 0.2))) == pytest.approx(0.05)
    assert resolution(FriSignal((1.0, 1.0), (-0.48, 0.52))) == pytest.approx(1.0)
    assert math.isinf(resolution(FriSignal((1.0,), (0.1,))))


def test_min_gaps_single_pulse_is_infinite() -> None:
    assert np.all(np.isinf(min_gaps(np.zeros((4, 1)))))


def test_amplitudes_are_uniform() -> None:
    ranges = GenerationRanges.default(order=1)
    a, _ = draw_batch(ranges, 100_000, np.random.default_rng(7))
    ks = stats.kstest(a.ravel(), "uniform", args=(0.5, 9.5))
    assert ks.statistic < 0.01


def test_draw_batch_rows_sorted() -> None:
    _, tau = draw_batch(GenerationRanges.default(order=4), 1000, np.random.default_rng(2))
    assert np.all(np.diff(tau, axis=1) > 0)


def test_separated_batch_has_exact_gaps() -> None:
    ranges = GenerationRanges.default(order=3)
    _, tau = draw_batch_separated(ranges, 0.07, 200, np.random.default_rng(5))
    assert np.allclose(np.diff(tau, axis=1), 0.07)
    assert np.all(tau[:, 0] >= -0.48) and np.all(tau[:, -1] <= 0.52 + 1e-12)


def test_separated_batch_that_cannot_fit() -> None:
    ranges = GenerationRanges.default(order=3)
    with pytest.raises(InfeasibleDataError):
        draw_batch_separated(ranges, 0.6, 10, np.random.default_rng(0))


def test_ranges_validation_and_codec() -> None:
    with pytest.raises(ConfigError):
        GenerationRanges(10.0, 0.5, 0.0, 1.0, 2)
    with pytest.raises(ConfigError):
        GenerationRanges(0.5, 10.0, 0.0, 0.1, 3, min_separation=0.1)
    r = GenerationRanges.default(order=5, min_separation=0.05)
    assert GenerationRanges.from_dict(r.to_dict()) == r
    with pytest.raises(ConfigError):
        GenerationRanges.from_dict({"a_min": 0.5})


def test_signal_record_and_pulse_parsing() -> None:
    s = FriSignal.from_arrays([2.0, 1.0], [0.5, 0.2])
    assert s.delays == (0.2, 0.5) and s.amplitudes == (1.0, 2.0)
    assert FriSignal.from_record(s.to_record()) == s
    assert parse_pulse("dirac") == Dirac()
    assert parse_pulse("rectangle:0.002") == Rectangle(0.002)
    with pytest.raises(ConfigError):
        parse_pulse("triangle")
    with pytest.raises(ConfigError):
        FriSignal((1.0, 1.0), (0.3, 0.3))
