# tests/unit/test_hardware.py
import math

import numpy as np
import pytest

from fri_forge.encoder import EncoderConfig, EncoderModel, build_encoder
from fri_forge.errors import ConfigError, NumericError
from fri_forge.hardware import (
    RcRealization,
    poles_to_rc,
    rc_to_poles,
    realization_report,
    round_to_series,
    simulate_bench,
)
from fri_forge.kernels import TwoExpKernel
from fri_forge.models import GenerationRanges
from fri_forge.sampler import grid_for_kernel, grid_from_period


def _pinned_encoder(delays: tuple[float, float]) -> EncoderModel:
    """Encoder whose output layer ignores its input and always reports `delays`."""
    model = build_encoder(EncoderConfig(21, 2, conv_channels=(2,), hidden=(4,), param_target=None))
    head = model.dense[-1]
    head.weight.value = np.zeros_like(head.weight.value)
    head.bias.value = np.array(delays)
    return model


def test_learned_poles_map_to_resistors() -> None:
    rc = poles_to_rc(13.23, 24.44)
    assert rc.r1 == pytest.approx(75_586, abs=1.0)
    assert rc.r2 == pytest.approx(40_917, abs=1.0)
    assert rc.c1 == rc.c2 == 1e-6


def test_round_trip_through_components() -> None:
    for c1, c2 in ((1e-6, 1e-6), (2e-6, 1e-6), (4.7e-6, 2.2e-6)):
        rc = poles_to_rc(13.23, 24.44, c1, c2)
        a1, a2 = rc_to_poles(rc.r1, rc.r2, c1, c2)
        assert a1 == pytest.approx(13.23, rel=1e-9)
        assert a2 == pytest.approx(24.44, rel=1e-9)
        assert rc.r1 >= rc.r2


def test_built_components_drift() -> None:
    built = RcRealization.from_components(85_000, 36_500, 1e-6, 1e-6)
    d1, d2 = built.drift(13.23, 24.44)
    assert 0.05 <= abs(d1) <= 0.20
    assert 0.05 <= abs(d2) <= 0.20
    assert built.alpha1 == pytest.approx(1.0 / 0.085)
    assert built.alpha2 == pytest.approx(1.0 / 0.0365)


def test_preferred_values() -> None:
    assert round_to_series(75_586, "E24") == 75_000
    assert round_to_series(40_917, "E24") == 39_000
    assert round_to_series(75_586, "E12") == 82_000
    assert round_to_series(40_917, "E96") == 41_200
    assert round_to_series(0.0047, "E12") == pytest.approx(0.0047)
    with pytest.raises(ConfigError):
        round_to_series(1000.0, "E6")
    with pytest.raises(ConfigError):
        round_to_series(-1.0)


def test_unrealizable_components() -> None:
    with pytest.raises(NumericError):
        rc_to_poles(1000.0, 1000.0, 1e-6, 1e-7)
    with pytest.raises(NumericError):
        poles_to_rc(13.23, 24.44, 0.5e-6, 1e-6)
    with pytest.raises(ConfigError):
        poles_to_rc(24.44, 13.23)
    with pytest.raises(ConfigError):
        rc_to_poles(0.0, 1000.0, 1e-6, 1e-6)


def test_realization_report() -> None:
    learned = TwoExpKernel(13.23, 24.44)
    ideal = realization_report(learned, poles_to_rc(13.23, 24.44), points=501)
    assert ideal.max_deviation == 0.0
    assert ideal.encoder_nmse_db is None

    built = RcRealization.from_components(75_000, 39_000, 1e-6, 1e-6)
    grid = grid_from_period(-0.48, 1.0 / 21, 21, learned.support)
    rep = realization_report(
        learned, built, points=501, encoder=_pinned_encoder((0.0, 0.3)), grid=grid, trials=50
    )
    assert rep.max_deviation > 0.0 and rep.l2_deviation > 0.0
    assert rep.encoder_nmse_db is not None and math.isfinite(rep.encoder_nmse_db)
    d = rep.to_dict()
    assert set(d["realization"]) == {"R1", "R2", "C1", "C2", "alpha1", "alpha2"}


def test_bench_with_exact_encoder() -> None:
    rc = poles_to_rc(13.23, 24.44)
    grid = grid_from_period(0.0, 0.05, 21, rc.kernel().support)
    bench = simulate_bench(rc, _pinned_encoder((0.5, 0.2)), grid)
    assert np.array_equal(bench.tau_hat, [0.2, 0.5])
    assert np.allclose(bench.a_hat, [1.0, 1.0], rtol=1e-4)
    assert bench.nmse_db == -150.0
    assert bench.capture_t[0] == 0.0
    assert float(np.max(bench.capture_y)) > 0.0
    assert bench.to_dict()["grid"] == grid.to_dict()

    with pytest.raises(ConfigError):
        simulate_bench(rc, _pinned_encoder((0.5, 0.2)), grid, delays=(0.1, 0.2, 0.3))


def test_bench_on_the_default_causal_grid() -> None:
    rc = poles_to_rc(13.23, 24.44)
    grid = grid_for_kernel(rc.kernel(), GenerationRanges.default(), 21)
    bench = simulate_bench(rc, _pinned_encoder((0.2, 0.5)), grid)
    assert bench.nmse_db == -150.0
    assert np.allclose(bench.a_hat, [1.0, 1.0], rtol=1e-3)

    t = grid.instants
    for tau in bench.delays:
        after = int(np.count_nonzero((t > tau) & (bench.samples.values > 1e-6)))
        assert after >= 2, tau
