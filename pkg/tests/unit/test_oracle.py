# tests/unit/test_oracle.py
import numpy as np
import pytest

from fri_forge.amplitudes import design_matrix
from fri_forge.errors import ConfigError
from fri_forge.kernels import GaussianPairKernel
from fri_forge.models import Dirac, FriSignal, KernelSupport
from fri_forge.oracle import candidate_delays, grid_search
from fri_forge.sampler import add_noise, build_grid, forward_samples

GRID = build_grid(KernelSupport(-0.3, 0.3), -0.48, 0.52, 21)


def test_candidate_delays() -> None:
    cand = candidate_delays(-0.48, 0.52, 0.01)
    assert cand.size == 101
    assert cand[0] == -0.48 and cand[-1] == pytest.approx(0.52)
    with pytest.raises(ConfigError):
        candidate_delays(0.0, 1.0, 0.0)
    with pytest.raises(ConfigError):
        candidate_delays(1.0, 0.0, 0.1)


@pytest.mark.parametrize(
    ("picks", "step"), [((40,), 0.01), ((30, 60), 0.01), ((5, 22, 45), 0.02)]
)
def test_on_grid_delays_are_recovered_exactly(picks: tuple[int, ...], step: float) -> None:
    k = GaussianPairKernel()
    cand = candidate_delays(-0.48, 0.52, step)
    delays = tuple(float(cand[i]) for i in picks)
    amps = (2.0, 5.0, 3.5)[: len(picks)]
    y = forward_samples(FriSignal(amps, delays), Dirac(), k, GRID)

    res = grid_search(y, k, Dirac(), len(picks), -0.48, 0.52, step)
    assert np.array_equal(res.delays, delays)
    assert np.allclose(res.amplitudes, amps, atol=1e-6)
    assert res.residual < 1e-12
    rec = res.to_record()
    assert set(rec) == {"tau_hat", "a_hat", "residual"}


def test_default_step_follows_sampling_period() -> None:
    k = GaussianPairKernel()
    y = forward_samples(FriSignal((1.0,), (0.0,)), Dirac(), k, GRID)
    res = grid_search(y, k, Dirac(), 1, -0.1, 0.1)
    assert res.tuples == candidate_delays(-0.1, 0.1, GRID.period / 32).size


def test_limits() -> None:
    k = GaussianPairKernel()
    y = forward_samples(FriSignal((1.0,), (0.0,)), Dirac(), k, GRID)
    with pytest.raises(ConfigError):
        grid_search(y, k, Dirac(), 4, -0.48, 0.52, 0.1)
    with pytest.raises(ConfigError):
        grid_search(y, k, Dirac(), 3, -0.48, 0.52, 1e-4)
    with pytest.raises(ConfigError):
        grid_search(y, k, Dirac(), 2, 0.0, 0.0, 0.1)


def test_off_grid_truth_under_noise_is_no_better_than_the_search() -> None:
    k = GaussianPairKernel()
    step = 0.01
    truth = (-0.1234, 0.2871)
    clean = forward_samples(FriSignal((2.0, 4.5), truth), Dirac(), k, GRID)
    y = add_noise(clean, 30.0, np.random.default_rng(11))

    res = grid_search(y, k, Dirac(), 2, -0.48, 0.52, step)
    cand = candidate_delays(-0.48, 0.52, step)
    snapped = cand[[int(round((t + 0.48) / step)) for t in truth]]
    G = design_matrix(k, Dirac(), GRID, snapped)
    amps, *_ = np.linalg.lstsq(G, y.values, rcond=None)
    r = G @ amps - y.values
    assert res.residual <= float(r @ r) + 1e-8
    assert np.allclose(res.delays, truth, atol=0.05)


def test_hundred_on_grid_pairs_are_recovered() -> None:
    k = GaussianPairKernel()
    cand = candidate_delays(-0.48, 0.52, 0.01)
    rng = np.random.default_rng(5)
    for _ in range(100):
        i = int(rng.integers(0, cand.size - 5))
        j = int(rng.integers(i + 5, cand.size))
        delays = (float(cand[i]), float(cand[j]))
        amps = rng.uniform(0.5, 10.0, 2)
        y = forward_samples(FriSignal.from_arrays(amps, delays), Dirac(), k, GRID)
        res = grid_search(y, k, Dirac(), 2, -0.48, 0.52, 0.01)
        assert np.array_equal(res.delays, delays)
        assert np.allclose(res.amplitudes, amps, rtol=1e-8, atol=0.0)
