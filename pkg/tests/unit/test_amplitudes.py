# tests/unit/test_amplitudes.py
import numpy as np
import pytest

from fri_forge.amplitudes import (
    AmplitudeProblem,
    design_matrix,
    estimate_amplitudes_gd,
    estimate_amplitudes_ls,
)
from fri_forge.errors import ConfigError, NumericError
from fri_forge.kernels import GaussianPairKernel, TwoExpKernel
from fri_forge.models import Dirac, FriSignal, KernelSupport, Rectangle
from fri_forge.sampler import build_grid, forward_samples

GRID = build_grid(KernelSupport(-0.3, 0.3), -0.48, 0.52, 21)


def _problem(
    delays: tuple[float, ...] = (0.2, 0.5), amps: tuple[float, ...] = (3.0, 7.0)
) -> AmplitudeProblem:
    k = GaussianPairKernel()
    y = forward_samples(FriSignal(amps, delays), Dirac(), k, GRID)
    return AmplitudeProblem(y, np.array(delays), k, Dirac())


def test_least_squares_recovers_amplitudes() -> None:
    a = estimate_amplitudes_ls(_problem())
    assert np.allclose(a, [3.0, 7.0], atol=1e-6)


def test_gradient_descent_agrees_with_least_squares() -> None:
    p = _problem((-0.1, 0.35), (1.5, 9.0))
    ls = estimate_amplitudes_ls(p)
    gd = estimate_amplitudes_gd(p, steps=10_000, seed=3)
    assert np.allclose(gd, ls, atol=1e-6)
    assert p.mse(gd) < 1e-12


def test_gradient_descent_zero_steps_returns_start() -> None:
    start = np.random.default_rng(7).standard_normal(2)
    assert np.array_equal(estimate_amplitudes_gd(_problem(), steps=0, seed=7), start)
    with pytest.raises(ConfigError):
        estimate_amplitudes_gd(_problem(), steps=-1)


def test_gradient_descent_detects_divergence() -> None:
    with pytest.raises(NumericError):
        estimate_amplitudes_gd(_problem(), steps=200, lr=50.0)


def test_rectangle_pulses_through_causal_kernel() -> None:
    k = TwoExpKernel(13.23, 24.44)
    grid = build_grid(k.support, -0.48, 0.52, 21, convention="delays")
    pulse = Rectangle(0.002)
    y = forward_samples(FriSignal((1.0, 2.5), (-0.2, 0.1)), pulse, k, grid)
    a = estimate_amplitudes_ls(AmplitudeProblem(y, np.array([-0.2, 0.1]), k, pulse))
    assert np.allclose(a, [1.0, 2.5], rtol=1e-4)


def test_colliding_delays_are_rank_deficient() -> None:
    k = GaussianPairKernel()
    y = forward_samples(FriSignal((1.0,), (0.2,)), Dirac(), k, GRID)
    with pytest.raises(NumericError):
        estimate_amplitudes_ls(AmplitudeProblem(y, np.array([0.2, 0.2]), k, Dirac()))
    with pytest.raises(NumericError):
        estimate_amplitudes_ls(AmplitudeProblem(y, np.array([5.0]), k, Dirac()))


def test_problem_validation() -> None:
    k = GaussianPairKernel()
    y = forward_samples(FriSignal((1.0,), (0.2,)), Dirac(), k, GRID)
    with pytest.raises(ConfigError):
        AmplitudeProblem(y, np.array([]), k, Dirac())
    with pytest.raises(ConfigError):
        AmplitudeProblem(y, np.linspace(-0.4, 0.4, 22), k, Dirac())


def test_design_matrix_columns_are_pulse_responses() -> None:
    k = GaussianPairKernel()
    G = design_matrix(k, Dirac(), GRID, [0.1, 0.3])
    assert G.shape == (21, 2)
    assert np.allclose(G[:, 1], k.evaluate(GRID.instants - 0.3))


def test_estimators_agree_on_random_well_posed_problems() -> None:
    k = GaussianPairKernel()
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 100:
        delays = np.sort(rng.uniform(-0.48, 0.52, 2))
        G = design_matrix(k, Dirac(), GRID, delays)
        if np.linalg.cond(G) > 10.0:
            continue
        amps = rng.uniform(-5.0, 5.0, 2)
        y = forward_samples(FriSignal.from_arrays(amps, delays), Dirac(), k, GRID)
        p = AmplitudeProblem(y, delays, k, Dirac())
        gd = estimate_amplitudes_gd(p, seed=checked)
        assert np.allclose(gd, estimate_amplitudes_ls(p), atol=1e-6)
        checked += 1
