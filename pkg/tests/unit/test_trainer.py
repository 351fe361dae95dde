# tests/unit/test_trainer.py
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fri_forge.autodiff import Node, Parameter, backward, load_checkpoint, multiply, reduce_sum
from fri_forge.encoder import EncoderConfig, build_encoder, load_encoder
from fri_forge.errors import ConfigError
from fri_forge.kernels import (
    BSplineKernel,
    LearnableKernel,
    TruncatedGaussianKernel,
    TwoExpKernel,
    kernel_from_dict,
)
from fri_forge.models import Dirac, GenerationRanges, KernelSupport, Rectangle
from fri_forge.sampler import SnrPolicy, build_grid, grid_for_kernel, grid_from_period
from fri_forge.trainer import (
    BatchStream,
    TrainConfig,
    loss_l1,
    regenerate_batch_with_gradient,
    scaled_noise,
    train,
)

SUPPORT = KernelSupport(-0.3, 0.3)


def _tiny_config(**overrides: object) -> TrainConfig:
    base: dict[str, object] = {
        "mode": "encoder-only",
        "epochs": 2,
        "batch_size": 16,
        "examples_per_epoch": 32,
        "validation_count": 16,
        "kernel_trace_points": 11,
    }
    base.update(overrides)
    return TrainConfig.from_dict(base)


def _tiny_encoder(n: int = 21) -> EncoderConfig:
    return EncoderConfig(n, 2, conv_channels=(4,), hidden=(8,), param_target=None, seed=1)


def _stream(seed: int = 0) -> BatchStream:
    grid = build_grid(SUPPORT, -0.48, 0.52, 21)
    return BatchStream(GenerationRanges.default(), grid, SnrPolicy.parse("5:40"), seed)


def test_loss_l1_value_and_gradient() -> None:
    pred = Parameter(np.array([[0.1, 0.2], [0.3, -0.5]]), "pred")
    loss = loss_l1(pred, np.zeros((2, 2)))
    assert float(loss.value) == pytest.approx(0.55)
    backward(loss)
    assert np.allclose(pred.grad, np.sign(pred.value) / 2.0)
    with pytest.raises(ConfigError):
        loss_l1(pred, np.zeros((2, 3)))


def _weighted_sum_grad(
    kernel: LearnableKernel,
    a: np.ndarray,
    tau: np.ndarray,
    pulse: Dirac | Rectangle,
    w: np.ndarray,
) -> np.ndarray:
    grid = grid_from_period(0.0, 0.05, 21, kernel.support)
    raw = Parameter(kernel.raw_params(), "kernel.raw")
    noise = np.zeros((a.shape[0], grid.n))
    y = regenerate_batch_with_gradient(kernel, a, tau, noise, pulse, grid, raw)
    backward(reduce_sum(multiply(y, w)))
    return raw.grad


def _weighted_sum_fd(
    kernel: LearnableKernel,
    a: np.ndarray,
    tau: np.ndarray,
    pulse: Dirac | Rectangle,
    w: np.ndarray,
    eps: float,
) -> np.ndarray:
    grid = grid_from_period(0.0, 0.05, 21, kernel.support)
    noise = np.zeros((a.shape[0], grid.n))
    p = kernel.raw_params()
    out = np.zeros(p.size)
    for i in range(p.size):
        e = np.zeros(p.size)
        e[i] = eps
        up = regenerate_batch_with_gradient(
            kernel.with_raw_params(p + e), a, tau, noise, pulse, grid
        )
        dn = regenerate_batch_with_gradient(
            kernel.with_raw_params(p - e), a, tau, noise, pulse, grid
        )
        out[i] = float(np.sum(w * (up.value - dn.value))) / (2 * eps)
    return out


@pytest.mark.parametrize("pulse", [Dirac(), Rectangle(0.03)])
def test_regenerated_samples_gradient_matches_finite_differences(
    pulse: Dirac | Rectangle,
) -> None:
    rng = np.random.default_rng(4)
    a = rng.uniform(0.5, 10.0, (3, 2))
    tau = np.sort(rng.uniform(0.0, 0.3, (3, 2)), axis=1)
    w = rng.standard_normal((3, 21))

    spline = BSplineKernel.from_coefficients(rng.uniform(-1.0, 1.0, 11), 0.3)
    got = _weighted_sum_grad(spline, a, tau, pulse, w)
    assert np.allclose(got, _weighted_sum_fd(spline, a, tau, pulse, w, 1e-3), atol=1e-8)

    poles = TwoExpKernel(13.23, 24.44)
    got = _weighted_sum_grad(poles, a, tau, pulse, w)
    fd = _weighted_sum_fd(poles, a, tau, pulse, w, 1e-6)
    assert np.allclose(got, fd, rtol=1e-4, atol=1e-6)


def test_regenerate_rejects_fixed_kernels() -> None:
    grid = build_grid(SUPPORT, -0.48, 0.52, 21)
    raw = Parameter(np.zeros(1), "kernel.raw")
    with pytest.raises(ConfigError):
        regenerate_batch_with_gradient(
            TruncatedGaussianKernel(), np.ones((1, 2)), np.zeros((1, 2)), 0.0, Dirac(), grid, raw
        )


def test_joint_objective_gradient_reaches_kernel() -> None:
    rng = np.random.default_rng(6)
    kernel = BSplineKernel.from_coefficients(rng.uniform(0.2, 1.0, 11), 0.3)
    grid = build_grid(SUPPORT, -0.48, 0.52, 21)
    encoder = build_encoder(_tiny_encoder())
    a = rng.uniform(0.5, 10.0, (4, 2))
    tau = np.sort(rng.uniform(-0.48, 0.52, (4, 2)), axis=1)
    noise = 0.01 * rng.standard_normal((4, 21))

    def objective(k: BSplineKernel, raw: Parameter | None = None) -> Node:
        y = regenerate_batch_with_gradient(k, a, tau, noise, Dirac(), grid, raw)
        return loss_l1(encoder.forward(y), tau)

    raw = Parameter(kernel.raw_params(), "kernel.raw")
    backward(objective(kernel, raw))
    assert np.any(raw.grad != 0.0)
    p = kernel.raw_params()
    for i in (0, 3, 5, 9):
        e = np.zeros(p.size)
        e[i] = 1e-6
        up = float(objective(kernel.with_raw_params(p + e)).value)
        dn = float(objective(kernel.with_raw_params(p - e)).value)
        assert raw.grad[i] == pytest.approx((up - dn) / 2e-6, rel=1e-4, abs=1e-7)


def test_scaled_noise() -> None:
    clean = np.ones((2, 4))
    z = np.ones((2, 4))
    out = scaled_noise(clean, np.array([10.0, math.inf]), z)
    assert np.allclose(out[0], math.sqrt(0.1))
    assert np.array_equal(out[1], np.zeros(4))
    silent = scaled_noise(np.zeros((1, 4)), np.array([10.0]), z[:1])
    assert np.array_equal(silent, np.zeros((1, 4)))


def test_batch_stream_is_seed_indexed() -> None:
    stream = _stream(3)
    b1, b2 = stream.batch(1, 0, 8), stream.batch(1, 0, 8)
    assert np.array_equal(b1.delays, b2.delays) and np.array_equal(b1.noise, b2.noise)
    assert not np.array_equal(stream.batch(1, 1, 8).delays, b1.delays)
    sizes = [b.size for b in stream.epoch(1, 20, 8)]
    assert sizes == [8, 8, 4]
    val = stream.validation(5, 40.0)
    assert np.all(val.snr_db == 40.0)


def test_train_config_presets_and_codec() -> None:
    desk = TrainConfig.budget("desk")
    assert desk.epochs == 50 and desk.examples_per_epoch == 100_000
    assert desk.steps_per_epoch == math.ceil(100_000 / 8192)
    full = TrainConfig.budget("full", batch_size=512)
    assert full.epochs == 2000 and full.examples_per_epoch == 1_000_000
    assert full.batch_size == 512
    assert TrainConfig.from_dict(full.to_dict()) == full
    with pytest.raises(ConfigError):
        TrainConfig.budget("weekend")
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"epochz": 3})
    with pytest.raises(ConfigError):
        TrainConfig(mode="kernel-only")  # type: ignore[arg-type]
    with pytest.raises(ConfigError):
        TrainConfig(snr="loud")


def test_encoder_only_training_writes_artifacts(tmp_path: Path) -> None:
    kernel = TruncatedGaussianKernel()
    encoder = build_encoder(_tiny_encoder())
    report, best = train(_tiny_config(), kernel, encoder, _stream(), tmp_path)

    assert best is kernel
    assert len(report.loss_trace) == 2 and len(report.val_nmse_trace) == 2
    assert all(math.isfinite(v) for v in report.loss_trace + report.val_nmse_trace)
    assert report.best_epoch in (1, 2)
    assert report.best_val_nmse_db == min(report.val_nmse_trace)
    assert report.steps == 4
    assert len(report.kernel_trace) == 2 and len(report.kernel_trace_t) == 11

    for name in ("best.bin", "kernel.json", "report.json", "timing.json", "loss.csv"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "checkpoints" / "epoch_0001.bin").exists()
    assert (tmp_path / "checkpoints" / "epoch_0002.bin").exists()
    saved = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert "wall_clock_s" not in saved
    assert saved["loss_trace"] == report.loss_trace
    assert load_encoder(tmp_path / "best.bin").config == encoder.config


def test_training_is_deterministic() -> None:
    runs = []
    for _ in range(2):
        encoder = build_encoder(_tiny_encoder())
        report, _ = train(_tiny_config(), TruncatedGaussianKernel(), encoder, _stream())
        runs.append(report.loss_trace)
    assert runs[0] == runs[1]


def test_joint_training_moves_only_a_live_kernel() -> None:
    start = BSplineKernel.from_gaussian(0.038, K=10)

    frozen_cfg = _tiny_config(mode="joint", lr_kernel=0.0)
    _, frozen = train(frozen_cfg, start, build_encoder(_tiny_encoder()), _stream())
    assert isinstance(frozen, BSplineKernel)
    assert frozen.coefficients == start.coefficients

    live_cfg = _tiny_config(mode="joint", lr_kernel=1e-2)
    report, moved = train(live_cfg, start, build_encoder(_tiny_encoder()), _stream())
    assert isinstance(moved, BSplineKernel)
    assert moved.coefficients != start.coefficients
    assert report.final_kernel == moved.to_dict()


def test_train_rejects_bad_setups() -> None:
    with pytest.raises(ConfigError):
        train(
            _tiny_config(mode="joint"),
            TruncatedGaussianKernel(),
            build_encoder(_tiny_encoder()),
            _stream(),
        )
    with pytest.raises(ConfigError):
        encoder = build_encoder(_tiny_encoder(11))
        train(_tiny_config(), TruncatedGaussianKernel(), encoder, _stream())


def test_zero_kernel_rate_keeps_two_exp_poles_exactly() -> None:
    start = TwoExpKernel(13.23, 24.44)
    grid = grid_for_kernel(start, GenerationRanges.default(), 21)
    stream = BatchStream(GenerationRanges.default(), grid, SnrPolicy.parse("5:40"), 0)
    cfg = _tiny_config(mode="joint", lr_kernel=0.0, lr_min=1e-4)
    report, frozen = train(cfg, start, build_encoder(_tiny_encoder()), stream)
    assert isinstance(frozen, TwoExpKernel)
    assert (frozen.alpha1, frozen.alpha2) == (13.23, 24.44)
    assert report.final_kernel == start.to_dict()


def test_one_joint_step_lowers_the_batch_loss() -> None:
    rng = np.random.default_rng(4)
    kernel = BSplineKernel.from_gaussian(0.038, K=10)
    grid = build_grid(SUPPORT, -0.48, 0.52, 21)
    encoder = build_encoder(_tiny_encoder())
    a = rng.uniform(0.5, 10.0, (16, 2))
    tau = np.sort(rng.uniform(-0.48, 0.52, (16, 2)), axis=1)
    noise = 0.01 * rng.standard_normal((16, 21))
    raw = Parameter(kernel.raw_params(), "kernel.raw")

    def batch_loss() -> Node:
        y = regenerate_batch_with_gradient(kernel, a, tau, noise, Dirac(), grid, raw)
        return loss_l1(encoder.forward(y), tau)

    before = batch_loss()
    backward(before)
    lr = 1e-5
    for p in [*encoder.parameters(), raw]:
        p.value = p.value - lr * p.grad
    kernel = kernel.with_raw_params(raw.value)
    after = float(batch_loss().value)
    assert after < float(before.value)


def test_two_exp_constraints_survive_the_checkpoint(tmp_path: Path) -> None:
    start = TwoExpKernel(13.23, 13.25, min_gap=0.01)
    grid = grid_for_kernel(start, GenerationRanges.default(), 21)
    stream = BatchStream(GenerationRanges.default(), grid, SnrPolicy.parse("5:40"), 2)
    cfg = _tiny_config(mode="joint", lr_kernel=0.05)
    train(cfg, start, build_encoder(_tiny_encoder()), stream, tmp_path)

    for path in (tmp_path / "best.bin", tmp_path / "checkpoints" / "epoch_0002.bin"):
        tensors, meta = load_checkpoint(path)
        kernel = kernel_from_dict(meta["kernel"])
        assert isinstance(kernel, TwoExpKernel)
        assert kernel.alpha_min <= kernel.alpha1 < kernel.alpha2 <= kernel.alpha_max
        assert kernel.alpha2 - kernel.alpha1 >= kernel.min_gap - 1e-9
        rebuilt = start.with_raw_params(tensors["kernel.raw"])
        assert rebuilt.alpha1 == pytest.approx(kernel.alpha1, rel=1e-12)
        assert rebuilt.alpha2 == pytest.approx(kernel.alpha2, rel=1e-12)
