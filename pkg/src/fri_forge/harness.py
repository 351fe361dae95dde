"""
Evaluation sweeps over SNR, pulse separation and model order.

Each cell draws a fresh seeded test set, runs the frozen encoder, and averages
per-example NMSE in dB. Cells are independent: cell i always uses the generator
seeded with (seed, i), so results do not depend on how many workers ran them.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .amplitudes import AmplitudeProblem, estimate_amplitudes_gd, estimate_amplitudes_ls
from .autodiff import load_checkpoint
from .config import read_resolved_config
from .encoder import EncoderModel, load_encoder, predict_delays
from .errors import ConfigError, NumericError
from .io.exports import write_csv, write_json
from .kernels import Kernel, dump_kernel_points, kernel_from_dict
from .metrics import mean_db, nmse_db_batch
from .models import GenerationRanges, PulseShape, SampleGrid, SampleVector, parse_pulse
from .sampler import add_noise_batch, forward_batch
from .signals import draw_batch, draw_batch_separated

__all__ = [
    "CSV_FIELDS",
    "AmplitudeMethod",
    "ModelBundle",
    "NmseCell",
    "load_bundle",
    "evaluate_cell",
    "run_snr_sweep",
    "run_resolution_sweep",
    "run_model_order_sweep",
    "cells_to_records",
    "reference_table",
    "plotdata",
    "kernel_series",
    "write_table",
]

log = logging.getLogger(__name__)

CSV_FIELDS = ["snr_db", "delta_tau", "target", "nmse_db", "trials", "model_id"]

AmplitudeMethod = Literal["ls", "gd"]
Target = Literal["delays", "amplitudes"]


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Everything needed to regenerate test data and run a trained encoder."""

    encoder: EncoderModel
    kernel: Kernel
    pulse: PulseShape
    grid: SampleGrid
    ranges: GenerationRanges
    model_id: str = "model"

    def __post_init__(self) -> None:
        if self.encoder.n_samples != self.grid.n or self.encoder.order != self.ranges.order:
            raise ConfigError(
                f"encoder (N={self.encoder.n_samples}, L={self.encoder.order}) does not match "
                f"grid N={self.grid.n} / data L={self.ranges.order}"
            )


def load_bundle(run_dir: Path, model_id: str | None = None) -> ModelBundle:
    """Bundle from a training run directory (config.json + best.bin)."""
    cfg = read_resolved_config(run_dir)
    ckpt = run_dir / "best.bin"
    encoder = load_encoder(ckpt)
    _, meta = load_checkpoint(ckpt)
    if "kernel" not in meta:
        raise ConfigError(f"{ckpt} carries no kernel in its sidecar")
    try:
        return ModelBundle(
            encoder=encoder,
            kernel=kernel_from_dict(meta["kernel"]),
            pulse=parse_pulse(str(cfg.get("pulse", "dirac"))),
            grid=SampleGrid.from_dict(cfg["grid"]),
            ranges=GenerationRanges.from_dict(cfg["ranges"]),
            model_id=model_id or str(cfg.get("model_id", run_dir.name)),
        )
    except KeyError as e:
        raise ConfigError(f"{run_dir}/config.json missing {e.args[0]!r}") from e


@dataclass(frozen=True)
class NmseCell:
    snr_db: float
    delta_tau: float | None
    target: Target
    nmse_db: float
    trials: int
    model_id: str = "model"

    def to_record(self) -> dict[str, Any]:
        return {
            "snr_db": self.snr_db,
            "delta_tau": "" if self.delta_tau is None else self.delta_tau,
            "target": self.target,
            "nmse_db": round(self.nmse_db, 6),
            "trials": self.trials,
            "model_id": self.model_id,
        }


# ----------------------------------------------------------------------------
# Cells
# ----------------------------------------------------------------------------


def evaluate_cell(
    bundle: ModelBundle,
    snr_db: float,
    trials: int,
    seed: int,
    index: int,
    delta_tau: float | None = None,
    amplitude_method: AmplitudeMethod | None = None,
) -> list[NmseCell]:
    """Delay NMSE (and optionally amplitude NMSE) for one (SNR, separation) cell."""
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng([seed, index])
    if delta_tau is None:
        a, tau = draw_batch(bundle.ranges, trials, rng)
    else:
        a, tau = draw_batch_separated(bundle.ranges, delta_tau, trials, rng)
    clean = forward_batch(a, tau, bundle.pulse, bundle.kernel, bundle.grid)
    y, _ = add_noise_batch(clean, np.full(trials, snr_db), rng)
    tau_hat = predict_delays(bundle.encoder, y)
    delay_db = mean_db(nmse_db_batch(tau, tau_hat))
    cells = [NmseCell(snr_db, delta_tau, "delays", delay_db, trials, bundle.model_id)]
    if amplitude_method is not None:
        scores: list[float] = []
        for i in range(trials):
            problem = AmplitudeProblem(
                SampleVector(y[i], bundle.grid, snr_db), tau_hat[i], bundle.kernel, bundle.pulse
            )
            try:
                if amplitude_method == "ls":
                    a_hat = estimate_amplitudes_ls(problem)
                else:
                    a_hat = estimate_amplitudes_gd(problem, seed=seed + i)
            except NumericError as e:
                log.debug("amplitude trial %d skipped: %s", i, e)
                continue
            scores.append(float(nmse_db_batch(a[i], a_hat, sort=False)[0]))
        if len(scores) < trials:
            log.warning("%d of %d amplitude trials skipped", trials - len(scores), trials)
        if scores:
            amp_db = mean_db(scores)
            cells.append(
                NmseCell(snr_db, delta_tau, "amplitudes", amp_db, len(scores), bundle.model_id)
            )
    log.info(
        "cell %s SNR=%g dtau=%s NMSE %.2f dB", bundle.model_id, snr_db, delta_tau, cells[0].nmse_db
    )
    return cells


def _run_cells(
    tasks: Sequence[tuple[ModelBundle, float, float | None]],
    trials: int,
    seed: int,
    threads: int,
    amplitude_method: AmplitudeMethod | None,
) -> list[NmseCell]:
    if not tasks:
        return []
    ordered: list[list[NmseCell] | None] = [None] * len(tasks)
    if threads <= 1 or len(tasks) == 1:
        for i, (bundle, snr, dt) in enumerate(tasks):
            ordered[i] = evaluate_cell(bundle, snr, trials, seed, i, dt, amplitude_method)
    else:
        # parallel over cells; results keep task order
        with ProcessPoolExecutor(max_workers=threads) as ex:
            futures = {
                ex.submit(evaluate_cell, b, snr, trials, seed, i, dt, amplitude_method): i
                for i, (b, snr, dt) in enumerate(tasks)
            }
            for done, fut in enumerate(as_completed(futures), start=1):
                ordered[futures[fut]] = fut.result()
                log.debug("[%d/%d] cells done", done, len(tasks))
    return [c for group in ordered if group is not None for c in group]


def run_snr_sweep(
    bundle: ModelBundle,
    snrs: Sequence[float],
    trials: int = 1000,
    seed: int = 0,
    threads: int = 1,
    amplitude_method: AmplitudeMethod | None = None,
) -> list[NmseCell]:
    tasks = [(bundle, float(s), None) for s in snrs]
    return _run_cells(tasks, trials, seed, threads, amplitude_method)


def run_resolution_sweep(
    bundle: ModelBundle,
    deltas: Sequence[float],
    snrs: Sequence[float],
    trials: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> list[NmseCell]:
    """Cells keyed by (separation, SNR), separation-major."""
    tasks = [(bundle, float(s), float(d)) for d in deltas for s in snrs]
    return _run_cells(tasks, trials, seed, threads, None)


def run_model_order_sweep(
    bundles: Sequence[ModelBundle],
    snrs: Sequence[float],
    trials: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> list[NmseCell]:
    """One SNR sweep per trained (L, N) configuration, tagged by model_id."""
    tasks = [(b, float(s), None) for b in bundles for s in snrs]
    return _run_cells(tasks, trials, seed, threads, None)


# ----------------------------------------------------------------------------
# Emission
# ----------------------------------------------------------------------------


def cells_to_records(cells: Sequence[NmseCell]) -> list[dict[str, Any]]:
    return [c.to_record() for c in cells]


def reference_table(
    cells: Sequence[NmseCell],
    reference: dict[float, dict[str, float]],
    target: Target = "delays",
) -> list[dict[str, Any]]:
    """One row per SNR: our NMSE per model next to the published columns."""
    rows: dict[float, dict[str, Any]] = {}
    for c in cells:
        if c.target != target or c.delta_tau is not None:
            continue
        row = rows.setdefault(c.snr_db, {"snr_db": c.snr_db})
        row[c.model_id] = round(c.nmse_db, 6)
    for snr, row in rows.items():
        for name, value in reference.get(snr, {}).items():
            row[f"ref_{name}"] = value
    return [rows[k] for k in sorted(rows)]


def plotdata(
    cells: Sequence[NmseCell], x: Literal["snr_db", "delta_tau"] = "snr_db"
) -> list[dict[str, Any]]:
    """
    x/y series, one per curve. For x="snr_db" a curve is (model, target); for
    x="delta_tau" it is (model, target, SNR).
    """
    curves: dict[str, dict[str, list[float]]] = {}
    for c in cells:
        if x == "snr_db":
            if c.delta_tau is not None:
                continue
            name = f"{c.model_id}:{c.target}"
            xv = c.snr_db
        else:
            if c.delta_tau is None:
                continue
            name = f"{c.model_id}:{c.target}:snr={c.snr_db:g}"
            xv = c.delta_tau
        s = curves.setdefault(name, {"x": [], "y": []})
        s["x"].append(xv)
        s["y"].append(c.nmse_db)
    out = []
    for name, s in curves.items():
        order = np.argsort(s["x"], kind="stable")
        out.append(
            {
                "name": name,
                "x_label": x,
                "y_label": "nmse_db",
                "x": [s["x"][i] for i in order],
                "y": [s["y"][i] for i in order],
            }
        )
    return out


def kernel_series(kernels: dict[str, Kernel], points: int = 601) -> list[dict[str, Any]]:
    """Kernel shapes as plot series over each kernel's own support."""
    out = []
    for name, k in kernels.items():
        rows = dump_kernel_points(k, points)
        out.append(
            {
                "name": name,
                "x_label": "t",
                "y_label": "g",
                "x": [r["t"] for r in rows],
                "y": [r["g"] for r in rows],
            }
        )
    return out


def write_table(cells: Sequence[NmseCell], out_dir: Path, name: str) -> tuple[Path, Path]:
    """`<name>.csv` with the cell schema plus the same rows as `<name>.json`."""
    records = cells_to_records(cells)
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}.json"
    write_csv(records, csv_path, fieldnames=CSV_FIELDS)
    write_json(records, json_path)
    log.info("wrote %s and %s", csv_path, json_path)
    return csv_path, json_path
