# src/fri_forge/cli.py
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, NoReturn

import numpy as np

from .config import resolve_threads
from .errors import ConfigError, FriForgeError, InputError, UsageError
from .io.exports import read_ndjson, write_csv, write_json, write_ndjson
from .utils.logging import configure_logging

log = logging.getLogger(__name__)

DEFAULT_SNRS = (5.0, 15.0, 25.0, 40.0)
# rectangle width for bench runs whose training pulse was a dirac
BENCH_WIDTH = 0.002
DEFAULT_KERNEL: dict[str, Any] = {"type": "bspline", "params": {"init": "gaussian"}}


# ----------------------------------------------------------------------------
# Shared helpers
# ----------------------------------------------------------------------------


def _floats(spec: str | None, default: Sequence[float]) -> list[float]:
    if spec is None:
        return [float(x) for x in default]
    try:
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigError(f"expected a comma-separated list of numbers, got {spec!r}") from e


def _read_records(path: Path) -> list[dict[str, Any]]:
    try:
        records = list(read_ndjson(path))
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed NDJSON in {path}: {e}") from e
    if not records:
        raise ConfigError(f"no records in {path}")
    return records


def _emit(payload: Any, out: Path | None) -> None:
    if out is None:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        write_json(payload, out)
        print(f"Wrote JSON to {out}")


def _kernel_dict(path: Path | None) -> dict[str, Any]:
    from .config import load_json_config

    return load_json_config(path) if path is not None else dict(DEFAULT_KERNEL)


def _ranges(cfg: dict[str, Any], order: int | None) -> Any:
    from .models import GenerationRanges

    base = GenerationRanges.default().to_dict()
    merged = {**base, **cfg}
    if order is not None:
        merged["L"] = order
    return GenerationRanges.from_dict(merged)


# ----------------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------------


def _generate_chunk(
    ranges_d: dict[str, Any],
    pulse: str,
    kernel_d: dict[str, Any],
    grid_d: dict[str, Any],
    snr: str,
    count: int,
    seed: int,
    offset: int,
) -> list[dict[str, Any]]:
    """Worker: plain-dict arguments keep it picklable for ProcessPoolExecutor."""
    from .kernels import kernel_from_dict
    from .models import GenerationRanges, SampleGrid, example_record, parse_pulse
    from .sampler import SnrPolicy, stream_dataset

    stream = stream_dataset(
        GenerationRanges.from_dict(ranges_d),
        parse_pulse(pulse),
        kernel_from_dict(kernel_d),
        SampleGrid.from_dict(grid_d),
        SnrPolicy.parse(snr),
        count,
        seed,
        offset,
    )
    return [dict(example_record(y, s)) for y, s in stream]


def _cmd_generate(args: argparse.Namespace, threads: int) -> int:
    from .config import load_json_config
    from .kernels import kernel_from_dict
    from .models import parse_pulse
    from .sampler import grid_for_kernel

    kernel_d = _kernel_dict(args.kernel)
    kernel = kernel_from_dict(kernel_d)
    ranges = _ranges(load_json_config(args.ranges), args.L)
    grid = grid_for_kernel(kernel, ranges, args.N, args.grid_convention, args.period, args.t_start)
    pulse = args.pulse
    parse_pulse(pulse)

    parts = max(1, min(threads, args.count))
    sizes = [args.count // parts + (1 if i < args.count % parts else 0) for i in range(parts)]
    offsets = [sum(sizes[:i]) for i in range(parts)]
    jobs = [
        (ranges.to_dict(), pulse, kernel.to_dict(), grid.to_dict(), args.snr, n, args.seed, o)
        for n, o in zip(sizes, offsets, strict=True)
    ]
    chunks: list[list[dict[str, Any]] | None] = [None] * parts
    if parts == 1:
        chunks[0] = _generate_chunk(*jobs[0])
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            futures = {ex.submit(_generate_chunk, *job): i for i, job in enumerate(jobs)}
            for fut in as_completed(futures):
                chunks[futures[fut]] = fut.result()
    records = [r for c in chunks if c is not None for r in c]
    n = write_ndjson(records, args.out)
    # dataset settings sit next to the data as <stem>.config.json
    write_json(
        {
            "ranges": ranges.to_dict(),
            "grid": grid.to_dict(),
            "pulse": pulse,
            "kernel": kernel.to_dict(),
            "snr": args.snr,
            "count": args.count,
            "seed": args.seed,
        },
        args.out.with_name(f"{args.out.stem}.config.json"),
    )
    print(f"Wrote {n} examples to {args.out}")
    return 0


# ----------------------------------------------------------------------------
# train
# ----------------------------------------------------------------------------


def _cmd_train(args: argparse.Namespace, threads: int) -> int:
    from .config import apply_overrides, load_json_config, write_resolved_config
    from .encoder import EncoderConfig, build_encoder
    from .kernels import kernel_from_dict
    from .sampler import grid_for_kernel
    from .trainer import BatchStream, TrainConfig, train

    cfg = load_json_config(args.config)
    kernel_d = load_json_config(args.kernel) if args.kernel else cfg.get("kernel", DEFAULT_KERNEL)
    kernel = kernel_from_dict(kernel_d)
    ranges = _ranges(cfg.get("ranges", {}), args.L)
    grid_cfg = cfg.get("grid", {})
    n = args.N or int(grid_cfg.get("N", 21))
    grid = grid_for_kernel(
        kernel,
        ranges,
        n,
        args.grid_convention or grid_cfg.get("convention"),
        args.period if args.period is not None else grid_cfg.get("T_s"),
        args.t_start if args.t_start is not None else grid_cfg.get("t_start"),
    )

    train_d = apply_overrides(
        cfg.get("train", {}),
        mode=args.mode,
        epochs=args.epochs,
        batch_size=args.batch,
        examples_per_epoch=args.examples,
        seed=args.seed,
        snr=args.snr,
        pulse=args.pulse,
        lr_encoder=args.lr_encoder,
        lr_kernel=args.lr_kernel,
    )
    if args.budget:
        train_d = {**TrainConfig.budget(args.budget).to_dict(), **train_d}
    tc = TrainConfig.from_dict(train_d)

    enc_d = load_json_config(args.encoder) if args.encoder else cfg.get("encoder", {})
    enc_d = {**enc_d, "N": grid.n, "L": ranges.order}
    encoder = build_encoder(EncoderConfig.from_dict(enc_d))

    args.out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(
        args.out,
        {
            "model_id": args.model_id or args.out.name,
            "ranges": ranges.to_dict(),
            "grid": grid.to_dict(),
            "pulse": tc.pulse,
            "kernel": kernel.to_dict(),
            "encoder": encoder.config.to_dict(),
            "train": tc.to_dict(),
            "threads": threads,
        },
    )
    stream = BatchStream(ranges, grid, tc.snr_policy, tc.seed)
    report, _ = train(tc, kernel, encoder, stream, args.out)
    print(
        f"Trained {report.steps} steps; best epoch {report.best_epoch} "
        f"({report.best_val_nmse_db:.2f} dB); wrote {args.out}"
    )
    return 0


# ----------------------------------------------------------------------------
# eval / plotdata
# ----------------------------------------------------------------------------

# suite name -> what it measures; the measurement names are accepted as aliases
SUITES = {
    "table1": "snr_sweep",
    "table2": "reduced_samples",
    "table3": "model_order",
    "resolution": "resolution",
}
_SUITE_ALIASES = {kind: name for name, kind in SUITES.items()}


def _cmd_eval(args: argparse.Namespace, threads: int) -> int:
    from .harness import (
        load_bundle,
        plotdata,
        reference_table,
        run_model_order_sweep,
        run_resolution_sweep,
        run_snr_sweep,
        write_table,
    )
    from .reference import reference_columns

    if not args.run:
        raise ConfigError("eval needs at least one --run directory")
    trials = args.trials or (1000 if args.budget == "full" else 200)
    bundles = [load_bundle(p) for p in args.run]
    suite = _SUITE_ALIASES.get(args.suite, args.suite)
    kind = SUITES[suite]

    if kind == "resolution":
        deltas = _floats(args.deltas, [round(0.05 + 0.01 * i, 2) for i in range(6)])
        snrs = _floats(args.snrs, [5, 10, 15, 20, 25, 30, 35, 40])
        cells = []
        for b in bundles:
            cells += run_resolution_sweep(b, deltas, snrs, trials, args.seed, threads)
        write_table(cells, args.out, suite)
        write_json(plotdata(cells, x="delta_tau"), args.out / f"{suite}_plot.json")
        return 0

    if kind == "model_order":
        snrs = _floats(args.snrs, [10, 40])
        cells = run_model_order_sweep(bundles, snrs, trials, args.seed, threads)
    elif kind in ("snr_sweep", "reduced_samples"):
        snrs = _floats(args.snrs, DEFAULT_SNRS)
        method = args.amplitudes or ("ls" if kind == "reduced_samples" else None)
        cells = []
        for b in bundles:
            cells += run_snr_sweep(b, snrs, trials, args.seed, threads, method)
    else:
        raise ConfigError(f"unknown suite {suite!r}")

    write_table(cells, args.out, suite)
    ref = reference_columns(kind)
    rows = reference_table(cells, ref, "delays")
    if kind == "reduced_samples":
        rows += [{**r, "target": "amplitudes"} for r in reference_table(cells, ref, "amplitudes")]
    write_csv(rows, args.out / f"{suite}_reference.csv")
    write_json(plotdata(cells), args.out / f"{suite}_plot.json")
    print(f"Wrote {suite} results to {args.out}")
    return 0


def _cmd_plotdata(args: argparse.Namespace, threads: int) -> int:
    from .harness import NmseCell, kernel_series, plotdata
    from .kernels import load_kernel

    series: list[dict[str, Any]] = []
    if args.input is not None:
        records = json.loads(args.input.read_text(encoding="utf-8"))
        cells = [
            NmseCell(
                float(r["snr_db"]),
                None if r["delta_tau"] in ("", None) else float(r["delta_tau"]),
                r["target"],
                float(r["nmse_db"]),
                int(r["trials"]),
                str(r["model_id"]),
            )
            for r in records
        ]
        series += plotdata(cells, x=args.x)
    if args.kernel:
        series += kernel_series({p.stem: load_kernel(p) for p in args.kernel}, args.points)
    if not series:
        raise ConfigError("plotdata needs --input cells and/or --kernel files")
    _emit(series, args.out)
    return 0


# ----------------------------------------------------------------------------
# oracle / amplitudes
# ----------------------------------------------------------------------------


def _oracle_record(
    rec: dict[str, Any],
    kernel_d: dict[str, Any],
    pulse: str,
    order: int,
    tau_min: float,
    tau_max: float,
    step: float | None,
) -> dict[str, Any]:
    from .kernels import kernel_from_dict
    from .models import parse_pulse, record_samples
    from .oracle import grid_search

    res = grid_search(
        record_samples(rec),
        kernel_from_dict(kernel_d),
        parse_pulse(pulse),
        order,
        tau_min,
        tau_max,
        step,
    )
    return {**rec, **res.to_record()}


def _map_records(
    worker: Any, records: list[dict[str, Any]], extra: tuple[Any, ...], threads: int
) -> list[dict[str, Any]]:
    if threads <= 1 or len(records) <= 1:
        return [worker(r, *extra) for r in records]
    out: list[dict[str, Any] | None] = [None] * len(records)
    with ProcessPoolExecutor(max_workers=threads) as ex:
        futures = {ex.submit(worker, r, *extra): i for i, r in enumerate(records)}
        for done, fut in enumerate(as_completed(futures), start=1):
            out[futures[fut]] = fut.result()
            log.debug("[%d/%d] records", done, len(records))
    return [r for r in out if r is not None]


def _cmd_oracle(args: argparse.Namespace, threads: int) -> int:
    from .config import load_json_config

    records = _read_records(args.input)
    ranges = _ranges(load_json_config(args.ranges), args.L)
    extra = (
        _kernel_dict(args.kernel),
        args.pulse,
        ranges.order,
        ranges.tau_min,
        ranges.tau_max,
        args.step,
    )
    out = _map_records(_oracle_record, records, extra, threads)
    n = write_ndjson(out, args.out)
    print(f"Wrote {n} oracle records to {args.out}")
    return 0


def _amplitude_record(
    rec: dict[str, Any],
    kernel_d: dict[str, Any],
    pulse: str,
    method: str,
    steps: int,
    lr: float | None,
    seed: int,
) -> dict[str, Any]:
    from .amplitudes import AmplitudeProblem, estimate_amplitudes_gd, estimate_amplitudes_ls
    from .kernels import kernel_from_dict
    from .models import parse_pulse, record_samples

    if "tau_hat" not in rec:
        raise ConfigError("amplitude records need predicted delays in 'tau_hat'")
    problem = AmplitudeProblem(
        record_samples(rec),
        np.asarray(rec["tau_hat"], dtype=np.float64),
        kernel_from_dict(kernel_d),
        parse_pulse(pulse),
    )
    if method == "ls":
        a_hat = estimate_amplitudes_ls(problem)
    else:
        a_hat = estimate_amplitudes_gd(problem, steps=steps, lr=lr, seed=seed)
    return {**rec, "a_hat": [float(x) for x in a_hat]}


def _cmd_amplitudes(args: argparse.Namespace, threads: int) -> int:
    records = _read_records(args.input)
    extra = (_kernel_dict(args.kernel), args.pulse, args.method, args.steps, args.lr, args.seed)
    out = _map_records(_amplitude_record, records, extra, threads)
    n = write_ndjson(out, args.out)
    print(f"Wrote {n} records with amplitudes to {args.out}")
    return 0


# ----------------------------------------------------------------------------
# hw / kernel / encoder
# ----------------------------------------------------------------------------


def _cmd_hw_map(args: argparse.Namespace, threads: int) -> int:
    from .hardware import RcRealization, poles_to_rc, round_to_series

    c1 = args.c1 if args.c1 is not None else args.c
    c2 = args.c2 if args.c2 is not None else args.c
    ideal = poles_to_rc(args.alpha1, args.alpha2, c1, c2)
    payload: dict[str, Any] = {
        "poles": {"alpha1": args.alpha1, "alpha2": args.alpha2},
        "ideal": ideal.to_dict(),
    }

    def _describe(real: RcRealization) -> dict[str, Any]:
        d1, d2 = real.drift(args.alpha1, args.alpha2)
        return {**real.to_dict(), "drift": {"alpha1": d1, "alpha2": d2}}

    r1s = round_to_series(ideal.r1, args.series)
    r2s = round_to_series(ideal.r2, args.series)
    payload["series"] = {
        "name": args.series,
        **_describe(RcRealization.from_components(r1s, r2s, c1, c2)),
    }
    if args.r1 is not None and args.r2 is not None:
        payload["given"] = _describe(RcRealization.from_components(args.r1, args.r2, c1, c2))
    _emit(payload, args.out)
    return 0


def _cmd_hw_bench(args: argparse.Namespace, threads: int) -> int:
    from .hardware import RcRealization, poles_to_rc, realization_report, simulate_bench
    from .harness import load_bundle
    from .kernels import TwoExpKernel
    from .models import Rectangle

    bundle = load_bundle(args.run)
    if not isinstance(bundle.kernel, TwoExpKernel):
        raise ConfigError(f"bench simulation needs a two_exp kernel, run has {bundle.kernel.kind}")
    learned = bundle.kernel
    if args.r1 is not None and args.r2 is not None:
        real = RcRealization.from_components(args.r1, args.r2, args.c, args.c)
    else:
        real = poles_to_rc(learned.alpha1, learned.alpha2, args.c, args.c)
    width = args.width
    if width is None:
        width = bundle.pulse.width if isinstance(bundle.pulse, Rectangle) else BENCH_WIDTH

    bench = simulate_bench(
        real,
        bundle.encoder,
        bundle.grid,
        delays=tuple(_floats(args.delays, (0.2, 0.5))),
        amplitudes=tuple(_floats(args.amplitudes, (1.0, 1.0))),
        pulse_width=width,
        capture_rate=args.rate,
    )
    report = realization_report(
        learned,
        real,
        encoder=bundle.encoder,
        grid=bundle.grid,
        pulse=bundle.pulse,
        ranges=bundle.ranges,
        trials=args.trials,
        seed=args.seed,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(
        {"bench": bench.to_dict(), "pulse_width": width, "report": report.to_dict()},
        args.out / "bench.json",
    )
    write_csv(
        [
            {"t": float(t), "y": float(y)}
            for t, y in zip(bench.capture_t, bench.capture_y, strict=True)
        ],
        args.out / "capture.csv",
        fieldnames=["t", "y"],
    )
    print(f"Bench NMSE {bench.nmse_db:.2f} dB; wrote {args.out}")
    return 0


def _cmd_kernel_dump(args: argparse.Namespace, threads: int) -> int:
    from .kernels import dump_kernel_points, load_kernel

    rows = dump_kernel_points(load_kernel(args.config), args.points)
    if args.out is None:
        w = csv.DictWriter(sys.stdout, fieldnames=["t", "g"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        write_csv(rows, args.out, fieldnames=["t", "g"])
    return 0


def _cmd_encoder_info(args: argparse.Namespace, threads: int) -> int:
    from .config import load_json_config
    from .encoder import EncoderConfig, build_encoder

    d = load_json_config(args.config)
    if args.N is not None:
        d["N"] = args.N
    if args.L is not None:
        d["L"] = args.L
    d.setdefault("N", 21)
    d.setdefault("L", 2)
    model = build_encoder(EncoderConfig.from_dict(d))
    rows = model.layer_table()
    if args.json:
        payload = {"layers": rows, "parameters": model.parameter_count(), **model.config.to_dict()}
        _emit(payload, None)
        return 0
    print(f"{'layer':<8} {'kind':<12} {'shape':<14} {'params':>8}")
    for r in rows:
        print(f"{r['layer']:<8} {r['kind']:<12} {r['shape']:<14} {r['params']:>8}")
    print(f"total parameters: {model.parameter_count()}")
    return 0


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage problems raise `UsageError` so `main` reports them like any other failure."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, default=None, help="Model order (pulses per signal)")
    p.add_argument("--n", "--N", dest="N", type=int, default=None, help="Samples per example")
    p.add_argument(
        "--grid-convention",
        choices=["full", "delays"],
        default=None,
        help="Sampling window: kernel-extended delay range (full) or the delay range only "
        "(delays; shifted late for causal kernels)",
    )
    p.add_argument("--period", type=float, default=None, help="Explicit sampling period T_s")
    p.add_argument("--t-start", type=float, default=None, help="First sampling instant")
    p.add_argument("--pulse", default=None, help="dirac or rectangle:<width seconds>")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="fri-forge",
        description="Learnable-kernel sampling of pulse streams: data, training, evaluation.",
    )
    p.add_argument("--debug", action="store_true", help="Enable debug logging")
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker processes (default: $FRI_FORGE_THREADS, else 1)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="Write a seeded labeled dataset as NDJSON")
    _add_data_flags(g)
    g.add_argument("--ranges", type=Path, default=None, help="GenerationRanges JSON")
    g.add_argument("--kernel", type=Path, default=None, help="Kernel JSON")
    g.add_argument("--count", type=int, default=1000, help="Number of examples")
    g.add_argument("--snr", default="clean", help="clean, <dB> or <lo>:<hi>")
    g.add_argument("--seed", type=int, default=0, help="Stream seed")
    g.add_argument("--out", "-o", type=Path, required=True, help="Output NDJSON path")
    g.set_defaults(func=_cmd_generate, N=21, pulse="dirac")

    t = sub.add_parser("train", help="Train the encoder alone or jointly with the kernel")
    _add_data_flags(t)
    t.add_argument("--config", type=Path, default=None, help="Run config JSON")
    t.add_argument("--mode", choices=["encoder-only", "joint"], default=None)
    t.add_argument("--kernel", type=Path, default=None, help="Kernel JSON")
    t.add_argument("--encoder", type=Path, default=None, help="Encoder config JSON")
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--batch", type=int, default=None, help="Batch size")
    t.add_argument("--examples", type=int, default=None, help="Fresh examples per epoch")
    t.add_argument("--budget", choices=["desk", "full"], default=None, help="Training preset")
    t.add_argument("--snr", default=None, help="Training SNR policy (default 5:40)")
    t.add_argument("--lr-encoder", type=float, default=None)
    t.add_argument("--lr-kernel", type=float, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--model-id", default=None, help="Label used in evaluation tables")
    t.add_argument("--out", "-o", type=Path, required=True, help="Run directory")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="Run an evaluation suite over trained runs")
    e.add_argument(
        "--suite",
        choices=[*SUITES, *(k for k in _SUITE_ALIASES if k not in SUITES)],
        required=True,
    )
    e.add_argument("--run", type=Path, action="append", default=[], help="Run directory")
    e.add_argument("--trials", type=int, default=None, help="Test examples per cell")
    e.add_argument("--budget", choices=["desk", "full"], default="desk")
    e.add_argument("--snrs", default=None, help="Comma-separated SNRs in dB")
    e.add_argument("--deltas", default=None, help="Comma-separated separations (resolution)")
    e.add_argument("--amplitudes", choices=["ls", "gd"], default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", "-o", type=Path, required=True, help="Results directory")
    e.set_defaults(func=_cmd_eval)

    o = sub.add_parser("oracle", help="Grid-search reference estimates for NDJSON examples")
    o.add_argument("--input", "-i", type=Path, required=True)
    o.add_argument("--kernel", type=Path, default=None)
    o.add_argument("--ranges", type=Path, default=None, help="Delay search range JSON")
    o.add_argument("--L", type=int, default=None)
    o.add_argument("--pulse", default="dirac")
    o.add_argument("--step", type=float, default=None, help="Delay grid step (default T_s/32)")
    o.add_argument("--out", "-o", type=Path, required=True)
    o.set_defaults(func=_cmd_oracle)

    a = sub.add_parser("amplitudes", help="Estimate amplitudes for records with tau_hat")
    a.add_argument("--input", "-i", type=Path, required=True)
    a.add_argument("--kernel", type=Path, default=None)
    a.add_argument("--pulse", default="dirac")
    a.add_argument("--method", choices=["ls", "gd"], default="ls")
    a.add_argument("--steps", type=int, default=10_000, help="Gradient-descent steps")
    a.add_argument("--lr", type=float, default=None, help="Gradient-descent step size")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", "-o", type=Path, required=True)
    a.set_defaults(func=_cmd_amplitudes)

    hw = sub.add_parser("hw", help="Analog two-pole filter realization")
    hw_sub = hw.add_subparsers(dest="hw_command", required=True)
    hm = hw_sub.add_parser("map", help="Poles to Sallen-Key components")
    hm.add_argument("--alpha1", type=float, required=True)
    hm.add_argument("--alpha2", type=float, required=True)
    hm.add_argument("--c", type=float, default=1e-6, help="Both capacitors (farads)")
    hm.add_argument("--c1", type=float, default=None)
    hm.add_argument("--c2", type=float, default=None)
    hm.add_argument("--series", choices=["E12", "E24", "E96"], default="E24")
    hm.add_argument("--r1", type=float, default=None, help="Chosen R1 to report drift for")
    hm.add_argument("--r2", type=float, default=None, help="Chosen R2 to report drift for")
    hm.add_argument("--out", "-o", type=Path, default=None)
    hm.set_defaults(func=_cmd_hw_map)

    hb = hw_sub.add_parser("simulate-bench", help="Bench scenario through the realized filter")
    hb.add_argument("--run", type=Path, required=True, help="Run trained with a two_exp kernel")
    hb.add_argument("--r1", type=float, default=None)
    hb.add_argument("--r2", type=float, default=None)
    hb.add_argument("--c", type=float, default=1e-6)
    hb.add_argument("--delays", default=None, help="Comma-separated pulse delays")
    hb.add_argument("--amplitudes", default=None, help="Comma-separated pulse amplitudes")
    hb.add_argument(
        "--width",
        type=float,
        default=None,
        help=f"Bench rectangle width (s); defaults to the run's pulse, else {BENCH_WIDTH}",
    )
    hb.add_argument("--rate", type=float, default=200.0, help="Capture rate (Hz)")
    hb.add_argument("--trials", type=int, default=1000)
    hb.add_argument("--seed", type=int, default=0)
    hb.add_argument("--out", "-o", type=Path, required=True)
    hb.set_defaults(func=_cmd_hw_bench)

    k = sub.add_parser("kernel", help="Kernel utilities")
    k_sub = k.add_subparsers(dest="kernel_command", required=True)
    kd = k_sub.add_parser("dump", help="Kernel values across its support as CSV")
    kd.add_argument("--config", type=Path, required=True)
    kd.add_argument("--points", type=int, default=601)
    kd.add_argument("--out", "-o", type=Path, default=None, help="CSV path (default stdout)")
    kd.set_defaults(func=_cmd_kernel_dump)

    en = sub.add_parser("encoder", help="Encoder utilities")
    en_sub = en.add_subparsers(dest="encoder_command", required=True)
    ei = en_sub.add_parser("info", help="Layer table and parameter count")
    ei.add_argument("--config", type=Path, default=None)
    ei.add_argument("--n", "--N", dest="N", type=int, default=None, help="Samples per example")
    ei.add_argument("--L", type=int, default=None)
    ei.add_argument("--json", action="store_true", help="Print JSON instead of a table")
    ei.set_defaults(func=_cmd_encoder_info)

    pd = sub.add_parser("plotdata", help="x/y series from evaluation cells or kernels")
    pd.add_argument("--input", "-i", type=Path, default=None, help="Cells JSON from eval")
    pd.add_argument("--x", choices=["snr_db", "delta_tau"], default="snr_db")
    pd.add_argument("--kernel", type=Path, action="append", default=[])
    pd.add_argument("--points", type=int, default=601)
    pd.add_argument("--out", "-o", type=Path, default=None)
    pd.set_defaults(func=_cmd_plotdata)

    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args: argparse.Namespace = build_parser().parse_args(argv)
        configure_logging(debug=args.debug)
        threads = resolve_threads(args.threads)
        return int(args.func(args, threads))
    except FriForgeError as e:
        err: FriForgeError = e
    except json.JSONDecodeError as e:
        err = ConfigError(f"malformed JSON input: {e}")
    except KeyError as e:
        err = ConfigError(f"input record is missing field {e}")
    except OSError as e:
        err = InputError(str(e))
    log.debug("command failed", exc_info=err)
    print(json.dumps(err.to_record(), ensure_ascii=False))
    return err.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
