"""``herder`` command line: run, compare, sweep, generate, reference.

Every command writes CSV files into ``--out``. Each CSV starts with a
``# schema=<name>/<version>`` comment line followed by a header row.

Exit codes: 0 success, 2 usage or parameter error, 3 data error, 4 internal.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, _accel
from .aco_core import AcoParams
from .datasets import DatasetError, generate_dmkp, read_best_known, read_dmkp, save_dmkp, write_best_known
from .metrics import Summary, aggregate, convergence_curve, result_gap, t_test
from .problem import DmkpInstance, random_mkp
from .runner import ITERATIONS, WALL_CLOCK, ConfigurationError, RunConfig, RunRecord, pooled_best, run_batch
from .strategies import PARAM_ALIASES, SWEEP_DEFAULTS, TUNED, AphidParams, StrategyKind

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4

RUNS_SCHEMA = "herder.runs/1"
TIMINGS_SCHEMA = "herder.timings/1"
SUMMARY_SCHEMA = "herder.summary/1"
TTEST_SCHEMA = "herder.ttests/1"
TABLE_SCHEMA = "herder.table/1"
SWEEP_SCHEMA = "herder.sweep/1"

RUNS_COLUMNS = ["run_id", "state", "first_profit", "final_profit", "iterations", "elapsed_ms", "gap", "slip", "new_best"]

# one-parameter-at-a-time ranges: (min, max, step)
SWEEP_RANGES = {"Ar": (0.0, 2.0, 0.25), "Ah": (0.0, 2.0, 0.25), "Al": (0.0, 2.0, 0.25), "Ak": (0.01, 1.0, 0.2)}

DEFAULTS = {
    "budget": "time",
    "iters": 100,
    "seconds_per_200": 1.0,
    "runs": 10,
    "seed": 0,
    "ants": 512,
    "alpha": 1.0,
    "beta": 0.0,
    "gamma": 8.0,
    "q0": 0.01,
    "rho": 0.1,
    "tightness": 0.5,
    "out": "out",
}


class UsageFailure(Exception):
    pass


# ---------------------------------------------------------------- arguments


def _common(p: argparse.ArgumentParser, strategy: bool = True) -> None:
    src = p.add_argument_group("dataset")
    src.add_argument("--dataset", action="append", metavar="PATH", help="DMKP file (repeatable for compare/sweep)")
    src.add_argument("--generate", action="append", metavar="n,m,S,delta,seed", help="generate an instance instead")
    src.add_argument("--tightness", type=float, help="capacity tightness of generated bases (default 0.5)")
    src.add_argument("--best-known", action="append", metavar="PATH",
                     help="best-known file, one per dataset; otherwise the pooled observed best is used")
    p.add_argument("--config", metavar="JSON", help="config file; flags override it")
    if strategy:
        p.add_argument("--strategy", choices=[k.value for k in StrategyKind])
    p.add_argument("--budget", choices=["time", "iters"])
    p.add_argument("--iters", type=int, help="iterations per state in iters mode")
    p.add_argument("--seconds-per-200", type=float, dest="seconds_per_200", help="time mode: seconds per 200 items")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, help="worker threads (falls back to HERDER_THREADS)")
    p.add_argument("--ants", type=int, help="ants per iteration")
    for name in ("alpha", "beta", "gamma", "q0", "rho"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--fixed", action="append", metavar="K=V", default=None,
                   help="aphid parameter override, e.g. Ar=1.5 (repeatable)")
    p.add_argument("--out", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="herder", description="ACO with Aphids for the dynamic MKP")
    parser.add_argument("--version", action="version", version=f"herder {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one strategy")
    _common(p)

    p = sub.add_parser("compare", help="run all strategies under identical budgets and seeds")
    _common(p, strategy=False)
    p.add_argument("--svg", action="store_true", help="also write a convergence chart (needs matplotlib)")

    p = sub.add_parser("sweep", help="vary one aphid parameter")
    _common(p, strategy=False)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_RANGES))
    p.add_argument("--min", type=float, dest="vmin")
    p.add_argument("--max", type=float, dest="vmax")
    p.add_argument("--step", type=float)

    p = sub.add_parser("generate", help="write a generated instance to a DMKP file")
    p.add_argument("--generate", required=True, metavar="n,m,S,delta,seed")
    p.add_argument("--tightness", type=float, default=DEFAULTS["tightness"])
    p.add_argument("--output", required=True, metavar="PATH")

    p = sub.add_parser("reference", help="best-known values from a long Full-Restart run")
    _common(p, strategy=False)
    p.add_argument("--output", required=True, metavar="PATH")
    return parser


def _settings(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over the built-in defaults."""
    merged = dict(DEFAULTS)
    merged["aphids"] = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageFailure("config file must hold a JSON object")
        unknown = set(cfg) - set(DEFAULTS) - {"aphids", "strategy", "dataset", "generate", "best_known", "threads"}
        if unknown:
            raise UsageFailure(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: v for k, v in cfg.items() if k != "aphids"})
        merged["aphids"].update(cfg.get("aphids", {}))
    for key, value in vars(args).items():
        if value is None or key in ("config", "fixed", "command"):
            continue
        merged[key] = value
    for item in getattr(args, "fixed", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageFailure(f"--fixed expects K=V, got {item!r}")
        try:
            merged["aphids"][key.strip()] = float(value)
        except ValueError:
            raise UsageFailure(f"--fixed value for {key} is not a number") from None
    return merged


def _aphid_params(overrides: dict, base: AphidParams = TUNED) -> AphidParams:
    fields = {}
    for key, value in overrides.items():
        name = PARAM_ALIASES.get(key, key)
        if name not in PARAM_ALIASES.values():
            raise UsageFailure(f"unknown aphid parameter {key!r}; choose from {sorted(PARAM_ALIASES)}")
        fields[name] = float(value)
    try:
        return base.with_(**fields)
    except ValueError as exc:
        raise UsageFailure(str(exc)) from None


def _run_config(s: dict, strategy: str | StrategyKind, aphids: AphidParams | None = None) -> RunConfig:
    try:
        aco = AcoParams(
            alpha=float(s["alpha"]),
            beta=float(s["beta"]),
            gamma=float(s["gamma"]),
            q0=float(s["q0"]),
            rho=float(s["rho"]),
            ants_per_iteration=int(s["ants"]),
        )
        return RunConfig(
            strategy=StrategyKind.parse(strategy),
            budget_mode=ITERATIONS if s["budget"] == "iters" else WALL_CLOCK,
            seconds_per_200_items=float(s["seconds_per_200"]),
            iterations_per_state=int(s["iters"]),
            runs=int(s["runs"]),
            master_seed=int(s["seed"]),
            aco=aco,
            aphids=aphids if aphids is not None else _aphid_params(s["aphids"]),
        )
    except (ValueError, ConfigurationError) as exc:
        raise UsageFailure(str(exc)) from None


# ---------------------------------------------------------------- datasets


def parse_generate(spec: str) -> tuple[int, int, int, float, int]:
    parts = spec.split(",")
    if len(parts) != 5:
        raise UsageFailure(f"--generate expects n,m,S,delta,seed; got {spec!r}")
    try:
        n, m, s = (int(x) for x in parts[:3])
        delta, seed = float(parts[3]), int(parts[4])
    except ValueError:
        raise UsageFailure(f"--generate expects n,m,S,delta,seed; got {spec!r}") from None
    if n < 1 or m < 1 or s < 0 or not 0.0 <= delta <= 1.0:
        raise UsageFailure("--generate needs n, m >= 1, S >= 0 and 0 <= delta <= 1")
    return n, m, s, delta, seed


def generated_instance(spec: str, tightness: float = 0.5) -> DmkpInstance:
    """Instance with ``S`` states after the base (``S + 1`` states in total)."""
    n, m, s, delta, seed = parse_generate(spec)
    try:
        base = random_mkp(n, m, seed=seed, tightness=tightness)
    except ValueError as exc:
        raise UsageFailure(str(exc)) from None
    name = f"gen-{n}x{m}-S{s}-d{delta:g}-seed{seed}"
    return generate_dmkp(base, delta, s, seed=seed, name=name)


@dataclass
class Dataset:
    instance: DmkpInstance
    best_known: dict[int, int] | None
    source: str


def _datasets(s: dict) -> list[Dataset]:
    paths = s.get("dataset") or []
    gens = s.get("generate") or []
    if isinstance(paths, str):
        paths = [paths]
    if isinstance(gens, str):
        gens = [gens]
    if not paths and not gens:
        raise UsageFailure("one of --dataset or --generate is required")
    missing = [p for p in paths if not Path(p).is_file()]
    if missing:
        raise UsageFailure(f"dataset not found: {', '.join(map(str, missing))}")
    out = [Dataset(read_dmkp(p), None, str(p)) for p in paths]
    out += [Dataset(generated_instance(g, float(s["tightness"])), None, g) for g in gens]
    bks = s.get("best_known") or []
    if isinstance(bks, str):
        bks = [bks]
    if bks:
        if len(bks) != len(out):
            raise UsageFailure(f"got {len(bks)} --best-known files for {len(out)} datasets")
        for ds, path in zip(out, bks):
            ds.best_known = read_best_known(path)
    for ds in out:
        if ds.best_known is None and ds.instance.best_known:
            ds.best_known = dict(ds.instance.best_known)
    return out


# ---------------------------------------------------------------- csv


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def write_csv(path: Path, schema: str, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={schema} herder={__version__}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path: str | Path) -> tuple[str, list[dict[str, str]]]:
    """Return ``(schema, rows)`` of a file written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema="):
            raise DatasetError(f"{path}: missing schema comment")
        schema = first.split()[1].split("=", 1)[1]
        return schema, list(csv.DictReader(fh))


def _run_rows(records: Sequence[RunRecord], bk: dict[int, int], timed: bool):
    for rec in records:
        prev_gap = None
        for res in rec.states:
            has_bk = res.state_index in bk
            gap = result_gap(res.final_profit, bk[res.state_index]) if has_bk else None
            first_gap = result_gap(res.first_iteration_profit, bk[res.state_index]) if has_bk else None
            slip = first_gap - prev_gap if (first_gap is not None and prev_gap is not None) else None
            prev_gap = gap
            yield [
                rec.run_id,
                res.state_index,
                res.first_iteration_profit,
                res.final_profit,
                res.iterations,
                res.elapsed * 1000.0 if timed else None,
                gap,
                slip,
                bool(has_bk and res.final_profit > bk[res.state_index]),
            ]


def _write_runs(out: Path, records, bk, timed: bool, suffix: str = "") -> None:
    write_csv(out / f"runs{suffix}.csv", RUNS_SCHEMA, RUNS_COLUMNS, _run_rows(records, bk, timed))
    # wall-clock timings live apart so that runs.csv is reproducible in iters mode
    write_csv(
        out / f"timings{suffix}.csv",
        TIMINGS_SCHEMA,
        ["run_id", "state", "iterations", "elapsed_ms"],
        ([r.run_id, s.state_index, s.iterations, s.elapsed * 1000.0] for r in records for s in r.states),
    )


SUMMARY_COLUMNS = ["strategy", "instance", "delta", "group", "runs", "mean_gap", "gap_std", "mean_slip",
                   "new_best_states", "best_known_source"]


def _summary_row(strategy: str, inst: DmkpInstance, summary: Summary, source: str) -> list:
    return [strategy, inst.name, inst.delta, f"{inst.n}x{inst.m}", summary.runs, summary.mean_gap,
            summary.gap_std, summary.mean_slip, summary.new_best_states, source]


# ---------------------------------------------------------------- commands


def _setup(args) -> tuple[dict, Path, list[Dataset]]:
    s = _settings(args)
    _accel.set_threads(s.get("threads"))
    datasets = _datasets(s)
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    return s, out, datasets


def _best_known(ds: Dataset, records: Sequence[RunRecord]) -> tuple[dict[int, int], str]:
    if ds.best_known:
        return ds.best_known, "file"
    return pooled_best(records), "observed"


def cmd_run(args) -> int:
    s, out, datasets = _setup(args)
    if len(datasets) != 1:
        raise UsageFailure("run takes exactly one dataset")
    ds = datasets[0]
    cfg = _run_config(s, s.get("strategy") or StrategyKind.APHIDS)
    records = run_batch(ds.instance, cfg)
    bk, source = _best_known(ds, records)
    _write_runs(out, records, bk, cfg.budget_mode == WALL_CLOCK)
    summary = aggregate(records, bk)
    write_csv(out / "summary.csv", SUMMARY_SCHEMA, SUMMARY_COLUMNS,
              [_summary_row(cfg.strategy.value, ds.instance, summary, source)])
    print(f"{cfg.strategy.value}: mean gap {summary.mean_gap:.4f}%  slip {summary.mean_slip:.4f}%  ({source} best-known)")
    return EXIT_OK


def _write_svg(path: Path, curves: dict[str, tuple]) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageFailure("--svg needs matplotlib (pip install matplotlib)") from None
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (xs, ys) in curves.items():
        ax.plot(xs, ys, label=name)
    ax.set_xlabel("normalised time in state")
    ax.set_ylabel("mean result gap (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_compare(args) -> int:
    s, out, datasets = _setup(args)
    kinds = list(StrategyKind)
    batches: dict[StrategyKind, list[list[RunRecord]]] = {k: [] for k in kinds}
    for ds in datasets:
        for kind in kinds:
            batches[kind].append(run_batch(ds.instance, _run_config(s, kind)))
    timed = s["budget"] == "time"
    summary_rows, run_gaps, shapes = [], {k: [] for k in kinds}, {}
    per_dataset_gaps: list[dict[StrategyKind, np.ndarray]] = []
    bks = []
    for i, ds in enumerate(datasets):
        # the same best-known for every strategy on a dataset
        everything = [r for k in kinds for r in batches[k][i]]
        bk, source = _best_known(ds, everything)
        bks.append(bk)
        gaps_here = {}
        for kind in kinds:
            recs = batches[kind][i]
            suffix = f"_{kind.value}" if len(datasets) == 1 else f"_{i}_{kind.value}"
            _write_runs(out, recs, bk, timed, suffix)
            summary = aggregate(recs, bk)
            summary_rows.append(_summary_row(kind.value, ds.instance, summary, source))
            run_gaps[kind].extend(summary.run_gaps.tolist())
            gaps_here[kind] = summary.run_gaps
            shapes[(kind, ds.instance.delta, f"{ds.instance.n}x{ds.instance.m}")] = summary.mean_gap
        per_dataset_gaps.append(gaps_here)
    write_csv(out / "summary.csv", SUMMARY_SCHEMA, SUMMARY_COLUMNS, summary_rows)

    rows = []
    for a, b in itertools.combinations(kinds, 2):
        for i, ds in enumerate(datasets):
            r = t_test(per_dataset_gaps[i][a], per_dataset_gaps[i][b])
            rows.append([ds.instance.name, a.value, b.value, r.t, r.df, r.p, r.p_below_floor])
        if len(datasets) > 1:
            r = t_test(run_gaps[a], run_gaps[b])
            rows.append(["pooled", a.value, b.value, r.t, r.df, r.p, r.p_below_floor])
    write_csv(out / "ttests.csv", TTEST_SCHEMA, ["scope", "a", "b", "t", "df", "p", "p_below_floor"], rows)

    # strategy x dynamism x group, mean gaps averaged over the datasets in a cell
    cells = sorted({(d, g) for (_, d, g) in shapes})
    table = []
    for kind in kinds:
        row = [kind.value]
        for d, g in cells:
            vals = [v for (k, dd, gg), v in shapes.items() if k is kind and dd == d and gg == g]
            row.append(float(np.mean(vals)))
        row.append(float(np.mean(row[1:])))
        table.append(row)
    write_csv(out / "table.csv", TABLE_SCHEMA, ["strategy"] + [f"delta={d:g}|{g}" for d, g in cells] + ["average"], table)

    if getattr(args, "svg", False):
        mode = WALL_CLOCK if timed else ITERATIONS
        curves = {k.value: convergence_curve(list(zip(batches[k], bks)), budget_mode=mode) for k in kinds}
        _write_svg(out / "convergence.svg", curves)
    for row in summary_rows:
        print(f"{row[0]:>18} {row[1]}: mean gap {row[5]:.4f}%  slip {row[7]:.4f}%")
    return EXIT_OK


def sweep_values(vmin: float, vmax: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageFailure("--step must be > 0")
    if vmin > vmax:
        raise UsageFailure("--min must not exceed --max")
    count = int(math.floor((vmax - vmin) / step + 1e-9)) + 1
    return [round(vmin + i * step, 10) for i in range(count)]


def cmd_sweep(args) -> int:
    s, out, datasets = _setup(args)
    lo, hi, step = SWEEP_RANGES[args.param]
    values = sweep_values(lo if args.vmin is None else args.vmin, hi if args.vmax is None else args.vmax,
                          step if args.step is None else args.step)
    base = _aphid_params(s["aphids"], SWEEP_DEFAULTS)
    batches: list[list[list[RunRecord]]] = []
    for v in values:
        params = _aphid_params({args.param: v}, base)
        cfg = _run_config(s, StrategyKind.APHIDS, params)
        batches.append([run_batch(ds.instance, cfg) for ds in datasets])
    rows = []
    for i, ds in enumerate(datasets):
        bk, source = _best_known(ds, [r for b in batches for r in b[i]])
        for j, v in enumerate(values):
            summ = aggregate(batches[j][i], bk)
            rows.append([args.param, v, ds.instance.name, summ.runs, summ.mean_gap, summ.gap_std, summ.mean_slip, source])
    means = [float(np.mean([r[4] for r in rows if r[1] == v])) for v in values]
    best = int(np.argmin(means))
    for row in rows:
        row.append(row[1] == values[best])
    write_csv(out / "sweep.csv", SWEEP_SCHEMA,
              ["param", "value", "instance", "runs", "mean_gap", "gap_std", "mean_slip", "best_known_source", "best"],
              rows)
    for v, m in zip(values, means):
        print(f"{args.param}={v:g}: mean gap {m:.4f}%{'  <- best' if v == values[best] else ''}")
    return EXIT_OK


def cmd_generate(args) -> int:
    inst = generated_instance(args.generate, args.tightness)
    save_dmkp(inst, args.output)
    print(f"wrote {inst.name} ({len(inst)} states) to {args.output}")
    return EXIT_OK


def cmd_reference(args) -> int:
    s = _settings(args)
    _accel.set_threads(s.get("threads"))
    datasets = _datasets(s)
    if len(datasets) != 1:
        raise UsageFailure("reference takes exactly one dataset")
    cfg = _run_config(s, StrategyKind.FULL_RESTART)
    records = run_batch(datasets[0].instance, cfg)
    best = pooled_best(records)
    header = (f"best known from full-restart: {cfg.runs} runs x {cfg.iterations_per_state} iterations/state, "
              f"{cfg.aco.ants_per_iteration} ants, master seed {cfg.master_seed}")
    with open(args.output, "w") as fh:
        write_best_known(best, fh, header=header)
    print(f"wrote {len(best)} best-known values to {args.output}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "generate": cmd_generate,
            "reference": cmd_reference}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageFailure as exc:
        parser.print_usage(sys.stderr)
        print(f"herder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, OSError) as exc:
        print(f"herder: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort handler for the exit-code contract
        print(f"herder: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
