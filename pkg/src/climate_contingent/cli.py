"""Command-line front end.

    climate-contingent simulate        --config cfg.json [--set key=value ...] [--sweep sweep.json]
    climate-contingent optimize-prices --config cfg.json
    climate-contingent structure-ccb   --config cfg.json [--data projections.csv]
    climate-contingent ingest          --data projections.csv

Exit codes: 0 success, 2 config error, 3 data error, 4 infeasible optimization.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, streams
from .ccb import (
    build_bins,
    cumulative_returns,
    discount_factors,
    npv_paths,
    optimize_schedule,
    simulate_climate_paths,
)
from .climate_data import ingest_csv, sample_data_path
from .config import ExperimentConfig, apply_overrides, load_raw, parse_override, sweep_points
from .engine import bootstrap_ci, simulate_batch
from .errors import ConfigError, DataError, InfeasibleError
from .pricing import optimize_prices

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4


def _num(x):
    """Floats as shortest round-trip repr; non-finite as empty string."""
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "")
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class RunOutputs:
    """Collects output files and writes the run manifest last, atomically."""

    def __init__(self, out_dir: Path, command: str, cfg_dict: dict, config_hash: str, seed: int):
        self.out_dir = Path(out_dir)
        self.command = command
        self.cfg_dict = cfg_dict
        self.config_hash = config_hash
        self.seed = seed
        self.files: list[str] = []
        self.started = datetime.now(timezone.utc).isoformat()
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _atomic_write(self, name: str, data: bytes) -> None:
        path = self.out_dir / name
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)

    def csv(self, name: str, header, rows) -> None:
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(x) for x in r])
        self._atomic_write(name, buf.getvalue().encode("utf-8"))
        self.files.append(name)

    def json(self, name: str, obj) -> None:
        text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
        self._atomic_write(name, text.encode("utf-8"))
        self.files.append(name)

    def add_existing(self, name: str) -> None:
        self.files.append(name)

    def finish(self) -> Path:
        outputs = []
        for name in self.files:
            data = (self.out_dir / name).read_bytes()
            outputs.append({"file": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "started_at": self.started,
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "outputs": outputs,
            "config": self.cfg_dict,
        }
        text = json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n"
        self._atomic_write("run_manifest.json", text.encode("utf-8"))
        return self.out_dir / "run_manifest.json"


def _load(args, extra_overrides=()) -> ExperimentConfig:
    raw = {} if args.config is None else load_raw(args.config)
    overrides = [parse_override(s) for s in (args.set or [])]
    overrides += list(extra_overrides)
    if args.seed is not None:
        overrides.append(("master_seed", args.seed))
    return ExperimentConfig.from_dict(apply_overrides(raw, overrides))


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out_dir if args.out_dir is not None else cfg.output_dir)


def _column(name: str) -> str:
    return name.strip().replace(" ", "_")


def _histogram(values, bins):
    counts, edges = np.histogram(values, bins=bins)
    return [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(counts)]


# -- simulate ---------------------------------------------------------------


def _simulate_one(cfg: ExperimentConfig):
    sim = cfg.simulation_config()
    res = simulate_batch(sim)
    s = cfg.simulation
    summary = {}
    for label, vals in (("outcome_A", res.outcome_A), ("outcome_B", res.outcome_B)):
        summary[label] = bootstrap_ci(vals, s.n_bootstrap, s.ci_level, seed=cfg.master_seed)
    return sim, res, summary


def _summary_row(label, st, n_periods):
    return [label, st.mean, st.se, st.ci_low, st.ci_high, st.level, st.n, st.mean / n_periods]


SUMMARY_HEADER = ["outcome", "mean", "se", "ci_low", "ci_high", "level", "n", "mean_per_period"]


def cmd_simulate(args) -> int:
    if args.sweep:
        try:
            sweep = json.loads(Path(args.sweep).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read sweep file {args.sweep}: {e}") from None
        points = sweep_points(sweep)
    else:
        points = [[]]
    cfgs = [_load(args, p) for p in points]  # validate every point before writing anything
    base = cfgs[0]
    out = RunOutputs(_out_dir(args, base), "simulate", base.to_dict(), base.digest(), base.master_seed)
    if args.sweep:
        out.cfg_dict = {"base": base.to_dict(), "sweep": sweep}
        out.config_hash = hashlib.sha256(
            "".join(c.digest() for c in cfgs).encode()).hexdigest()

    sweep_rows = []
    plots = []
    for i, (point, cfg) in enumerate(zip(points, cfgs)):
        sim, res, summary = _simulate_one(cfg)
        suffix = f"_{i:03d}" if args.sweep else ""
        names = sim.ladder.names
        trig = res.trigger_counts(len(names))
        out.csv(
            f"replications{suffix}.csv",
            ["replication", "outcome_A", "outcome_B"] + [f"n_triggers_{_column(n)}" for n in names],
            ([r, res.outcome_A[r], res.outcome_B[r], *trig[r]] for r in range(len(res.outcome_A))),
        )
        out.csv(f"summary{suffix}.csv", SUMMARY_HEADER,
                [_summary_row(k, v, sim.n_periods) for k, v in summary.items()])
        for label, vals in (("outcome_A", res.outcome_A), ("outcome_B", res.outcome_B)):
            out.csv(f"histogram_{label}{suffix}.csv", ["bin_low", "bin_high", "count"],
                    _histogram(vals, cfg.simulation.histogram_bins))
        plots.append((suffix, res))
        if args.sweep:
            row = [i, *[json.dumps(val) for _, val in point]]
            for st in summary.values():
                row += [st.mean, st.se, st.ci_low, st.ci_high]
            sweep_rows.append(row)
    if args.sweep:
        keys = [k for k, _ in points[0]]
        stat_cols = [f"{c}_{o}" for o in ("A", "B") for c in ("mean", "se", "ci_low", "ci_high")]
        out.csv("sweep_summary.csv", ["point", *keys, *stat_cols], sweep_rows)
    if args.render_plots:
        from .plots import outcome_histograms
        for suffix, res in plots:
            name = f"outcomes{suffix}.png"
            outcome_histograms(res.outcome_A, res.outcome_B, out.out_dir / name)
            out.add_existing(name)
    manifest = out.finish()
    print(f"simulate: wrote {len(out.files)} files to {out.out_dir} ({manifest.name})")
    return EXIT_OK


# -- optimize-prices ----------------------------------------------------------


def cmd_optimize_prices(args) -> int:
    cfg = _load(args)
    sim = cfg.simulation_config()
    bounds = cfg.price_bounds()
    report = optimize_prices(
        sim, bounds=bounds, budget=cfg.price_optimizer.budget, tolerance=cfg.price_optimizer.tolerance
    )
    out = RunOutputs(_out_dir(args, cfg), "optimize-prices", cfg.to_dict(), cfg.digest(), cfg.master_seed)
    cum = sim.ladder.cumulative_probs
    out.csv(
        "prices.csv",
        ["scenario", "cumulative_probability", "allocation_A", "allocation_B",
         "minimum_price", "optimized_price", "optimized"],
        [
            [n, cum[k], sim.allocation_A[k], sim.allocation_B[k], report.minimum_prices[k],
             report.prices[k], report.optimized[k]]
            for k, n in enumerate(sim.ladder.names)
        ],
    )
    out.json("optimizer_report.json", {
        **report.to_dict(),
        "objective_fraction_of_scale": report.objective / (sim.initial_assets * sim.n_periods),
    })
    if args.render_plots:
        from .plots import price_bars
        price_bars(sim.ladder.names, report.minimum_prices, report.prices, out.out_dir / "prices.png")
        out.add_existing("prices.png")
    out.finish()
    print(
        f"optimize-prices: |E_A - E_B| {report.baseline_objective:.6g} -> {report.objective:.6g}; "
        f"annualized outperformance {100 * report.annualized_outperformance:.2f}%"
    )
    return EXIT_OK


# -- structure-ccb -------------------------------------------------------------


def cmd_structure_ccb(args) -> int:
    cfg = _load(args)
    spec = cfg.ccb_spec()
    data_path = args.data or cfg.climate_data.path or sample_data_path()
    table = ingest_csv(data_path)
    names, _ = spec.sampler.resolve(table, spec.location)
    table.matrix(spec.location, names, spec.years)  # raises listing every missing key

    seed = cfg.master_seed
    bins, pooled = build_bins(table, spec, seed)
    schedule, fit = optimize_schedule(spec, bins, table, seed=seed)
    if not fit.converged:
        raise InfeasibleError(
            f"schedule search ended {fit.abs_error:.3g} from the target NPV "
            f"(tolerance {fit.tolerance:.3g}) after {fit.evaluations} evaluations"
        )

    paths = simulate_climate_paths(table, spec, spec.n_sims, seed, streams.CLIMATE_EVAL)
    totals = npv_paths(paths, bins, schedule, spec)
    mean_climate = paths.mean(axis=1)
    target = spec.target_npv
    eval_mean = math.fsum(totals) / totals.size
    eval_se = float(totals.std(ddof=1) / math.sqrt(totals.size)) if totals.size > 1 else 0.0
    if np.ptp(totals) > 0 and np.ptp(mean_climate) > 0:
        rho = float(stats.spearmanr(mean_climate, totals).statistic)
    else:
        rho = None

    out = RunOutputs(_out_dir(args, cfg), "structure-ccb", cfg.to_dict(), cfg.digest(), seed)
    out.csv("bins.csv", ["bin_index", "bottom_label", "lower_edge", "upper_edge"], bins.rows())
    out.csv("schedule.csv", ["bin_index", "bottom_label", "coupon_rate"],
            [[i, bins.labels[i], r] for i, r in enumerate(schedule.rates)])
    out.csv("pooled_histogram.csv", ["bin_low", "bin_high", "count"], _histogram(pooled, 40))
    out.csv("total_returns.csv", ["sim", "mean_climate_value", "total_return", "traditional_return"],
            [[i, mean_climate[i], totals[i], target] for i in range(totals.size)])
    n_out = min(cfg.ccb.path_samples_out, paths.shape[0])
    cum = cumulative_returns(paths[:n_out], bins, schedule, spec)
    disc = discount_factors(spec.discount_rate, spec.lifetime_years)
    trad = np.cumsum(spec.market_rate * disc)
    trad[-1] += disc[-1]
    out.csv(
        "paths.csv",
        ["sim", "year", "climate_value", "cumulative_return", "traditional_cumulative_return"],
        ([i, y, paths[i, t], cum[i, t], trad[t]]
         for i in range(n_out) for t, y in enumerate(spec.years)),
    )
    out.json("npv_report.json", {
        "target_npv": target,
        "fit": fit.to_dict(),
        "evaluation": {
            "expected_npv": eval_mean, "se_iid": eval_se, "abs_error": abs(eval_mean - target),
            "n_sims": int(totals.size), "stream": "fresh (independent of the fitting paths)",
            "fraction_above_traditional": float(np.mean(totals > target)),
            "spearman_mean_climate_vs_return": rho,
        },
        "bins": {"granularity": bins.n_bins, "jittered": bins.jittered, "degenerate": bins.degenerate,
                 "jitter": "value + 1e-9 * index / n before quantiles"},
        "sampling": {"stratified": spec.stratified, "coherent_paths": spec.coherent_paths},
        "data": {"path": str(data_path), "rows": len(table)},
    })
    if args.render_plots:
        from .plots import ccb_charts
        for name in ccb_charts(bins, schedule, cum, trad, totals, target, pooled, out.out_dir):
            out.add_existing(name)
    out.finish()
    print(
        f"structure-ccb: {spec.granularity} rates in [{min(schedule.rates):.4f}, {max(schedule.rates):.4f}]; "
        f"expected NPV {eval_mean:.5f} vs traditional {target:.5f}"
    )
    return EXIT_OK


# -- ingest -----------------------------------------------------------------------


def cmd_ingest(args) -> int:
    table = ingest_csv(args.data)
    summary = table.summary()
    if args.out_dir:
        out = RunOutputs(Path(args.out_dir), "ingest", {"data": str(args.data)},
                         hashlib.sha256(Path(args.data).read_bytes()).hexdigest(), 0)
        out.json("ingest_summary.json", summary)
        out.finish()
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON); defaults apply when omitted")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry, e.g. --set adaptation.upper_discount=0.5")
    common.add_argument("--seed", type=int, help="override master_seed")
    common.add_argument("--out-dir", help="output directory (overrides output_dir)")
    common.add_argument("--render-plots", action="store_true", help="also write PNG charts")

    p = argparse.ArgumentParser(prog="climate-contingent", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="replicate Adapter/Backer wealth dynamics")
    s.add_argument("--sweep", help="JSON object mapping config keys to lists of values")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("optimize-prices", parents=[common], help="equalize expected outcomes")
    s.set_defaults(func=cmd_optimize_prices)
    s = sub.add_parser("structure-ccb", parents=[common], help="solve a climate-contingent bond schedule")
    s.add_argument("--data", help="projection CSV (location,scenario,year,value); default: bundled sample")
    s.set_defaults(func=cmd_structure_ccb)
    s = sub.add_parser("ingest", help="validate a projection CSV and summarize coverage")
    s.add_argument("--data", required=True)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
