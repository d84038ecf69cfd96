"""Command-line interface.

Subcommands cover the full experiment loop: generate synthetic data,
train a single model, sweep configuration grids with resume, aggregate
ROC curves, compare groups statistically, and inspect the loss geometry
and the hyperparameter sampling distribution.

Conventions:

* Exit codes: 0 success, 1 failure (bad config, bad data, IO problems),
  2 command-line usage errors.
* All outputs are written atomically; an interrupted command never
  leaves a truncated file behind.
* Relative output paths are placed under $VSLCT_OUT_ROOT when that
  variable is set.
* Single-file outputs honor --if-exists {error,skip,overwrite}; sweeps
  instead resume per run from their output directory.
* JSON configs are validated strictly: unknown keys are errors, so a
  typo cannot silently fall back to a default.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from vslct._util import atomic_write_text
from vslct.analysis import SweepRow, SweepRun, aggregate_roc, auc_stats, paired_t_test, polyfit_r2, run_sweep
from vslct.data import Dataset, load_csv, save_csv, subsample_minority, synth_gaussian
from vslct.lindist import LinearDistribution, make_linear
from vslct.losses import VsHyperParams, break_even_line, break_even_softmax_score, loss_difference_grid
from vslct.metrics import LabeledScores, roc_curve
from vslct.network import ModelConfig, save_checkpoint
from vslct.training import LctConfig, TrainConfig, evaluate, train_baseline, train_lct

__all__ = ["main"]

OUT_ROOT_ENV = "VSLCT_OUT_ROOT"


# ---------------------------------------------------------------------------
# Config parsing (strict: unknown keys are rejected)
# ---------------------------------------------------------------------------


def _require_keys(obj: dict, allowed: set[str], context: str) -> None:
    if not isinstance(obj, dict):
        raise ValueError(f"{context}: expected a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"{context}: unknown keys {sorted(unknown)}; allowed keys are {sorted(allowed)}")


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from exc


def _hyper_from_json(obj: dict, context: str) -> VsHyperParams:
    _require_keys(obj, {"omega", "gamma", "tau"}, context)
    return VsHyperParams(**{k: float(v) for k, v in obj.items()})


def _dist_from_json(obj, context: str) -> float | LinearDistribution:
    if isinstance(obj, (int, float)):
        return float(obj)
    _require_keys(obj, {"a", "b", "h_b"}, context)
    missing = {"a", "b", "h_b"} - set(obj)
    if missing:
        raise ValueError(f"{context}: missing keys {sorted(missing)}")
    return make_linear(float(obj["a"]), float(obj["b"]), float(obj["h_b"]))


def _lct_from_json(obj: dict, context: str) -> LctConfig:
    _require_keys(obj, {"base", "conditioned"}, context)
    base = _hyper_from_json(obj.get("base", {}), f"{context}.base")
    conditioned_raw = obj.get("conditioned")
    if not isinstance(conditioned_raw, dict) or not conditioned_raw:
        raise ValueError(f"{context}.conditioned: expected a non-empty object")
    conditioned = {name: _dist_from_json(entry, f"{context}.conditioned.{name}") for name, entry in conditioned_raw.items()}
    return LctConfig(base=base, conditioned=conditioned)


def _train_config_from_json(obj: dict, context: str) -> TrainConfig:
    allowed = {"epochs", "batch_size", "lr", "lr_drop_factor", "lr_milestones", "momentum", "clip_norm", "seed"}
    _require_keys(obj, allowed, context)
    kwargs = dict(obj)
    if "lr_milestones" in kwargs:
        kwargs["lr_milestones"] = tuple(kwargs["lr_milestones"])
    return TrainConfig(**kwargs)


def _model_kwargs_from_json(obj: dict, context: str) -> dict:
    allowed = {"trunk_widths", "film_hidden", "film_affine", "film_zero_init"}
    _require_keys(obj, allowed, context)
    kwargs = dict(obj)
    if "trunk_widths" in kwargs:
        kwargs["trunk_widths"] = tuple(kwargs["trunk_widths"])
    return kwargs


# ---------------------------------------------------------------------------
# Output handling
# ---------------------------------------------------------------------------


def _resolve_out(path: str) -> str:
    root = os.environ.get(OUT_ROOT_ENV, "")
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _should_write(path: str, if_exists: str) -> bool:
    """False means: skip quietly (the file is already there)."""
    if os.path.exists(path):
        if if_exists == "error":
            raise ValueError(f"{path} already exists; pass --if-exists overwrite to replace it or skip to keep it")
        if if_exists == "skip":
            print(f"skipping {path}: already exists")
            return False
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return True


def _write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    out = _resolve_out(args.out)
    if not _should_write(out, args.if_exists):
        return 0
    rng = np.random.default_rng(args.seed)
    data = synth_gaussian(n0=args.n0, n1=args.n1, dim=args.dim, separation=args.sep, rng=rng)
    if args.beta is not None:
        data = subsample_minority(data, beta=args.beta, rng=rng)
    save_csv(data, out)
    counts = data.counts
    print(f"wrote {out}: {counts.n0} majority + {counts.n1} minority samples, dim {data.dim}")
    return 0


def cmd_train(args) -> int:
    out = _resolve_out(args.out)
    if not _should_write(out, args.if_exists):
        return 0
    config = _load_json(args.config)
    _require_keys(config, {"mode", "hyper", "lct", "train", "model", "eval_lambda"}, "config")
    mode = config.get("mode")
    if mode not in ("baseline", "lct"):
        raise ValueError(f"config.mode must be 'baseline' or 'lct', got {mode!r}")
    train_config = _train_config_from_json(config.get("train", {}), "config.train")
    model_kwargs = _model_kwargs_from_json(config.get("model", {}), "config.model")
    data = load_csv(args.data)
    if mode == "baseline":
        if "lct" in config:
            raise ValueError("config: baseline mode does not take an 'lct' section")
        hyper = _hyper_from_json(config.get("hyper", {}), "config.hyper")
        model_config = ModelConfig(input_dim=data.dim, cond_dim=1, **model_kwargs)
        result = train_baseline(data, hyper, train_config, model_config=model_config)
        eval_cond = np.zeros(1)
    else:
        if "hyper" in config:
            raise ValueError("config: lct mode takes an 'lct' section, not 'hyper'")
        lct = _lct_from_json(config.get("lct", {}), "config.lct")
        model_config = ModelConfig(input_dim=data.dim, cond_dim=lct.cond_dim, **model_kwargs)
        result = train_lct(data, lct, train_config, model_config=model_config)
        eval_cond = np.full(lct.cond_dim, float(config.get("eval_lambda", 0.0)))
    save_checkpoint(out, result.model, meta={"mode": mode, "final_loss": result.epoch_losses[-1]})
    print(f"trained {mode} model for {train_config.epochs} epochs; final epoch loss {result.epoch_losses[-1]:.6f}")
    if args.test_data:
        scored = evaluate(result.model, load_csv(args.test_data), eval_cond)
        print(f"test AUC at conditioning {[float(v) for v in eval_cond]}: {roc_curve(scored).auc:.6f}")
    print(f"wrote {out}")
    return 0


def _grid_runs(config: dict) -> tuple[list[SweepRun], dict[str, dict]]:
    """Expand the sweep config into runs; also return run_id -> parameter map."""
    _require_keys(config, {"train", "seeds", "eval_lambda", "baseline_grid", "lct_grid"}, "config")
    seeds = config.get("seeds")
    if not isinstance(seeds, list) or not seeds:
        raise ValueError("config.seeds must be a non-empty list of integers")
    eval_lambda = float(config.get("eval_lambda", 0.0))
    runs: list[SweepRun] = []
    params: dict[str, dict] = {}
    if "baseline_grid" in config:
        grid = config["baseline_grid"]
        _require_keys(grid, {"omega", "gamma", "tau"}, "config.baseline_grid")
        for omega in grid.get("omega", [0.5]):
            for gamma in grid.get("gamma", [0.0]):
                for tau in grid.get("tau", [0.0]):
                    for seed in seeds:
                        run_id = f"base-w{omega}-g{gamma}-t{tau}-s{seed}"
                        runs.append(
                            SweepRun(
                                run_id=run_id,
                                kind="baseline",
                                seed=int(seed),
                                eval_cond=(0.0,),
                                hyper=VsHyperParams(omega=float(omega), gamma=float(gamma), tau=float(tau)),
                            )
                        )
                        params[run_id] = {"omega": float(omega), "gamma": float(gamma), "tau": float(tau)}
    if "lct_grid" in config:
        grid = config["lct_grid"]
        _require_keys(grid, {"h_b", "omega", "gamma", "conditioned", "lambda_range"}, "config.lct_grid")
        conditioned_name = grid.get("conditioned", "tau")
        lo, hi = (float(v) for v in grid.get("lambda_range", [0.0, 3.0]))
        for h_b in grid.get("h_b", [0.0]):
            for omega in grid.get("omega", [0.5]):
                gamma = float(grid.get("gamma", 0.0))
                base = VsHyperParams(omega=float(omega), gamma=gamma, tau=0.0)
                lct = LctConfig(base=base, conditioned={conditioned_name: make_linear(lo, hi, float(h_b))})
                for seed in seeds:
                    run_id = f"lct-hb{h_b}-w{omega}-s{seed}"
                    runs.append(SweepRun(run_id=run_id, kind="lct", seed=int(seed), eval_cond=(eval_lambda,), lct=lct))
                    params[run_id] = {"omega": float(omega), "gamma": gamma, "h_b": float(h_b), "lambda_lo": lo, "lambda_hi": hi}
    if not runs:
        raise ValueError("config: neither baseline_grid nor lct_grid produced any runs")
    return runs, params


def cmd_sweep(args) -> int:
    config = _load_json(args.config)
    runs, params = _grid_runs(config)
    train_config = _train_config_from_json(config.get("train", {}), "config.train")
    train_data = load_csv(args.train_data)
    test_data = load_csv(args.test_data)
    out_dir = _resolve_out(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    started = time.monotonic()

    def progress(i, total, row):
        print(f"[{i + 1}/{total}] {row.run_id}: auc={row.auc:.6f}")

    rows = run_sweep(runs, train_data, test_data, train_config, out_dir=out_dir, progress=progress)
    summary = {
        "rows": [
            {"run_id": r.run_id, "kind": r.kind, "seed": r.seed, "auc": r.auc, "params": params[r.run_id]}
            for r in rows
        ],
        "stats": {},
    }
    for kind in ("baseline", "lct"):
        group = [r for r in rows if r.kind == kind]
        if len(group) >= 2:
            stats = auc_stats(group)
            summary["stats"][kind] = {"mean": stats.mean, "std": stats.std, "n": stats.n}
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(f"swept {len(rows)} runs in {time.monotonic() - started:.1f}s; summary at {os.path.join(out_dir, 'summary.json')}")
    for kind, stats in summary["stats"].items():
        print(f"  {kind}: mean auc {stats['mean']:.6f}, std {stats['std']:.6f} over {stats['n']} runs")
    return 0


def _load_rows_dir(rows_dir: str, select: str) -> list[SweepRow]:
    rows = []
    for name in sorted(os.listdir(rows_dir)):
        if not name.endswith(".json") or name == "summary.json":
            continue
        path = os.path.join(rows_dir, name)
        payload = _load_json(path)
        try:
            row = SweepRow(
                run_id=payload["run_id"],
                kind=payload["kind"],
                seed=int(payload["seed"]),
                auc=float.fromhex(payload["auc"]),
                scores=np.array([float.fromhex(tok) for tok in payload["scores"]]),
                labels=np.array(payload["labels"], dtype=np.int64),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: not a sweep row: {exc}") from exc
        if select in ("all", row.kind):
            rows.append(row)
    if not rows:
        raise ValueError(f"{rows_dir}: no sweep rows matching --select {select}")
    return rows


def cmd_roc(args) -> int:
    out = _resolve_out(args.out)
    if not _should_write(out, args.if_exists):
        return 0
    rows = _load_rows_dir(args.rows_dir, args.select)
    grid = np.linspace(0.0, 1.0, args.points)
    agg = aggregate_roc([row.labeled_scores for row in rows], grid)
    lines = ["fpr,mean_tpr,std_tpr"]
    for f, m, s in zip(agg.fpr_grid, agg.mean_tpr, agg.std_tpr):
        lines.append(f"{float(f)!r},{float(m)!r},{float(s)!r}")
    atomic_write_text(out, "\n".join(lines) + "\n")
    print(f"aggregated {agg.n} curves onto {args.points} grid points; wrote {out}")
    return 0


def cmd_analyze(args) -> int:
    out = _resolve_out(args.out)
    if not _should_write(out, args.if_exists):
        return 0
    summary = _load_json(args.summary)
    rows = summary.get("rows")
    if not isinstance(rows, list) or not rows:
        raise ValueError(f"{args.summary}: no rows; run the sweep first")
    by_kind: dict[str, list[dict]] = {}
    for row in rows:
        by_kind.setdefault(row["kind"], []).append(row)
    report: dict = {"groups": {}, "paired_by_seed": None, "baseline_surface_fit": None}
    for kind, group in by_kind.items():
        aucs = np.array([r["auc"] for r in group])
        report["groups"][kind] = {
            "n": int(aucs.size),
            "mean": float(np.mean(aucs)),
            "std": float(np.std(aucs, ddof=1)) if aucs.size > 1 else 0.0,
            "min": float(np.min(aucs)),
            "max": float(np.max(aucs)),
        }
    if "baseline" in by_kind and "lct" in by_kind:
        seeds = sorted(
            {r["seed"] for r in by_kind["baseline"]} & {r["seed"] for r in by_kind["lct"]}
        )
        if len(seeds) >= 2:
            base_means = [float(np.mean([r["auc"] for r in by_kind["baseline"] if r["seed"] == s])) for s in seeds]
            lct_means = [float(np.mean([r["auc"] for r in by_kind["lct"] if r["seed"] == s])) for s in seeds]
            t = paired_t_test(np.array(lct_means), np.array(base_means))
            report["paired_by_seed"] = {
                "seeds": seeds,
                "lct_minus_baseline_mean": float(np.mean(lct_means) - np.mean(base_means)),
                "t_statistic": t.statistic,
                "df": t.df,
                "p_value": t.p_value,
            }
    if "baseline" in by_kind:
        group = by_kind["baseline"]
        names = [n for n in ("omega", "gamma", "tau") if len({r["params"][n] for r in group}) > 1]
        if names and len(group) > 2 * (1 + 2 * len(names) + len(names) * (len(names) - 1) // 2):
            x = np.array([[r["params"][n] for n in names] for r in group])
            y = np.array([r["auc"] for r in group])
            try:
                fit = polyfit_r2(x, y, degree=2)
                report["baseline_surface_fit"] = {
                    "features": names,
                    "columns": list(fit.column_names),
                    "coefficients": [float(c) for c in fit.coefficients],
                    "r2": fit.r2,
                }
            except ValueError as exc:
                report["baseline_surface_fit"] = {"skipped": str(exc)}
    _write_json(out, report)
    for kind, stats in report["groups"].items():
        print(f"{kind}: n={stats['n']} mean={stats['mean']:.6f} std={stats['std']:.6f}")
    if report["paired_by_seed"]:
        p = report["paired_by_seed"]
        print(f"paired by seed: lct - baseline = {p['lct_minus_baseline_mean']:+.6f} (t={p['t_statistic']:.3f}, p={p['p_value']:.4f})")
    if report["baseline_surface_fit"] and "r2" in report["baseline_surface_fit"]:
        print(f"baseline auc surface fit over {report['baseline_surface_fit']['features']}: R^2 = {report['baseline_surface_fit']['r2']:.4f}")
    print(f"wrote {out}")
    return 0


def cmd_loss_geometry(args) -> int:
    out = _resolve_out(args.out)
    if not _should_write(out, args.if_exists):
        return 0
    hyper = VsHyperParams(omega=args.omega, gamma=args.gamma, tau=args.tau)
    grid = loss_difference_grid(hyper, beta=args.beta, lo=args.lo, hi=args.hi, steps=args.steps)
    grid.to_csv(out)
    line = break_even_line(hyper, args.beta)
    print(f"break-even line: z1 = {line.slope!r} * z0 + {line.intercept!r} (offset alpha = {line.alpha_omega!r})")
    if args.omega == 0.5 and args.gamma == 0.0:
        print(f"break-even softmax score: {break_even_softmax_score(args.beta, args.tau)!r}")
    print(f"wrote {out}")
    return 0


def cmd_dist_check(args) -> int:
    dist = make_linear(args.a, args.b, args.h_b)
    rng = np.random.default_rng(args.seed)
    started = time.monotonic()
    sample = dist.sample(args.samples, rng)
    elapsed = time.monotonic() - started
    x = np.sort(sample)
    n = x.size
    cdf = dist.cdf(x)
    ks = max(float(np.max(np.arange(1, n + 1) / n - cdf)), float(np.max(cdf - np.arange(0, n) / n)))
    print(f"drew {n} samples in {elapsed:.3f}s; KS distance to exact CDF = {ks:.6f}")
    if args.out:
        out = _resolve_out(args.out)
        if _should_write(out, args.if_exists):
            _write_json(out, {"a": args.a, "b": args.b, "h_b": args.h_b, "samples": n, "seed": args.seed, "ks": ks, "seconds": elapsed})
            print(f"wrote {out}")
    if args.max_ks is not None and ks > args.max_ks:
        print(f"KS {ks:.6f} exceeds --max-ks {args.max_ks}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vslct",
        description="Loss-conditional training over the vector-scaling loss family.",
        epilog=f"Relative output paths are placed under ${OUT_ROOT_ENV} when it is set.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_if_exists(p):
        p.add_argument("--if-exists", choices=("error", "skip", "overwrite"), default="error", help="what to do when the output already exists (default: error)")

    p = sub.add_parser("gen-data", help="generate a synthetic two-Gaussian dataset CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--n0", type=int, required=True, help="majority class size")
    p.add_argument("--n1", type=int, required=True, help="minority class size (before any subsampling)")
    p.add_argument("--dim", type=int, default=10, help="feature dimension (default 10)")
    p.add_argument("--sep", type=float, default=2.5, help="distance between class means (default 2.5)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument("--beta", type=float, default=None, help="optionally subsample the minority down to this imbalance ratio")
    add_if_exists(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model from a JSON config")
    p.add_argument("--config", required=True, help="JSON config: mode, hyper/lct, train, model")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--test-data", default=None, help="optional CSV to report a test AUC")
    p.add_argument("--out", required=True, help="output checkpoint path (JSON)")
    add_if_exists(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train a grid of baseline/LCT runs with resume")
    p.add_argument("--config", required=True, help="JSON config: train, seeds, eval_lambda, baseline_grid, lct_grid")
    p.add_argument("--train-data", required=True, help="training CSV")
    p.add_argument("--test-data", required=True, help="evaluation CSV")
    p.add_argument("--out-dir", required=True, help="directory for per-run rows and summary.json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("roc", help="aggregate ROC envelopes across sweep rows")
    p.add_argument("--rows-dir", required=True, help="sweep output directory")
    p.add_argument("--select", choices=("all", "baseline", "lct"), default="all", help="which rows to include (default all)")
    p.add_argument("--points", type=int, default=101, help="FPR grid resolution (default 101)")
    p.add_argument("--out", required=True, help="output CSV path")
    add_if_exists(p)
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("analyze", help="group statistics, paired test, and AUC surface fit from a sweep summary")
    p.add_argument("--summary", required=True, help="summary.json produced by sweep")
    p.add_argument("--out", required=True, help="output JSON path")
    add_if_exists(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("loss-geometry", help="tabulate the per-label loss difference over a logit grid")
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--beta", type=float, required=True, help="imbalance ratio")
    p.add_argument("--lo", type=float, default=-5.0, help="grid lower bound (default -5)")
    p.add_argument("--hi", type=float, default=5.0, help="grid upper bound (default 5)")
    p.add_argument("--steps", type=int, default=101, help="grid resolution per axis (default 101)")
    p.add_argument("--out", required=True, help="output CSV path")
    add_if_exists(p)
    p.set_defaults(func=cmd_loss_geometry)

    p = sub.add_parser("dist-check", help="sample a linear distribution and report its KS distance")
    p.add_argument("--a", type=float, required=True, help="interval lower end")
    p.add_argument("--b", type=float, required=True, help="interval upper end")
    p.add_argument("--h-b", type=float, required=True, dest="h_b", help="density at the upper end")
    p.add_argument("--samples", type=int, default=1_000_000, help="number of draws (default 1e6)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-ks", type=float, default=None, help="exit 1 if the KS distance exceeds this")
    p.add_argument("--out", default=None, help="optional JSON report path")
    add_if_exists(p)
    p.set_defaults(func=cmd_dist_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
