"""Experiment sweeps and the statistics used to compare them.

run_sweep trains a list of configured runs (fixed-loss baselines and
loss-conditional runs), scores each trained model on a held-out test set,
and returns one row per run.  Given an output directory it persists each
row as JSON (floats hex-encoded, written atomically) and transparently
reloads completed rows on a rerun, so an interrupted sweep resumes where
it stopped.

The statistics layer is self-contained numpy/stdlib:

* paired_t_test: two-sided paired t-test; the p-value comes from this
  module's regularized incomplete beta (continued-fraction evaluation),
  via p = I_x(df/2, 1/2) with x = df / (df + t^2).
* polyfit_r2: least-squares polynomial surface fit (degree 1 or 2, with
  pairwise interaction terms) reporting R^2.
* aggregate_roc / auc_stats: per-group ROC envelopes and AUC dispersion
  across runs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from vslct._util import atomic_write_text, floats_from_hex, floats_to_hex
from vslct.data import Dataset
from vslct.losses import VsHyperParams
from vslct.metrics import LabeledScores, roc_at_fpr_grid, roc_curve
from vslct.network import ModelConfig
from vslct.training import LctConfig, TrainConfig, evaluate, train_baseline, train_lct

__all__ = [
    "TTestResult",
    "paired_t_test",
    "regularized_incomplete_beta",
    "PolyfitResult",
    "polyfit_r2",
    "SweepRun",
    "SweepRow",
    "run_sweep",
    "AucStats",
    "auc_stats",
    "RocAggregate",
    "aggregate_roc",
]


# ---------------------------------------------------------------------------
# Paired t-test
# ---------------------------------------------------------------------------

_BETA_MAX_ITER = 300
_BETA_EPS = 3e-16
_BETA_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, by Lentz's method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: int
    p_value: float


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on matched samples a and b.

    t = mean(d) / (std(d, ddof=1) / sqrt(n)) with d = a - b, and the
    two-sided p-value is I_x(df/2, 1/2) at x = df / (df + t^2).  With a
    zero-variance difference the p-value degenerates to 1 (all equal) or
    0 (constant nonzero shift).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"need matched 1-D samples, got shapes {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(statistic=0.0, df=df, p_value=1.0)
        return TTestResult(statistic=math.copysign(math.inf, mean), df=df, p_value=0.0)
    t = mean / (sd / math.sqrt(n))
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(statistic=t, df=df, p_value=p)


# ---------------------------------------------------------------------------
# Polynomial surface fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyfitResult:
    coefficients: np.ndarray
    column_names: tuple[str, ...]
    r2: float
    constant_target: bool

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        design, _ = _poly_design(x, self._degree)
        if design.shape[1] != self.coefficients.size:
            raise ValueError(f"x has wrong width for this fit: expected {len(self.column_names)} terms, built {design.shape[1]}")
        return design @ self.coefficients

    # degree is recoverable from the column names; cached for predict
    @property
    def _degree(self) -> int:
        return 2 if any("^2" in c or "*" in c for c in self.column_names) else 1


def _poly_design(x: np.ndarray, degree: int) -> tuple[np.ndarray, tuple[str, ...]]:
    n, d = x.shape
    cols: list[np.ndarray] = [np.ones(n)]
    names: list[str] = ["1"]
    for j in range(d):
        cols.append(x[:, j])
        names.append(f"x{j}")
    if degree == 2:
        for j in range(d):
            cols.append(x[:, j] ** 2)
            names.append(f"x{j}^2")
        for j in range(d):
            for k in range(j + 1, d):
                cols.append(x[:, j] * x[:, k])
                names.append(f"x{j}*x{k}")
    return np.column_stack(cols), tuple(names)


def polyfit_r2(x, y, degree: int = 2) -> PolyfitResult:
    """Least-squares fit of y by a polynomial surface in the columns of x.

    The design matrix holds an intercept, the features, and for degree 2
    their squares and pairwise products.  R^2 = 1 - SS_res / SS_tot; a
    constant target is reported as a perfect fit with the flag set.  A
    rank-deficient design (collinear features or too few samples) raises.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ValueError(f"incompatible shapes: x {x.shape}, y {y.shape}")
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    design, names = _poly_design(x, degree)
    if design.shape[0] < design.shape[1]:
        raise ValueError(f"need at least {design.shape[1]} samples for {len(names)} terms, got {design.shape[0]}")
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise ValueError(f"rank-deficient design matrix (rank {rank} < {design.shape[1]} columns)")
    residuals = y - design @ coeffs
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return PolyfitResult(coefficients=coeffs, column_names=names, r2=1.0, constant_target=True)
    return PolyfitResult(coefficients=coeffs, column_names=names, r2=1.0 - ss_res / ss_tot, constant_target=False)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRun:
    """One training run inside a sweep.

    kind "baseline" trains at `hyper` with the conditioning input held at
    eval_cond; kind "lct" trains with per-batch draws from `lct` and is
    evaluated at eval_cond.  run_id must be unique and filesystem-safe.
    """

    run_id: str
    kind: str
    seed: int
    eval_cond: tuple[float, ...]
    hyper: VsHyperParams | None = None
    lct: LctConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "eval_cond", tuple(float(v) for v in self.eval_cond))
        if not self.run_id or not all(c.isalnum() or c in "._-" for c in self.run_id):
            raise ValueError(f"run_id must be non-empty and filesystem-safe, got {self.run_id!r}")
        if self.kind == "baseline":
            if self.hyper is None or self.lct is not None:
                raise ValueError(f"{self.run_id}: baseline runs take hyper, not lct")
        elif self.kind == "lct":
            if self.lct is None or self.hyper is not None:
                raise ValueError(f"{self.run_id}: lct runs take lct, not hyper")
            if len(self.eval_cond) != self.lct.cond_dim:
                raise ValueError(f"{self.run_id}: eval_cond has {len(self.eval_cond)} entries, conditioning needs {self.lct.cond_dim}")
        else:
            raise ValueError(f"{self.run_id}: kind must be 'baseline' or 'lct', got {self.kind!r}")


@dataclass(frozen=True)
class SweepRow:
    """Result of one run: test-set scores and the derived AUC."""

    run_id: str
    kind: str
    seed: int
    auc: float
    scores: np.ndarray
    labels: np.ndarray

    @property
    def labeled_scores(self) -> LabeledScores:
        return LabeledScores(scores=self.scores, labels=self.labels)


def _row_path(out_dir, run_id: str) -> str:
    return os.path.join(os.fspath(out_dir), f"{run_id}.json")


def _save_row(out_dir, row: SweepRow) -> None:
    payload = {
        "run_id": row.run_id,
        "kind": row.kind,
        "seed": row.seed,
        "auc": float(row.auc).hex(),
        "scores": floats_to_hex(row.scores),
        "labels": [int(v) for v in row.labels],
    }
    atomic_write_text(_row_path(out_dir, row.run_id), json.dumps(payload))


def _load_row(out_dir, run: SweepRun) -> SweepRow:
    path = _row_path(out_dir, run.run_id)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload["run_id"] != run.run_id or payload["kind"] != run.kind or payload["seed"] != run.seed:
            raise ValueError("identity fields do not match the requested run")
        return SweepRow(
            run_id=run.run_id,
            kind=run.kind,
            seed=run.seed,
            auc=float.fromhex(payload["auc"]),
            scores=floats_from_hex(payload["scores"]),
            labels=np.array(payload["labels"], dtype=np.int64),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: stale or corrupt sweep row ({exc}); delete it to recompute") from exc


def _execute_run(run: SweepRun, train_data: Dataset, test_data: Dataset, train_config: TrainConfig) -> SweepRow:
    config = replace(train_config, seed=run.seed)
    cond = np.array(run.eval_cond)
    if run.kind == "baseline":
        model_config = ModelConfig(input_dim=train_data.dim, cond_dim=max(cond.size, 1))
        result = train_baseline(train_data, run.hyper, config, model_config=model_config, const_cond=cond if cond.size else None)
    else:
        result = train_lct(train_data, run.lct, config)
    scored = evaluate(result.model, test_data, cond if cond.size else np.zeros(result.model.config.cond_dim))
    return SweepRow(
        run_id=run.run_id,
        kind=run.kind,
        seed=run.seed,
        auc=roc_curve(scored).auc,
        scores=scored.scores,
        labels=scored.labels,
    )


def run_sweep(
    runs: list[SweepRun],
    train_data: Dataset,
    test_data: Dataset,
    train_config: TrainConfig,
    out_dir=None,
    progress=None,
) -> list[SweepRow]:
    """Execute (or reload) every run and return rows in input order.

    With out_dir set, each finished run is written to out_dir/run_id.json
    and found again on the next invocation; delete a file to force that
    run to recompute.  `progress`, if given, is called as
    progress(index, total, row) after each run.
    """
    ids = [r.run_id for r in runs]
    if len(set(ids)) != len(ids):
        raise ValueError("run_ids must be unique within a sweep")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    rows: list[SweepRow] = []
    for i, run in enumerate(runs):
        if out_dir is not None and os.path.exists(_row_path(out_dir, run.run_id)):
            row = _load_row(out_dir, run)
        else:
            row = _execute_run(run, train_data, test_data, train_config)
            if out_dir is not None:
                _save_row(out_dir, row)
        rows.append(row)
        if progress is not None:
            progress(i, len(runs), row)
    return rows


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AucStats:
    mean: float
    std: float
    n: int


def auc_stats(rows: list[SweepRow]) -> AucStats:
    """Mean and sample standard deviation (ddof=1) of AUC across rows."""
    if len(rows) < 2:
        raise ValueError(f"need at least 2 rows for dispersion, got {len(rows)}")
    aucs = np.array([row.auc for row in rows])
    return AucStats(mean=float(np.mean(aucs)), std=float(np.std(aucs, ddof=1)), n=aucs.size)


@dataclass(frozen=True)
class RocAggregate:
    fpr_grid: np.ndarray
    mean_tpr: np.ndarray
    std_tpr: np.ndarray
    n: int


def aggregate_roc(score_sets: list[LabeledScores], fpr_grid) -> RocAggregate:
    """Pointwise mean/std of the ROC envelopes of several score sets."""
    if not score_sets:
        raise ValueError("need at least one score set")
    fpr_grid = np.asarray(fpr_grid, dtype=np.float64)
    tprs = np.stack([roc_at_fpr_grid(roc_curve(s), fpr_grid) for s in score_sets])
    ddof = 1 if len(score_sets) > 1 else 0
    return RocAggregate(
        fpr_grid=fpr_grid,
        mean_tpr=tprs.mean(axis=0),
        std_tpr=tprs.std(axis=0, ddof=ddof),
        n=len(score_sets),
    )
