"""Rolling-origin backtesting and the experiment grid.

A backtest walks weekly forecast origins ("versions") anchored at the
panel's end: for each origin, every experiment arm trains on the
trailing window strictly before the origin, fits its bias corrector on
training residuals, forecasts the horizon windows, and is scored with
version metrics.  Results aggregate sales-weighted per horizon and are
reported relative to a baseline arm.

The standard grid covers the five design choices usually compared on
skewed sales data (raw squared error, pseudo-Huber, the Tweedie power
range, log target, log target + sqrt-sales weights) plus bias-corrected
variants of the log-target arm, a weight-escalation ladder, and a
Tweedie power sweep.

Arms and origins run in parallel threads (``SKEWCAST_THREADS`` caps the
pool); every job is pure and writes to its own slot, and the final
assembly is sorted, so results are byte-identical at any thread count.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .biascorr import BiasCorrector, fit_corrector
from .biascorr import KINDS as CORRECTOR_KINDS
from .datagen import load_gen_config, theoretical_tweedie_power
from .errors import (
    ConfigError,
    DataError,
    InsufficientHistory,
)
from .learner import FitModel, LearnerConfig, fit
from .losses import LossSpec, WeightScheme, deviance
from .metrics import (
    AggregateMetrics,
    RelativeMetrics,
    VersionMetrics,
    aggregate_versions,
    relativize,
    version_metrics,
    write_metrics_csv,
)
from .panel import ForecastVersion, SalesPanel, read_panel
from .transform import TargetTransform, inverse

HORIZONS = (6, 12, 24)

LADDER_SCHEMES = (
    WeightScheme(kind="unit"),
    WeightScheme(kind="log_sales"),
    WeightScheme(kind="sqrt_sales"),
    WeightScheme(kind="linear_sales"),
)

SWEEP_POWERS = (1.1, 1.3, 1.5, 1.7, 1.9)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def worker_count() -> int:
    """Thread-pool size; SKEWCAST_THREADS overrides the default."""
    raw = os.environ.get("SKEWCAST_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SKEWCAST_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("SKEWCAST_THREADS must be >= 1")
    return n


@dataclass(frozen=True)
class ExperimentArm:
    """One grid configuration: transform x loss x weights x corrector.

    ``oracle`` is a test-only switch that replaces the model's forecasts
    with the actuals, exercising the full metrics pipeline end to end.
    """

    id: str
    transform: TargetTransform
    loss: LossSpec
    weight_scheme: WeightScheme
    corrector_kind: str = "none"
    oracle: bool = False

    def __post_init__(self):
        if not self.id or any(c in self.id for c in ",\n\r"):
            raise ConfigError(f"arm id {self.id!r} is not representable in CSV")
        if self.corrector_kind not in CORRECTOR_KINDS:
            raise ConfigError(f"unknown corrector kind {self.corrector_kind!r}")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "transform": self.transform.to_json(),
            "loss": self.loss.to_json(),
            "weight_scheme": self.weight_scheme.to_json(),
            "corrector_kind": self.corrector_kind,
            "oracle": self.oracle,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentArm":
        try:
            return cls(
                id=obj["id"],
                transform=TargetTransform.from_json(obj["transform"]),
                loss=LossSpec.from_json(obj["loss"]),
                weight_scheme=WeightScheme.from_json(obj["weight_scheme"]),
                corrector_kind=obj.get("corrector_kind", "none"),
                oracle=bool(obj.get("oracle", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"arm JSON missing field {exc}") from None


def standard_arms() -> list[ExperimentArm]:
    """The five classic design choices plus bias-corrected log arms."""
    identity = TargetTransform(kind="identity")
    log = TargetTransform(kind="log")
    unit = WeightScheme(kind="unit")
    arms = [
        ExperimentArm("E1", identity, LossSpec.mse(), unit),
        ExperimentArm("E2", identity, LossSpec.pseudo_huber(1.0), unit),
    ]
    for p in SWEEP_POWERS:
        arms.append(ExperimentArm(f"E3.{round(10 * (p - 1.0))}", identity,
                                  LossSpec.tweedie(p), unit))
    arms += [
        ExperimentArm("E4", log, LossSpec.mse(), unit),
        ExperimentArm("E5", log, LossSpec.mse(), WeightScheme(kind="sqrt_sales")),
        ExperimentArm("E4-S", log, LossSpec.mse(), unit, corrector_kind="smearing"),
        ExperimentArm("E4-V", log, LossSpec.mse(), unit, corrector_kind="variance_based"),
        ExperimentArm("E4-PB", log, LossSpec.mse(), unit, corrector_kind="prediction_binned"),
    ]
    return arms


def arm_by_id(arm_id: str) -> ExperimentArm:
    for arm in standard_arms():
        if arm.id == arm_id:
            return arm
    raise ConfigError(f"unknown arm id {arm_id!r}")


@dataclass(frozen=True)
class BacktestPlan:
    """Everything a backtest run depends on; JSON-serializable."""

    panel_path: str | None = None
    train_window_days: int = 730
    cadence_days: int = 7
    n_versions: int = 8
    horizons: tuple[int, ...] = HORIZONS
    arms: tuple[ExperimentArm, ...] = field(default_factory=lambda: tuple(standard_arms()))
    baseline_id: str = "E5"
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    seed: int = 0
    gen_config_path: str | None = None

    def __post_init__(self):
        if self.train_window_days < 1:
            raise ConfigError("train_window_days must be >= 1")
        if self.cadence_days < 1:
            raise ConfigError("cadence_days must be >= 1")
        if self.n_versions < 1:
            raise ConfigError("n_versions must be >= 1")
        if not self.horizons or any(h not in HORIZONS for h in self.horizons):
            raise ConfigError(f"horizons must be a nonempty subset of {HORIZONS}")
        ids = [arm.id for arm in self.arms]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate arm ids in plan")

    def to_json(self) -> dict:
        return {
            "panel_path": self.panel_path,
            "train_window_days": self.train_window_days,
            "cadence_days": self.cadence_days,
            "n_versions": self.n_versions,
            "horizons": list(self.horizons),
            "arms": [arm.to_json() for arm in self.arms],
            "baseline_id": self.baseline_id,
            "learner": self.learner.to_json(),
            "seed": self.seed,
            "gen_config_path": self.gen_config_path,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BacktestPlan":
        kwargs = dict(obj)
        if "horizons" in kwargs:
            kwargs["horizons"] = tuple(kwargs["horizons"])
        if "arms" in kwargs:
            raw = kwargs["arms"]
            arms = []
            for a in raw:
                if isinstance(a, str):
                    arms.append(arm_by_id(a))
                else:
                    arms.append(ExperimentArm.from_json(a))
            kwargs["arms"] = tuple(arms)
        if "learner" in kwargs:
            kwargs["learner"] = LearnerConfig.from_json(kwargs["learner"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad backtest plan: {exc}") from None


def load_plan(path) -> BacktestPlan:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read plan {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"plan {path} is not valid JSON: {exc}") from None
    return BacktestPlan.from_json(obj)


def version_origins(panel: SalesPanel, plan: BacktestPlan) -> list[dt.date]:
    """Weekly origins anchored so the longest horizon ends at the panel end."""
    first_day, last_day = panel.date_range
    max_h = max(plan.horizons)
    last_origin = last_day - dt.timedelta(days=7 * max_h)
    origins = [
        last_origin - dt.timedelta(days=plan.cadence_days * k)
        for k in range(plan.n_versions)
    ]
    origins.sort()
    needed_start = origins[0] - dt.timedelta(days=plan.train_window_days)
    if needed_start < first_day:
        raise InsufficientHistory(
            f"panel starts {first_day}, but {plan.n_versions} versions with a "
            f"{plan.train_window_days}-day window need history back to {needed_start}"
        )
    return origins


def _train_slice(panel: SalesPanel, origin: dt.date, window_days: int) -> SalesPanel:
    train = panel.slice_days(origin - dt.timedelta(days=window_days),
                             origin - dt.timedelta(days=1))
    for obs in train.observations:  # no-leakage contract, checked every fit
        if obs.day >= origin:
            raise DataError(f"leakage: training row on {obs.day} at origin {origin}")
    return train


def fit_arm(arm: ExperimentArm, train: SalesPanel, learner_cfg: LearnerConfig) -> FitModel:
    """Fit an arm's model on a training panel, corrector included."""
    model = fit(train, arm.transform, arm.loss, arm.weight_scheme, learner_cfg)
    if arm.corrector_kind != "none":
        zhat = model.predict_transformed(train.feature_matrix)
        corrector = fit_corrector(arm.corrector_kind, train.sales, zhat, arm.transform)
        model = model.with_corrector(corrector)
    return model


def _score_versions(
    arm: ExperimentArm,
    plan: BacktestPlan,
    panel: SalesPanel,
    origin: dt.date,
) -> list[tuple[str, VersionMetrics]]:
    """Fit one arm at one origin and score every horizon."""
    max_h = max(plan.horizons)
    test = panel.slice_days(origin + dt.timedelta(days=1),
                            origin + dt.timedelta(days=7 * max_h))
    if arm.oracle:
        preds = test.sales.copy()
    else:
        train = _train_slice(panel, origin, plan.train_window_days)
        model = fit_arm(arm, train, plan.learner)
        preds = model.predict(test.feature_matrix)
    forecasts: dict[str, dict[dt.date, float]] = {}
    actuals: dict[str, dict[dt.date, float]] = {}
    for obs, p in zip(test.observations, preds):
        actuals.setdefault(obs.item_id, {})[obs.day] = obs.sales
        forecasts.setdefault(obs.item_id, {})[obs.day] = float(p)
    rows = []
    for h in sorted(plan.horizons):
        version = ForecastVersion.from_origin(origin, h)
        rows.append((arm.id, version_metrics(forecasts, actuals, version)))
    return rows


@dataclass
class BacktestReport:
    """Grid results: per-version rows plus per-arm aggregates/relatives."""

    baseline_id: str
    horizons: tuple[int, ...]
    origins: list[dt.date]
    rows: list[tuple[str, VersionMetrics]]
    aggregates: dict[str, dict[int, AggregateMetrics]]
    relatives: dict[str, dict[int, RelativeMetrics]]

    def to_json(self) -> dict:
        arms_obj: dict = {}
        for arm_id, per_h in self.aggregates.items():
            arms_obj[arm_id] = {
                "aggregates": {str(h): _agg_json(m) for h, m in per_h.items()},
                "relative": {
                    str(h): _rel_json(m)
                    for h, m in self.relatives.get(arm_id, {}).items()
                },
            }
        return {
            "baseline_id": self.baseline_id,
            "horizons": list(self.horizons),
            "origins": [d.isoformat() for d in self.origins],
            "arms": arms_obj,
        }


def _agg_json(m: AggregateMetrics) -> dict:
    return {
        "wmape": m.wmape,
        "wbias": m.wbias,
        "total_actual": m.total_actual,
        "n_versions": m.n_versions,
        "skipped_items": m.skipped_items,
    }


def _rel_json(m: RelativeMetrics) -> dict:
    return {
        "wmape_rel": m.wmape_rel,
        "wbias_rel": m.wbias_rel,
        "baseline_id": m.baseline_id,
    }


def _run_grid(
    arms: tuple[ExperimentArm, ...] | list[ExperimentArm],
    plan: BacktestPlan,
    panel: SalesPanel,
) -> tuple[list[tuple[str, VersionMetrics]], dict[str, dict[int, AggregateMetrics]]]:
    """Run every (arm, origin) job; sorted rows and per-arm aggregates."""
    origins = version_origins(panel, plan)
    jobs = [(arm, origin) for arm in arms for origin in origins]
    results: dict[tuple[str, dt.date], list[tuple[str, VersionMetrics]]] = {}
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = {
            pool.submit(_score_versions, arm, plan, panel, origin): (arm.id, origin)
            for arm, origin in jobs
        }
        for fut, key in futures.items():
            results[key] = fut.result()
    rows: list[tuple[str, VersionMetrics]] = []
    for arm, origin in jobs:
        rows.extend(results[(arm.id, origin)])
    rows.sort(key=lambda r: (r[0], r[1].version.label, r[1].horizon_weeks))
    aggregates = {
        arm.id: aggregate_versions([vm for aid, vm in rows if aid == arm.id])
        for arm in arms
    }
    return rows, aggregates


def run_backtest(plan: BacktestPlan, panel: SalesPanel | None = None) -> BacktestReport:
    """Run the experiment grid and relativize against the baseline arm."""
    if panel is None:
        if plan.panel_path is None:
            raise ConfigError("plan has no panel_path and no panel was supplied")
        panel = read_panel(plan.panel_path)
    ids = [arm.id for arm in plan.arms]
    if plan.baseline_id not in ids:
        raise ConfigError(f"baseline arm {plan.baseline_id!r} is not in the plan")
    rows, aggregates = _run_grid(plan.arms, plan, panel)
    base = aggregates[plan.baseline_id]
    relatives = {
        arm_id: {
            h: relativize(per_h[h], base[h], plan.baseline_id)
            for h in per_h
        }
        for arm_id, per_h in aggregates.items()
    }
    return BacktestReport(
        baseline_id=plan.baseline_id,
        horizons=tuple(sorted(plan.horizons)),
        origins=version_origins(panel, plan),
        rows=rows,
        aggregates=aggregates,
        relatives=relatives,
    )


def write_backtest_outputs(report: BacktestReport, out_dir) -> None:
    """Emit metrics.csv and report.json into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    write_metrics_csv(report.rows, os.path.join(out_dir, "metrics.csv"))
    _write_json(report.to_json(), os.path.join(out_dir, "report.json"))


def _write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _count_inversions(values: list[float], direction: str) -> int:
    """Adjacent pairs violating a non-decreasing/non-increasing trend."""
    bad = 0
    for a, b in zip(values, values[1:]):
        if direction == "non_decreasing" and b < a:
            bad += 1
        elif direction == "non_increasing" and b > a:
            bad += 1
    return bad


@dataclass
class TrendReport:
    """Aggregated metrics along an ordered axis plus a monotonicity verdict."""

    axis_name: str
    axis_values: list[str]
    table: list[dict]  # one entry per (axis value, horizon)
    verdicts: dict[int, dict]
    rows: list[tuple[str, VersionMetrics]]
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "axis": self.axis_name,
            "order": self.axis_values,
            "table": self.table,
            "verdicts": {str(h): v for h, v in self.verdicts.items()},
            **self.extra,
        }


def _trend(
    plan: BacktestPlan,
    panel: SalesPanel,
    arms: list[ExperimentArm],
    axis_name: str,
    axis_values: list[str],
    direction: str,
) -> TrendReport:
    rows, aggregates = _run_grid(arms, plan, panel)
    table = []
    verdicts: dict[int, dict] = {}
    for h in sorted(plan.horizons):
        series = [aggregates[arm.id][h] for arm in arms]
        for value, agg in zip(axis_values, series):
            table.append({
                axis_name: value,
                "horizon_weeks": h,
                "wmape": agg.wmape,
                "wbias": agg.wbias,
                "total_actual": agg.total_actual,
                "n_versions": agg.n_versions,
                "skipped_items": agg.skipped_items,
            })
        wbias_series = [agg.wbias for agg in series]
        inversions = _count_inversions(wbias_series, direction)
        verdicts[h] = {
            "wbias_direction": direction,
            "inversions": inversions,
            "monotone": inversions == 0,
            "within_tolerance": inversions <= 1,
            "wbias_series": wbias_series,
        }
    table.sort(key=lambda r: (r["horizon_weeks"], axis_values.index(r[axis_name])))
    return TrendReport(
        axis_name=axis_name,
        axis_values=axis_values,
        table=table,
        verdicts=verdicts,
        rows=rows,
    )


def run_weight_ladder(
    plan: BacktestPlan,
    schemes=LADDER_SCHEMES,
    panel: SalesPanel | None = None,
) -> TrendReport:
    """Log-target Mse arms with increasingly sales-proportional weights.

    The expected trend: wbias climbs from strongly negative toward zero
    as weights escalate from unit to linear-in-sales.
    """
    if panel is None:
        if plan.panel_path is None:
            raise ConfigError("plan has no panel_path and no panel was supplied")
        panel = read_panel(plan.panel_path)
    log = TargetTransform(kind="log")
    arms = [
        ExperimentArm(f"W{i}-{s.label()}", log, LossSpec.mse(), s)
        for i, s in enumerate(schemes)
    ]
    return _trend(plan, panel, arms, "scheme", [s.label() for s in schemes],
                  direction="non_decreasing")


def run_power_sweep(
    plan: BacktestPlan,
    powers=SWEEP_POWERS,
    panel: SalesPanel | None = None,
) -> TrendReport:
    """Identity-transform Tweedie arms across the variance-power range.

    The expected trend: wbias falls (from positive toward or past zero)
    as p rises; wmape bottoms out near the generator's true power, which
    is recorded in the report when the plan points at its config.
    """
    if panel is None:
        if plan.panel_path is None:
            raise ConfigError("plan has no panel_path and no panel was supplied")
        panel = read_panel(plan.panel_path)
    identity = TargetTransform(kind="identity")
    unit = WeightScheme(kind="unit")
    arms = [
        ExperimentArm(f"P{p:.1f}", identity, LossSpec.tweedie(p), unit)
        for p in powers
    ]
    report = _trend(plan, panel, arms, "power", [f"{p:.1f}" for p in powers],
                    direction="non_increasing")
    best = {}
    for h in sorted(plan.horizons):
        at_h = [r for r in report.table if r["horizon_weeks"] == h]
        best[str(h)] = min(at_h, key=lambda r: r["wmape"])["power"]
    report.extra["best_wmape_power"] = best
    if plan.gen_config_path is not None:
        cfg = load_gen_config(plan.gen_config_path)
        report.extra["theoretical_tweedie_power"] = theoretical_tweedie_power(cfg)
    return report


def write_trend_outputs(report: TrendReport, out_dir, csv_name: str) -> None:
    """Emit <csv_name> (trend table), metrics.csv (per-version), report.json."""
    os.makedirs(out_dir, exist_ok=True)
    write_metrics_csv(report.rows, os.path.join(out_dir, "metrics.csv"))
    header = [report.axis_name, "horizon_weeks", "wmape", "wbias",
              "total_actual", "n_versions", "skipped_items"]
    lines = [",".join(header)]
    for row in report.table:
        lines.append(",".join([
            str(row[report.axis_name]),
            str(row["horizon_weeks"]),
            _fmt(row["wmape"]),
            _fmt(row["wbias"]),
            _fmt(row["total_actual"]),
            str(row["n_versions"]),
            str(row["skipped_items"]),
        ]))
    with open(os.path.join(out_dir, csv_name), "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_json(report.to_json(), os.path.join(out_dir, "report.json"))


def deviance_residual_report(model: FitModel, panel: SalesPanel) -> dict:
    """Shape diagnostics of the model's residuals on a panel.

    Deviance-loss models report signed deviance residuals
    sign(y - mu) * sqrt(deviance(y, mu)); squared-error and pseudo-Huber
    models fall back to plain residuals y - mu (flagged in "kind").
    A residual cloud close to normal suggests the assumed family matches
    the data-generating process.  No automatic power selection happens.
    """
    y = panel.sales
    mu = inverse(model.transform, model.predict_transformed(panel.feature_matrix))
    if model.loss.kind in ("poisson", "gamma", "tweedie"):
        dev = deviance(model.loss, y, mu)
        residuals = np.sign(y - mu) * np.sqrt(np.maximum(dev, 0.0))
        kind = "deviance"
    else:
        residuals = y - mu
        kind = "plain"
    n = residuals.size
    mean = float(np.mean(residuals))
    centered = residuals - mean
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        skew, exkurt, jb = 0.0, 0.0, 0.0
    else:
        skew = float(np.mean(centered**3) / m2**1.5)
        exkurt = float(np.mean(centered**4) / m2**2 - 3.0)
        jb = n / 6.0 * (skew**2 + exkurt**2 / 4.0)
    return {
        "kind": kind,
        "loss": model.loss.label(),
        "n": int(n),
        "mean": mean,
        "std": float(np.sqrt(m2)),
        "skewness": skew,
        "excess_kurtosis": exkurt,
        "normality_stat": float(jb),
    }
