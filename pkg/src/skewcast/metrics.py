"""Forecast accuracy metrics: weighted MAPE and weighted bias.

Forecasts are judged per forecast version: for every item, forecasts
and actuals are summed over the version's horizon window and turned
into one percent error per item.  Items are then aggregated weighted by
their actual totals, so high-volume items dominate, matching how the
business reads the numbers.  WBias keeps the sign (negative means
under-forecasting); WMAPE takes absolute values, so |WBias| <= WMAPE
always.

Versions aggregate into one summary per horizon via sales-weighted
averaging, and summaries are reported relative to a baseline
configuration: wmape_rel = wmape / baseline wmape, wbias_rel = wbias /
|baseline wbias| (sign of the target preserved).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

from .errors import (
    DegenerateBaseline,
    EmptyInput,
    IoFailure,
    LengthMismatch,
    NoValidItems,
    ZeroActual,
)
from .panel import ForecastVersion

METRICS_CSV_HEADER = "config_id,version,horizon_weeks,wmape,wbias,total_actual,skipped_items"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class VersionMetrics:
    """Accuracy of one configuration on one forecast version."""

    version: ForecastVersion
    horizon_weeks: int
    wmape: float
    wbias: float
    total_actual: float
    skipped_items: int


@dataclass(frozen=True)
class AggregateMetrics:
    """Sales-weighted average of version metrics at one horizon."""

    horizon_weeks: int
    wmape: float
    wbias: float
    total_actual: float
    n_versions: int
    skipped_items: int


@dataclass(frozen=True)
class RelativeMetrics:
    """Metrics of a configuration relative to a named baseline."""

    wmape_rel: float
    wbias_rel: float
    baseline_id: str


def percent_error(forecast_by_day, actual_by_day, horizon) -> float:
    """(sum F - sum A) / sum A over the horizon days; missing days count 0."""
    total_f = sum(forecast_by_day.get(day, 0.0) for day in horizon)
    total_a = sum(actual_by_day.get(day, 0.0) for day in horizon)
    if total_a <= 0.0:
        raise ZeroActual("total actual over the horizon is zero")
    return (total_f - total_a) / total_a


def version_metrics(forecasts, actuals, version: ForecastVersion) -> VersionMetrics:
    """Actual-weighted |PE| and PE across items for one version.

    ``forecasts`` and ``actuals`` map item_id -> {day -> value}.  Items
    whose actual total over the window is zero carry no weight and are
    skipped (the percent error is undefined there); they are counted in
    ``skipped_items``.
    """
    if set(forecasts) != set(actuals):
        raise LengthMismatch("forecast and actual item sets differ")
    if not actuals:
        raise NoValidItems("no items to score")
    days = _window_days(version)
    abs_sum = 0.0
    signed_sum = 0.0
    total_actual = 0.0
    skipped = 0
    for item in sorted(actuals):
        a_i = sum(actuals[item].get(day, 0.0) for day in days)
        if a_i <= 0.0:
            skipped += 1
            continue
        f_i = sum(forecasts[item].get(day, 0.0) for day in days)
        pe = (f_i - a_i) / a_i
        abs_sum += a_i * abs(pe)
        signed_sum += a_i * pe
        total_actual += a_i
    if total_actual <= 0.0:
        raise NoValidItems("every item has zero actuals over the horizon")
    return VersionMetrics(
        version=version,
        horizon_weeks=version.horizon_weeks,
        wmape=abs_sum / total_actual,
        wbias=signed_sum / total_actual,
        total_actual=total_actual,
        skipped_items=skipped,
    )


def _window_days(version: ForecastVersion) -> list[dt.date]:
    n = 7 * version.horizon_weeks
    return [version.origin_day + dt.timedelta(days=k) for k in range(1, n + 1)]


def aggregate_versions(per_version: list[VersionMetrics]) -> dict[int, AggregateMetrics]:
    """Sales-weighted average of wmape and wbias, one summary per horizon."""
    if not per_version:
        raise EmptyInput("no version metrics to aggregate")
    out: dict[int, AggregateMetrics] = {}
    for h in sorted({vm.horizon_weeks for vm in per_version}):
        group = [vm for vm in per_version if vm.horizon_weeks == h]
        weight = sum(vm.total_actual for vm in group)
        out[h] = AggregateMetrics(
            horizon_weeks=h,
            wmape=sum(vm.total_actual * vm.wmape for vm in group) / weight,
            wbias=sum(vm.total_actual * vm.wbias for vm in group) / weight,
            total_actual=weight,
            n_versions=len(group),
            skipped_items=sum(vm.skipped_items for vm in group),
        )
    return out


def relativize(target: AggregateMetrics, baseline: AggregateMetrics,
               baseline_id: str) -> RelativeMetrics:
    """Target metrics over baseline metrics; wbias keeps the target's sign."""
    if baseline.wmape <= 0.0:
        raise DegenerateBaseline("baseline wmape is zero; ratios are undefined")
    if baseline.wbias == 0.0:
        raise DegenerateBaseline("baseline wbias is zero; ratios are undefined")
    return RelativeMetrics(
        wmape_rel=target.wmape / baseline.wmape,
        wbias_rel=target.wbias / abs(baseline.wbias),
        baseline_id=baseline_id,
    )


def write_metrics_csv(rows: list[tuple[str, VersionMetrics]], path) -> None:
    """Write per-version metric rows sorted by (config, version, horizon)."""
    ordered = sorted(rows, key=lambda r: (r[0], r[1].version.label, r[1].horizon_weeks))
    lines = [METRICS_CSV_HEADER]
    for config_id, vm in ordered:
        lines.append(",".join([
            config_id,
            vm.version.label,
            str(vm.horizon_weeks),
            _fmt(vm.wmape),
            _fmt(vm.wbias),
            _fmt(vm.total_actual),
            str(vm.skipped_items),
        ]))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
