"""Sales panel data model and its CSV contract.

A panel is the universal currency between modules: item x day rows with
non-negative sales and a fixed-length feature vector.  CSV is the sole
on-disk format: ``item_id,day,sales,<feature names...>`` with ISO dates,
floats at 12 significant digits, and no quoting (item ids containing
commas are rejected outright).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DuplicateKey,
    IoFailure,
    MalformedRow,
    NegativeSales,
)

_HORIZONS = (6, 12, 24)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class SalesObservation:
    """One item on one day: sales plus its feature vector."""

    item_id: str
    day: dt.date
    sales: float
    features: tuple[float, ...]


@dataclass(eq=True)
class SalesPanel:
    """Validated, canonically ordered collection of observations.

    Construction sorts rows by (item_id, day), checks non-negative sales,
    consistent feature-vector length, uniqueness of (item, day), and that
    every day lies inside ``date_range``.  Instances are treated as
    immutable after construction and are safe to share across threads.
    """

    observations: list[SalesObservation]
    feature_names: list[str]
    date_range: tuple[dt.date, dt.date] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.observations = sorted(self.observations, key=lambda o: (o.item_id, o.day))
        k = len(self.feature_names)
        seen: set[tuple[str, dt.date]] = set()
        for obs in self.observations:
            if "," in obs.item_id or "\n" in obs.item_id or "\r" in obs.item_id or not obs.item_id:
                raise DataError(f"item_id {obs.item_id!r} is not representable in panel CSV")
            if obs.sales < 0:
                raise DataError(f"negative sales for ({obs.item_id}, {obs.day})")
            if len(obs.features) != k:
                raise DataError(
                    f"({obs.item_id}, {obs.day}) has {len(obs.features)} features, expected {k}"
                )
            key = (obs.item_id, obs.day)
            if key in seen:
                raise DuplicateKey(*key)
            seen.add(key)
        if self.date_range is None:
            if self.observations:
                days = [o.day for o in self.observations]
                self.date_range = (min(days), max(days))
            else:
                self.date_range = (dt.date.min, dt.date.min)
        first, last = self.date_range
        for obs in self.observations:
            if not first <= obs.day <= last:
                raise DataError(f"({obs.item_id}, {obs.day}) lies outside {first}..{last}")

    def __len__(self) -> int:
        return len(self.observations)

    @cached_property
    def sales(self) -> np.ndarray:
        return np.array([o.sales for o in self.observations], dtype=np.float64)

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        n, k = len(self.observations), len(self.feature_names)
        out = np.empty((n, k), dtype=np.float64)
        for i, o in enumerate(self.observations):
            out[i] = o.features
        return out

    @cached_property
    def day_ordinals(self) -> np.ndarray:
        return np.array([o.day.toordinal() for o in self.observations], dtype=np.int64)

    @cached_property
    def item_ids(self) -> list[str]:
        """Distinct item ids, ascending."""
        return sorted({o.item_id for o in self.observations})

    @cached_property
    def item_codes(self) -> np.ndarray:
        index = {item: i for i, item in enumerate(self.item_ids)}
        return np.array([index[o.item_id] for o in self.observations], dtype=np.int64)

    def slice_days(self, first: dt.date, last: dt.date) -> "SalesPanel":
        """Sub-panel of observations with first <= day <= last."""
        rows = [o for o in self.observations if first <= o.day <= last]
        return SalesPanel(rows, list(self.feature_names), (first, last))


@dataclass(frozen=True)
class ForecastVersion:
    """A weekly forecast origin: everything before it trains, the window
    (origin, origin + 7 * horizon_weeks] is scored."""

    label: str
    origin_day: dt.date
    horizon_weeks: int

    def __post_init__(self):
        if self.horizon_weeks not in _HORIZONS:
            raise ConfigError(f"horizon_weeks must be one of {_HORIZONS}")
        expect = f"VDP_{self.origin_day:%Y%m%d}"
        if self.label != expect:
            raise ConfigError(f"label {self.label!r} does not match origin {expect!r}")

    @classmethod
    def from_origin(cls, origin_day: dt.date, horizon_weeks: int) -> "ForecastVersion":
        return cls(f"VDP_{origin_day:%Y%m%d}", origin_day, horizon_weeks)

    @property
    def window_start(self) -> dt.date:
        return self.origin_day + dt.timedelta(days=1)

    @property
    def window_end(self) -> dt.date:
        return self.origin_day + dt.timedelta(days=7 * self.horizon_weeks)


def read_panel(path) -> SalesPanel:
    """Parse and validate a panel CSV.

    Raises MalformedRow / NegativeSales with 1-based line numbers, and
    DuplicateKey for repeated (item, day) pairs.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedRow(1, "empty file, expected a header row")
    header = lines[0].split(",")
    if header[:3] != ["item_id", "day", "sales"]:
        raise MalformedRow(1, f"header must start with item_id,day,sales (got {lines[0]!r})")
    feature_names = header[3:]
    ncol = len(header)
    observations: list[SalesObservation] = []
    seen: set[tuple[str, dt.date]] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != ncol:
            raise MalformedRow(line_no, f"expected {ncol} columns, got {len(parts)}")
        item_id = parts[0]
        if not item_id:
            raise MalformedRow(line_no, "empty item_id")
        try:
            day = dt.date.fromisoformat(parts[1])
        except ValueError:
            raise MalformedRow(line_no, f"bad date {parts[1]!r}") from None
        try:
            sales = float(parts[2])
            features = tuple(float(p) for p in parts[3:])
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc)) from None
        if not np.isfinite(sales) or not all(np.isfinite(f) for f in features):
            raise MalformedRow(line_no, "non-finite value")
        if sales < 0:
            raise NegativeSales(line_no, sales)
        key = (item_id, day)
        if key in seen:
            raise DuplicateKey(item_id, day)
        seen.add(key)
        observations.append(SalesObservation(item_id, day, sales, features))
    return SalesPanel(observations, feature_names)


def write_panel(panel: SalesPanel, path) -> None:
    """Write a panel CSV with deterministic (item_id, day) row order."""
    out = ["item_id,day,sales," + ",".join(panel.feature_names) if panel.feature_names
           else "item_id,day,sales"]
    for o in panel.observations:
        cells = [o.item_id, o.day.isoformat(), _fmt(o.sales)]
        cells.extend(_fmt(f) for f in o.features)
        out.append(",".join(cells))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
