"""Deterministic synthetic sales-panel generator.

Each item-day cell has a demand level R: item popularity (lognormal
across items) times a weekly seasonality cycle, spike-day multipliers
(holiday-style surges), and a price-elasticity term on a slowly
drifting log price.  Sales are compound Poisson-Gamma around that
level: an event count N ~ Poisson(R^(2-p)) and N jumps of
Gamma(gamma_shape, gamma_scale * R^(p-1)), where
p = (gamma_shape + 2) / (gamma_shape + 1).

That exponent split is what makes the panel an honest Tweedie testbed:
every cell is exactly Tweedie-distributed with mean
gamma_shape * gamma_scale * R, variance power p, and one dispersion
shared by all cells, so variance scales as mean^p across the whole
panel and a power sweep has a real ground truth to recover.  (Keeping
the jump scale fixed instead would make variance scale linearly in the
mean no matter the shape, silently turning every configuration into a
power-1 process.)  The result is right-skewed raw sales whose log is
close to normal, with genuine zero-sales days.

Every draw comes from a Philox stream keyed by (seed, item, day), so
panels are byte-identical across runs, platforms, and any parallel
generation order.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .panel import SalesObservation, SalesPanel
from .rng import keyed_stream

FEATURE_NAMES = ["log_price", "weekly_index", "spike_mult", "log_popularity"]

# counter tag separating item-level draws from the per-day cells
_ITEM_STREAM = 1 << 32


@dataclass(frozen=True)
class GenConfig:
    """Knobs of the synthetic world; generation is a pure function of it."""

    n_items: int = 200
    n_days: int = 730
    seed: int = 20240405
    base_rate_lognormal: tuple[float, float] = (1.0, 1.0)  # (mu, sigma) of popularity
    gamma_shape: float = 1.0
    gamma_scale: float = 1.0
    price_elasticity: float = -1.5
    spike_days: tuple[tuple[int, float], ...] = ((170, 3.0), (330, 5.0), (535, 3.0), (695, 5.0))
    weekly_seasonality: tuple[float, ...] = (0.9, 0.95, 1.0, 1.0, 1.05, 1.3, 1.1)
    start_day: dt.date = dt.date(2020, 1, 6)  # a Monday
    price_walk_sigma: float = 0.0075

    def __post_init__(self):
        if self.n_items <= 0 or self.n_days <= 0:
            raise ConfigError("n_items and n_days must be positive")
        if self.gamma_shape <= 0 or self.gamma_scale <= 0:
            raise ConfigError("gamma shape and scale must be positive")
        if self.price_elasticity > 0:
            raise ConfigError("price elasticity must be <= 0")
        if len(self.weekly_seasonality) != 7:
            raise ConfigError("weekly_seasonality needs exactly 7 multipliers")
        if any(m < 1.0 for _, m in self.spike_days):
            raise ConfigError("spike multipliers must be >= 1")

    def to_json(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_days": self.n_days,
            "seed": self.seed,
            "base_rate_lognormal": list(self.base_rate_lognormal),
            "gamma_shape": self.gamma_shape,
            "gamma_scale": self.gamma_scale,
            "price_elasticity": self.price_elasticity,
            "spike_days": [list(s) for s in self.spike_days],
            "weekly_seasonality": list(self.weekly_seasonality),
            "start_day": self.start_day.isoformat(),
            "price_walk_sigma": self.price_walk_sigma,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GenConfig":
        kwargs = dict(obj)
        if "base_rate_lognormal" in kwargs:
            kwargs["base_rate_lognormal"] = tuple(kwargs["base_rate_lognormal"])
        if "spike_days" in kwargs:
            kwargs["spike_days"] = tuple(
                (int(d), float(m)) for d, m in kwargs["spike_days"]
            )
        if "weekly_seasonality" in kwargs:
            kwargs["weekly_seasonality"] = tuple(kwargs["weekly_seasonality"])
        if "start_day" in kwargs:
            kwargs["start_day"] = dt.date.fromisoformat(kwargs["start_day"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad generator config: {exc}") from None


def load_gen_config(path) -> GenConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read generator config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"generator config {path} is not valid JSON: {exc}") from None
    return GenConfig.from_json(obj)


def theoretical_tweedie_power(cfg: GenConfig) -> float:
    """Variance power of the exact generating process.

    A Poisson sum of Gamma(shape, scale) jumps is Tweedie with
    p = (shape + 2) / (shape + 1), always inside (1, 2).
    """
    a = cfg.gamma_shape
    return (a + 2.0) / (a + 1.0)


def generate(cfg: GenConfig) -> SalesPanel:
    """Generate the panel for a config (deterministic, item-parallel safe)."""
    spikes = dict(cfg.spike_days)
    mu_pop, sigma_pop = cfg.base_rate_lognormal
    weekly = np.asarray(cfg.weekly_seasonality, dtype=np.float64)
    p = theoretical_tweedie_power(cfg)
    observations: list[SalesObservation] = []
    for i in range(cfg.n_items):
        item_id = f"item_{i:04d}"
        item_gen = keyed_stream(cfg.seed, i, a=0, b=_ITEM_STREAM)
        log_pop = float(item_gen.normal(mu_pop, sigma_pop))
        popularity = float(np.exp(log_pop))
        log_price0 = float(item_gen.normal(0.0, 0.1))
        steps = item_gen.normal(0.0, cfg.price_walk_sigma, size=cfg.n_days)
        log_price = log_price0 + np.cumsum(steps)
        for d in range(cfg.n_days):
            day = cfg.start_day + dt.timedelta(days=d)
            wk = weekly[d % 7]
            spike_mult = spikes.get(d, 1.0)
            level = (
                popularity
                * wk
                * spike_mult
                * float(np.exp(cfg.price_elasticity * log_price[d]))
            )
            cell_gen = keyed_stream(cfg.seed, i, a=d, b=0)
            sales = _compound_sales(
                cell_gen,
                lam=level ** (2.0 - p),
                shape=cfg.gamma_shape,
                scale=cfg.gamma_scale * level ** (p - 1.0),
            )
            features = (
                float(log_price[d]),
                float(wk),
                spike_mult,
                log_pop,
            )
            observations.append(SalesObservation(item_id, day, sales, features))
    return SalesPanel(observations, list(FEATURE_NAMES))


def _compound_sales(gen: np.random.Generator, lam: float, shape: float, scale: float) -> float:
    """One draw of sum_{k<=N} Gamma(shape, scale) with N ~ Poisson(lam).

    Uses the additivity of same-scale Gammas: the sum is exactly
    Gamma(shape * N, scale), so one draw suffices.
    """
    if lam <= 0.0:
        return 0.0
    n = int(gen.poisson(lam))
    if n == 0:
        return 0.0
    return float(gen.standard_gamma(shape * n) * scale)
