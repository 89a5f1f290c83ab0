"""Seeded synthetic yield panels for demos and regression fixtures.

Yields follow a multi-factor random walk: a common rate factor, a euro
core factor, a periphery spread factor and a non-euro factor, each
country loading on them with its own idiosyncratic noise. Volatility
doubles in the final third of the sample to mimic a crisis regime.
"""

from __future__ import annotations

import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

COUNTRIES = (
    "Austria", "Belgium", "Czech", "France", "Germany", "Greece", "Hungary",
    "Iceland", "Ireland", "Italy", "Netherlands", "Poland", "Portugal",
    "Romania", "Spain", "Switzerland", "UK",
)

# starting level (%), core, periphery, non-euro loadings, idiosyncratic vol
_PROFILE = {
    "Austria":     (0.45, 1.0, 0.1, 0.0, 0.010),
    "Belgium":     (0.70, 0.9, 0.3, 0.0, 0.012),
    "Czech":       (1.90, 0.2, 0.0, 0.8, 0.020),
    "France":      (0.65, 1.0, 0.2, 0.0, 0.010),
    "Germany":     (0.20, 1.0, 0.0, 0.0, 0.008),
    "Greece":      (3.80, 0.3, 1.4, 0.0, 0.045),
    "Hungary":     (2.80, 0.1, 0.2, 1.0, 0.030),
    "Iceland":     (4.50, -0.3, 0.0, 0.6, 0.040),
    "Ireland":     (0.80, 0.8, 0.6, 0.0, 0.015),
    "Italy":       (2.50, 0.5, 1.2, 0.0, 0.030),
    "Netherlands": (0.35, 1.0, 0.0, 0.0, 0.009),
    "Poland":      (2.60, 0.2, 0.1, 0.9, 0.022),
    "Portugal":    (1.60, 0.6, 1.0, 0.0, 0.025),
    "Romania":     (4.60, 0.0, 0.4, 0.8, 0.035),
    "Spain":       (1.40, 0.6, 0.9, 0.0, 0.020),
    "Switzerland": (-0.20, 0.7, -0.2, 0.1, 0.012),
    "UK":          (1.30, 0.4, 0.0, 0.5, 0.018),
}


def business_days(start: date, count: int) -> list[date]:
    days, d = [], start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def make_panel_values(n_rows: int = 400, seed: int = 2020) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vol = np.where(np.arange(n_rows) >= 2 * n_rows // 3, 2.0, 1.0)
    common = np.cumsum(rng.normal(0.0, 0.020, n_rows) * vol)
    core = np.cumsum(rng.normal(0.0, 0.015, n_rows) * vol)
    periphery = np.cumsum(rng.normal(0.0, 0.025, n_rows) * vol)
    non_euro = np.cumsum(rng.normal(0.0, 0.020, n_rows) * vol)
    out = np.empty((n_rows, len(COUNTRIES)))
    for k, name in enumerate(COUNTRIES):
        level, b_core, b_per, b_non, idio = _PROFILE[name]
        noise = np.cumsum(rng.normal(0.0, idio, n_rows) * vol)
        out[:, k] = level + common + b_core * core + b_per * periphery + b_non * non_euro + noise
    return np.round(out, 3)


def write_synthetic_panel(path, n_rows: int = 400, seed: int = 2020,
                          start: date = date(2019, 6, 3),
                          missing: tuple[tuple[int, int], ...] = ((57, 5), (58, 5), (203, 16))) -> None:
    """Write a synthetic panel CSV; ``missing`` lists (row, column) cells left empty."""
    values = make_panel_values(n_rows, seed)
    dates = business_days(start, n_rows)
    blank = set(missing)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *COUNTRIES])
        for t, d in enumerate(dates):
            cells = ["" if (t, k) in blank else f"{v:.3f}" for k, v in enumerate(values[t])]
            writer.writerow([d.isoformat(), *cells])
