"""Loading, aligning and windowing of multivariate yield panels.

A panel is a wide CSV: one ``date`` column plus one numeric column per
entity. Missing cells are empty strings. Interior gaps are forward-filled
up to ``gap_limit`` consecutive rows; longer gaps are rejected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import DataQualityError, ParseError, WindowError, ZeroVarianceError

DEFAULT_GAP_LIMIT = 5
SUMMARY_COLUMNS = (
    "name", "min", "max", "mean", "variance", "skewness", "kurtosis", "ac1", "ac2_1",
)


@dataclass(frozen=True)
class YieldPanel:
    """Aligned T x n matrix of yields (percent) with dates and entity names."""

    dates: tuple[date, ...]
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "names", tuple(self.names))
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.names)):
            raise DataQualityError(
                f"values shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.names)} names"
            )
        if len(self.dates) < 2:
            raise DataQualityError("a panel needs at least 2 rows")
        if len(set(self.names)) != len(self.names):
            raise DataQualityError("duplicate entity labels")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataQualityError("dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DataQualityError("panel contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return len(self.dates)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def slice(self, start: date | None = None, end: date | None = None) -> "YieldPanel":
        """Rows with ``start <= date <= end`` (either bound optional)."""
        keep = [
            k for k, d in enumerate(self.dates)
            if (start is None or d >= start) and (end is None or d <= end)
        ]
        if len(keep) < 2:
            raise DataQualityError(
                f"date filter {start}..{end} leaves {len(keep)} rows; need at least 2"
            )
        return YieldPanel(
            dates=[self.dates[k] for k in keep],
            names=self.names,
            values=self.values[keep],
        )


@dataclass(frozen=True)
class WindowSpec:
    length: int = 120
    displacement: int = 10

    def __post_init__(self):
        if self.length < 1:
            raise WindowError(f"window length must be >= 1, got {self.length}")
        if self.displacement < 1:
            raise WindowError(f"displacement must be >= 1, got {self.displacement}")


class Window(NamedTuple):
    start: date
    end: date
    values: np.ndarray


@dataclass(frozen=True)
class SummaryRow:
    min: float
    max: float
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    ac1: float
    ac2_1: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.min, self.max, self.mean, self.variance,
                self.skewness, self.kurtosis, self.ac1, self.ac2_1)


def _parse_date(text: str, row: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"row {row}, column 'date': unparsable date {text!r}",
                         row=row, column="date") from None


def _parse_cell(text: str, row: int, column: str) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {column!r}: unparsable value {text!r}",
                         row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}, column {column!r}: non-finite value {text!r}",
                         row=row, column=column)
    return value


def read_panel_csv(path: str | Path) -> tuple[list[date], list[str], np.ndarray]:
    """Raw parse of a panel CSV; missing cells come back as NaN, rows unsorted."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", row=1) from None
        header = [h.strip() for h in header]
        if not header or header[0].lower() != "date":
            raise ParseError(f"{path}: first column must be 'date'", row=1, column=header[0] if header else None)
        names = header[1:]
        if not names:
            raise ParseError(f"{path}: no entity columns", row=1)
        if len(set(names)) != len(names):
            raise DataQualityError(f"{path}: duplicate entity labels in header")
        dates, rows = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"row {line_no}: expected {len(header)} fields, got {len(record)}",
                    row=line_no,
                )
            dates.append(_parse_date(record[0], line_no))
            rows.append([_parse_cell(c, line_no, names[k]) for k, c in enumerate(record[1:])])
    values = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return dates, names, values


def forward_fill(values: np.ndarray, dates: Sequence[date], names: Sequence[str],
                 gap_limit: int = DEFAULT_GAP_LIMIT) -> np.ndarray:
    """Forward-fill NaN runs of at most ``gap_limit`` rows, column by column.

    Raises DataQualityError for leading missing values or longer runs.
    """
    filled = np.array(values, dtype=float, copy=True)
    n_rows, n_cols = filled.shape
    for j in range(n_cols):
        col = filled[:, j]
        missing = np.isnan(col)
        if not missing.any():
            continue
        if missing[0]:
            raise DataQualityError(
                f"entity {names[j]!r} has no value on the first date {dates[0]}"
            )
        t = 0
        while t < n_rows:
            if not missing[t]:
                t += 1
                continue
            run_start = t
            while t < n_rows and missing[t]:
                t += 1
            run = t - run_start
            if run > gap_limit:
                raise DataQualityError(
                    f"entity {names[j]!r} missing {run} consecutive values "
                    f"from {dates[run_start]} to {dates[t - 1]} (gap limit {gap_limit})"
                )
            col[run_start:t] = col[run_start - 1]
    return filled


def load_panel(path: str | Path, gap_limit: int = DEFAULT_GAP_LIMIT) -> YieldPanel:
    """Read, sort, gap-fill and validate a panel CSV."""
    dates, names, values = read_panel_csv(path)
    if len(set(dates)) != len(dates):
        seen, dup = set(), None
        for d in dates:
            if d in seen:
                dup = d
                break
            seen.add(d)
        raise DataQualityError(f"{path}: duplicate date {dup}")
    order = sorted(range(len(dates)), key=dates.__getitem__)
    dates = [dates[k] for k in order]
    values = values[order]
    # dates with no observation for any entity are not trading days
    observed = ~np.all(np.isnan(values), axis=1)
    dates = [d for d, keep in zip(dates, observed) if keep]
    values = values[observed]
    if len(dates) < 2:
        raise DataQualityError(f"{path}: need at least 2 dated rows, got {len(dates)}")
    values = forward_fill(values, dates, names, gap_limit)
    return YieldPanel(dates=dates, names=names, values=values)


def write_panel_csv(panel: YieldPanel, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *panel.names])
        for d, row in zip(panel.dates, panel.values):
            writer.writerow([d.isoformat(), *(repr(float(v)) for v in row)])


def window_count(n_rows: int, spec: WindowSpec) -> int:
    if spec.length > n_rows:
        return 0
    return (n_rows - spec.length) // spec.displacement + 1


def windows(panel: YieldPanel, spec: WindowSpec) -> Iterator[Window]:
    """Sliding windows ``[k*displacement, k*displacement + length)`` that fit entirely."""
    count = window_count(panel.n_rows, spec)
    if count == 0:
        raise WindowError(
            f"window length {spec.length} exceeds panel length {panel.n_rows}; no windows"
        )
    for k in range(count):
        lo = k * spec.displacement
        hi = lo + spec.length
        yield Window(panel.dates[lo], panel.dates[hi - 1], panel.values[lo:hi])


def central_moments(series) -> tuple[float, float, float, float]:
    """Mean and 2nd-4th central moments with 1/T normalisation."""
    x = np.asarray(series, dtype=float)
    mean = x.mean()
    dev = x - mean
    return mean, float(np.mean(dev**2)), float(np.mean(dev**3)), float(np.mean(dev**4))


def skewness(series) -> float:
    _, m2, m3, _ = central_moments(series)
    if m2**1.5 <= 0.0:
        raise ZeroVarianceError("skewness undefined for a constant series")
    return m3 / m2**1.5


def kurtosis(series) -> float:
    """Non-excess kurtosis m4 / m2**2 (normal distribution gives 3)."""
    _, m2, _, m4 = central_moments(series)
    if m2**2 <= 0.0:
        raise ZeroVarianceError("kurtosis undefined for a constant series")
    return m4 / m2**2


def lag1_autocorrelation(series) -> float:
    """Pearson correlation between consecutive observations (x_t, x_{t+1})."""
    x = np.asarray(series, dtype=float)
    if x.size < 3:
        raise ZeroVarianceError("lag-1 autocorrelation needs at least 3 observations")
    a, b = x[:-1] - x[:-1].mean(), x[1:] - x[1:].mean()
    prod = float(a @ a) * float(b @ b)
    if prod <= 0.0:  # also catches underflow of tiny variances
        raise ZeroVarianceError("lag-1 autocorrelation undefined: zero-variance lagged series")
    r = float(a @ b) / math.sqrt(prod)
    return max(-1.0, min(1.0, r))


def summary_stats(series) -> SummaryRow:
    """Level moments plus AC(1) of differences and AC(1) of squared differences."""
    x = np.asarray(series, dtype=float)
    if x.size < 3:
        raise ZeroVarianceError(f"summary statistics need at least 3 observations, got {x.size}")
    mean, m2, m3, m4 = central_moments(x)
    if m2**2 <= 0.0:
        raise ZeroVarianceError("summary statistics undefined for a constant series")
    diff = np.diff(x)
    try:
        ac1 = lag1_autocorrelation(diff)
        ac2_1 = lag1_autocorrelation(diff**2)
    except ZeroVarianceError as exc:
        raise ZeroVarianceError(f"autocorrelation undefined: {exc}") from None
    return SummaryRow(
        min=float(x.min()),
        max=float(x.max()),
        mean=float(mean),
        variance=m2,
        skewness=m3 / m2**1.5,
        kurtosis=m4 / m2**2,
        ac1=ac1,
        ac2_1=ac2_1,
    )


def panel_summary(panel: YieldPanel) -> list[tuple[str, SummaryRow]]:
    rows = []
    for j, name in enumerate(panel.names):
        try:
            rows.append((name, summary_stats(panel.values[:, j])))
        except ZeroVarianceError as exc:
            raise ZeroVarianceError(f"entity {name!r}: {exc}") from None
    return rows
