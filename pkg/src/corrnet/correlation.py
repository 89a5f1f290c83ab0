"""Plain and volatility-conditioned Pearson correlation, distance transform."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DataError, DegenerateSubgroupError, ZeroVarianceError

Kind = Literal["plain", "conditional"]
KINDS = ("plain", "conditional")

# rounding overshoot past +/-1 smaller than this is clamped silently
CLAMP_TOL = 1e-9


def _clamp(r: float) -> float:
    if abs(r) > 1.0:
        if abs(r) - 1.0 > CLAMP_TOL:
            raise DataError(f"correlation {r!r} outside [-1, 1] beyond rounding tolerance")
        return math.copysign(1.0, r)
    return r


def _cov(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(x * y) - np.mean(x) * np.mean(y))


def pearson(x, y) -> float:
    """Pearson correlation with sample means, <xy> - <x><y> over the root variances."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"pearson needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DataError("pearson needs at least 2 observations")
    # centred form of the same expression; avoids cancellation on level data
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise ZeroVarianceError("pearson undefined for a constant series")
    return _clamp(float(dx @ dy) / math.sqrt(sxx * syy))


@dataclass(frozen=True)
class SubgroupSplit:
    """Row indices of the extreme-quartile (high) and middle (low) groups of one series."""

    high_idx: np.ndarray
    low_idx: np.ndarray


def subgroup_split(x) -> SubgroupSplit:
    """ceil(T/4) lowest plus floor(T/4) highest values form the high group.

    Ties are broken by earlier row first in both tails.
    """
    x = np.asarray(x, dtype=float)
    t = x.size
    n_lo, n_hi = -(-t // 4), t // 4
    rows = np.arange(t)
    ascending = np.lexsort((rows, x))
    low_tail = ascending[:n_lo]
    rest = np.setdiff1d(rows, low_tail, assume_unique=True)
    descending = rest[np.lexsort((rest, -x[rest]))]
    high_tail = descending[:n_hi]
    high = np.sort(np.concatenate([low_tail, high_tail]))
    low = np.setdiff1d(rows, high, assume_unique=True)
    return SubgroupSplit(high_idx=high, low_idx=low)


def conditional_from(r: float, beta: float) -> float:
    """r * sqrt((1 + beta) / (1 + beta r^2))."""
    if beta < 0:
        raise DataError(f"adjustment factor must be >= 0, got {beta}")
    if beta == 0.0:
        return r
    return _clamp(r * math.sqrt((1.0 + beta) / (1.0 + beta * r * r)))


def adjustment_factor(x, y, split_x: SubgroupSplit | None = None,
                      split_y: SubgroupSplit | None = None) -> float:
    """beta = max(sigma_high / sigma_low - 1, 0) with pair-symmetrised subgroup covariances."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    split_x = split_x or subgroup_split(x)
    split_y = split_y or subgroup_split(y)
    for split in (split_x, split_y):
        if split.high_idx.size < 2 or split.low_idx.size < 2:
            raise DegenerateSubgroupError(
                f"subgroups need >= 2 rows each; window of {x.size} rows is too short"
            )
    hx, hy = split_x.high_idx, split_y.high_idx
    lx, ly = split_x.low_idx, split_y.low_idx
    sigma_high = 0.5 * (_cov(x[hx], y[hx]) + _cov(x[hy], y[hy]))
    sigma_low = 0.5 * (_cov(x[lx], y[lx]) + _cov(x[ly], y[ly]))
    if sigma_low == 0.0:
        raise DegenerateSubgroupError("low-volatility subgroup covariance is zero")
    return max(sigma_high / sigma_low - 1.0, 0.0)


def conditional_pearson(x, y, split_x: SubgroupSplit | None = None,
                        split_y: SubgroupSplit | None = None) -> float:
    r = pearson(x, y)
    beta = adjustment_factor(x, y, split_x, split_y)
    return conditional_from(r, beta)


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    r: np.ndarray
    kind: str = "plain"

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        r = np.asarray(self.r, dtype=float)
        n = len(self.names)
        if r.shape != (n, n):
            raise DataError(f"correlation matrix shape {r.shape} does not match {n} names")
        if not np.array_equal(r, r.T):
            raise DataError("correlation matrix is not symmetric")
        if not np.all(np.diag(r) == 1.0):
            raise DataError("correlation matrix diagonal must be 1")
        if np.any(np.abs(r) > 1.0):
            raise DataError("correlation entries must lie in [-1, 1]")
        if self.kind not in KINDS:
            raise DataError(f"unknown correlation kind {self.kind!r}")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class DistanceMatrix:
    names: tuple[str, ...]
    d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        d = np.asarray(self.d, dtype=float)
        n = len(self.names)
        if d.shape != (n, n):
            raise DataError(f"distance matrix shape {d.shape} does not match {n} names")
        if not np.array_equal(d, d.T):
            raise DataError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0.0):
            raise DataError("distance matrix diagonal must be 0")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.names)


def correlation_matrix(window, names: Sequence[str], kind: Kind = "conditional",
                       label: str | None = None) -> CorrelationMatrix:
    """Pairwise correlations of the columns of a T x n window.

    ``label`` identifies the window in error messages.
    """
    if kind not in KINDS:
        raise DataError(f"unknown correlation kind {kind!r}; expected one of {KINDS}")
    x = np.asarray(window, dtype=float)
    n = x.shape[1]
    if len(names) != n:
        raise DataError(f"{len(names)} names for {n} columns")
    where = f" in window {label}" if label else ""
    for j in range(n):
        if np.ptp(x[:, j]) == 0.0:
            raise ZeroVarianceError(f"entity {names[j]!r} is constant{where}")
    splits = [subgroup_split(x[:, j]) for j in range(n)] if kind == "conditional" else None
    r = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                if kind == "plain":
                    value = pearson(x[:, i], x[:, j])
                else:
                    value = conditional_pearson(x[:, i], x[:, j], splits[i], splits[j])
            except DataError as exc:
                raise type(exc)(f"pair ({names[i]!r}, {names[j]!r}){where}: {exc}") from None
            r[i, j] = r[j, i] = value
    return CorrelationMatrix(names=names, r=r, kind=kind)


def to_distance(c: CorrelationMatrix) -> DistanceMatrix:
    """d = sqrt(2 (1 - r)), in [0, 2]."""
    d = np.sqrt(np.maximum(2.0 * (1.0 - c.r), 0.0))
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(names=c.names, d=d)


def _upper(m: np.ndarray) -> np.ndarray:
    if m.shape[0] < 2:
        raise DataError("need at least 2 entities")
    return m[np.triu_indices(m.shape[0], k=1)]


def mean_correlation(c: CorrelationMatrix) -> float:
    return float(np.mean(_upper(c.r)))


def corr_variance(c: CorrelationMatrix) -> float:
    """Population variance of the upper-triangle correlations."""
    u = _upper(c.r)
    return float(np.mean((u - u.mean()) ** 2))


def matrix_rows(names: Sequence[str], m: np.ndarray) -> list[list[str]]:
    rows = [["", *names]]
    for name, row in zip(names, m):
        rows.append([name, *(repr(float(v)) for v in row)])
    return rows


def matrix_to_json(names: Sequence[str], m: np.ndarray, kind: str) -> str:
    return json.dumps(
        {"names": list(names), "kind": kind, "rows": [[float(v) for v in row] for row in m]},
        indent=2,
    )
