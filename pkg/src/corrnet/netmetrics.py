"""Network statistics of filtered networks and the rolling-window driver."""

from __future__ import annotations

import csv
import io
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import filters
from .correlation import correlation_matrix, corr_variance, mean_correlation, to_distance
from .errors import CorrnetError, EmptyNetworkError, SizeError, WindowError
from .filters import FilteredNetwork, hop_distances
from .ingest import WindowSpec, YieldPanel, windows


def network_length(g: FilteredNetwork) -> float:
    """Mean edge distance."""
    if g.n_edges == 0:
        raise EmptyNetworkError(f"{g.method} network has no edges")
    return float(np.mean(g.weights()))


def network_length_var(g: FilteredNetwork) -> float:
    """Population variance of edge distances about their mean."""
    w = g.weights()
    if w.size == 0:
        raise EmptyNetworkError(f"{g.method} network has no edges")
    return float(np.mean((w - w.mean()) ** 2))


def _argmax_label(values: Sequence, names: Sequence[str]) -> int:
    # ties resolved by lexicographically smallest label, not node index
    best = max(values)
    return min((k for k, v in enumerate(values) if v == best), key=lambda k: names[k])


def max_degree(g: FilteredNetwork) -> tuple[int, str]:
    """Largest neighbour count and its node (adjacency count, zero-weight links included)."""
    if g.n < 2:
        raise SizeError("max_degree needs at least 2 nodes")
    deg = g.degrees().tolist()
    k = _argmax_label(deg, g.names)
    return deg[k], g.names[k]


def _exact_betweenness(g: FilteredNetwork) -> list[Fraction]:
    """Ordered-pair betweenness on hop topology, accumulated exactly.

    Brandes dependency accumulation from every source; each source counts
    the pairs (source, t), so unordered pairs are visited twice.
    """
    adj = g.adjacency()
    n = g.n
    score = [Fraction(0)] * n
    for s in range(n):
        dist = [-1] * n
        sigma = [0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s], sigma[s] = 0, 1
        order = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [Fraction(0)] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
            if w != s:
                score[w] += delta[w]
    return score


def betweenness(g: FilteredNetwork) -> np.ndarray:
    """Unnormalised betweenness summed over ordered pairs (i, j), i != j != k."""
    if g.n < 2:
        raise SizeError("betweenness needs at least 2 nodes")
    return np.array([float(b) for b in _exact_betweenness(g)])


def central_node(g: FilteredNetwork) -> str:
    if g.n < 2:
        raise SizeError("central_node needs at least 2 nodes")
    return g.names[_argmax_label(_exact_betweenness(g), g.names)]


def mean_occupation_layer(g: FilteredNetwork, central: str) -> float:
    """Mean hop level relative to ``central``; unreachable nodes sit at level 0."""
    try:
        c = g.names.index(central)
    except ValueError:
        raise KeyError(f"central node {central!r} not in network") from None
    levels = hop_distances(g.adjacency(), c)
    return sum(max(h, 0) for h in levels) / g.n


def hop_diameter(g: FilteredNetwork) -> int:
    """Largest finite hop distance between any two nodes."""
    adj = g.adjacency()
    return max(max(hop_distances(adj, s)) for s in range(g.n))


@dataclass(frozen=True)
class NetworkStats:
    length: float
    length_var: float
    max_degree: int
    max_degree_node: str
    mol: float
    central_node: str
    betweenness: tuple[float, ...]
    degrees: tuple[int, ...]
    hop_diameter: int

    def as_dict(self, names: Sequence[str]) -> dict:
        return {
            "length": self.length,
            "length_var": self.length_var,
            "max_degree": self.max_degree,
            "max_degree_node": self.max_degree_node,
            "mol": self.mol,
            "central_node": self.central_node,
            "hop_diameter": self.hop_diameter,
            "degree": dict(zip(names, self.degrees)),
            "betweenness": dict(zip(names, self.betweenness)),
        }


def network_stats(g: FilteredNetwork) -> NetworkStats:
    exact = _exact_betweenness(g)
    central = g.names[_argmax_label(exact, g.names)]
    deg, hub = max_degree(g)
    return NetworkStats(
        length=network_length(g),
        length_var=network_length_var(g),
        max_degree=deg,
        max_degree_node=hub,
        mol=mean_occupation_layer(g, central),
        central_node=central,
        betweenness=tuple(float(b) for b in exact),
        degrees=tuple(int(k) for k in g.degrees()),
        hop_diameter=hop_diameter(g),
    )


@dataclass
class RollingSeries:
    """One row per window: correlation moments plus per-method network statistics."""

    window_end: list[date] = field(default_factory=list)
    mean_corr: list[float] = field(default_factory=list)
    corr_var: list[float] = field(default_factory=list)
    stats: dict[str, list[NetworkStats]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.window_end)

    def to_csv(self) -> str:
        methods = list(self.stats)
        header = ["window_end", "mean_corr", "corr_var"]
        for m in methods:
            p = m.lower()
            header += [f"{p}_length", f"{p}_length_var", f"{p}_max_degree",
                       f"{p}_central", f"{p}_mol"]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for k, end in enumerate(self.window_end):
            row = [end.isoformat(), _fmt(self.mean_corr[k]), _fmt(self.corr_var[k])]
            for m in methods:
                s = self.stats[m][k]
                row += [_fmt(s.length), _fmt(s.length_var), s.max_degree,
                        s.central_node, _fmt(s.mol)]
            writer.writerow(row)
        return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def _run_window(window, names, kind, methods):
    label = window.end.isoformat()
    try:
        cm = correlation_matrix(window.values, names, kind, label=label)
        dm = to_distance(cm)
        per_method = {m: network_stats(filters.build(dm, m)) for m in methods}
    except CorrnetError as exc:
        raise WindowError(f"window ending {label}: {exc}") from exc
    return window.end, mean_correlation(cm), corr_variance(cm), per_method


def rolling_run(panel: YieldPanel, spec: WindowSpec, kind: str = "conditional",
                methods: Iterable[str] = filters.METHODS, jobs: int = 1) -> RollingSeries:
    """Correlation, distance, filtering and statistics for every window.

    A failing window aborts the run. ``jobs > 1`` evaluates windows on a
    thread pool; row order always follows window order.
    """
    methods = [filters.canonical_method(m) for m in methods]
    if not methods:
        raise WindowError("no filtering methods requested")
    wins = list(windows(panel, spec))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda w: _run_window(w, panel.names, kind, methods), wins))
    else:
        results = [_run_window(w, panel.names, kind, methods) for w in wins]
    series = RollingSeries(stats={m: [] for m in methods})
    for end, mc, cv, per_method in results:
        series.window_end.append(end)
        series.mean_corr.append(mc)
        series.corr_var.append(cv)
        for m in methods:
            series.stats[m].append(per_method[m])
    return series
