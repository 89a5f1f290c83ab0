"""Dyad-independent exponential random graph models.

Every supported statistic (edge count, node factor, node covariate) is a
sum over present edges of a per-dyad term, so the likelihood factorises
over dyads: the maximum pseudo-likelihood estimate is the exact MLE and is
obtained by logistic regression of dyad indicators on change statistics.
Simulation uses a Metropolis-Hastings dyad-toggle chain.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, NonConvergenceError, SpecError, UndefinedFitError
from .filters import FilteredNetwork

BINARY_ATTRIBUTES = ("giips", "abfn", "euro")
CONTINUOUS_ATTRIBUTES = ("covid_deaths", "debt_to_gdp", "inflation", "account_balance")
ATTRIBUTE_COLUMNS = ("name", *BINARY_ATTRIBUTES, *CONTINUOUS_ATTRIBUTES)
COVID_SCALES = ("percent", "fraction")

DISPLAY_NAMES = {
    "edges": "Edges",
    "giips": "GIIPS",
    "abfn": "ABFN",
    "euro": "Euro",
    "covid_deaths": "COVID-19 Deaths",
    "debt_to_gdp": "Debt to GDP",
    "inflation": "Inflation",
    "account_balance": "Account Balance",
}

MAX_ITER = 100


@dataclass(frozen=True)
class NodeAttributes:
    """Per-node attribute vectors aligned with ``names``."""

    names: tuple[str, ...]
    values: Mapping[str, np.ndarray]
    binary: frozenset[str] = frozenset(BINARY_ATTRIBUTES)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        n = len(self.names)
        if len(set(self.names)) != n:
            raise DataError("duplicate node names in attributes")
        values = {}
        for key, vec in self.values.items():
            arr = np.asarray(vec, dtype=float)
            if arr.shape != (n,):
                raise DataError(f"attribute {key!r} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"attribute {key!r} has non-finite values")
            if key in self.binary and not np.all((arr == 0) | (arr == 1)):
                raise DataError(f"binary attribute {key!r} must be 0/1")
            arr.setflags(write=False)
            values[key] = arr
        if "giips" in values and "abfn" in values:
            both = np.flatnonzero((values["giips"] == 1) & (values["abfn"] == 1))
            if both.size:
                raise DataError(f"{self.names[both[0]]!r} flagged as both GIIPS and ABFN")
        object.__setattr__(self, "values", values)

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self.values[key]
        except KeyError:
            raise SpecError(f"unknown attribute {key!r}") from None

    def align(self, names: Sequence[str]) -> "NodeAttributes":
        """Reorder to ``names``; every name must have a row."""
        index = {name: k for k, name in enumerate(self.names)}
        missing = [name for name in names if name not in index]
        if missing:
            raise DataError(f"no attributes for entity {missing[0]!r}")
        order = [index[name] for name in names]
        return NodeAttributes(names, {k: v[order] for k, v in self.values.items()}, self.binary)


def load_attributes(path, covid_scale: str = "percent") -> NodeAttributes:
    """Read an attribute CSV with columns name,giips,abfn,euro,covid_deaths,...

    COVID deaths are stored as printed (percent of population). With
    ``covid_scale="percent"`` they are used unchanged; ``"fraction"`` divides
    them by 100.
    """
    if covid_scale not in COVID_SCALES:
        raise DataError(f"covid scale must be one of {COVID_SCALES}, got {covid_scale!r}")
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in ATTRIBUTE_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing attribute columns {missing}")
        names, cols = [], {c: [] for c in ATTRIBUTE_COLUMNS[1:]}
        for line_no, row in enumerate(reader, start=2):
            row = {k.strip(): (v or "").strip() for k, v in row.items()}
            names.append(row["name"])
            for c in cols:
                try:
                    cols[c].append(float(row[c]))
                except ValueError:
                    raise DataError(f"{path}: row {line_no}, column {c!r}: bad value {row[c]!r}") from None
    if covid_scale == "fraction":
        cols["covid_deaths"] = [v / 100.0 for v in cols["covid_deaths"]]
    return NodeAttributes(names, {k: np.array(v) for k, v in cols.items()})


def table3_attributes(covid_scale: str = "percent") -> NodeAttributes:
    """Bundled 2020 economic and health attributes of the 17 countries."""
    ref = resources.files("corrnet") / "data" / "table3_attributes.csv"
    with resources.as_file(ref) as path:
        return load_attributes(path, covid_scale)


@dataclass(frozen=True)
class Term:
    kind: str  # "edges" | "nodefactor" | "nodecov"
    attr: str | None = None

    @property
    def label(self) -> str:
        return "edges" if self.kind == "edges" else f"{self.kind}.{self.attr}"

    @property
    def display(self) -> str:
        return DISPLAY_NAMES.get(self.attr or "edges", self.label)


@dataclass(frozen=True)
class ErgmSpec:
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        kinds = [t.kind for t in self.terms]
        if kinds.count("edges") != 1:
            raise SpecError("the edges term must appear exactly once")
        for t in self.terms:
            if t.kind not in ("edges", "nodefactor", "nodecov"):
                raise SpecError(f"unknown term kind {t.kind!r}")
            if t.kind != "edges" and not t.attr:
                raise SpecError(f"{t.kind} term needs an attribute name")
        labels = [t.label for t in self.terms]
        if len(set(labels)) != len(labels):
            raise SpecError("duplicate terms")

    @classmethod
    def edges_only(cls) -> "ErgmSpec":
        return cls((Term("edges"),))

    @classmethod
    def default(cls) -> "ErgmSpec":
        return cls((
            Term("edges"),
            *(Term("nodefactor", a) for a in BINARY_ATTRIBUTES),
            *(Term("nodecov", a) for a in CONTINUOUS_ATTRIBUTES),
        ))

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.terms]

    def __len__(self) -> int:
        return len(self.terms)

    def check(self, attrs: NodeAttributes) -> None:
        for t in self.terms:
            if t.attr is not None:
                attrs[t.attr]
                if t.kind == "nodefactor" and t.attr not in attrs.binary:
                    raise SpecError(f"nodefactor needs a binary attribute, {t.attr!r} is continuous")


def _node_terms(attrs: NodeAttributes, spec: ErgmSpec) -> np.ndarray:
    """n x p matrix of per-node contributions; a dyad's change stat is row_i + row_j."""
    spec.check(attrs)
    n = len(attrs.names)
    cols = []
    for t in spec.terms:
        if t.kind == "edges":
            cols.append(np.full(n, 0.5))
        else:
            cols.append(attrs[t.attr])
    return np.column_stack(cols)


def dyads(n: int) -> np.ndarray:
    """All (i, j) with i < j in lexicographic order."""
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j])


def dyad_design(attrs: NodeAttributes, spec: ErgmSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dyad list and the D x p matrix of change statistics."""
    node = _node_terms(attrs, spec)
    pairs = dyads(len(attrs.names))
    x = node[pairs[:, 0]] + node[pairs[:, 1]]
    edge_col = spec.labels.index("edges")
    x[:, edge_col] = 1.0
    return pairs, x


def _check_network(g: FilteredNetwork, attrs: NodeAttributes) -> None:
    if tuple(g.names) != tuple(attrs.names):
        raise DataError("network and attribute node orders differ; call attrs.align(g.names)")


def change_stats(g: FilteredNetwork, attrs: NodeAttributes, spec: ErgmSpec,
                 dyad: tuple[int, int]) -> np.ndarray:
    """Gain in each statistic from adding dyad (i, j), i < j."""
    i, j = dyad
    if not i < j:
        raise DataError(f"dyad must satisfy i < j, got ({i}, {j})")
    _check_network(g, attrs)
    node = _node_terms(attrs, spec)
    out = node[i] + node[j]
    out[spec.labels.index("edges")] = 1.0
    return out


def edge_indicator(g: FilteredNetwork) -> np.ndarray:
    pairs = dyads(g.n)
    present = g.edge_set()
    return np.array([(int(i), int(j)) in present for i, j in pairs], dtype=float)


def global_stats(g: FilteredNetwork, attrs: NodeAttributes, spec: ErgmSpec) -> np.ndarray:
    """Sum of change statistics over present edges."""
    _check_network(g, attrs)
    _, x = dyad_design(attrs, spec)
    return edge_indicator(g) @ x


def _log_likelihood(x: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    eta = x @ theta
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def _irls(x: np.ndarray, y: np.ndarray, ridge: float, penalised: np.ndarray,
          max_iter: int = MAX_ITER, tol: float = 1e-10):
    """Newton-Raphson (IRLS) for logistic regression with an optional ridge.

    Returns theta, the penalised information matrix, iterations and whether
    the step criterion was met.
    """
    p = x.shape[1]
    density = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    theta = np.zeros(p)
    # intercept column is the all-ones edges column
    theta[np.all(x == 1.0, axis=0)] = math.log(density / (1 - density))
    penalty = ridge * penalised.astype(float)

    def objective(th):
        return _log_likelihood(x, y, th) - 0.5 * float(penalty @ th**2)

    current = objective(theta)
    converged = False
    iterations = 0
    info = None
    for iterations in range(1, max_iter + 1):
        eta = x @ theta
        mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
        w = mu * (1.0 - mu)
        grad = x.T @ (y - mu) - penalty * theta
        info = (x * w[:, None]).T @ x + np.diag(penalty)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, grad, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        scale = 1.0
        while True:
            trial = theta + scale * step
            value = objective(trial)
            if value >= current - 1e-12 * abs(current) or scale < 1e-10:
                break
            scale *= 0.5
        theta, current = trial, value
        if np.max(np.abs(scale * step)) <= tol * max(1.0, np.max(np.abs(theta))):
            converged = True
            break
    eta = x @ theta
    mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
    info = (x * (mu * (1.0 - mu))[:, None]).T @ x + np.diag(penalty)
    return theta, info, iterations, converged


def information_criteria(ll_model: float, ll_null: float, n_params: int,
                         n_dyads: int) -> tuple[float, float, float]:
    """AIC, BIC (sample size = dyad count) and model-fit percentage."""
    if ll_null == 0.0:
        raise UndefinedFitError("null log-likelihood is zero; model fit undefined")
    aic = 2.0 * n_params - 2.0 * ll_model
    bic = math.log(n_dyads) * n_params - 2.0 * ll_model
    fit = 100.0 * (1.0 - ll_model / ll_null)
    return aic, bic, fit


def significance_stars(p: float) -> str:
    if not math.isfinite(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass
class ErgmFit:
    labels: list[str]
    displays: list[str]
    theta: np.ndarray
    std_err: np.ndarray
    p_values: np.ndarray
    ll_model: float
    ll_null: float
    aic: float
    bic: float
    model_fit_pct: float
    converged: bool
    n_nodes: int
    n_dyads: int
    n_edges: int
    iterations: int
    ridge: float = 0.0

    @property
    def n_params(self) -> int:
        return len(self.theta)

    @property
    def stars(self) -> list[str]:
        return [significance_stars(p) for p in self.p_values]

    def to_dict(self) -> dict:
        def num(v):
            v = float(v)
            return v if math.isfinite(v) else None

        return {
            "spec": self.labels,
            "theta": [num(v) for v in self.theta],
            "std_err": [num(v) for v in self.std_err],
            "p_values": [num(v) for v in self.p_values],
            "stars": self.stars,
            "ll_model": self.ll_model,
            "ll_null": self.ll_null,
            "aic": self.aic,
            "bic": self.bic,
            "model_fit_pct": self.model_fit_pct,
            "converged": self.converged,
            "n_nodes": self.n_nodes,
            "n_dyads": self.n_dyads,
            "n_edges": self.n_edges,
            "iterations": self.iterations,
            "ridge": self.ridge,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self, title: str = "") -> str:
        lines = []
        if title:
            lines.append(title)
        lines.append(f"{'Parameter':<18}{'Estimate':>11}{'Std. Err.':>11}{'p-value':>10}")
        for name, t, se, p, star in zip(self.displays, self.theta, self.std_err,
                                        self.p_values, self.stars):
            lines.append(f"{name:<18}{t:>11.2f}{se:>11.2f}{p:>10.3f} {star}".rstrip())
        lines.append("-" * 50)
        lines.append(f"{'AIC':<29}{self.aic:>11.2f}")
        lines.append(f"{'BIC':<29}{self.bic:>11.2f}")
        lines.append(f"{'Log Likelihood (model)':<29}{self.ll_model:>11.2f}")
        lines.append(f"{'Log Likelihood (null)':<29}{self.ll_null:>11.2f}")
        lines.append(f"{'Model Fit':<29}{self.model_fit_pct:>10.2f}%")
        if not self.converged:
            lines.append("WARNING: estimation did not converge")
        lines.append("*** p<0.001; ** p<0.01; * p<0.05")
        return "\n".join(lines)


def diagnostics(fit: ErgmFit, p: int | None = None) -> tuple[float, float, float]:
    return information_criteria(fit.ll_model, fit.ll_null,
                                fit.n_params if p is None else p, fit.n_dyads)


def fit_mple(g: FilteredNetwork, attrs: NodeAttributes, spec: ErgmSpec,
             ridge: float = 0.0, max_iter: int = MAX_ITER) -> ErgmFit:
    """Exact MLE by logistic regression of dyad indicators on change statistics.

    ``ridge`` penalises every coefficient except the edges term. A fit that
    does not converge (typically complete separation) is returned with
    ``converged=False`` and a warning.
    """
    if ridge < 0:
        raise DataError(f"ridge must be >= 0, got {ridge}")
    _check_network(g, attrs)
    _, x = dyad_design(attrs, spec)
    y = edge_indicator(g)
    n_dyads = y.size
    n_edges = int(y.sum())
    if n_edges == 0 or n_edges == n_dyads:
        raise DataError("ERGM fit needs at least one present and one absent dyad")

    edge_col = spec.labels.index("edges")
    penalised = np.ones(len(spec), dtype=bool)
    penalised[edge_col] = False
    theta, info, iterations, step_ok = _irls(x, y, ridge, penalised, max_iter)
    ll_model = _log_likelihood(x, y, theta)

    null_x = x[:, [edge_col]]
    null_theta, _, _, _ = _irls(null_x, y, 0.0, np.zeros(1, dtype=bool), max_iter)
    ll_null = _log_likelihood(null_x, y, null_theta)

    with np.errstate(all="ignore"):
        cond = np.linalg.cond(info)
    well_posed = bool(np.isfinite(cond) and cond < 1e13)
    if well_posed:
        cov = np.linalg.inv(info)
        std_err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        std_err = np.full(len(spec), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = theta / std_err
    p_values = np.array([math.erfc(abs(v) / math.sqrt(2.0)) if np.isfinite(v) else 1.0 for v in z])

    converged = step_ok and well_posed
    if not converged:
        warnings.warn(
            f"ERGM fit did not converge after {iterations} iterations "
            "(possible separation); coefficients reported at the cap",
            RuntimeWarning,
            stacklevel=2,
        )
    aic, bic, fit_pct = information_criteria(ll_model, ll_null, len(spec), n_dyads)
    return ErgmFit(
        labels=spec.labels,
        displays=[t.display for t in spec.terms],
        theta=theta,
        std_err=std_err,
        p_values=p_values,
        ll_model=ll_model,
        ll_null=ll_null,
        aic=aic,
        bic=bic,
        model_fit_pct=fit_pct,
        converged=converged,
        n_nodes=g.n,
        n_dyads=n_dyads,
        n_edges=n_edges,
        iterations=iterations,
        ridge=ridge,
    )


@dataclass
class SimulationResult:
    pairs: np.ndarray
    networks: np.ndarray  # n_networks x D boolean dyad indicators
    stats: np.ndarray  # n_networks x p
    labels: list[str]
    acceptance_rate: float

    def edge_sets(self) -> list[frozenset[tuple[int, int]]]:
        out = []
        for row in self.networks:
            idx = np.flatnonzero(row)
            out.append(frozenset((int(self.pairs[k, 0]), int(self.pairs[k, 1])) for k in idx))
        return out


def simulate(theta, attrs: NodeAttributes, spec: ErgmSpec, n_networks: int,
             burn_in: int | None = None, thin: int | None = None,
             seed: int = 0) -> SimulationResult:
    """Metropolis-Hastings over single dyad toggles, starting from the empty graph.

    Defaults: ``burn_in = 10 * D`` and ``thin = D`` proposals, D the dyad count.
    """
    if n_networks < 1:
        raise DataError("n_networks must be >= 1")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(spec),):
        raise SpecError(f"theta has {theta.size} entries for {len(spec)} terms")
    pairs, x = dyad_design(attrs, spec)
    n_dyads = len(pairs)
    burn_in = 10 * n_dyads if burn_in is None else burn_in
    thin = n_dyads if thin is None else thin
    if burn_in < 0 or thin < 1:
        raise DataError("burn_in must be >= 0 and thin >= 1")

    eta = x @ theta
    # acceptance probabilities min(1, exp(+/- eta)) for adding / removing
    p_add = np.exp(np.minimum(eta, 0.0)).tolist()
    p_remove = np.exp(np.minimum(-eta, 0.0)).tolist()

    rng = np.random.default_rng(seed)
    state = [False] * n_dyads
    networks = np.zeros((n_networks, n_dyads), dtype=bool)
    accepted = 0
    total = burn_in + n_networks * thin
    chunk = 1 << 16
    step = 0
    sample = 0
    next_record = burn_in + thin
    while step < total:
        size = min(chunk, total - step)
        proposals = rng.integers(0, n_dyads, size=size).tolist()
        uniforms = rng.random(size).tolist()
        for k, u in zip(proposals, uniforms):
            if state[k]:
                if u < p_remove[k]:
                    state[k] = False
                    accepted += 1
            elif u < p_add[k]:
                state[k] = True
                accepted += 1
            step += 1
            if step == next_record:
                networks[sample] = state
                sample += 1
                next_record += thin
    stats = networks.astype(float) @ x
    return SimulationResult(pairs, networks, stats, spec.labels, accepted / max(total, 1))


def mc_standard_error(samples) -> np.ndarray:
    """Batch-means standard error of the mean of each column."""
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    n = s.shape[0]
    n_batches = int(math.isqrt(n))
    if n_batches < 2:
        return s.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(s.shape[1], np.inf)
    size = n // n_batches
    means = s[: n_batches * size].reshape(n_batches, size, -1).mean(axis=1)
    return means.std(axis=0, ddof=1) / math.sqrt(n_batches)


@dataclass(frozen=True)
class GofRow:
    label: str
    observed: float
    sim_mean: float
    sim_sd: float
    mc_se: float
    z: float


def gof(g: FilteredNetwork, attrs: NodeAttributes, spec: ErgmSpec, fit: ErgmFit,
        n_networks: int = 10_000, seed: int = 0, burn_in: int | None = None,
        thin: int | None = None) -> list[GofRow]:
    """Compare observed statistics with their simulated means at the fitted theta.

    ``z`` is (observed - simulated mean) / MC standard error; at the MLE it
    should be O(1) for every statistic.
    """
    if not fit.converged:
        raise NonConvergenceError("goodness of fit needs a converged ERGM fit")
    if fit.labels != spec.labels:
        raise SpecError("fit and spec term lists differ")
    observed = global_stats(g, attrs, spec)
    sim = simulate(fit.theta, attrs, spec, n_networks, burn_in, thin, seed)
    mean = sim.stats.mean(axis=0)
    sd = sim.stats.std(axis=0, ddof=1) if n_networks > 1 else np.zeros(len(spec))
    se = mc_standard_error(sim.stats)
    rows = []
    for k, label in enumerate(spec.labels):
        z = (observed[k] - mean[k]) / se[k] if se[k] > 0 else (0.0 if observed[k] == mean[k] else math.inf)
        rows.append(GofRow(label, float(observed[k]), float(mean[k]), float(sd[k]), float(se[k]), float(z)))
    return rows
