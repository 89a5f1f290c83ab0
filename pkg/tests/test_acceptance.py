"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import networkx as nx
import numpy as np
import pytest
from scipy.optimize import linprog

from corrnet import ergm, filters
from corrnet.correlation import adjustment_factor, conditional_from, conditional_pearson, pearson, subgroup_split
from corrnet.correlation import correlation_matrix, to_distance
from corrnet.ergm import ErgmSpec, NodeAttributes, Term, fit_mple, global_stats, information_criteria
from corrnet.ergm import mc_standard_error, simulate, table3_attributes
from corrnet.filters import FilteredNetwork
from corrnet.ingest import WindowSpec, load_panel, windows
from corrnet.netmetrics import max_degree, mean_occupation_layer, network_stats

from conftest import random_distance
from oracles import enumerate_graphs, exact_ergm_mle, graph_statistics, greedy_tmfg_edge_sets, tree_weight_extremes

T3 = table3_attributes()


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def network(names, pairs, method="MST"):
    return FilteredNetwork(names, tuple((i, j, 1.0) for i, j in pairs), method)


def last_window_networks(panel_csv):
    panel = load_panel(panel_csv)
    window = list(windows(panel, WindowSpec()))[-1]
    dm = to_distance(correlation_matrix(window.values, panel.names))
    return {m: filters.build(dm, m) for m in filters.METHODS}


def separable(x, y):
    s = np.where(y == 1, 1.0, -1.0)
    sx = x * s[:, None]
    res = linprog(np.zeros(x.shape[1]), A_ub=-sx, b_ub=np.zeros(len(y)),
                  A_eq=sx.sum(axis=0)[None, :], b_eq=[1.0],
                  bounds=[(None, None)] * x.shape[1], method="highs")
    return res.status == 0


def test_1_null_log_likelihood(report):
    rng = np.random.default_rng(1)
    pairs = [(i, j) for i in range(17) for j in range(i + 1, 17)]
    t0 = time.perf_counter()
    got = {}
    for n_edges in (16, 45):
        chosen = sorted(rng.choice(len(pairs), n_edges, replace=False))
        g = network(T3.names, [pairs[k] for k in chosen])
        got[n_edges] = fit_mple(g, T3, ErgmSpec.edges_only()).ll_model
    elapsed = time.perf_counter() - t0
    ok = abs(got[16] + 49.26) <= 0.01 and abs(got[45] + 86.33) <= 0.01 and elapsed < 1.0
    report(1, ok, f"LL0(16 edges)={got[16]:.4f}  LL0(45 edges)={got[45]:.4f}  runtime={elapsed:.3f}s")


def test_2_diagnostic_identities(report):
    aic, bic, fit = information_criteria(-48.46, -49.26, 8, 136)
    ok = abs(aic - 112.92) <= 0.01 and abs(bic - 136.22) <= 0.01 and abs(fit - 1.62) <= 0.05
    report(2, ok, f"AIC={aic:.4f}  BIC={bic:.4f}  fit={fit:.3f}%")


def test_3_edge_counts(report, panel_csv):
    nets = last_window_networks(panel_csv)
    counts = {m: g.n_edges for m, g in nets.items()}
    g = nx.Graph()
    g.add_nodes_from(range(17))
    g.add_edges_from((i, j) for i, j, _ in nets["TMFG"].edges)
    planar, _ = nx.check_planarity(g)
    ok = counts == {"MST": 16, "MaST": 16, "AG": 16, "TMFG": 45} and planar
    report(3, ok, f"edges={counts}  TMFG planar={planar}")


def test_4_spanning_tree_oracle(report):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    bad = 0
    for trial in range(200):
        n = int(rng.integers(3, 8))
        dm = random_distance(rng, n)
        lo, hi = tree_weight_extremes(dm.d)
        mst, mast, ag = filters.mst(dm), filters.mast(dm), filters.asset_graph(dm)
        if not (abs(mst.total_weight() - lo) < 1e-9 and abs(mast.total_weight() - hi) < 1e-9
                and ag.total_weight() <= mst.total_weight() + 1e-12):
            bad += 1
    elapsed = time.perf_counter() - t0
    report(4, bad == 0 and elapsed < 30, f"200 trials, {bad} mismatches, runtime={elapsed:.2f}s")


def test_5_tmfg_oracle(report):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(50):
        dm = random_distance(rng, 5)
        greedy, _ = greedy_tmfg_edge_sets(dm.d)
        got = frozenset((i, j) for i, j, _ in filters.tmfg(dm).edges)
        bad += got not in greedy
    elapsed = time.perf_counter() - t0
    report(5, bad == 0 and elapsed < 30, f"50 trials, {bad} mismatches, runtime={elapsed:.2f}s")


def test_6_ergm_exactness(report):
    rng = np.random.default_rng(6)
    spec = ErgmSpec((Term("edges"), Term("nodefactor", "giips"),
                     Term("nodecov", "inflation"), Term("nodecov", "debt_to_gdp")))
    terms = [("edges",), ("nodefactor", "giips"), ("nodecov", "inflation"), ("nodecov", "debt_to_gdp")]
    pairs, graphs = enumerate_graphs(5)
    t0 = time.perf_counter()
    worst, done, skipped = 0.0, 0, 0
    while done < 50:
        giips = np.zeros(5)
        giips[rng.choice(5, size=int(rng.integers(1, 4)), replace=False)] = 1
        attrs = NodeAttributes([f"v{k}" for k in range(5)], {
            "giips": giips,
            "inflation": rng.normal(1.5, 1.0, 5).round(2),
            "debt_to_gdp": rng.uniform(0.4, 2.0, 5).round(3),
        })
        chosen = rng.random(10) < rng.uniform(0.3, 0.7)
        g = network(attrs.names, [tuple(p) for p, c in zip(pairs, chosen) if c])
        _, x = ergm.dyad_design(attrs, spec)
        y = ergm.edge_indicator(g)
        if y.sum() in (0, 10) or separable(x, y):
            skipped += 1  # MLE does not exist
            continue
        theta, _ = exact_ergm_mle(graph_statistics(pairs, graphs, terms, attrs.values),
                                  global_stats(g, attrs, spec))
        fit = fit_mple(g, attrs, spec)
        worst = max(worst, float(np.max(np.abs(fit.theta - theta))))
        done += 1
    elapsed = time.perf_counter() - t0
    report(6, worst <= 1e-4 and elapsed < 60,
           f"50 graphs ({skipped} separable draws skipped), max |dtheta|={worst:.2e}, runtime={elapsed:.2f}s")


def test_7_mcmc_validity(report, panel_csv):
    g = last_window_networks(panel_csv)["TMFG"]
    attrs = T3.align(g.names)
    spec = ErgmSpec.default()
    fit = fit_mple(g, attrs, spec)
    observed = global_stats(g, attrs, spec)
    sim = simulate(fit.theta, attrs, spec, 10_000, seed=7)
    z = (sim.stats.mean(axis=0) - observed) / mc_standard_error(sim.stats)
    null = simulate([0.0], attrs, ErgmSpec.edges_only(), 10_000, seed=8)
    d = len(attrs.names) * (len(attrs.names) - 1) / 2
    z0 = (null.stats[:, 0].mean() - d / 2) / mc_standard_error(null.stats)[0]
    ok = fit.converged and np.all(np.abs(z) < 3) and abs(z0) < 3
    report(7, ok, f"max |z| at fitted theta={np.max(np.abs(z)):.2f} over {len(z)} stats; "
                  f"theta=0 mean edges={null.stats[:, 0].mean():.2f} vs D/2={d / 2:.1f} (z={z0:.2f})")


def test_8_conditional_correlation(report):
    rng = np.random.default_rng(8)
    bad = {"bound": 0, "sign": 0, "amplify": 0}
    n_beta0 = 0
    for _ in range(1000):
        t = int(rng.integers(8, 200))
        shared = rng.normal(size=t)
        x = np.cumsum(rng.normal(size=t) + rng.uniform(-1, 1) * shared) * rng.uniform(0.1, 5)
        y = np.cumsum(rng.normal(size=t) + rng.uniform(-1, 1) * shared)
        r, rs = pearson(x, y), conditional_pearson(x, y)
        bad["bound"] += abs(rs) > 1
        bad["sign"] += int(np.sign(rs) != np.sign(r))
        bad["amplify"] += abs(rs) < abs(r) - 1e-15
        if adjustment_factor(x, y, subgroup_split(x), subgroup_split(y)) == 0.0:
            n_beta0 += 1
            bad["amplify"] += rs != r
    exact = all(conditional_from(r, 0.0) == r for r in rng.uniform(-1, 1, 1000))
    ok = not any(bad.values()) and exact
    report(8, ok, f"1000 pairs, violations={bad}, beta=0 exact={exact} ({n_beta0} natural beta=0 pairs)")


def test_9_metric_properties(report):
    rng = np.random.default_rng(9)
    violations = 0
    for _ in range(100):
        n = int(rng.integers(4, 13))
        u = filters.ultrametric(filters.mst(random_distance(rng, n))).d
        # via[i, k, j] = max(u[i, k], u[k, j]); the inequality must hold for every k
        via = np.maximum(u[:, :, None], u[None, :, :])
        violations += int(np.sum(u > via.min(axis=1) + 1e-12))
    names = T3.names
    star = network(names, [(0, k) for k in range(1, 17)])
    mol = mean_occupation_layer(star, network_stats(star).central_node)
    deg, hub = max_degree(star)
    ok = violations == 0 and mol == 16 / 17 and deg == 16
    report(9, ok, f"ultrametric violations={violations} on 100 instances; star MOL={mol!r} (16/17); "
                  f"max degree={deg} at {hub}")


def test_10_synthetic_regression_lock(report, panel_csv, attrs_csv, tmp_path, capsys):
    from test_cli import GOLDEN, golden_outputs
    files = golden_outputs(panel_csv, attrs_csv, tmp_path / "out", capsys)
    expected = sorted(p.name for p in GOLDEN.iterdir())
    same = [f.name for f in files] == expected and all(
        f.read_bytes() == (GOLDEN / f.name).read_bytes() for f in files)
    report(10, same, f"{len(files)} CLI outputs on the bundled synthetic panel byte-identical to tests/golden "
                     "(empirical headline numbers need the original yield feed)")
