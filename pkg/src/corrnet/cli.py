"""Command-line entry point: ``corrnet {summary,rolling,network,ergm}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path

from . import __version__, ergm, filters
from .correlation import KINDS, correlation_matrix, to_distance
from .errors import CorrnetError, NonConvergenceError, UsageError
from .ingest import SUMMARY_COLUMNS, WindowSpec, YieldPanel, load_panel, panel_summary, windows
from .netmetrics import network_stats, rolling_run

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3
DEFAULT_OUT = "corrnet_out"


@dataclass
class RunConfig:
    input: Path
    attrs: Path | None = None
    window: int = 120
    step: int = 10
    corr: str = "conditional"
    methods: list[str] = field(default_factory=lambda: list(filters.METHODS))
    date_from: date | None = None
    date_to: date | None = None
    out: Path = Path(DEFAULT_OUT)
    seed: int = 0
    covid_scale: str = "percent"
    ridge: float = 0.0
    nsim: int = 10_000
    gap_limit: int = 5
    jobs: int = 1

    def fingerprint(self, command: str, extra: dict | None = None) -> str:
        """Hash of the inputs' contents and every setting except paths."""
        payload = {k: v for k, v in asdict(self).items() if k not in ("input", "attrs", "out", "jobs")}
        payload = {k: (v.isoformat() if isinstance(v, date) else v) for k, v in payload.items()}
        payload["command"] = command
        payload["input_sha256"] = _sha256(self.input)
        payload["attrs_sha256"] = _sha256(self.attrs) if self.attrs else None
        payload.update(extra or {})
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _methods(text: str) -> list[str]:
    try:
        out = [filters.canonical_method(m) for m in text.split(",") if m.strip()]
    except CorrnetError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not out:
        raise argparse.ArgumentTypeError("no methods given")
    return list(dict.fromkeys(out))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, allow_abbrev=False)
    common.add_argument("--input", required=True, type=Path, help="panel CSV (date + one column per entity)")
    common.add_argument("--window", type=int, default=120, help="window length in rows (default 120)")
    common.add_argument("--step", type=int, default=10, help="window displacement in rows (default 10)")
    common.add_argument("--corr", choices=KINDS, default="conditional")
    common.add_argument("--methods", type=_methods, default=list(filters.METHODS),
                        help="comma list of mst,mast,ag,tmfg (default all)")
    common.add_argument("--from", dest="date_from", type=_iso_date)
    common.add_argument("--to", dest="date_to", type=_iso_date)
    common.add_argument("--out", type=Path, help="output directory (fallback $CORRNET_OUT)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--gap-limit", type=int, default=5, help="max forward-filled consecutive gaps")
    common.add_argument("--jobs", type=int, default=1, help="parallel window workers")

    parser = _Parser(prog="corrnet", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"corrnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("summary", parents=[common], help="per-entity summary statistics")
    sub.add_parser("rolling", parents=[common], help="rolling-window correlation and network statistics")

    net = sub.add_parser("network", parents=[common], help="filtered networks for one window")
    net.add_argument("--window-end", type=_iso_date, help="window end date (default: last window)")

    fit = sub.add_parser("ergm", parents=[common], help="ERGM fit for one filtered network")
    fit.add_argument("--attrs", type=Path, help="node attribute CSV")
    fit.add_argument("--window-end", type=_iso_date)
    fit.add_argument("--method", default="mst", help="one of mst,mast,ag,tmfg (default mst)")
    fit.add_argument("--covid-scale", choices=ergm.COVID_SCALES, default="percent")
    fit.add_argument("--ridge", type=float, default=0.0)
    fit.add_argument("--nsim", type=int, default=10_000, help="simulated networks for goodness of fit (0 skips)")
    fit.add_argument("--edges-only", action="store_true", help="fit the edges-only null model")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    out = args.out or os.environ.get("CORRNET_OUT") or DEFAULT_OUT
    cfg = RunConfig(
        input=args.input,
        attrs=getattr(args, "attrs", None),
        window=args.window,
        step=args.step,
        corr=args.corr,
        methods=args.methods,
        date_from=args.date_from,
        date_to=args.date_to,
        out=Path(out),
        seed=args.seed,
        covid_scale=getattr(args, "covid_scale", "percent"),
        ridge=getattr(args, "ridge", 0.0),
        nsim=getattr(args, "nsim", 10_000),
        gap_limit=args.gap_limit,
        jobs=args.jobs,
    )
    if cfg.window < 1 or cfg.step < 1:
        raise UsageError("--window and --step must be positive")
    if cfg.ridge < 0 or cfg.nsim < 0 or cfg.gap_limit < 0 or cfg.jobs < 1:
        raise UsageError("--ridge, --nsim and --gap-limit must be >= 0, --jobs >= 1")
    return cfg


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(command: str, cfg: RunConfig, extra: dict | None = None) -> str:
    return f"corrnet {__version__} command={command} config={cfg.fingerprint(command, extra)}"


def _csv_text(rows, comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _load(cfg: RunConfig) -> YieldPanel:
    panel = load_panel(cfg.input, cfg.gap_limit)
    if cfg.date_from or cfg.date_to:
        panel = panel.slice(cfg.date_from, cfg.date_to)
    return panel


def _select_window(panel: YieldPanel, cfg: RunConfig, window_end: date | None):
    wins = list(windows(panel, WindowSpec(cfg.window, cfg.step)))
    if window_end is None:
        return wins[-1]
    for w in wins:
        if w.end == window_end:
            return w
    available = ", ".join(w.end.isoformat() for w in wins)
    raise UsageError(f"no window ends on {window_end}; available window ends: {available}")


def cmd_summary(cfg: RunConfig) -> Path:
    panel = _load(cfg)
    rows = [list(SUMMARY_COLUMNS)]
    for name, s in panel_summary(panel):
        rows.append([name, *(repr(v) for v in s.as_tuple())])
    path = cfg.out / "summary.csv"
    atomic_write(path, _csv_text(rows, _provenance("summary", cfg)))
    return path


def cmd_rolling(cfg: RunConfig) -> Path:
    panel = _load(cfg)
    series = rolling_run(panel, WindowSpec(cfg.window, cfg.step), cfg.corr, cfg.methods, cfg.jobs)
    path = cfg.out / "rolling.csv"
    atomic_write(path, f"# {_provenance('rolling', cfg)}\n" + series.to_csv())
    return path


def _window_networks(cfg: RunConfig, window_end: date | None, methods):
    panel = _load(cfg)
    win = _select_window(panel, cfg, window_end)
    cm = correlation_matrix(win.values, panel.names, cfg.corr, label=win.end.isoformat())
    dm = to_distance(cm)
    return win, {m: filters.build(dm, m) for m in methods}


def cmd_network(cfg: RunConfig, window_end: date | None = None) -> list[Path]:
    win, nets = _window_networks(cfg, window_end, cfg.methods)
    end = win.end.isoformat()
    prov = _provenance("network", cfg, {"window_end": end})
    written = []
    report = {"provenance": prov, "window_start": win.start.isoformat(), "window_end": end,
              "correlation": cfg.corr, "networks": {}}
    for method, g in nets.items():
        rows = [["source", "target", "distance", "method", "window_end"]]
        rows += [[r["source"], r["target"], repr(r["distance"]), r["method"], r["window_end"]]
                 for r in g.to_records(end)]
        path = cfg.out / f"network_{method.lower()}_{end}.csv"
        atomic_write(path, _csv_text(rows, prov))
        written.append(path)
        report["networks"][method] = {
            "n_edges": g.n_edges,
            "stats": network_stats(g).as_dict(g.names),
            "edges": json.loads(g.to_json(end))["edges"],
        }
    path = cfg.out / f"network_stats_{end}.json"
    atomic_write(path, json.dumps(report, indent=2) + "\n")
    written.append(path)
    return written


def cmd_ergm(cfg: RunConfig, window_end: date | None = None, method: str = "MST",
             edges_only: bool = False, stdout=None) -> tuple[Path, ergm.ErgmFit]:
    stdout = stdout or sys.stdout
    if cfg.attrs is None:
        raise UsageError("ergm needs --attrs")
    method = filters.canonical_method(method)
    win, nets = _window_networks(cfg, window_end, [method])
    g = nets[method]
    attrs = ergm.load_attributes(cfg.attrs, cfg.covid_scale).align(g.names)
    spec = ergm.ErgmSpec.edges_only() if edges_only else ergm.ErgmSpec.default()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = ergm.fit_mple(g, attrs, spec, ridge=cfg.ridge)
    end = win.end.isoformat()
    report = {"provenance": _provenance("ergm", cfg, {"window_end": end, "method": method,
                                                      "edges_only": edges_only}),
              "method": method, "window_end": end, **fit.to_dict()}
    if fit.converged and cfg.nsim > 0:
        rows = ergm.gof(g, attrs, spec, fit, cfg.nsim, seed=cfg.seed)
        report["gof"] = [asdict(r) for r in rows]
    path = cfg.out / f"ergm_{method.lower()}_{end}.json"
    atomic_write(path, json.dumps(report, indent=2) + "\n")
    print(fit.table(f"ERGM for {method} network, window ending {end}"), file=stdout)
    return path, fit


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        if args.command == "summary":
            print(cmd_summary(cfg))
        elif args.command == "rolling":
            print(cmd_rolling(cfg))
        elif args.command == "network":
            for path in cmd_network(cfg, args.window_end):
                print(path)
        elif args.command == "ergm":
            try:
                method = filters.canonical_method(args.method)
            except CorrnetError as exc:
                raise UsageError(str(exc)) from None
            path, fit = cmd_ergm(cfg, args.window_end, method, args.edges_only)
            print(path)
            if not fit.converged:
                print("error: ERGM estimation did not converge", file=sys.stderr)
                return EXIT_NONCONVERGED
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except CorrnetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
