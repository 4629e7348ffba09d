"""Command line front-end: ``simulate``, ``identify`` and ``compare``.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import correlation, graphio, netsim, sparsifiers, timeseries
from .errors import ConfigurationError, NumericalError, SparsetopoError

log = logging.getLogger("sparsetopo")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {s}")
    return v


def _degree(s: str):
    if s.lower() == "auto":
        return sparsifiers.AUTO
    return _nonneg_int(s)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sparsetopo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate a random FIR network")
    s.add_argument("--nodes", type=int, required=True)
    s.add_argument("--order", type=_positive_int, default=5)
    s.add_argument("--steps", type=_positive_int, default=2000)
    s.add_argument("--snr", type=float, default=None, help="per-node SNR target (default: no rescaling)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=_nonneg_int, default=500)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--in-degree", type=_nonneg_int, help="exact in-degree per node")
    g.add_argument("--max-in-degree", type=_nonneg_int, help="in-degree drawn from 1..k per node")
    g.add_argument("--density", type=float, help="edge probability per admissible pair")
    g.add_argument("--edges", type=_nonneg_int, help="total number of edges")
    s.add_argument("--cyclic", action="store_true", help="allow directed cycles")
    s.add_argument("--out-csv", type=Path, required=True)
    s.add_argument("--out-spec", type=Path, required=True)

    i = sub.add_parser("identify", help="identify a sparse topology from a CSV")
    i.add_argument("input", type=Path)
    i.add_argument("--method", choices=["exhaustive", "cols", "rwls"], default="cols")
    i.add_argument("--m", type=_degree, default=2, help="in-degree bound or 'auto'")
    i.add_argument("--L", type=_nonneg_int, default=10, help="filter half-width (order 2L+1)")
    i.add_argument("--ridge", type=float, default=None)
    i.add_argument("--rwls-iterations", type=_positive_int, default=10)
    i.add_argument("--auto-threshold", type=float, default=0.20)
    i.add_argument("--threshold", type=float, default=0.0, help="relative edge-weight cut")
    i.add_argument("--budget", type=_positive_int, default=sparsifiers.DEFAULT_BUDGET)
    i.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)
    i.add_argument("--time-column", default="t")
    i.add_argument("--delimiter", default=",")
    i.add_argument("--log-returns", action="store_true", help="take log returns before identification")
    i.add_argument("--no-standardize", action="store_true", help="keep raw row scales")
    i.add_argument("--cache-dir", type=Path, default=None, help="covariance cache directory")
    i.add_argument("--out-json", type=Path, required=True)
    i.add_argument("--out-dot", type=Path, default=None)

    c = sub.add_parser("compare", help="score an estimated topology against the truth")
    c.add_argument("--truth", type=Path, required=True, help="network spec or topology JSON")
    c.add_argument("--estimate", type=Path, required=True, help="topology JSON")
    return p


def _validate(args) -> None:
    if args.command == "simulate":
        if args.nodes < 2:
            raise ConfigurationError("--nodes must be >= 2")
        if args.snr is not None and not args.snr > 0:
            raise ConfigurationError("--snr must be > 0")
        for flag, v in (("--in-degree", args.in_degree), ("--max-in-degree", args.max_in_degree)):
            if v is not None and v >= args.nodes:
                raise ConfigurationError(f"{flag} must be < --nodes")
        if args.density is not None and not 0 <= args.density <= 1:
            raise ConfigurationError("--density must lie in [0, 1]")
        if args.out_csv.resolve() == args.out_spec.resolve():
            raise ConfigurationError("--out-csv and --out-spec must differ")
    elif args.command == "identify":
        # builds and validates the solver config without touching any file
        _sparsifier_config(args)
        if not 0 <= args.threshold < 1:
            raise ConfigurationError("--threshold must lie in [0, 1)")
        if args.out_dot is not None and args.out_dot.resolve() == args.out_json.resolve():
            raise ConfigurationError("--out-json and --out-dot must differ")


def _sparsifier_config(args) -> sparsifiers.SparsifierConfig:
    return sparsifiers.SparsifierConfig(
        m=args.m,
        half_width=args.L,
        ridge=args.ridge,
        rwls_iterations=args.rwls_iterations,
        auto_threshold=args.auto_threshold,
        budget=args.budget,
    )


def cmd_simulate(args) -> int:
    spec = netsim.random_spec(
        args.nodes,
        args.order,
        args.seed,
        in_degree=args.in_degree,
        max_in_degree=args.max_in_degree,
        edge_density=args.density,
        n_edges=args.edges,
        acyclic=not args.cyclic,
    )
    sim = netsim.simulate(spec, args.steps, args.snr, args.burn_in)
    timeseries.write_csv(sim.data, args.out_csv)
    netsim.save_spec(sim.spec, args.out_spec)
    snr = {nid: round(float(v), 6) for nid, v in zip(sim.data.node_ids, sim.achieved_snr)}
    print(json.dumps({"achieved_snr": snr}))
    return EXIT_OK


def _ingest(args) -> timeseries.TimeSeriesSet:
    schema = timeseries.CsvSchema(time_column=args.time_column, delimiter=args.delimiter)
    series = timeseries.load_csv(args.input, schema)
    lo = max(int(s.timestamps[0]) for s in series)
    hi = min(int(s.timestamps[-1]) for s in series)
    if hi - lo < 1:
        raise ConfigurationError("series share no common time range")
    grid = np.arange(lo, hi + 1)
    aligned = []
    for s in series:
        if not s.has_gaps and s.timestamps[0] == lo and s.timestamps[-1] == hi:
            aligned.append(s)
        else:
            aligned.append(timeseries.spline_fill(s, grid))
    if args.log_returns:
        aligned = [timeseries.log_returns(s) for s in aligned]
    ts = timeseries.assemble(aligned)
    return ts if args.no_standardize else timeseries.standardize(ts)


def _covariances(args, ts: timeseries.TimeSeriesSet, L_max: int) -> correlation.CovarianceModel:
    if args.cache_dir is None:
        return correlation.estimate_covariances(ts, L_max)
    h = hashlib.sha256()
    h.update(Path(args.input).read_bytes())
    h.update(json.dumps([args.log_returns, args.no_standardize, args.time_column, L_max]).encode())
    path = args.cache_dir / f"cov_{h.hexdigest()[:16]}.json"
    if path.exists():
        log.info("covariance cache hit: %s", path)
        return correlation.CovarianceModel.from_json(json.loads(path.read_text()))
    model = correlation.estimate_covariances(ts, L_max)
    args.cache_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_json()))
    return model


def cmd_identify(args) -> int:
    config = _sparsifier_config(args)
    stage = "ingest"
    try:
        ts = _ingest(args)
        stage = "covariance"
        model = _covariances(args, ts, 2 * args.L)
        stage = "identify"
        topo, _ = sparsifiers.identify_all(model, config, args.method, workers=args.workers)
        if args.threshold > 0:
            topo = graphio.threshold_edges(topo, args.threshold)
    except SparsetopoError as exc:
        raise type(exc)(f"[{stage}] {exc}") from exc
    graphio.save_topology(topo, args.out_json)
    if args.out_dot is not None:
        graphio.export_dot(topo, args.out_dot)
    print(json.dumps({"nodes": topo.n, "edges": len(topo.edges), "out": str(args.out_json)}))
    return EXIT_OK


def _load_truth(path: Path) -> graphio.Topology:
    obj = json.loads(path.read_text())
    if obj["edges"] and "taps" in obj["edges"][0] or "noise_std" in obj:
        return netsim.NetworkSpec.from_json(obj).topology()
    return graphio.Topology.from_json(obj)


def cmd_compare(args) -> int:
    truth = _load_truth(args.truth)
    est = graphio.load_topology(args.estimate)
    report = graphio.compare(truth, est)
    print(json.dumps(report.to_json(), indent=2))
    return EXIT_OK


_COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        _validate(args)
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SparsetopoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
