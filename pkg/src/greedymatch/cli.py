"""Command-line front end: ``greedymatch <subcommand> ...``.

Every command reports its effective seed and a config hash on standard
error. Re-running with the printed ``--seed`` reproduces the outputs
byte for byte. Failures exit nonzero with a one-line message.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import GreedyMatchError, InvalidParameterError
from .graph import WeightModel, load_graph, save_graph

OUTPUT_KEYS = {"out", "out_dir", "trace", "csv", "func", "command"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def _canonical(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in OUTPUT_KEYS and k != "seed"}


def _config_hash(args: argparse.Namespace) -> str:
    blob = json.dumps({"command": args.command, **_canonical(args)}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _resolve_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is None:
        blob = json.dumps({"command": args.command, **_canonical(args)}, sort_keys=True,
                          default=str)
        args.seed = int.from_bytes(hashlib.sha256(blob.encode()).digest()[:4], "big")
    return args.seed


def _announce(args: argparse.Namespace) -> None:
    print(f"seed={args.seed} config_hash={_config_hash(args)}", file=sys.stderr)


def _model(values, probs) -> WeightModel:
    if values is None:
        values = [1.0, 2.0]
    if probs is None:
        return WeightModel.uniform(values)
    return WeightModel(tuple(values), tuple(probs))


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _emit(value, out: str | None = None) -> None:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        _write(out, repr(float(value)))
    else:
        _write(out, json.dumps(_jsonable(value), sort_keys=True, indent=2))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# subcommands

def cmd_generate(args) -> None:
    from .generators import generate, read_locations

    params = {}
    for key in ("n", "side", "p", "d", "R", "L", "library", "cache", "n_users"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    if args.family == "caching" and args.locations:
        params["records"] = read_locations(args.locations)
    model = None if args.family == "caching" else _model(args.values, args.probs)
    g = generate(args.family, model, args.seed, **params)
    if args.quantities:
        rng = np.random.default_rng([args.seed, 1])
        g = g.with_quantities(rng.choice(np.asarray(args.quantities, dtype=np.int64), size=g.n))
    if args.out is None:
        _write(None, g.to_json())
    else:
        save_graph(g, args.out)


def cmd_match(args) -> None:
    from .greedy import greedy_match, greedy_match_multiunit
    from .wireless import greedy_with_failures

    g = load_graph(args.graph)
    if args.multiunit:
        out = greedy_match_multiunit(g, tie_rule=args.tie_rule, trace=bool(args.trace))
    else:
        out = greedy_match(g, tie_rule=args.tie_rule, trace=bool(args.trace))
    if args.failures is not None:
        d1, d2 = args.failures
        out = greedy_with_failures(g, d1, d2, args.interference_radius, args.seed, outcome=out)
    _write(args.out, out.to_json())
    if args.trace:
        Path(args.trace).write_text(out.trace_csv())


def cmd_optimal(args) -> None:
    from .optimal import optimal

    g = load_graph(args.graph)
    kwargs = {}
    if args.method == "exhaustive" and args.max_edges is not None:
        kwargs["max_edges"] = args.max_edges
    _write(args.out, optimal(g, args.method, **kwargs).to_json())


def cmd_bound(args) -> None:
    from . import bounds

    kind = args.kind
    if kind == "decomposition-expected":
        if args.n is None:
            raise InvalidParameterError("--n is required for decomposition-expected")
        _emit(bounds.decomposition_bound_expected(args.n, _model(args.values, args.probs)),
              args.out)
        return
    if kind == "neighbor-max-poisson":
        if args.d is None:
            raise InvalidParameterError("--d is required for neighbor-max-poisson")
        _emit(bounds.neighbor_max_bound_poisson(args.d, _model(args.values, args.probs)),
              args.out)
        return
    if args.graph is None:
        raise InvalidParameterError(f"--graph is required for {kind}")
    g = load_graph(args.graph)
    if kind == "decomposition":
        res = bounds.decomposition_bound_instance(g)
    elif kind == "neighbor-max":
        res = bounds.neighbor_max_result(g)
    elif kind == "neighbor-max-expected":
        res = bounds.neighbor_max_bound(g, _model(args.values, args.probs))
        _emit(res, args.out)
        return
    else:
        res = bounds.multiunit_bound_result(g)
    _write(args.out, res.to_json())


def cmd_analyze(args) -> None:
    from .analytics import grid, linear, steady_state, trees

    f = args.formula
    if f in ("pr-linear", "recurrence-linear"):
        model = _model_kp(args)
        if f == "pr-linear":
            _emit(linear.pr_lower_bound_linear(model), args.out)
        else:
            _emit(linear.linear_recurrence(model).to_dict(), args.out)
    elif f == "pr-grid":
        _emit(grid.pr_lower_bound_grid(args.delta, exact=args.exact), args.out)
    elif f == "grid-constants":
        _emit(grid.grid_constants(args.delta).__dict__, args.out)
    elif f == "tree-fixed-point":
        sol = trees.solve_tree_fixed_point(args.d, _model_kp(args), args.tolerance)
        _emit(sol.to_dict(), args.out)
    elif f == "root-weight":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            value = trees.expected_root_weight(args.d, _model_kp(args))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        _emit(value, args.out)
    elif f == "pr-multiunit":
        _emit(linear.pr_lower_bound_multiunit(args.delta, exact=args.exact), args.out)
    elif f == "steady-state":
        _emit(steady_state.steady_state_participants(args.lam, args.mu, args.gamma, args.T),
              args.out)
    elif f == "grid-probe":
        from .experiments.probe import probe_vertical_match

        _emit(probe_vertical_match(args.n or 100_000, args.replicates, args.seed).to_dict(),
              args.out)


def _model_kp(args) -> WeightModel:
    values = args.v if args.v is not None else [1.0, 2.0]
    if args.K is not None and args.K != len(values):
        raise InvalidParameterError(f"--K {args.K} does not match {len(values)} values")
    return _model(values, args.p)


def _write_report(report, args, stem: str) -> None:
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.json").write_text(report.to_json() + "\n")
        (out_dir / f"{stem}.csv").write_text(report.curves_csv())
    else:
        _write(args.out, report.to_json())
        if args.csv:
            Path(args.csv).write_text(report.curves_csv())


def cmd_experiment(args) -> None:
    from .experiments.harness import load_config, run_config

    config = load_config(args.config)
    if args.seed_given:
        config.seed = args.seed
    else:
        args.seed = config.seed
    if args.workers is not None:
        config.workers = args.workers
    config.keep_records = args.records
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = run_config(config, include_timestamp=args.timestamp)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_report(report, args, Path(args.config).stem)


def cmd_reproduce(args) -> None:
    from .experiments.figures import reproduce

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        report = reproduce(args.target, args.seed, quick=args.quick,
                           location_file=args.locations, include_timestamp=args.timestamp)
    if args.out_dir is None and args.out is None:
        args.out_dir = "."
    _write_report(report, args, args.target)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="greedymatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def weights(sp):
        sp.add_argument("--values", type=float, nargs="+", help="weight support (default 1 2)")
        sp.add_argument("--probs", type=float, nargs="+", help="probabilities (default uniform)")

    g = sub.add_parser("generate", help="write a random graph")
    g.add_argument("--family", required=True,
                   choices=["line", "grid2d", "gnp", "geometric", "caching"])
    g.add_argument("--n", type=int)
    g.add_argument("--side", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--d", type=float)
    g.add_argument("--R", type=float)
    g.add_argument("--L", type=float)
    g.add_argument("--locations", help="CSV user_id,x,y[,floor] for the caching family")
    g.add_argument("--n-users", dest="n_users", type=int)
    g.add_argument("--library", type=int)
    g.add_argument("--cache", type=int)
    g.add_argument("--quantities", type=int, nargs="+",
                   help="draw per-node quantities uniformly from these values")
    weights(g)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="graph file (.json or .csv); stdout if omitted")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("match", help="run greedy matching on a graph file")
    m.add_argument("--graph", required=True)
    m.add_argument("--multiunit", action="store_true")
    m.add_argument("--tie-rule", dest="tie_rule", choices=["id", "left"], default="id")
    m.add_argument("--failures", type=float, nargs=2, metavar=("DELTA1", "DELTA2"))
    m.add_argument("--interference-radius", dest="interference_radius", type=float)
    m.add_argument("--trace", help="write the per-round trace CSV here")
    m.add_argument("--seed", type=int)
    m.add_argument("--out")
    m.set_defaults(func=cmd_match)

    o = sub.add_parser("optimal", help="exact optimum of a graph file")
    o.add_argument("--graph", required=True)
    o.add_argument("--method", choices=["auto", "path_dp", "tree_dp", "exhaustive"],
                   default="auto")
    o.add_argument("--max-edges", dest="max_edges", type=int)
    o.add_argument("--seed", type=int)
    o.add_argument("--out")
    o.set_defaults(func=cmd_optimal)

    b = sub.add_parser("bound", help="upper bounds on the optimum")
    b.add_argument("--kind", required=True,
                   choices=["decomposition", "decomposition-expected", "neighbor-max",
                            "neighbor-max-expected", "neighbor-max-poisson", "multiunit"])
    b.add_argument("--graph")
    b.add_argument("--n", type=int)
    b.add_argument("--d", type=float)
    weights(b)
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bound)

    a = sub.add_parser("analyze", help="evaluate an analytic formula")
    a.add_argument("formula", choices=["pr-linear", "recurrence-linear", "pr-grid",
                                       "grid-constants", "tree-fixed-point", "root-weight",
                                       "pr-multiunit", "steady-state", "grid-probe"])
    a.add_argument("--K", type=int)
    a.add_argument("--p", type=float, nargs="+")
    a.add_argument("--v", type=float, nargs="+")
    a.add_argument("--d", type=float, default=0.5)
    a.add_argument("--delta", type=float, default=0.0)
    a.add_argument("--exact", action="store_true")
    a.add_argument("--tolerance", type=float, default=1e-10)
    a.add_argument("--lam", type=float, default=20.0)
    a.add_argument("--mu", type=float, default=0.1)
    a.add_argument("--gamma", type=float, default=0.5)
    a.add_argument("--T", type=int, default=5)
    a.add_argument("--n", type=int)
    a.add_argument("--replicates", type=int, default=10)
    a.add_argument("--seed", type=int)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("experiment", help="run an experiment config file")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int, help="override the config's seed")
    e.add_argument("--workers", type=int)
    e.add_argument("--records", action="store_true", help="keep per-sample records")
    e.add_argument("--timestamp", action="store_true", help="stamp the report with UTC time")
    e.add_argument("--out")
    e.add_argument("--csv")
    e.add_argument("--out-dir", dest="out_dir")
    e.set_defaults(func=cmd_experiment)

    r = sub.add_parser("reproduce", help="run a pre-baked figure configuration")
    r.add_argument("target", choices=["fig7", "fig8", "fig9", "fig10", "fig11"])
    r.add_argument("--quick", action="store_true", help="small sizes for a smoke run")
    r.add_argument("--locations", help="real location CSV for fig7")
    r.add_argument("--timestamp", action="store_true")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--csv")
    r.add_argument("--out-dir", dest="out_dir")
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = getattr(args, "seed", None) is not None
    try:
        if args.command != "experiment":
            _resolve_seed(args)
            _announce(args)
            args.func(args)
        else:
            args.func(args)
            _announce(args)
    except (GreedyMatchError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        if isinstance(exc, OSError) and exc.filename:
            msg = f"{exc.strerror}: {exc.filename}"
        print(f"greedymatch: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
