"""Command-line entry point.

Every subcommand writes its tabular output as CSV and a ``meta.json`` with
the resolved configuration and seed. No wall-clock data is recorded, so the
same command line always produces byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io
from .analysis import MASK_MODES, TimestepRecord, correlate_series, eligibility_mask, evaluate_timesteps, validate_theory
from .epidemics import GENERATORS, PlantedConfig, SIConfig, calibrate_si, fully_infected, generate_structure, simulate_si
from .homophily import compatibility_matrix, dynamic_homophily
from .propagation import dump_rows, iter_layers
from .rng import child_seed, stream
from .theory import DENOMINATORS, TheoryParams, bound_grid

SCHEMA_VERSION = 1

# window sizes used for the public event-stream datasets
PRESETS = {"uci": 2000, "bitcoin": 1000, "math": 12000}

HOMOPHILY_HEADER = ["t", "h_static", "h_dynamic", "h_plus", "h_minus"]
RECORD_HEADER = [
    "t", "layer", "h_static", "h_dynamic", "h_plus", "h_minus",
    "auroc", "bound", "n_plus", "n_minus", "mu", "sigma2",
]


class CLIError(Exception):
    pass


def _meta(args: argparse.Namespace, **extra) -> dict:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "config")
    }
    return {"schema_version": SCHEMA_VERSION, "command": args.command, "seed": args.seed, "config": config, **extra}


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise CLIError(f"{args.command}: missing required option(s) {flags}")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# subcommands ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    _require(args, "edges")
    window = args.window if args.window is not None else PRESETS.get(args.preset)
    if window is None:
        raise CLIError("ingest: give --window or --preset")
    g = io.load_temporal_graph(args.edges, args.labels, window, args.features, io.parse_node_auto)
    out = _out(args)
    io.write_graph_dir(g, out)
    io.write_json(out / "meta.json", _meta(args, window=window, horizon=g.horizon))
    return 0


def _simulate_one(args, si: SIConfig, r: int) -> tuple[int, int, bool]:
    params = {k: getattr(args, k) for k in GENERATORS[args.generator] if getattr(args, k, None) is not None}
    s_seed = child_seed(stream(args.seed, "structure", r))
    si_seed = child_seed(stream(args.seed, "si", r))
    structure = generate_structure(args.generator, s_seed, **params)
    g = simulate_si([structure] * (args.timesteps + 1), SIConfig(si.theta_inf, si.theta_sus, si.p_init, si_seed))
    io.write_graph_dir(g, Path(args.out) / f"replicate_{r:03d}")
    return s_seed, si_seed, fully_infected(g)


def cmd_simulate(args) -> int:
    if args.replicates < 1 or args.timesteps < 0:
        raise CLIError("simulate: need replicates >= 1 and timesteps >= 0")
    si = SIConfig(tuple(args.theta_inf), tuple(args.theta_sus), args.p_init, args.seed)
    rate = None
    if args.calibrate:
        params = {k: getattr(args, k) for k in GENERATORS[args.generator] if getattr(args, k, None) is not None}
        base = generate_structure(args.generator, child_seed(stream(args.seed, "calibrate-structure")), **params)
        si, rate = calibrate_si(
            [base] * (args.timesteps + 1), p_init=args.p_init, runs=args.calibration_runs, seed=args.seed
        )
    out = _out(args)
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(lambda r: _simulate_one(args, si, r), range(args.replicates)))
    replicates = [
        {"index": r, "structure_seed": a, "si_seed": b, "fully_infected": full}
        for r, (a, b, full) in enumerate(results)
    ]
    io.write_json(
        out / "meta.json",
        _meta(args, si=si.to_dict(), calibration_rate=rate, replicates=replicates),
    )
    return 0


def cmd_measure(args) -> int:
    _require(args, "graph")
    g = io.load_graph_dir(args.graph)
    rows, matrices = [], []
    for t in range(g.horizon - 1):
        mask = eligibility_mask(g, t, args.mask)
        lv = dynamic_homophily(
            g, t, empty_classes=args.empty_classes, self_loops=not args.no_self_loops, nodes=mask
        )
        rows.append((t, lv.h_static, lv.h_dynamic, lv.h_plus, lv.h_minus))
        cm = compatibility_matrix(g, t, nodes=mask)
        matrices.append({"t": t, **cm.to_dict()})
    if not any(r[2] is not None for r in rows):
        _warn("dynamic homophily is undefined at every timestep")
    out = _out(args)
    io.write_csv(out / "homophily.csv", HOMOPHILY_HEADER, rows)
    io.write_json(out / "compatibility.json", {**_meta(args), "data": matrices})
    return 0


def cmd_propagate(args) -> int:
    _require(args, "graph")
    g = io.load_graph_dir(args.graph)
    sign = None if args.sign == "auto" else int(args.sign)
    records = evaluate_timesteps(
        g, args.layers, args.mask, mu=args.mu, sigma2=args.sigma2,
        sign=sign, seed=args.seed, denominator=args.denominator,
    )
    rows = [
        (r.t, l, r.h_static, r.h_dynamic, r.h_plus, r.h_minus, r.auroc_per_layer[l],
         r.bound_per_layer[l], r.n_plus, r.n_minus, r.mu, r.sigma2)
        for r in records
        for l in sorted(r.auroc_per_layer)
    ]
    if not any(row[6] is not None for row in rows):
        _warn("AUROC is undefined at every timestep")
    out = _out(args)
    io.write_csv(out / "records.csv", RECORD_HEADER, rows)
    if args.representations is not None:
        t = args.representations
        if not 0 <= t < g.horizon:
            raise CLIError(f"propagate: --representations {t} outside 0..{g.horizon - 1}")
        reps = list(iter_layers(g[t], max(args.layers)))
        io.write_csv(out / "representations.csv", ["node", "layer", "dim", "value"], dump_rows(reps))
    io.write_json(out / "meta.json", _meta(args))
    return 0


def cmd_bound_grid(args) -> int:
    rows = []
    for l in args.layers:
        p = TheoryParams(args.mu, args.sigma2, l)
        rows.extend((hp, hm, l, b) for hp, hm, b in bound_grid(p, args.resolution, denominator=args.denominator))
    out = _out(args)
    io.write_csv(out / "bound_grid.csv", ["h_plus", "h_minus", "layers", "bound"], rows)
    io.write_json(out / "meta.json", _meta(args))
    return 0


VALIDATION_HEADER = [
    "target_h_plus", "target_h_minus", "replicate", "layer", "h_plus", "h_minus",
    "empirical_gap", "expected_gap", "var_plus", "var_minus", "bound_var_plus",
    "bound_var_minus", "auroc", "auroc_bound",
]


def cmd_validate(args) -> int:
    reports, rows = [], []
    for i, hp in enumerate(args.h_plus):
        for j, hm in enumerate(args.h_minus):
            cfg = PlantedConfig(
                args.n_per_class, args.neighbor_count, hp, hm, args.mu, args.sigma2,
                child_seed(stream(args.seed, "validate-cell", i, j)),
            )
            rep = validate_theory(cfg, args.layers, args.replicates, denominator=args.denominator)
            reports.append(rep.to_dict())
            for k, res in enumerate(rep.replicates):
                for c in res.layers:
                    rows.append((
                        hp, hm, k, c.layer, res.measured["h_plus"], res.measured["h_minus"],
                        c.empirical_gap, c.expected_gap, c.empirical_var_plus, c.empirical_var_minus,
                        c.bound_var_plus, c.bound_var_minus, c.empirical_auroc, c.auroc_bound,
                    ))
    out = _out(args)
    io.write_csv(out / "validation.csv", VALIDATION_HEADER, rows)
    io.write_json(out / "validation.json", {**_meta(args), "data": reports})
    return 0


def _opt_float(v: str) -> float | None:
    return float(v) if v != "" else None


def read_records(path: str | Path) -> list[TimestepRecord]:
    """Rebuild timestep records from a ``records.csv`` written by ``propagate``."""
    by_t: dict[int, TimestepRecord] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise CLIError(f"{path}: not a records file (missing {sorted(missing)})")
        for row in reader:
            t = int(row["t"])
            rec = by_t.get(t)
            if rec is None:
                rec = by_t[t] = TimestepRecord(
                    t=t,
                    h_static=_opt_float(row["h_static"]),
                    h_dynamic=_opt_float(row["h_dynamic"]),
                    h_plus=_opt_float(row["h_plus"]),
                    h_minus=_opt_float(row["h_minus"]),
                    n_plus=int(row["n_plus"]),
                    n_minus=int(row["n_minus"]),
                    mu=_opt_float(row["mu"]),
                    sigma2=_opt_float(row["sigma2"]),
                )
            layer = int(row["layer"])
            rec.auroc_per_layer[layer] = _opt_float(row["auroc"])
            rec.bound_per_layer[layer] = _opt_float(row["bound"])
    return [by_t[t] for t in sorted(by_t)]


def cmd_correlate(args) -> int:
    _require(args, "records")
    rows = []
    per_measure: dict[str, list[float]] = {m: [] for m in args.measure}
    for path in args.records:
        records = read_records(path)
        for m in args.measure:
            rho = correlate_series(records, m, args.layer)
            rows.append((str(path), m, args.layer, rho))
            if rho is not None:
                per_measure[m].append(rho)
    medians = {m: (statistics.median(v) if v else None) for m, v in per_measure.items()}
    if all(v is None for v in medians.values()):
        _warn("no correlation is defined")
    out = _out(args)
    io.write_csv(out / "correlations.csv", ["records", "measure", "layer", "spearman"], rows)
    io.write_json(out / "correlations.json", {**_meta(args), "data": {"median": medians}})
    return 0


# parser --------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed for every random stream")
    p.add_argument("--threads", type=int, default=1, help="worker threads (simulate)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="JSON file whose keys override option defaults")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynhomophily", description="Dynamic homophily and linear-GCN analysis.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common()]

    p = sub.add_parser("ingest", parents=common, help="discretize an event stream into snapshots")
    p.add_argument("--edges", help="temporal edge list 'src dst time'")
    p.add_argument("--labels", help="label file 'node timestep class'")
    p.add_argument("--features", help="feature CSV 'node,t,x0,...'")
    p.add_argument("--window", type=float, help="window length")
    p.add_argument("--preset", choices=sorted(PRESETS), help="dataset window preset")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", parents=common, help="SI epidemics on synthetic structures")
    p.add_argument("--generator", choices=sorted(GENERATORS), default="regular")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, help="degree (regular)")
    p.add_argument("--m", type=int, help="edges per new node (powerlaw)")
    p.add_argument("--c", type=int, help="communities (block)")
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-out", type=float)
    p.add_argument("--timesteps", type=int, default=30, help="SI steps; the graph has timesteps+1 snapshots")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--p-init", type=float, default=SIConfig.p_init)
    p.add_argument("--theta-inf", type=float, nargs=2, default=list(SIConfig.theta_inf), metavar=("A", "B"))
    p.add_argument("--theta-sus", type=float, nargs=2, default=list(SIConfig.theta_sus), metavar=("A", "B"))
    p.add_argument("--calibrate", action="store_true", help="search Beta means until runs fully infect")
    p.add_argument("--calibration-runs", type=int, default=100)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("measure", parents=common, help="homophily series and compatibility matrices")
    p.add_argument("--graph", help="serialized temporal graph directory")
    p.add_argument("--mask", choices=MASK_MODES, default="all")
    p.add_argument("--empty-classes", choices=("exclude", "divide"), default="exclude")
    p.add_argument("--no-self-loops", action="store_true", help="open neighborhoods for static homophily")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("propagate", parents=common, help="per-timestep AUROC of linear-GCN scores")
    p.add_argument("--graph", help="serialized temporal graph directory")
    p.add_argument("--layers", type=int, nargs="+", default=[1])
    p.add_argument("--mask", choices=MASK_MODES, default="all")
    p.add_argument("--mu", type=float, help="override the estimated class mean")
    p.add_argument("--sigma2", type=float, help="override the estimated variance")
    p.add_argument("--sign", choices=("1", "-1", "auto"), default="1")
    p.add_argument("--denominator", choices=DENOMINATORS, default="variance")
    p.add_argument("--representations", type=int, metavar="T", help="also dump representations of snapshot T")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("bound-grid", parents=common, help="AUROC bound over a homophily grid")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--layers", type=int, nargs="+", default=[1, 2, 3, 4])
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--denominator", choices=DENOMINATORS, default="variance")
    p.set_defaults(func=cmd_bound_grid)

    p = sub.add_parser("validate", parents=common, help="Monte Carlo check of the theory on planted graphs")
    p.add_argument("--n-per-class", type=int, default=2500)
    p.add_argument("--neighbor-count", type=int, default=20)
    p.add_argument("--h-plus", type=float, nargs="+", default=[0.5])
    p.add_argument("--h-minus", type=float, nargs="+", default=[0.5])
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--layers", type=int, nargs="+", default=[1])
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--denominator", choices=DENOMINATORS, default="variance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("correlate", parents=common, help="Spearman of homophily vs AUROC series")
    p.add_argument("--records", nargs="+", help="records.csv files from propagate")
    p.add_argument("--measure", nargs="+", choices=("h_dynamic", "h_static"), default=["h_dynamic", "h_static"])
    p.add_argument("--layer", type=int, default=1)
    p.set_defaults(func=cmd_correlate)
    parser.commands = sub.choices
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
        if not isinstance(overrides, dict):
            raise CLIError(f"{args.config}: config must be a JSON object")
        unknown = sorted(set(overrides) - set(vars(args)) - {"func", "command"})
        if unknown:
            raise CLIError(f"{args.config}: unknown keys {unknown}")
        # config values act as defaults; explicit flags still win
        parser.commands[args.command].set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except (CLIError, ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
