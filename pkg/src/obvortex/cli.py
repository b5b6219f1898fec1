"""Command line: ``run``, ``validate`` and ``oracle`` subcommands."""

import argparse
import csv
import json
import sys

import numpy as np

from . import engine, io, kernels, oracle
from .config import SimConfig, parse_config
from .errors import ObvortexError


def _load_config(args):
    cfg = parse_config(args.config) if args.config else SimConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.T is not None:
        changes["T"] = args.T
        if cfg.snapshot_times is not None:
            changes["snapshot_times"] = tuple(t for t in cfg.snapshot_times if t <= args.T)
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args):
    cfg = _load_config(args)
    if args.dry_run:
        print(json.dumps(engine.estimate_cost(cfg), indent=2))
        return 0
    man = io.run(cfg, args.out, threads=args.threads)
    print(f"wrote {len(man.snapshots)} snapshots to {args.out}")
    return 0


def _quick_invariants():
    """Cheap self-checks: kernel identities, Poisson mass and the rest state."""
    g = np.random.default_rng(0)
    x = np.column_stack([g.uniform(-3, 3, 50), g.uniform(0.1, 3, 50)])
    y = np.column_stack([g.uniform(-3, 3, 50), g.uniform(0.1, 3, 50)])
    wall = np.column_stack([g.uniform(-3, 3, 50), np.zeros(50)])
    out = []
    out.append(("green_half vanishes on the wall",
                bool(np.all(kernels.green_half(2, wall, x) == 0.0))))
    sym = np.max(np.abs(kernels.green_half(2, y, x) - kernels.green_half(2, x, y)))
    out.append(("green_half symmetric", bool(sym <= 1e-12)))
    w = kernels.poisson_panel_weights(np.array([[0.0, 1.0]]), np.linspace(-100, 100, 1001))
    exact = 2 * np.arctan(100.0) / np.pi
    out.append(("Poisson kernel mass", bool(abs(w.sum() - exact) <= 1e-9)))
    cfg = SimConfig(s=0.4 * np.pi, T=0.3, heating="none", source="none", theta0=0.0)
    st = engine.simulate(cfg)
    rest = all(not np.any(a) for a in (st.grid.u, st.grid.theta, st.grid.omega, st.grid.phi))
    out.append(("rest state stays at rest", rest))
    return out


def cmd_validate(args):
    ok = True
    if args.out:
        problems = io.verify_run(args.out)
        for p in problems:
            print(f"FAIL {p}")
        if not problems:
            print(f"PASS manifest checksums and config echo in {args.out}")
        ok = not problems
    for name, passed in _quick_invariants():
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= passed
    return 0 if ok else 1


def cmd_oracle(args):
    rows = oracle.representation_table(n_problems=args.problems, n_paths=args.paths,
                                       seed=args.seed)
    fh = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0 if all(r["verdict"] == "pass" for r in rows) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="obvortex", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a simulation and write snapshots")
    r.add_argument("--config", help="key = value config file (defaults if omitted)")
    r.add_argument("--out", default="run_out", help="output directory")
    r.add_argument("--seed", type=int, help="override the seed")
    r.add_argument("--T", type=float, help="override the final time")
    r.add_argument("--dry-run", action="store_true", help="print the cost estimate only")
    r.add_argument("--threads", type=int, default=1, help="field-evaluation threads")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a run directory and quick invariants")
    v.add_argument("--out", help="run directory whose manifest to verify")
    v.set_defaults(func=cmd_validate)
    o = sub.add_parser("oracle", help="Monte Carlo versus finite-difference table")
    o.add_argument("--problems", type=int, default=5)
    o.add_argument("--paths", type=int, default=10_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--csv", help="write the table here instead of stdout")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ObvortexError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
