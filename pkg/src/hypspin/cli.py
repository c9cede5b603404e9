"""Command-line entry point: ``hypspin <subcommand>``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, electrical, oracles, spinmc
from .config import ConfigError, parse_config
from .experiment import ExperimentError, build_graph, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _graph_flags(p):
    p.add_argument("--graph", dest="type", default="triangulation",
                   choices=["triangulation", "ringed_tree", "tree", "path", "cycle",
                            "grid", "complete"])
    p.add_argument("--q", type=int, default=7)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--cycle", action="store_true", help="close ringed-tree generations")


def _graph_from(args):
    return build_graph({k: getattr(args, k) for k in
                        ("type", "q", "radius", "depth", "branching", "size", "cycle")})


def _emit(text: str, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        cfg = cfg.replace(mc__seed=args.seed)
    summary = run_experiment(cfg, args.out, threads=args.threads)
    for (n, beta), v in summary["verdicts"].items():
        print(f"n={n} beta={beta:g}: {v.kind} (rate={v.rate:.4g}, r2={v.r_squared:.4g}, "
              f"level={v.plateau_level:.4g})")


def cmd_graph(args):
    if args.action != "build":
        raise ConfigError(f"unknown graph action {args.action!r}")
    _emit(_graph_from(args).dump(), args.out)


def cmd_resist(args):
    g = _graph_from(args)
    rows = electrical.resistance_profile(g, args.center, args.bc, args.tolerance)
    _emit(electrical.profile_csv(rows, g.label, args.bc), args.out)


def cmd_msfn(args):
    g = _graph_from(args)
    y = args.y if args.y is not None else int(np.flatnonzero(g.ring == g.max_ring)[0])
    f = electrical.ms_function(g, args.x, y, args.tolerance)
    print(f"x={f.x} y={f.y} distance={f.distance} lambda={f.lam:.12g}")
    print(f"a(y)-a(x)={f.gain:.12g} c1={f.c1:.12g}")
    print(f"energy={f.energy:.12g} <= {0.5 * f.gain:.12g}")
    print(f"max_gradient={f.max_gradient:.12g} <= 0.1")
    for name, ok in f.checks().items():
        print(f"{name}: {'ok' if ok else 'VIOLATED'}")
    if args.beta is not None:
        h = electrical.solve_potential(g, args.x, y, args.tolerance)
        lam, expo = electrical.optimize_scaling(h, args.beta)
        print(f"optimal lambda at beta={args.beta:g}: {lam:.12g} (exponent {expo:.12g})")
        print(f"bound={analysis.ms_bound(f, args.beta):.12g}")


def cmd_simulate(args):
    g = _graph_from(args)
    p = spinmc.ModelParams(args.n, args.beta, args.bc)
    sched = spinmc.McSchedule(args.burn_in, args.sweeps, args.stride, args.replicas,
                              args.seed, args.algorithm)
    res = spinmc.run_chain(g, p, sched, args.center, threads=args.threads)
    _emit(spinmc.series_csv([res.series]), args.out)


def cmd_oracle(args):
    if args.kind == "ising":
        g = _graph_from(args)
        r = oracles.brute_force_ising(g, args.beta, args.x, args.y)
    elif args.kind == "bessel":
        r = oracles.bessel_ratio(args.beta)
    elif args.kind == "o2path":
        r = oracles.o2_path_correlation(args.d, args.beta)
    else:
        g = _graph_from(args)
        r = oracles.dense_resistance(g, args.x, args.y)
    print(f"value={r.value:.15g} error_bound={r.error_bound:.3g} method={r.method}")


def cmd_fit(args):
    rows = spinmc.read_series_csv(Path(args.csv).read_text())
    groups: dict = {}
    for row in rows:
        key = (row["graph"], row["n"], row["beta"], row["bc"], row["algorithm"])
        groups.setdefault(key, []).append(row)
    th = analysis.Thresholds(args.rate_min, args.r2_min, args.level_min)
    print("graph,n,beta,bc,verdict,rate,r_squared,plateau_level")
    for (graph, n, beta, bc, _), rs in groups.items():
        s = spinmc.CorrelationSeries(np.array([r["distance"] for r in rs]),
                                     np.array([r["estimate"] for r in rs]),
                                     np.array([r["stderr"] for r in rs]), rs[0]["samples"])
        v = analysis.classify(s, th)
        print(f"{graph},{n},{beta:.10g},{bc},{v.kind},{v.rate:.10g},{v.r_squared:.10g},"
              f"{v.plateau_level:.10g}")


def cmd_report(args):
    path = Path(args.dir) / "verdicts.csv"
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    print(f"{'graph':<14}{'n':>3}{'beta':>8}{'bc':>7}  {'verdict':<13}{'rate':>9}"
          f"{'r2':>8}{'level':>8}  ms_bound")
    for ln in lines[1:]:
        r = dict(zip(header, ln.split(",")))
        print(f"{r['graph']:<14}{r['n']:>3}{float(r['beta']):>8.3g}{r['bc']:>7}  "
              f"{r['verdict']:<13}{float(r['rate']):>9.4f}{float(r['r_squared']):>8.4f}"
              f"{float(r['plateau_level']):>8.4f}  {r['ms_bound_at_max_d']}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypspin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a config-file experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("graph", help="build a graph and dump its edge list")
    p.add_argument("action", choices=["build"])
    _graph_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("resist", help="resistance profile as CSV")
    _graph_flags(p)
    p.add_argument("--bc", choices=["free", "wired"], default="free")
    p.add_argument("--center", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_resist)

    p = sub.add_parser("msfn", help="translation function and its three inequalities")
    _graph_flags(p)
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--y", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.set_defaults(func=cmd_msfn)

    p = sub.add_parser("simulate", help="Monte Carlo pair correlations as CSV")
    _graph_flags(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--bc", choices=["free", "wired", "fixed"], default="free")
    p.add_argument("--algorithm", choices=sorted(spinmc.ALGORITHMS), default="wolff")
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--sweeps", type=int, default=4000)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--replicas", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact small-instance values")
    p.add_argument("kind", choices=["ising", "bessel", "o2path", "resistance"])
    _graph_flags(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--y", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fit", help="classify every series in a correlation CSV")
    p.add_argument("csv")
    p.add_argument("--rate-min", type=float, default=0.05)
    p.add_argument("--r2-min", type=float, default=0.9)
    p.add_argument("--level-min", type=float, default=0.2)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="print the verdict table of an experiment directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
