"""Command-line entry point.

Option values come from flags, then from the JSON file given by
``--config`` (keys are flag names without the leading dashes), then from
built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import cluster, cones, fpp, oracle, render, sharp_transition
from .errors import CapExceeded, NoCertificate, OrpercError
from .graph_model import (GraphSpec, SubadditiveWeight, Window, bidirectional_line, example_model,
                          oriented_line)
from .random_field import FieldParams

EXIT_OK, EXIT_USAGE, EXIT_REFUSED = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text: str) -> tuple:
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _int_list(text: str) -> list:
    if ":" in text:
        lo, hi = text.split(":")[:2]
        step = int(text.split(":")[2]) if text.count(":") == 2 else 1
        return list(range(int(lo), int(hi) + 1, step))
    return [int(c) for c in text.split(",") if c]


def _float_list(text: str) -> list:
    return cluster.parse_grid(text)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--graph", help="graph JSON file {\"d\": .., \"dirs\": [..]}")
    p.add_argument("--model", choices=["example", "line", "biline"], default="example")
    p.add_argument("--M", type=int, default=1, help="spread of the example model")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", help="JSON file with default option values")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="orperc", description="Oriented percolation and first-passage toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("explore", "enumerate one open cluster")
    s.add_argument("--x0", type=_vector)
    s.add_argument("--radius", type=int, default=64)
    s.add_argument("--budget", type=int, default=10**6)
    s.add_argument("--probe", type=_vector, action="append", default=[])

    s = add("sweep", "directional survival over a grid of p")
    s.add_argument("--u", type=_vector, required=True)
    s.add_argument("--p-grid", required=True, help="lo:hi:step or comma list")
    s.add_argument("--n", type=_int_list, required=True)

    s = add("pc", "bracket the directional critical point")
    s.add_argument("--u", type=_vector, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tau", type=float, default=0.05)
    s.add_argument("--p-lo", type=float, default=0.0)
    s.add_argument("--p-hi", type=float, default=1.0)
    s.add_argument("--width", type=float, default=0.005)

    for name, help_ in (("phi", "boundary functional of a finite set"),
                        ("certify", "find a decay certificate and check it")):
        s = add(name, help_)
        s.add_argument("--psi-u", type=_vector, required=True, help="linear weight <x, u>")
        s.add_argument("--cap", type=int, default=20, help="transverse box for sublevel sets")
        if name == "phi":
            s.add_argument("--level", type=int, default=0, help="sublevel k of the candidate set")
            s.add_argument("--set", help="JSON file with an explicit vertex list")
            s.add_argument("--mode", choices=["auto", "exact", "mc"], default="auto")
        else:
            s.add_argument("--k-max", type=int, default=6)
            s.add_argument("--k-range", type=_int_list, default=[1, 2, 3, 4, 5])
            s.add_argument("--cert-out", help="where to write the certificate JSON")

    s = add("fpp", "time constant or hyperplane growth rate")
    s.add_argument("--kind", choices=["mu", "b"], default="mu")
    s.add_argument("--x", type=_vector, help="direction for mu")
    s.add_argument("--u", type=_vector, help="direction for b")
    s.add_argument("--n-ladder", type=_int_list, default=[64, 128, 256])
    s.add_argument("--window-factor", type=int, default=fpp.DEFAULT_WINDOW_FACTOR)

    s = add("decay", "subcritical passage-time decay constants")
    s.add_argument("--u", type=_vector, required=True)
    s.add_argument("--set", help="JSON vertex list (default: the origin alone)")
    s.add_argument("--alpha-grid", type=_float_list, default=[0.5, 1, 2, 5, 10, 20])
    s.add_argument("--mode", choices=["auto", "exact", "mc"], default="auto")
    s.add_argument("--select", choices=["min_k", "max_c"], default="min_k")
    s.add_argument("--c-frac", type=float, default=0.5, help="c_used as a fraction of c")
    s.add_argument("--n-range", type=_int_list, default=[8, 16, 32, 64])

    for name, help_ in (("cones", "empirical shape, recession and barrier cones"),
                        ("scan", "per-ray consistency scan of barrier cone and bounded growth")):
        s = add(name, help_)
        s.add_argument("--rays", type=_vector, action="append", help="probe ray (repeatable)")
        s.add_argument("--scale", type=int, default=64)
        s.add_argument("--zero-tol", type=float, default=cones.ZERO_TOL)
        if name == "scan":
            s.add_argument("--q", type=float)
            s.add_argument("--bg-n", type=_int_list, default=[16, 32, 64, 128])
            s.add_argument("--bg-reps", type=int, default=1000)

    s = add("oracle", "exact enumeration on small instances")
    s.add_argument("--what", choices=["connect", "passage", "pathbound"], default="connect")
    s.add_argument("--radius", type=int, default=1, help="box window for enumeration")
    s.add_argument("--source", type=_vector)
    s.add_argument("--target", type=_vector)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--l-max", type=int, default=20)

    s = add("render", "PPM picture of a coloured cluster")
    s.add_argument("--width", type=int, default=200, help="viewport half-width")
    s.add_argument("--mode", choices=list(render.MODES), default="hop_distance")
    s.add_argument("--palette", choices=sorted(render.PALETTES), default="cyclic64")
    s.add_argument("--stop-at-border", action="store_true")
    return parser


def _graph(a) -> GraphSpec:
    if a.graph:
        with open(a.graph) as fh:
            return GraphSpec.from_json(fh.read())
    if a.model == "line":
        return oriented_line()
    if a.model == "biline":
        return bidirectional_line()
    return example_model(a.M)


def _emit(a, text: str):
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _vertices(path):
    with open(path) as fh:
        return [tuple(v) for v in json.load(fh)]


def _origin(g, x):
    return x if x is not None else (0,) * g.d


def _cmd_explore(a, g):
    rep = cluster.explore(g, FieldParams(a.seed, a.p), _origin(g, a.x0), Window.box(g.d, a.radius),
                          a.budget, a.probe)
    _emit(a, json.dumps({"visited_count": rep.visited_count, "termination": rep.termination,
                         "extent": {",".join(map(str, u)): e for u, e in rep.extent.items()}}) + "\n")


def _cmd_sweep(a, g):
    pts = cluster.sweep(g, a.u, _float_list(a.p_grid), a.n, a.reps, a.seed, threads=a.threads)
    _emit(a, cluster.sweep_csv(pts))


def _cmd_pc(a, g):
    est = cluster.estimate_pc(g, a.u, a.n, a.tau, a.reps, a.seed, (a.p_lo, a.p_hi), a.width,
                              threads=a.threads)
    _emit(a, json.dumps({"u": est.u, "n": est.n, "tau": est.tau, "p_lo": est.p_lo, "p_hi": est.p_hi,
                         "decided": est.decided}) + "\n")


def _candidate(a, g):
    psi = SubadditiveWeight.linear(a.psi_u)
    if getattr(a, "set", None):
        return sharp_transition.FiniteSet.of(_vertices(a.set), psi)
    return sharp_transition.sublevel_set(g, psi, a.level, a.cap)


def _cmd_phi(a, g):
    S = _candidate(a, g)
    res = sharp_transition.phi(g, S, a.p, a.mode, a.reps, a.seed, threads=a.threads)
    _emit(a, json.dumps({"phi": res.value, "method": res.method, "boundary_size": res.boundary_size,
                         "ci": [res.ci_low, res.ci_high], "set_size": len(S)}) + "\n")


def _cmd_certify(a, g):
    psi = SubadditiveWeight.linear(a.psi_u)
    cert = sharp_transition.find_good_set(g, psi, a.p, a.k_max, a.cap, reps=max(a.reps, 1000),
                                          seed=a.seed, threads=a.threads)
    if cert is None:
        raise NoCertificate(f"no sublevel set up to k={a.k_max} has phi < 1 at p={a.p}")
    if a.cert_out:
        with open(a.cert_out, "w") as fh:
            fh.write(cert.to_json() + "\n")
    rows = sharp_transition.verify_decay(g, cert, a.k_range, a.reps, a.seed, threads=a.threads)
    _emit(a, sharp_transition.decay_csv(rows))


def _cmd_fpp(a, g):
    if a.kind == "mu":
        if a.x is None:
            raise argparse.ArgumentTypeError("--x is required for --kind mu")
        est = fpp.estimate_mu(g, a.p, a.x, a.n_ladder, a.reps, a.seed, a.window_factor, threads=a.threads)
    else:
        if a.u is None:
            raise argparse.ArgumentTypeError("--u is required for --kind b")
        est = fpp.estimate_b(g, a.p, a.u, a.n_ladder, a.reps, a.seed, a.window_factor, threads=a.threads)
    _emit(a, fpp.scale_csv([est]))


def _cmd_decay(a, g):
    S = sharp_transition.FiniteSet.of(_vertices(a.set) if a.set else [(0,) * g.d])
    const = fpp.decay_constants(g, S, a.p, a.u, a.alpha_grid, a.mode, a.reps, a.seed, a.select,
                                threads=a.threads)
    sys.stderr.write(const.to_json() + "\n")
    rows = fpp.verify_time_decay(g, const, a.n_range, a.c_frac * const.c, a.reps, a.seed, threads=a.threads)
    _emit(a, fpp.time_decay_csv(rows))


def _rays(a, g):
    return a.rays or cones.default_probe_rays(g.d)


def _cmd_cones(a, g):
    shape = cones.sample_shape(g, a.p, _rays(a, g), a.scale, a.reps, a.seed, a.zero_tol, threads=a.threads)
    rec = cones.recession_cone(shape)
    rec_wide = cones.recession_cone(shape, permissive=True)
    doc = {"p": a.p, "zero_tol": a.zero_tol, "partial": shape.partial,
           "rays": [{"ray": r.ray, "mu_hat": r.mu_hat, "ci": [r.ci_low, r.ci_high],
                     "increment": r.increment, "valid": r.valid} for r in shape.rays],
           "recession": json.loads(rec.to_json()), "recession_permissive": json.loads(rec_wide.to_json()),
           "barrier": json.loads(rec.polar().to_json()),
           "barrier_strict": json.loads(rec_wide.polar().to_json())}
    _emit(a, json.dumps(doc) + "\n")


def _cmd_scan(a, g):
    rep = cones.conjecture_scan(g, a.p, _rays(a, g), a.q, a.scale, a.reps, a.bg_n, a.bg_reps, a.seed,
                                a.zero_tol, threads=a.threads)
    _emit(a, rep.csv())


def _cmd_oracle(a, g):
    if a.what == "pathbound":
        lines = ["l_max,partial_sum,closed_bound"]
        for l in range(a.l_max + 1):
            part, closed = oracle.path_count_bound(a.M, Fraction(str(a.p)), a.n, l)
            lines.append(f"{l},{float(part)!r},{'' if closed is None else repr(float(closed))}")
        _emit(a, "\n".join(lines) + "\n")
        return
    task = oracle.EnumerationTask.from_window(g, Window.box(g.d, a.radius))
    src = _origin(g, a.source)
    if a.target is None:
        raise argparse.ArgumentTypeError("--target is required")
    if a.what == "connect":
        prob = oracle.exact_event_probability(task, a.p, oracle.Reach(src, (a.target,)))
        _emit(a, f"config_count,probability\n{2 ** task.m},{prob}\n")
    else:
        dist = oracle.exact_passage_distribution(task, a.p, src, a.target)
        rows = [f"{'unreachable' if t is None else t},{w}" for t, w in
                sorted(dist.items(), key=lambda kv: (kv[0] is None, kv[0] or 0))]
        _emit(a, "time,mass\n" + "\n".join(rows) + "\n")


def _cmd_render(a, g):
    if not a.out:
        raise argparse.ArgumentTypeError("--out is required for render")
    job = render.RenderJob(g, FieldParams(a.seed, a.p), a.width, a.palette, a.mode, a.stop_at_border)
    with open(a.out, "wb") as fh:
        fh.write(render.render_cluster(job))


COMMANDS = {"explore": _cmd_explore, "sweep": _cmd_sweep, "pc": _cmd_pc, "phi": _cmd_phi,
            "certify": _cmd_certify, "fpp": _cmd_fpp, "decay": _cmd_decay, "cones": _cmd_cones,
            "scan": _cmd_scan, "oracle": _cmd_oracle, "render": _cmd_render}


def _with_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config must be a JSON object")
    # replay the config as flags placed before the command-line ones, so flags win
    pre = []
    for key, val in cfg.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                pre.append(flag)
            continue
        if isinstance(val, list):
            val = ",".join(str(v) for v in val)
        pre += [flag, str(val)]
    at = argv.index(args.command) + 1
    return parser.parse_args(argv[:at] + pre + argv[at:])


def run_command(argv) -> int:
    parser = build_parser()
    argv = list(argv)
    try:
        args = _with_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, _graph(args))
    except (NoCertificate, CapExceeded) as exc:
        sys.stderr.write(f"orperc: refused: {exc}\n")
        return EXIT_REFUSED
    except (OrpercError, ValueError, argparse.ArgumentTypeError) as exc:
        sys.stderr.write(f"orperc: error: {exc}\n")
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
