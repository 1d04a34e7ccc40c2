"""Command-line entry point: ``rsf <subcommand> [options]``.

Subcommands: curvature, flow, portrait, separatrix, classify, verify.
Options may come from a JSON file given with ``--config``; flags on the
command line override it.

Exit codes: 0 success, 1 integrator failure or failed verification,
2 bad input, 3 same-side separatrix probe, 4 classification timeout.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .analysis import classify_ancient, trace_separatrix, verify_ancient_numerically
from .checks import Z_EQUATION_NOTE, run_suites
from .errors import (ClassificationTimeout, DomainError, IntegrationError, RSFError,
                     SameSideError)
from .geometry import (relative_volume, ricci_eigenvalues, scalar_curvature,
                       traceless_ricci_norm_sq)
from .integrator import integrate
from .io import (Axis, GridSpec, RunConfig, export_trajectory, load_config, parse_metric,
                 parse_point, portrait_rows, write_portrait)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SAME_SIDE, EXIT_TIMEOUT = 0, 1, 2, 3, 4

_S = argparse.SUPPRESS


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    g = c.add_argument_group("global options")
    g.add_argument("--n", type=int, default=_S, help="quaternionic dimension (sphere S^{4n+3})")
    g.add_argument("--rel-tol", type=float, default=_S)
    g.add_argument("--abs-tol", type=float, default=_S)
    g.add_argument("--t-horizon", type=float, default=_S)
    g.add_argument("--max-steps", type=int, default=_S)
    g.add_argument("--einstein-tol", type=float, default=_S)
    g.add_argument("--blowup-S", dest="blowup_S", type=float, default=_S)
    g.add_argument("--seed", type=int, default=_S)
    g.add_argument("--out", default=_S, help="output file (default: none / stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=_S)
    g.add_argument("--config", default=_S, help="JSON file with default option values")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="rsf", parents=[common],
                                 description="Ricci flow of Sp(n+1)-invariant metrics on S^{4n+3}.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("curvature", parents=[common], help="print Ricci eigenvalues and S")
    sp.add_argument("metric", help='"x,y,z,s" or "slice:x,y,z"')

    sp = sub.add_parser("flow", parents=[common], help="integrate a flow and export the trajectory")
    sp.add_argument("metric")
    sp.add_argument("--flow", dest="flow_kind", default="normalized",
                    help="normalized | unnormalized")
    sp.add_argument("--direction", default="forward", help="forward | backward")

    sp = sub.add_parser("portrait", parents=[common], help="classify a grid of metrics")
    sp.add_argument("--mode", choices=("ancient", "slice"), default="ancient")
    sp.add_argument("--axis", action="append", default=None,
                    help="name=min:max:count[:log]; repeat per axis")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker processes (default: RSF_THREADS, 0 = one per CPU)")

    sp = sub.add_parser("separatrix", parents=[common], help="bisect for the stable manifold of Jensen")
    sp.add_argument("a", help='slice point "x,y,z"')
    sp.add_argument("b", help='slice point "x,y,z"')
    sp.add_argument("--bracket-tol", type=float, default=1e-10)

    sp = sub.add_parser("classify", parents=[common], help="ancient-solution classifier")
    sp.add_argument("metric")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--numeric", action="store_true", help="also integrate backward and compare")

    sp = sub.add_parser("verify", parents=[common], help="run the property suites")
    sp.add_argument("--only", action="append", default=None, help="suite name prefix")
    return ap


_RUN_KEYS = ("n", "rel_tol", "abs_tol", "t_horizon", "max_steps", "einstein_tol", "blowup_S",
             "seed", "out", "format")


def _run_config(ns: argparse.Namespace) -> RunConfig:
    merged = {}
    if getattr(ns, "config", None):
        merged.update(load_config(ns.config))
    merged.update({k: getattr(ns, k) for k in _RUN_KEYS if hasattr(ns, k)})
    return RunConfig.from_mapping(merged)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=1))


def cmd_curvature(ns, rc: RunConfig) -> int:
    m = parse_metric(ns.metric, rc.p)
    r = ricci_eigenvalues(m, rc.p)
    _print_json({"r_i": r.r_i, "r_j": r.r_j, "r_k": r.r_k, "r_h": r.r_h,
                 "S": scalar_curvature(m, rc.p), "ric0_sq": traceless_ricci_norm_sq(m, rc.p),
                 "vol": relative_volume(m, rc.p)})
    return EXIT_OK


def cmd_flow(ns, rc: RunConfig) -> int:
    m = parse_metric(ns.metric, rc.p)
    try:
        traj = integrate(ns.flow_kind, m, ns.direction, rc.p, rc.cfg)
    except IntegrationError as exc:
        if rc.out and exc.trajectory is not None:
            export_trajectory(exc.trajectory, rc.fmt, rc.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if rc.out:
        export_trajectory(traj, rc.fmt, rc.out)
    print(traj.terminal.summary())
    return EXIT_OK


def cmd_portrait(ns, rc: RunConfig) -> int:
    if ns.axis:
        axes = tuple(Axis.parse(a) for a in ns.axis)
    elif ns.mode == "ancient":
        axes = (Axis("s", 0.5, 4.0, 8, "log"), Axis("y_over_s", 0.2, 2.0, 8, "log"))
    else:
        axes = (Axis("x", 0.1, 1.5, 8, "log"), Axis("y", 0.1, 1.5, 8, "log"))
    grid = GridSpec(ns.mode, axes)
    rows = portrait_rows(grid, rc.p, rc.cfg, workers=ns.threads)
    write_portrait(grid, rows, rc.fmt, rc.out or sys.stdout)
    if rc.out:
        print(f"wrote {len(rows)} rows to {rc.out}")
    return EXIT_OK


def cmd_separatrix(ns, rc: RunConfig) -> int:
    a, b = parse_point(ns.a), parse_point(ns.b)
    try:
        res = trace_separatrix(a, b, rc.p, rc.cfg, bracket_tol=ns.bracket_tol)
    except SameSideError as exc:
        print(f"error: same side: {exc}", file=sys.stderr)
        return EXIT_SAME_SIDE
    except ClassificationTimeout as exc:
        print(f"error: classification timeout at u={exc.u!r}: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    _print_json({"u_star": res.u_star, "point": list(res.point),
                 "bracket_width": res.bracket_width,
                 "side_witnesses": [w.kind.value for w in res.side_witnesses],
                 "jensen_distance": res.jensen_distance, "witness_time": res.witness_time,
                 "witness_ok": res.witness_ok, "iterations": res.iterations})
    return EXIT_OK


def cmd_classify(ns, rc: RunConfig) -> int:
    m = parse_metric(ns.metric, rc.p)
    v = classify_ancient(m, rc.p, ns.tol)
    out = {"ancient": v.ancient, "reason": v.reason.value,
           "canonical": list(v.canonical.metric.as_tuple()),
           "permutation": list(v.canonical.permutation), "tol_used": v.tol_used}
    if ns.numeric:
        rep = verify_ancient_numerically(m, rc.p, rc.cfg, ns.tol)
        term = rep.backward_terminal
        out["numerical"] = {
            "numerical_ancient": rep.numerical_ancient, "verdict_match": rep.verdict_match,
            "backward_terminal": term.summary() if term else None,
            "S_positive_throughout": rep.S_positive_throughout, "detail": rep.detail}
    _print_json(out)
    return EXIT_OK


def cmd_verify(ns, rc: RunConfig) -> int:
    results = run_suites(rc.p, rc.seed, ns.only)
    print(f"verify n={rc.p.n} seed={rc.seed}")
    for r in results:
        print(r.line())
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} suites passed")
    print(Z_EQUATION_NOTE)
    return EXIT_OK if failed == 0 else EXIT_FAIL


_COMMANDS = {"curvature": cmd_curvature, "flow": cmd_flow, "portrait": cmd_portrait,
             "separatrix": cmd_separatrix, "classify": cmd_classify, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        rc = _run_config(ns)
        return _COMMANDS[ns.command](ns, rc)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except RSFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
