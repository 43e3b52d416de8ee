"""``affineflow`` command line: steady solves, evolutions, tables and demos.

Every run writes ``manifest.json`` to ``--out-dir`` with the resolved
arguments; ``affineflow --manifest PATH`` replays it.  CSV outputs contain no
timings, so a replay reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__

log = logging.getLogger("affineflow")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2

VARIANTS = ("standard", "elliptic", "elliptic-regularized", "filtered", "filtered-regularized")
STATIC = ("a", "b", "c", "d")
EVOLUTIONS = ("ellipse", "diamond", "flat_diamond", "fan", "ellipse-neumann", "ellipse-dirichlet", "morphology", "affine")
INVARIANCE = ("morphology-exp", "morphology-cube", "morphology-identity", "affine-rot45", "affine-shear", "affine-rot90")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _static_tag(text: str) -> str:
    tag = text.removeprefix("static-")
    if tag not in STATIC:
        raise argparse.ArgumentTypeError(f"unknown static example {text!r}; expected one of {STATIC}")
    return tag


def _evolution_tag(text: str) -> str:
    tag = text.removeprefix("evolution-")
    if tag not in EVOLUTIONS:
        raise argparse.ArgumentTypeError(f"unknown evolution example {text!r}; expected one of {EVOLUTIONS}")
    return tag


def _policy(text: Optional[str]):
    from .solve import TimeStepPolicy

    return None if text is None else TimeStepPolicy.parse(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(data, path) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


# --- subcommands ---------------------------------------------------------------


def cmd_solve_static(args, out: Path) -> int:
    from .grid import GridFn, write_csv
    from .harness import default_policy
    from .problems import static_example
    from .schemes import SchemeConfig
    from .solve import solve_steady

    prob = static_example(args.example)
    grid = prob.grid(args.n)
    bc = prob.boundary(grid)
    exact = prob.exact(grid)
    mask = bc.layer_mask(grid)
    start = exact.values if args.start == "exact" else np.where(mask, exact.values, 0.0)
    config = SchemeConfig.default(args.variant, grid.h, n_theta=args.n_theta, tol=args.tol)
    policy = _policy(args.dt_policy) or default_policy(args.variant, steady=True, example=args.example)
    u, rep = solve_steady(GridFn(grid, start), prob.rhs(grid), config, bc, policy,
                          max_iter=args.max_iter, max_seconds=args.max_seconds)
    rep.error_linf = float(np.max(np.abs(u.values - exact.values)[~mask]))
    write_csv(u, out / "solution.csv")
    write_json({"example": args.example, "variant": args.variant, "N": args.n, "h": grid.h,
                "n_theta": config.stencil.n_theta, "n_S": config.stencil.n_S, "K": config.reg.K, "L": config.reg.L,
                "epsilon": config.epsilon, **rep.to_dict()}, out / "report.json")
    print(f"{args.example} {args.variant} N={args.n}: {rep.status.value} after {rep.iterations} steps, "
          f"residual {rep.final_residual:.3e}, error {rep.error_linf:.4e}")
    return EXIT_OK


def cmd_evolve(args, out: Path) -> int:
    from .contour import write_polylines
    from .grid import write_csv
    from .harness import eccentricity_track, evolution_run

    snaps, contours, rep = evolution_run(args.example, args.variant, args.n, args.times, _policy(args.dt_policy))
    ratios = eccentricity_track(contours)
    for k, ((t, u), cs) in enumerate(zip(snaps, contours)):
        write_polylines(cs, out / f"contour_{k:03d}.csv")
        if args.save_fields:
            write_csv(u, out / f"field_{k:03d}.csv")
    write_json({"example": args.example, "variant": args.variant, "N": args.n,
                "requested_times": args.times, "snapshot_times": [t for t, _ in snaps],
                "axis_ratios": ratios, "contours": [len(cs) for cs in contours], **rep.to_dict()},
               out / "report.json")
    print(f"{args.example} {args.variant} N={args.n}: {rep.status.value}, {len(snaps)} snapshots")
    return EXIT_OK


def cmd_convergence(args, out: Path) -> int:
    from .harness import ConvergenceRow, convergence_table, ellipse_time_table, write_rows

    def show(r):
        print(f"{r.variant:>22} N={r.N:<4} error={r.error_linf:.4e} "
              f"order={'-' if r.observed_order is None else f'{r.observed_order:.2f}'} {r.status}", flush=True)

    if args.example in ("ellipse-dirichlet", "ellipse-neumann"):
        rows = ellipse_time_table(args.example.split("-")[1], args.variants, args.N, T=args.T,
                                  policy=_policy(args.dt_policy), on_row=show)
    else:
        rows = convergence_table(_static_tag(args.example), args.variants, args.N, policy=_policy(args.dt_policy),
                                 max_iter=args.max_iter, max_seconds=args.max_seconds, on_row=show)
    write_rows(rows, out / "table.csv", ConvergenceRow.CSV_FIELDS)
    write_json({"example": args.example, "rows": [dict(r.__dict__) for r in rows]}, out / "report.json")
    return EXIT_OK


def cmd_invariance(args, out: Path) -> int:
    from .harness import affine_test, morphology_test, write_rows

    rows = []
    for test in args.test:
        kind, name = test.split("-", 1)
        for variant in args.variants:
            for n in args.N:
                if kind == "morphology":
                    r = morphology_test(name, variant, n, t=args.t if args.t is not None else 1.0,
                                        policy=_policy(args.dt_policy))
                    r.update(sup_difference=r.pop("difference"), hausdorff=math.nan, t_scaled=r["t"])
                else:
                    r = affine_test(name, variant, n, t=args.t, policy=_policy(args.dt_policy))
                    r["status"] = "ok"
                print(f"{r['test']} {variant} N={n}: sup difference {r['sup_difference']:.3e}", flush=True)
                rows.append(r)
    fields = ("test", "variant", "N", "t", "t_scaled", "sup_difference", "hausdorff", "dt", "status")
    write_rows(rows, out / "invariance.csv", fields)
    write_json({"rows": rows}, out / "report.json")
    return EXIT_OK


def cmd_instability(args, out: Path) -> int:
    from .grid import write_csv
    from .harness import instability_demo

    result = instability_demo(args.demo, max_iter=args.max_iter)
    for r in result["runs"]:
        for k, (t, u) in enumerate(r.pop("snapshots")):
            write_csv(u, out / f"{r['role']}_{r['variant']}_{k:02d}.csv")
            r.setdefault("snapshot_times", []).append(t)
        print(f"{args.demo} {r['role']:>10} {r['variant']:<22} dt={r['dt']:.3e}: {r['status']}, "
              f"residual {r['final_residual']:.3e}, diverged={r['diverged']}")
    write_json(result, out / "report.json")
    expected = all(r["diverged"] == (r["role"] == "divergent") for r in result["runs"])
    if not expected:
        log.warning("demo %s did not show the expected behaviour", args.demo)
        return EXIT_OK
    return EXIT_DIVERGED


def cmd_stencil(args, out: Path) -> int:
    from .stencil import build_stencil

    s = build_stencil(args.n_theta, args.n_S)
    s.to_csv(out / "stencil.csv")
    print(f"n_theta={s.n_theta} n_S={s.n_S} dtheta={s.dtheta:.6f} width={s.width}")
    return EXIT_OK


def cmd_model1d(args, out: Path) -> int:
    from .grid import write_csv
    from .model1d import Scheme1DConfig, diverged, euler_solve_1d
    from .problems import model1d_cases

    prob = {p.name: p for p in model1d_cases()}[f"model1d-{args.example}"]
    grid = prob.grid(args.n)
    exact = prob.exact(grid)
    config = Scheme1DConfig(args.variant, dt_policy=args.dt_policy, dt=args.dt, scaling_c=args.scaling_c)
    snaps: list = []
    u, rep = euler_solve_1d(exact, prob.rhs(grid), config, prob.boundary(grid), T=args.T, tol=args.tol,
                            max_iter=args.max_iter, max_seconds=args.max_seconds,
                            snapshot_times=args.snapshots, snapshots=snaps)
    rep.error_linf = float(np.max(np.abs(u.values - exact.values)))
    flag = diverged(rep, u, exact)
    write_csv(u, out / "solution.csv")
    for k, (_, s) in enumerate(snaps):
        write_csv(s, out / f"snapshot_{k:02d}.csv")
    write_json({"example": args.example, "variant": args.variant, "N": args.n, "diverged": flag,
                "snapshot_times": [t for t, _ in snaps], **rep.to_dict()}, out / "report.json")
    print(f"model1d-{args.example} {args.variant} N={args.n} dt={rep.dt:.3e}: {rep.status.value} after "
          f"{rep.iterations} steps, residual {rep.final_residual:.3e}, diverged={flag}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affineflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"affineflow {__version__}")
    p.add_argument("--out-dir", type=Path, default=None, help="output directory (default: ./affineflow-out/<command>)")
    p.add_argument("--threads", type=int, default=None, help="numba worker threads")
    p.add_argument("--manifest", type=Path, default=None, help="replay the run recorded in a manifest.json")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    def policy_arg(sp):
        sp.add_argument("--dt-policy", default=None,
                        help="lipschitz | h2 | h2/8 | fixed:<dt> (default depends on the variant)")

    s = sub.add_parser("solve-static", help="steady solve of a static example")
    s.add_argument("--example", type=_static_tag, required=True, help="a, b, c or d (or static-a ...)")
    s.add_argument("--variant", choices=VARIANTS, default="filtered-regularized")
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--n-theta", type=int, default=None)
    policy_arg(s)
    s.add_argument("--tol", type=float, default=1e-5)
    s.add_argument("--max-iter", type=int, default=1_000_000)
    s.add_argument("--max-seconds", type=float, default=None)
    s.add_argument("--start", choices=("zero", "exact"), default="zero")
    s.set_defaults(func=cmd_solve_static)

    s = sub.add_parser("evolve", help="evolve initial data and extract zero level sets")
    s.add_argument("--example", type=_evolution_tag, required=True, help=", ".join(EVOLUTIONS))
    s.add_argument("--variant", choices=VARIANTS, default="elliptic-regularized")
    s.add_argument("--n", type=int, default=128)
    s.add_argument("--times", type=_floats, default=[round(0.1 * k, 1) for k in range(10)])
    policy_arg(s)
    s.add_argument("--save-fields", action="store_true")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("convergence", help="error table over grid sizes")
    s.add_argument("--example", required=True, help="a, b, c, d, ellipse-dirichlet or ellipse-neumann")
    s.add_argument("--variants", type=_strs, default=["standard", "filtered-regularized"])
    s.add_argument("--N", type=_ints, default=[32, 64, 128])
    policy_arg(s)
    s.add_argument("--T", type=float, default=0.1, help="final time for the ellipse tables")
    s.add_argument("--max-iter", type=int, default=1_000_000)
    s.add_argument("--max-seconds", type=float, default=None)
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("invariance", help="morphology and affine invariance tests")
    s.add_argument("--test", type=_strs, default=["morphology-exp"], help=", ".join(INVARIANCE))
    s.add_argument("--variants", type=_strs, default=["standard"])
    s.add_argument("--N", type=_ints, default=[64])
    s.add_argument("--t", type=float, default=None, help="final time (default 1, or 0.7 for affine-shear)")
    policy_arg(s)
    s.set_defaults(func=cmd_invariance)

    s = sub.add_parser("instability", help="divergent configuration and its convergent counterpart")
    s.add_argument("--demo", choices=("1d-sin", "1d-x43", "2d-static-d"), required=True)
    s.add_argument("--max-iter", type=int, default=None)
    s.set_defaults(func=cmd_instability)

    s = sub.add_parser("stencil", help="write the wide-stencil offsets")
    s.add_argument("--n-theta", type=int, default=3)
    s.add_argument("--n-S", type=int, default=None)
    s.set_defaults(func=cmd_stencil)

    s = sub.add_parser("model1d", help="one-dimensional model problem")
    s.add_argument("--example", choices=("sin", "x43"), default="sin")
    s.add_argument("--variant", choices=("standard", "elliptic", "elliptic-regularized"), default="elliptic")
    s.add_argument("--n", type=int, default=128)
    s.add_argument("--dt-policy", choices=("lipschitz", "scaling", "h2", "fixed"), default="h2")
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--scaling-c", type=float, default=2.0)
    s.add_argument("--T", type=float, default=None, help="final time (default: run to steady state)")
    s.add_argument("--snapshots", type=_floats, default=[])
    s.add_argument("--tol", type=float, default=1e-5)
    s.add_argument("--max-iter", type=int, default=10_000_000)
    s.add_argument("--max-seconds", type=float, default=None)
    s.set_defaults(func=cmd_model1d)
    return p


def _resolve_defaults(args) -> None:
    """Expand defaults that depend on other arguments so the manifest records them."""
    from .harness import default_policy
    from .schemes import SchemeConfig

    if args.command == "stencil" and args.n_S is None:
        args.n_S = 8 * args.n_theta
    if args.command == "solve-static":
        if args.n_theta is None:
            args.n_theta = SchemeConfig.default(args.variant, 1.0).stencil.n_theta
        if args.dt_policy is None:
            args.dt_policy = default_policy(args.variant, steady=True, example=args.example).describe()
    if args.command == "evolve" and args.dt_policy is None:
        args.dt_policy = default_policy(args.variant).describe()


def _manifest(args, argv: list[str]) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "out_dir", "threads", "verbose")}
    return {
        "command": args.command,
        "argv": argv,
        "config": config,
        "seed": args.seed,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _setup(verbose: bool, threads: Optional[int]) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    warnings.filterwarnings("ignore", message=".*TBB.*")
    if threads is not None:
        import numba

        numba.set_num_threads(threads)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.manifest is not None:
        recorded = json.loads(args.manifest.read_text())["argv"]
        replay = parser.parse_args(recorded)
        replay.out_dir = args.out_dir or replay.out_dir
        replay.threads = args.threads if args.threads is not None else replay.threads
        replay.verbose = args.verbose or replay.verbose
        args, argv = replay, [a for a in recorded]
    if args.command is None:
        parser.print_help()
        return EXIT_ERROR
    _setup(args.verbose, args.threads)
    _resolve_defaults(args)
    out = args.out_dir or Path("affineflow-out") / args.command
    out.mkdir(parents=True, exist_ok=True)
    # the recorded argv drops global output options so a replay can redirect them
    recorded = _strip_globals(argv)
    write_json(_manifest(args, recorded), out / "manifest.json")
    try:
        return args.func(args, out)
    except Exception:
        log.exception("%s failed", args.command)
        return EXIT_ERROR


def _strip_globals(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in ("--out-dir", "--threads", "--manifest"):
            skip = True
            continue
        if a.startswith(("--out-dir=", "--threads=", "--manifest=")):
            continue
        out.append(a)
    return out


if __name__ == "__main__":
    sys.exit(main())
