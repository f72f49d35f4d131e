"""``reggeflow`` command line.

Exit codes: 0 ok, 1 usage / input error, 2 inadmissible or malformed metric,
3 unsupported complex (has boundary), 4 near-Einstein gate failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .complex import (
    Triangulation3,
    TriangulationError,
    build_16cell,
    parse_triangulation,
    triangulation_to_json,
)
from .curvature import functionals
from .fixtures import published_fixed_point
from .flow import FlowConfig, UnsupportedComplexError, integrate
from .geometry import InadmissibleError
from .metric import MetricError, metric_to_json, parse_metric, random_admissible, uniform_metric
from .rng import SplitMix64
from .stability import NotEinsteinError, Q_value, minimize_Q, stability_test

log = logging.getLogger("reggeflow")

EXIT_OK, EXIT_USAGE, EXIT_METRIC, EXIT_COMPLEX, EXIT_GATE = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--triangulation", type=Path, help="triangulation JSON file")
    src.add_argument("--builtin", choices=["16cell"], help="built-in complex (default 16cell)")
    met = p.add_mutually_exclusive_group()
    met.add_argument("--metric", type=Path, help="metric JSON file (squared lengths)")
    met.add_argument("--uniform", type=float, help="same squared length on every edge")
    met.add_argument(
        "--fixed-point", type=int, choices=[1, 2], help="published 16-cell Einstein metric"
    )
    p.add_argument("--alpha", type=float, default=2.0)


def _load_complex(args) -> Triangulation3:
    if args.triangulation is None:
        return build_16cell()
    try:
        return parse_triangulation(args.triangulation.read_bytes())
    except OSError as exc:
        raise CliError(f"cannot read {args.triangulation}: {exc}", EXIT_USAGE) from None
    except TriangulationError as exc:
        raise CliError(f"{args.triangulation}: {exc}", EXIT_USAGE) from None


def _load_metric(args, tri: Triangulation3) -> np.ndarray:
    if args.metric is not None:
        try:
            return parse_metric(args.metric.read_bytes(), tri)
        except OSError as exc:
            raise CliError(f"cannot read {args.metric}: {exc}", EXIT_USAGE) from None
        except MetricError as exc:
            raise CliError(f"{args.metric}: {exc}", EXIT_METRIC) from None
    if args.fixed_point is not None:
        return published_fixed_point(tri, args.fixed_point)
    try:
        return uniform_metric(tri, 1.0 if args.uniform is None else args.uniform)
    except MetricError as exc:
        raise CliError(str(exc), EXIT_METRIC) from None


def _inputs_record(args) -> dict:
    return {
        "triangulation": str(args.triangulation) if args.triangulation else "builtin:16cell",
        "metric": (
            str(args.metric)
            if args.metric
            else f"fixed-point:{args.fixed_point}"
            if args.fixed_point
            else f"uniform:{1.0 if args.uniform is None else args.uniform}"
        ),
    }


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _write_manifest(out: Path | None, command: str, argv: list[str], **fields) -> None:
    if out is None:
        return
    manifest = {
        "command": command,
        "argv": argv,
        "version": __version__,
        "prng": "splitmix64",
        **fields,
    }
    Path(str(out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8"
    )


def _diagnose(tri: Triangulation3, exc: InadmissibleError) -> str:
    if exc.tet is None:
        return str(exc)
    return f"{exc} [first failing tetrahedron: #{exc.tet} {tri.tet_labels(exc.tet)}]"


def cmd_curvature(args, argv) -> int:
    tri = _load_complex(args)
    g = _load_metric(args, tri)
    try:
        rep = functionals(tri, g, alpha=args.alpha)
    except InadmissibleError as exc:
        raise CliError(_diagnose(tri, exc), EXIT_METRIC) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    _emit(rep.to_json(tri), args.out)
    _write_manifest(args.out, "curvature", argv, inputs=_inputs_record(args), alpha=args.alpha, outputs=[str(args.out)])
    return EXIT_OK


def cmd_flow(args, argv) -> int:
    tri = _load_complex(args)
    g = _load_metric(args, tri)
    if args.perturb:
        try:
            g = random_admissible(tri, SplitMix64(args.seed), sigma=args.perturb, base=g)
        except MetricError as exc:
            raise CliError(str(exc), EXIT_METRIC) from None
    try:
        cfg = FlowConfig(
            alpha=args.alpha,
            normalized=args.normalized,
            dt_init=args.dt,
            dt_min=args.dt_min,
            t_max=args.t_max,
            conv_tol=args.tol,
            record_every=args.record_every,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    try:
        traj = integrate(tri, g, cfg)
    except UnsupportedComplexError as exc:
        raise CliError(str(exc), EXIT_COMPLEX) from None
    except InadmissibleError as exc:
        raise CliError(_diagnose(tri, exc), EXIT_METRIC) from None
    summary = traj.summary(tri)
    summary["initial_metric"] = {"edges": {k: float(v) for k, v in zip(tri.edge_keys, g)}}
    outputs = []
    if args.out is not None:
        args.out.write_text(traj.to_csv(tri), encoding="utf-8")
        final = args.final or args.out.with_suffix(".final.json")
        final.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        outputs = [str(args.out), str(final)]
    else:
        _emit(json.dumps(summary, indent=2) + "\n", args.final)
        outputs = [str(args.final)] if args.final else []
    _write_manifest(
        args.out or args.final,
        "flow",
        argv,
        inputs=_inputs_record(args),
        config=cfg.to_dict(),
        seed=args.seed,
        perturb=args.perturb,
        outputs=outputs,
    )
    return EXIT_OK


def cmd_stability(args, argv) -> int:
    tri = _load_complex(args)
    g = _load_metric(args, tri)
    try:
        rep = stability_test(tri, g, h=args.h, gate=args.gate)
    except NotEinsteinError as exc:
        raise CliError(f"{exc} (measured residual {exc.residual!r})", EXIT_GATE) from None
    except InadmissibleError as exc:
        raise CliError(_diagnose(tri, exc), EXIT_METRIC) from None
    _emit(rep.to_json(tri), args.out)
    _write_manifest(args.out, "stability", argv, inputs=_inputs_record(args), h=args.h, gate=args.gate, outputs=[str(args.out)])
    return EXIT_OK


def _minimize_one(job):
    tri, g0, max_iters, tol, seed = job
    res = minimize_Q(tri, g0, max_iters=max_iters, tol=tol)
    return {
        "seed": seed,
        "Q_start": Q_value(tri, g0),
        "Q_min": res.Q,
        "status": res.status,
        "converged": res.converged,
        "iterations": res.n_iter,
        "metric": res.g,
    }


def cmd_minimize_q(args, argv) -> int:
    tri = _load_complex(args)
    base = _load_metric(args, tri)
    try:
        if args.seeds == 0:
            jobs = [(tri, base, args.max_iters, args.tol, None)]
        else:
            seeds = SplitMix64(args.seed).spawn(args.seeds)
            jobs = [
                (tri, random_admissible(tri, SplitMix64(s), sigma=args.sigma, base=base), args.max_iters, args.tol, s)
                for s in seeds
            ]
    except MetricError as exc:
        raise CliError(str(exc), EXIT_METRIC) from None
    try:
        if args.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                runs = list(pool.map(_minimize_one, jobs))
        else:
            runs = [_minimize_one(j) for j in jobs]
    except InadmissibleError as exc:
        raise CliError(_diagnose(tri, exc), EXIT_METRIC) from None
    q = np.array([r["Q_min"] for r in runs])
    best = runs[int(np.argmin(q))]
    keys = tri.edge_keys
    summary = {
        "note": "Q_min values are upper-bound estimates of inf Q, not the infimum",
        "Q_min": float(q.min()),
        "Q_median": float(np.median(q)),
        "statuses": {s: sum(r["status"] == s for r in runs) for s in sorted({r["status"] for r in runs})},
        "boundary_escape_seeds": [r["seed"] for r in runs if r["status"] == "boundary_escape"],
        "runs": [{k: v for k, v in r.items() if k != "metric"} for r in runs],
        "best_metric": {"edges": {k: float(v) for k, v in zip(keys, best["metric"])}},
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    _write_manifest(
        args.out,
        "minimize-q",
        argv,
        inputs=_inputs_record(args),
        seed=args.seed,
        seeds=args.seeds,
        sigma=args.sigma,
        max_iters=args.max_iters,
        tol=args.tol,
        outputs=[str(args.out)],
    )
    return EXIT_OK


def cmd_emit_builtin(args, argv) -> int:
    _emit(triangulation_to_json(build_16cell()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reggeflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curvature", help="curvature report as JSON")
    _add_inputs(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("flow", help="integrate a discrete Ricci flow")
    _add_inputs(p)
    norm = p.add_mutually_exclusive_group()
    norm.add_argument("--normalized", dest="normalized", action="store_true", default=True)
    norm.add_argument("--unnormalized", dest="normalized", action="store_false")
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--dt-min", type=float, default=1e-12)
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", type=float, default=0.0, help="log-uniform perturbation half-width")
    p.add_argument("--out", type=Path, help="trajectory CSV")
    p.add_argument("--final", type=Path, help="final-state JSON (default: <out>.final.json)")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("stability", help="stability analysis at a near-Einstein metric")
    _add_inputs(p)
    p.add_argument("--h", type=float, default=1e-5, help="relative finite-difference step")
    p.add_argument("--gate", type=float, default=1e-3)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("minimize-q", help="descent estimate of inf Q")
    _add_inputs(p)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_minimize_q)

    p = sub.add_parser("emit-builtin", help="write the 16-cell triangulation JSON")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_emit_builtin)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args, argv)
    except CliError as exc:
        print(f"reggeflow {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
