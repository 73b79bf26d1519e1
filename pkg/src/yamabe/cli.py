"""Command-line surface: generate meshes, run flows, verify, exhaust.

Exit codes: 0 success, 1 usage or configuration error, 2 degeneration halt
(standard variant only).  With a fixed seed and one worker the outputs are
byte-identical across runs.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analysis, flow, geometry, kernels
from . import mesh as mesh_mod


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract reserves 2 for
    # degeneration halts
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything one flow run needs; JSON-file values, flags override."""

    mesh_path: Optional[str] = None
    hex_radius: Optional[int] = None
    variant: str = "standard"
    u0: str = "zero"  # zero | file | random
    u0_file: Optional[str] = None
    u0_norm: float = 0.01
    u0_seed: Optional[int] = None
    u0_support: Optional[int] = None
    h: float = 1e-2
    t_max: float = 10.0
    stride: int = 10
    stop_tol: float = 1e-6
    out: str = "flow.csv"
    trace_out: Optional[str] = None
    track: tuple = ()
    threads: Optional[int] = None

    @classmethod
    def load(cls, args):
        config = cls()
        if args.config:
            with open(args.config) as fh:
                data = json.load(fh)
            unknown = set(data) - set(cls.__dataclass_fields__)
            if unknown:
                raise _UsageError(f"unknown config keys: {sorted(unknown)}")
            for key, value in data.items():
                setattr(config, key, value)
        for key in cls.__dataclass_fields__:
            value = getattr(args, key, None)
            if value is not None:
                setattr(config, key, value)
        config.track = tuple(int(v) for v in (config.track or ()))
        config.validate()
        return config

    def validate(self):
        if (self.mesh_path is None) == (self.hex_radius is None):
            raise _UsageError(
                "exactly one mesh source is required: --mesh or --hex-radius")
        if self.variant not in flow.VARIANTS:
            raise _UsageError(f"variant must be one of {flow.VARIANTS}")
        if self.u0 not in ("zero", "file", "random"):
            raise _UsageError("u0 must be zero, file, or random")
        if self.u0 == "file" and not self.u0_file:
            raise _UsageError("u0=file requires --u0-file")
        if self.u0 == "random" and self.u0_seed is None:
            raise _UsageError("u0=random requires --u0-seed")


def _resolve_threads(value):
    if value is None:
        raw = os.environ.get("YAMABE_THREADS")
        if raw:
            try:
                value = int(raw)
            except ValueError:
                raise _UsageError("YAMABE_THREADS must be an integer")
    if value is not None:
        kernels.set_thread_count(value)
    return value


def _build_problem(config):
    if config.mesh_path:
        t, lengths = mesh_mod.load_mesh_file(config.mesh_path)
        metric = (geometry.PLMetric(t, lengths) if lengths is not None
                  else geometry.regular_metric(t))
    else:
        t = mesh_mod.build_hexagonal_disk(config.hex_radius)
        metric = geometry.regular_metric(t)

    if config.u0 == "zero":
        u0 = None
    elif config.u0 == "file":
        u0 = geometry.load_vertex_field(config.u0_file, t.num_vertices)
    else:
        u0 = flow.random_conformal_factor(
            t, config.u0_seed, l2_norm=config.u0_norm,
            support_radius=config.u0_support)
    return flow.FlowProblem(metric, u0, config.variant)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    if args.kind == "hex":
        if args.radius is None:
            raise _UsageError("generate hex requires --radius")
        t = mesh_mod.build_hexagonal_disk(args.radius)
    else:
        t = mesh_mod.tetrahedron()
    lengths = np.full(t.num_edges, float(args.length))
    mesh_mod.save_mesh(t, args.out, lengths)
    print(f"wrote {args.out}: {t!r}")
    return 0


def cmd_flow(args):
    config = RunConfig.load(args)
    _resolve_threads(config.threads)
    problem = _build_problem(config)
    schedule = flow.Schedule(h=config.h, t_max=config.t_max,
                             stride=config.stride, stop_tol=config.stop_tol)
    run = flow.integrate(problem, schedule, tracked=config.track)
    run.to_csv(config.out)
    stem = config.out[:-4] if config.out.endswith(".csv") else config.out
    geometry.save_vertex_field(stem + ".u.txt", run.final_factor)
    final_curv = geometry.extended_curvature(
        geometry.conformal_scale(problem.initial_metric, run.final_factor))
    geometry.save_vertex_field(stem + ".K.txt", final_curv)
    if config.track and config.trace_out:
        run.trace_csv(config.trace_out)
    print(f"wrote {config.out} ({len(run)} samples, stopped={run.stopped})")
    if run.stopped == "degenerated":
        info = run.degeneration
        print(f"degeneration on face {info.face} in t-bracket "
              f"({info.time_lo:.9g}, {info.time_hi:.9g})", file=sys.stderr)
        return 2
    return 0


def cmd_verify(args):
    _resolve_threads(args.threads)
    try:
        reports = analysis.run_suite(args.suite, args.seed)
    except KeyError as exc:
        raise _UsageError(str(exc))
    for report in reports:
        print(report.summary())
    if args.out:
        bundle = {
            "suite": args.suite,
            "seed": args.seed,
            "reports": [r.to_dict() for r in reports],
        }
        with open(args.out, "w") as fh:
            json.dump(bundle, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0 if all(r.passed for r in reports) else 1


def cmd_exhaust(args):
    _resolve_threads(args.threads)
    if args.mesh:
        t, lengths = mesh_mod.load_mesh_file(args.mesh)
        metric = (geometry.PLMetric(t, lengths) if lengths is not None
                  else geometry.regular_metric(t))
    else:
        t = mesh_mod.build_hexagonal_disk(args.radius)
        metric = (analysis.perturbed_edge_metric(t, args.seed,
                                                 args.amplitude)
                  if args.amplitude > 0 else geometry.regular_metric(t))
    schedule = flow.Schedule(h=args.h, t_max=args.t_max, stride=args.stride,
                             stop_tol=0.0)
    tracked = tuple(args.track) if args.track else None
    report = analysis.exhaustion_convergence_report(
        metric, args.center, args.levels, schedule, tracked=tracked)
    with open(args.out, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    diffs = ", ".join(f"{d:.3e}" for d in report.successive_diffs)
    print(f"wrote {args.out}: {len(report.level_vertex_counts)} levels, "
          f"successive sup diffs [{diffs}]")
    return 0


def _build_parser():
    parser = _Parser(prog="yamabe",
                     description="Combinatorial Yamabe flow toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a mesh file")
    gen.add_argument("kind", choices=("hex", "tetra"))
    gen.add_argument("--radius", type=int, default=None)
    gen.add_argument("--length", type=float, default=1.0,
                     help="constant edge length for the written metric")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    fl = sub.add_parser("flow", help="integrate a flow and export CSV")
    fl.add_argument("--config", default=None,
                    help="JSON RunConfig; explicit flags override it")
    fl.add_argument("--mesh", dest="mesh_path", default=None)
    fl.add_argument("--hex-radius", dest="hex_radius", type=int, default=None)
    fl.add_argument("--variant", choices=flow.VARIANTS, default=None)
    fl.add_argument("--u0", choices=("zero", "file", "random"), default=None)
    fl.add_argument("--u0-file", dest="u0_file", default=None)
    fl.add_argument("--u0-norm", dest="u0_norm", type=float, default=None)
    fl.add_argument("--u0-seed", dest="u0_seed", type=int, default=None)
    fl.add_argument("--u0-support", dest="u0_support", type=int, default=None)
    fl.add_argument("--h", type=float, default=None)
    fl.add_argument("--t-max", dest="t_max", type=float, default=None)
    fl.add_argument("--stride", type=int, default=None)
    fl.add_argument("--stop-tol", dest="stop_tol", type=float, default=None)
    fl.add_argument("--out", default=None)
    fl.add_argument("--trace-out", dest="trace_out", default=None)
    fl.add_argument("--track", type=int, nargs="*", default=None)
    fl.add_argument("--threads", type=int, default=None)
    fl.set_defaults(func=cmd_flow)

    ver = sub.add_parser("verify", help="run verification suites")
    ver.add_argument("suite", nargs="?", default="all")
    ver.add_argument("--seed", type=int, default=7)
    ver.add_argument("--out", default=None, help="JSON report bundle path")
    ver.add_argument("--threads", type=int, default=None)
    ver.set_defaults(func=cmd_verify)

    ex = sub.add_parser("exhaust",
                        help="pinned flows on nested truncations")
    ex.add_argument("--mesh", default=None)
    ex.add_argument("--radius", type=int, default=8)
    ex.add_argument("--center", type=int, default=0)
    ex.add_argument("--levels", type=int, default=6)
    ex.add_argument("--seed", type=int, default=7)
    ex.add_argument("--amplitude", type=float, default=0.1,
                    help="edge-noise amplitude for generated metrics")
    ex.add_argument("--h", type=float, default=1e-2)
    ex.add_argument("--t-max", dest="t_max", type=float, default=0.5)
    ex.add_argument("--stride", type=int, default=5)
    ex.add_argument("--track", type=int, nargs="*", default=None)
    ex.add_argument("--out", default="exhaustion.json")
    ex.add_argument("--threads", type=int, default=None)
    ex.set_defaults(func=cmd_exhaust)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, mesh_mod.MeshError,
            geometry.DegenerateFaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
