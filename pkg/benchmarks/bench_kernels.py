#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-NumPy fallback.

Runs every kernel on hexagonal disks of a few sizes plus one complete
right-hand-side evaluation and one short integration, timing both backends
when numba is importable (regardless of YAMABE_NUMBA).  Usage:

    python benchmarks/bench_kernels.py [--radius 40] [--repeats 30]
"""

import argparse
import math
import time

import numpy as np

from yamabe import flow, geometry, kernels, mesh


def best_of(fn, repeats):
    fn()  # warmup: triggers JIT compilation on the numba side
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def kernel_cases(t, lengths, u):
    fl = kernels.IMPLEMENTATIONS["numpy"]["face_lengths"](t.face_edges,
                                                          lengths)
    angles = kernels.IMPLEMENTATIONS["numpy"]["face_angles"](fl)
    flat = angles.ravel()
    weights = np.abs(lengths)
    opp0 = t.edge_opposite_corners[:, 0]
    opp1 = t.edge_opposite_corners[:, 1]
    return {
        "scaled_lengths": lambda impl: impl(t.edges[:, 0], t.edges[:, 1], u,
                                            lengths),
        "face_lengths": lambda impl: impl(t.face_edges, lengths),
        "omega_margins": lambda impl: impl(fl),
        "face_angles": lambda impl: impl(fl),
        "face_angles_extended": lambda impl: impl(fl),
        "angle_defects": lambda impl: impl(t.faces, angles, t.num_vertices),
        "cot_weights": lambda impl: impl(opp0, opp1, flat),
        "opposite_angle_sums": lambda impl: impl(opp0, opp1, flat),
        "weighted_laplacian": lambda impl: impl(t.adj_indptr, t.adj_vertices,
                                                t.adj_edges, weights, u),
        "hex_remainders": lambda impl: impl(t.faces, u, t.num_vertices),
        "dirichlet_energy": lambda impl: impl(t.edges[:, 0], t.edges[:, 1],
                                              u),
    }


def bench_kernels(radius, repeats):
    t = mesh.build_hexagonal_disk(radius)
    rng = np.random.default_rng(0)
    lengths = np.exp(rng.uniform(-0.1, 0.1, t.num_edges))
    u = rng.uniform(-0.2, 0.2, t.num_vertices)
    print(f"\nkernels on {t!r} (best of {repeats}, microseconds)")
    header = f"{'kernel':24s} {'numpy':>10s}"
    backends = list(kernels.IMPLEMENTATIONS)
    if "numba" in backends:
        header += f" {'numba':>10s} {'speedup':>8s}"
    print(header)
    for name, case in kernel_cases(t, lengths, u).items():
        times = {}
        for backend in backends:
            impl = kernels.IMPLEMENTATIONS[backend][name]
            times[backend] = best_of(lambda: case(impl), repeats) * 1e6
        line = f"{name:24s} {times['numpy']:10.1f}"
        if "numba" in times:
            line += (f" {times['numba']:10.1f} "
                     f"{times['numpy'] / times['numba']:7.1f}x")
        print(line)


def bench_flow(radius, repeats):
    t = mesh.build_hexagonal_disk(radius)
    metric = geometry.regular_metric(t)
    phi = flow.random_conformal_factor(t, 7, l2_norm=0.01,
                                       support_radius=radius // 2)
    problem = flow.FlowProblem(metric, phi, "standard")
    state = flow.initial_state(problem)
    schedule = flow.Schedule(h=1e-2, t_max=1.0, stride=10, stop_tol=0.0)

    print(f"\nflow pipeline on {t!r} (best of {repeats}, milliseconds)")
    rhs_ms = best_of(lambda: flow.rhs_standard(problem, state), repeats) * 1e3
    run_ms = best_of(lambda: flow.integrate(problem, schedule),
                     max(3, repeats // 10)) * 1e3
    print(f"{'rhs_standard':24s} {rhs_ms:10.3f}")
    print(f"{'integrate to t=1':24s} {run_ms:10.3f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--radius", type=int, default=40)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    print(f"active backend: {kernels.ACTIVE_BACKEND} "
          f"(available: {', '.join(kernels.IMPLEMENTATIONS)})")
    for radius in (10, args.radius):
        bench_kernels(radius, args.repeats)
    print("\nflow pipeline rows run on the active backend; rerun with "
          "YAMABE_NUMBA=0 to time the fallback")
    bench_flow(10, args.repeats)
    bench_flow(args.radius, args.repeats)


if __name__ == "__main__":
    main()
