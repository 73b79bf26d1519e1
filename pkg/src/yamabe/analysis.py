"""Verification oracles and desk-scale experiments.

Each check draws its randomness from a named 64-bit seed and returns a
:class:`CheckReport`; a report is reproducible from (name, seed, params).
Simple checks report a raw deviation against a raw tolerance.  Composite
checks (several sub-conditions with different scales) report the worst
sub-deviation divided by its sub-tolerance against a tolerance of 1, with
the raw parts listed under ``details["parts"]``.

Default sample counts are sized so the whole ``all`` suite finishes within
a couple of minutes on a laptop.
"""

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import flow, geometry, kernels
from . import mesh as mesh_mod

SQRT3_OVER_3 = math.sqrt(3.0) / 3.0


@dataclass
class CheckReport:
    """Outcome of one verification check; passes iff deviation <= tolerance."""

    name: str
    passed: bool
    deviation: float
    tolerance: float
    samples: int
    seed: int | None
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        # runtime_s is environment noise; dropping it keeps serialized
        # bundles byte-identical for a fixed seed
        details = {k: v for k, v in self.details.items() if k != "runtime_s"}
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "seed": self.seed,
            "samples": self.samples,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "details": _jsonable(details),
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def summary(self):
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {self.name}: deviation={self.deviation:.6g} "
                f"tolerance={self.tolerance:.6g} samples={self.samples} "
                f"seed={self.seed}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _composite(name, parts, samples=0, seed=None, params=None, details=None):
    """Fold (label, deviation, tolerance) parts into one normalized report."""
    worst = 0.0
    listed = []
    for label, dev, tol in parts:
        dev = float(dev)
        tol = float(tol)
        if dev <= 0.0:
            ratio = 0.0
        elif tol == 0.0:
            ratio = math.inf
        else:
            ratio = dev / tol
        worst = max(worst, ratio)
        listed.append({"label": label, "deviation": dev, "tolerance": tol})
    details = dict(details or {})
    details["parts"] = listed
    return CheckReport(name, worst <= 1.0, worst, 1.0, samples, seed,
                       params or {}, details)


# ---------------------------------------------------------------------------
# Random fixtures
# ---------------------------------------------------------------------------

def sample_triangle_lengths(count, min_margin, rng, log_spread=1.5):
    """Length triples of random nondegenerate triangles.

    Lengths are log-uniform, rejected until the relative
    triangle-inequality defect (perimeter - 2*max)/perimeter is at least
    ``min_margin``, which keeps the triples a fixed distance inside the
    admissible region.
    """
    if not 0.0 < min_margin < 1.0 / 3.0:
        raise ValueError("min_margin must lie in (0, 1/3)")
    out = np.empty((count, 3))
    have = 0
    while have < count:
        draw = np.exp(rng.uniform(-log_spread, log_spread,
                                  (2 * (count - have) + 16, 3)))
        margin = 1.0 - 2.0 * draw.max(axis=1) / draw.sum(axis=1)
        good = draw[margin >= min_margin]
        take = min(count - have, good.shape[0])
        out[have:have + take] = good[:take]
        have += take
    return out


def sample_wide_angle_triangles(count, min_angle, rng, scale_spread=0.5):
    """Length triples of triangles whose angles all exceed ``min_angle``
    (a scalar or per-sample array); shifted-Dirichlet angles, sine-law
    lengths with a random overall scale."""
    min_angle = np.broadcast_to(np.asarray(min_angle, dtype=float),
                                (count,))
    angles = min_angle[:, None] + (math.pi - 3.0 * min_angle[:, None]) * \
        rng.dirichlet((1.0, 1.0, 1.0), size=count)
    scale = np.exp(rng.uniform(-scale_spread, scale_spread, count))
    return np.sin(angles) * scale[:, None]


def perturbed_edge_metric(mesh, seed, amplitude=0.1):
    """Regular metric with independent log-uniform noise per edge."""
    rng = np.random.default_rng(seed)
    lengths = np.exp(rng.uniform(-amplitude, amplitude, mesh.num_edges))
    return geometry.PLMetric(mesh, lengths)


def random_weight_schedule(mesh, seed, row_cap=10.0):
    """Smooth random admissible weight schedule for the linear heat runs.

    Weights stay nonnegative for all t and per-vertex weight sums stay below
    ``row_cap`` by construction.
    """
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.0, 1.0, mesh.num_edges)
    freq = rng.uniform(0.5, 3.0, mesh.num_edges)
    phase = rng.uniform(0.0, 2.0 * math.pi, mesh.num_edges)
    sums = np.zeros(mesh.num_vertices)
    if mesh.num_edges:
        np.add.at(sums, mesh.edges[:, 0], base)
        np.add.at(sums, mesh.edges[:, 1], base)
    peak = sums.max() if sums.size else 0.0
    if peak > 0:
        base = base * (0.95 * row_cap / peak)

    def schedule(t):
        return base * (0.6 + 0.4 * np.sin(freq * t + phase))

    return schedule


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_variational_identity(samples=10_000, seed=0, min_margin=0.05,
                               fd_step=1e-5, tolerance=1e-6):
    """Closed-form angle derivatives against central finite differences.

    Draws random triangles a relative margin inside the admissible region,
    perturbs one conformal factor at a time by ``fd_step``, and compares the
    resulting centered differences of all three angles with the cotangent
    formulas.  The closed form is symmetric by construction; its symmetry
    defect is reported as well.
    """
    rng = np.random.default_rng(seed)
    lengths = sample_triangle_lengths(samples, min_margin, rng)
    angles = kernels.face_angles(lengths)
    cot = 1.0 / np.tan(angles)

    jac = np.empty((samples, 3, 3))
    jac[:, 0, 1] = jac[:, 1, 0] = 0.5 * cot[:, 2]
    jac[:, 0, 2] = jac[:, 2, 0] = 0.5 * cot[:, 1]
    jac[:, 1, 2] = jac[:, 2, 1] = 0.5 * cot[:, 0]
    for a in range(3):
        jac[:, a, a] = 0.0
        jac[:, a, a] = -jac[:, a, :].sum(axis=1)

    fd = np.empty_like(jac)
    for b in range(3):
        # the edge opposite corner c carries exp(u_b/2) exactly when c != b
        factor = np.full(3, math.exp(0.5 * fd_step))
        factor[b] = 1.0
        plus = kernels.face_angles(lengths * factor)
        minus = kernels.face_angles(lengths / factor)
        fd[:, :, b] = (plus - minus) / (2.0 * fd_step)

    deviation = float(np.abs(jac - fd).max())
    symmetry = float(np.abs(jac - np.swapaxes(jac, 1, 2)).max())
    return CheckReport(
        "variational_identity", deviation <= tolerance, deviation, tolerance,
        samples, seed,
        params={"min_margin": min_margin, "fd_step": fd_step},
        details={"symmetry_deviation": symmetry})


def check_curvature_evolution(problem, run, depth=2, tolerance=1e-4):
    """Centered time-differences of curvature against the weighted Laplacian.

    Needs a standard-variant run with stored per-sample curvature and
    cotangent weights; compares at vertices at least ``depth`` layers away
    from the pinned set, where the evolution identity is exact for the
    continuous flow.  The residual shrinks quadratically with the sampling
    interval.
    """
    if run.curvature_samples is None or run.weight_samples is None:
        raise ValueError("run must be integrated with store_fields=True")
    if len(run.times) < 3:
        raise ValueError("run too short for centered differences")
    mesh = problem.mesh
    pinned = np.flatnonzero(problem.pinned_mask)
    if pinned.size:
        dist = mesh_mod.graph_distances(mesh, pinned)
        deep = dist >= depth
    else:
        deep = np.ones(mesh.num_vertices, dtype=bool)
    if not deep.any():
        raise ValueError("no vertices are deep enough for the comparison")

    K = run.curvature_samples
    W = run.weight_samples
    times = run.times
    deviation = 0.0
    for n in range(1, len(times) - 1):
        if np.isnan(W[n]).any():
            raise ValueError("run left the admissible region; weights "
                             "undefined")
        rate = (K[n + 1] - K[n - 1]) / (times[n + 1] - times[n - 1])
        lap = geometry.laplacian(mesh, W[n], K[n])
        deviation = max(deviation, float(np.abs((rate - lap)[deep]).max()))
    return CheckReport(
        "curvature_evolution", deviation <= tolerance, deviation, tolerance,
        len(times) - 2, None,
        params={"depth": depth, "dt": float(times[1] - times[0])},
        details={"deep_vertices": int(deep.sum())})


def check_angle_continuity(seed=0, paths=10, exponents=tuple(range(1, 10)),
                           tolerance=1e-10):
    """Extended angles along length paths crossing the degeneracy boundary.

    Each path fixes two legs and grows the third toward their sum through
    offsets 10^-k; the big angle must increase monotonically to pi, the
    boundary point must map exactly to (pi, 0, 0), and every sampled triple
    must keep an angle sum of pi within ``tolerance``.
    """
    rng = np.random.default_rng(seed)
    exponents = sorted(exponents)
    sum_dev = 0.0
    mono_violation = 0.0
    boundary_dev = 0.0
    moduli = []
    for _ in range(paths):
        l2, l3 = rng.uniform(0.3, 1.5, 2)
        total = l2 + l3
        big = []
        for k in exponents:
            ang = geometry.extended_angles(total * (1.0 - 10.0 ** (-k)), l2,
                                           l3)
            sum_dev = max(sum_dev, abs(float(ang.sum()) - math.pi))
            big.append(float(ang[0]))
        diffs = np.diff(big)
        mono_violation = max(mono_violation, float(max(0.0, -diffs.min())))
        moduli.append(math.pi - big[-1])
        at_boundary = geometry.extended_angles(total, l2, l3)
        boundary_dev = max(
            boundary_dev,
            float(np.abs(at_boundary - np.array([math.pi, 0.0, 0.0])).max()))
    return _composite(
        "angle_continuity",
        [("angle_sum", sum_dev, tolerance),
         ("monotone_approach", mono_violation, 0.0),
         ("boundary_value", boundary_dev, 0.0)],
        samples=paths * (len(exponents) + 1), seed=seed,
        params={"paths": paths, "exponents": list(exponents)},
        details={"final_moduli": moduli})


def max_principle_test(mesh, weight_schedule, f0, horizon=10.0, h=1e-2,
                       row_cap=10.0, tolerance=1e-10, seed=None):
    """Linear heat runs under admissible weight schedules.

    With zero initial data the sup norm must stay at the integrator
    tolerance; with sign-constrained data the running maximum must stay at
    or below ``max(0, max f0)`` up to ``tolerance``.
    """
    f0 = np.ascontiguousarray(f0, dtype=float)
    times, samples = flow.integrate_heat(mesh, weight_schedule, f0, h,
                                         horizon, stride=10, row_cap=row_cap)
    if (f0 == 0.0).all():
        mode = "zero_data"
        deviation = float(np.abs(samples).max())
    else:
        mode = "comparison"
        cap = max(0.0, float(f0.max()))
        deviation = max(0.0, float(samples.max()) - cap)
    return CheckReport(
        "max_principle", deviation <= tolerance, deviation, tolerance,
        len(times), seed,
        params={"horizon": horizon, "h": h, "row_cap": row_cap},
        details={"mode": mode})


def uniqueness_gap(problem, run_a, run_b, tolerance=1e-8, t_points=6,
                   s_points=5):
    """Sup gap between two runs of the same problem, plus the Delaunay
    hypothesis on factor interpolations.

    When some interpolated metric fails the hypothesis the report flags
    inapplicability instead of failing.
    """
    if run_a.u_samples is None or run_b.u_samples is None:
        raise ValueError("runs must be integrated with store_fields=True")
    ib = np.searchsorted(run_b.times, run_a.times)
    ib = np.clip(ib, 0, len(run_b.times) - 1)
    match = np.abs(run_b.times[ib] - run_a.times) <= 1e-9 * np.maximum(
        1.0, np.abs(run_a.times))
    if match.sum() < 2:
        raise ValueError("runs share fewer than two sample times")
    ia = np.flatnonzero(match)
    gap = float(np.abs(run_a.u_samples[ia] - run_b.u_samples[ib[ia]]).max())

    d = problem.initial_metric
    min_margin = math.inf
    applicable = True
    for n in np.linspace(0, ia.size - 1, min(t_points, ia.size)).astype(int):
        ua = run_a.u_samples[ia[n]]
        ub = run_b.u_samples[ib[ia[n]]]
        for s in (np.arange(s_points) + 0.5) / s_points:
            mixed = geometry.conformal_scale(d, s * ua + (1.0 - s) * ub)
            if not mixed.is_pl:
                applicable = False
                min_margin = -math.inf
                break
            min_margin = min(min_margin, geometry.delaunay_margin(mixed))
        if not applicable:
            break
    if applicable:
        applicable = min_margin > 0.0

    passed = (gap <= tolerance) if applicable else True
    return CheckReport(
        "uniqueness_gap", passed, gap, tolerance, int(ia.size), None,
        params={"t_points": t_points, "s_points": s_points},
        details={"applicable": applicable, "min_delaunay_margin": min_margin,
                 "matched_samples": int(ia.size)})


def energy_monotonicity_check(run, base_slack=1e-8):
    """Discrete energy inequality along a hexagonal run.

    Centered differences of the squared l2 norm plus sqrt(3)/3 times the
    Dirichlet energy must stay below ``base_slack`` plus a quadratic
    allowance in the sampling interval, at every interior sample.
    """
    problem = run.problem
    if problem is None or not problem.is_hexagonal_regular():
        raise ValueError("energy inequality applies to hexagonal-lattice "
                         "problems with a constant background metric")
    times = run.times
    if len(times) < 3:
        raise ValueError("run too short for centered differences")
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        raise ValueError("run must be sampled on a uniform grid")
    dt = float(dts[0])
    sq = run.l2_norm ** 2
    lhs = (sq[2:] - sq[:-2]) / (2.0 * dt) + SQRT3_OVER_3 * run.dirichlet[1:-1]
    deviation = float(lhs.max())
    slack = base_slack + dt * dt
    return CheckReport(
        "energy_monotonicity", deviation <= slack, deviation, slack,
        len(times) - 2, None,
        params={"dt": dt, "base_slack": base_slack},
        details={"max_lhs": deviation})


def gauss_bonnet_check(seed=0, rescalings=100, amplitude=1.5,
                       tolerance=1e-9):
    """Total curvature against 2*pi*chi on the closed tetrahedron fixture.

    Runs the regular metric plus ``rescalings`` random conformal factors;
    rescalings large enough to break triangle inequalities go through the
    extended curvature, which still sums each face's angles to pi.
    """
    t = mesh_mod.tetrahedron()
    target = 2.0 * math.pi * mesh_mod.euler_characteristic(t)
    base = geometry.regular_metric(t)
    deviation = abs(float(geometry.curvature(base).sum()) - target)
    rng = np.random.default_rng(seed)
    pseudo = 0
    for _ in range(rescalings):
        u = rng.uniform(-amplitude, amplitude, t.num_vertices)
        scaled = geometry.conformal_scale(base, u)
        if not scaled.is_pl:
            pseudo += 1
        total = float(geometry.extended_curvature(scaled).sum())
        deviation = max(deviation, abs(total - target))
    return _composite(
        "gauss_bonnet",
        [("total_curvature", deviation, tolerance),
         ("pseudo_metrics_exercised", 1.0 if pseudo == 0 else 0.0, 0.0)],
        samples=rescalings + 1, seed=seed,
        params={"amplitude": amplitude},
        details={"pseudo_metrics": pseudo, "target": target})


# ---------------------------------------------------------------------------
# Exhaustion and convergence experiments
# ---------------------------------------------------------------------------

@dataclass
class ExhaustionReport:
    """Per-level traces on a common grid plus successive sup differences."""

    center: int
    times: np.ndarray
    tracked: tuple
    level_vertex_counts: list
    level_interior_counts: list
    traces: np.ndarray  # (levels, tracked, samples) factor values
    successive_diffs: np.ndarray  # (levels-1,)
    monotone_decreasing: bool

    def to_dict(self):
        return {
            "center": self.center,
            "tracked": list(self.tracked),
            "times": self.times.tolist(),
            "level_vertex_counts": self.level_vertex_counts,
            "level_interior_counts": self.level_interior_counts,
            "successive_diffs": self.successive_diffs.tolist(),
            "monotone_decreasing": self.monotone_decreasing,
            "traces": self.traces.tolist(),
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def exhaustion_convergence_report(metric, center, levels, schedule,
                                  tracked=None):
    """Pinned flows on nested truncations, compared at tracked vertices.

    Runs the standard flow with zero initial factor on every level of the
    exhaustion of ``metric.mesh`` around ``center`` (boundary of each level
    pinned), samples the factor at the tracked base vertices on one common
    grid, and reports sup differences between successive levels.  Decay of
    the differences is an expectation recorded by the report, not an
    assertion; it is only guaranteed within the admissibility horizon.
    """
    base_mesh = metric.mesh
    seq = mesh_mod.exhaustion(base_mesh, center, levels)
    if tracked is None:
        tracked = (int(center),)
    tracked = tuple(int(v) for v in tracked)
    schedule = replace(schedule, stop_tol=0.0)

    all_times = None
    traces = []
    for level in seq.levels:
        sub = level.triangulation
        sub_metric = geometry.PLMetric(sub, metric.lengths[level.base_edges])
        problem = flow.FlowProblem(sub_metric, None, "standard",
                                   pinned=~level.interior_mask)
        local = {int(b): i for i, b in enumerate(level.base_vertices)}
        present = [v for v in tracked if v in local]
        run = flow.integrate(problem, schedule,
                             tracked=[local[v] for v in present])
        if run.stopped == "degenerated":
            raise flow.DegenerationError(run.degeneration.face,
                                         time=run.degeneration.time_lo)
        if all_times is None:
            all_times = run.times
        elif not np.array_equal(all_times, run.times):
            raise RuntimeError("level runs fell out of grid alignment")
        level_trace = np.zeros((len(tracked), len(run.times)))
        for col, v in enumerate(present):
            level_trace[tracked.index(v)] = run.tracked_u[:, col]
        traces.append(level_trace)

    traces = np.asarray(traces)
    diffs = (np.abs(np.diff(traces, axis=0)).max(axis=(1, 2))
             if traces.shape[0] > 1 else np.empty(0))
    monotone = bool((np.diff(diffs) <= 0).all()) if diffs.size > 1 else True
    return ExhaustionReport(
        center=int(center),
        times=all_times,
        tracked=tracked,
        level_vertex_counts=[lv.triangulation.num_vertices
                             for lv in seq.levels],
        level_interior_counts=[int(lv.interior_mask.sum())
                               for lv in seq.levels],
        traces=traces,
        successive_diffs=diffs,
        monotone_decreasing=monotone,
    )


def convergence_experiment(radius=10, phi_norm=0.01, seed=7, schedule=None):
    """Flat-fixed-point convergence on a hexagonal disk, fully checked.

    Runs the standard flow from a random factor of the given l2 norm
    supported within half the disk radius, then asserts: the two uniform
    margins pi/6 are never violated, the l2 norm never increases, the
    energy inequality holds at interior samples, the Dirichlet energy ends
    below 1e-8, and the curvature sup norm ends below 1e-6 before the time
    horizon.  Returns the composite report together with the sampled run.
    """
    if schedule is None:
        schedule = flow.Schedule(h=1e-2, t_max=100.0, stride=10,
                                 stop_tol=1e-6)
    disk = mesh_mod.build_hexagonal_disk(radius)
    metric = geometry.regular_metric(disk)
    phi = flow.random_conformal_factor(disk, seed, l2_norm=phi_norm,
                                       support_radius=radius // 2)
    problem = flow.FlowProblem(metric, phi, "standard")
    started = time.perf_counter()
    run = flow.integrate(problem, schedule)
    runtime = time.perf_counter() - started

    sixth = math.pi / 6.0
    ndg_violation = max(0.0, sixth - float(run.nondegeneracy_margin.min()))
    del_violation = max(0.0, sixth - float(run.delaunay_margin.min()))
    l2_increase = (float(np.diff(run.l2_norm).max())
                   if len(run.times) > 1 else 0.0)
    if len(run.times) >= 3:
        energy = energy_monotonicity_check(run)
        energy_part = ("energy_inequality", energy.deviation,
                       energy.tolerance)
    else:
        # a run that converges at once has no interior samples to test
        energy_part = ("energy_inequality", 0.0, 1.0)
    finished = (run.stopped == "converged"
                and run.times[-1] < schedule.t_max)
    energy_integral = np.concatenate(
        ([0.0], np.cumsum(0.5 * (run.dirichlet[1:] + run.dirichlet[:-1])
                          * np.diff(run.times))))
    quarters = np.linspace(0, len(run.times) - 1, 5).astype(int)

    report = _composite(
        "hexagonal_convergence",
        [("nondegeneracy_margin", ndg_violation, 1e-12),
         ("delaunay_margin", del_violation, 1e-12),
         ("l2_monotone", l2_increase, 1e-12),
         energy_part,
         ("final_dirichlet", float(run.dirichlet[-1]), 1e-8),
         ("final_sup_curvature", float(run.sup_curvature[-1]), 1e-6),
         ("terminated_early", 0.0 if finished else 1.0, 0.5)],
        samples=len(run.times), seed=seed,
        params={"radius": radius, "phi_norm": phi_norm, "h": schedule.h,
                "t_max": schedule.t_max},
        details={
            "stopped": run.stopped,
            "final_time": float(run.times[-1]),
            "runtime_s": runtime,
            "partial_energy_integrals":
                [float(energy_integral[q]) for q in quarters],
        })
    return report, run


# ---------------------------------------------------------------------------
# Named suites (the `verify` command and the acceptance tests drive these)
# ---------------------------------------------------------------------------

def _timed(report, started):
    report.details["runtime_s"] = time.perf_counter() - started
    return report


def suite_variational(seed):
    started = time.perf_counter()
    return [_timed(check_variational_identity(10_000, seed), started)]


def suite_evolution(seed):
    """Curvature evolution residual at h=1e-3 plus its halving ratio."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(6)
    metric = geometry.regular_metric(disk)
    phi = flow.random_conformal_factor(disk, seed, l2_norm=0.05,
                                       support_radius=4)
    problem = flow.FlowProblem(metric, phi, "standard")
    devs = {}
    for h in (1e-3, 5e-4):
        run = flow.integrate(problem,
                             flow.Schedule(h=h, t_max=0.5, stride=1,
                                           stop_tol=0.0),
                             store_fields=True)
        devs[h] = check_curvature_evolution(problem, run).deviation
    ratio = devs[1e-3] / devs[5e-4]
    report = _composite(
        "curvature_evolution",
        [("residual_at_1e-3", devs[1e-3], 1e-4),
         ("halving_ratio", abs(ratio - 4.0), 1.0)],
        samples=2, seed=seed,
        params={"radius": 6, "t_max": 0.5},
        details={"residuals": {str(h): devs[h] for h in devs},
                 "ratio": ratio})
    return [_timed(report, started)]


def suite_gaussbonnet(seed):
    started = time.perf_counter()
    return [_timed(gauss_bonnet_check(seed), started)]


def suite_continuity(seed):
    """Extension consistency on the admissible region plus boundary paths."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    lengths = sample_triangle_lengths(1000, 0.01, rng)
    consistency = 0.0
    for row in lengths:
        a = geometry.inner_angles(*row)
        b = geometry.extended_angles(*row)
        consistency = max(consistency, float(np.abs(a - b).max()))
    paths = check_angle_continuity(seed=seed, paths=10)
    parts = [("extension_consistency", consistency, 0.0)]
    parts += [(p["label"], p["deviation"], p["tolerance"])
              for p in paths.details["parts"]]
    report = _composite("extension_consistency_continuity", parts,
                        samples=1000 + paths.samples, seed=seed,
                        details={"path_moduli":
                                 paths.details["final_moduli"]})
    return [_timed(report, started)]


def suite_delta(seed):
    """Closed-form factor budget: pinned value plus the sampled guarantee."""
    started = time.perf_counter()
    value = geometry.delta_of_epsilon(math.pi / 3.0)
    value_dev = abs(value - 4.2234e-3)

    rng = np.random.default_rng(seed)
    n = 10_000
    eps = rng.uniform(0.05, math.pi / 3.0, n)
    lengths = sample_wide_angle_triangles(n, eps, rng, scale_spread=0.0)
    delta = np.asarray([geometry.delta_of_epsilon(e) for e in eps])
    u = rng.uniform(-1.0, 1.0, (n, 3))
    u *= (delta / np.abs(u).max(axis=1))[:, None]
    # edge opposite corner c scales by exp((u_a + u_b)/2), a,b != c
    factors = np.exp(0.5 * (np.roll(u, 1, axis=1) + np.roll(u, 2, axis=1)))
    before = kernels.face_angles(lengths)
    after = kernels.face_angles_extended(lengths * factors)
    worst = float((np.abs(after - before).max(axis=1) - eps / 2.0).max())
    report = _composite(
        "delta_of_epsilon",
        [("delta_at_pi_third", value_dev, 1e-7),
         ("guarantee_violation", worst, 0.0)],
        samples=n, seed=seed,
        params={"eps_range": [0.05, math.pi / 3.0]},
        details={"delta_at_pi_third": value,
                 "worst_margin_use": worst})
    return [_timed(report, started)]


def suite_existence(seed):
    """Admissibility horizon: pinned value, monotonicity, guarantee runs."""
    started = time.perf_counter()
    value = flow.existence_time_estimate(math.pi / 3.0, 6)
    value_dev = abs(value - 1.6805e-4)
    grid = [flow.existence_time_estimate(math.pi / 3.0, m)
            for m in range(3, 13)]
    mono_violation = max(0.0, float(np.diff(grid).max()))

    disk = mesh_mod.build_hexagonal_disk(4)
    degenerations = 0
    for k in range(50):
        metric = perturbed_edge_metric(disk, seed + k, amplitude=0.12)
        eps = geometry.nondegeneracy_margin(metric)
        horizon = flow.existence_time_estimate(eps, int(disk.degrees.max()))
        problem = flow.FlowProblem(metric, None, "standard")
        run = flow.integrate(problem,
                             flow.Schedule(h=horizon / 20.0,
                                           t_max=horizon * 0.999, stride=5,
                                           stop_tol=0.0))
        if run.stopped == "degenerated":
            degenerations += 1
    report = _composite(
        "existence_time",
        [("estimate_at_pi_third_deg6", value_dev, 1e-8),
         ("monotone_in_degree", mono_violation, 0.0),
         ("degenerations_before_horizon", float(degenerations), 0.0)],
        samples=50, seed=seed,
        details={"estimate": value, "degenerations": degenerations})
    return [_timed(report, started)]


def suite_extended(seed):
    """Global continuation of the extended flow from a degenerate start."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(4)
    lengths = np.ones(disk.num_edges)
    # stretch one boundary edge so exactly one face becomes (2, 1, 1)
    bad_edge = int(np.flatnonzero(disk.boundary_edges)[0])
    lengths[bad_edge] = 2.0
    metric = geometry.PLMetric(disk, lengths)
    problem = flow.FlowProblem(metric, None, "extended")
    run = flow.integrate(problem,
                         flow.Schedule(h=1e-2, t_max=10.0, stride=1,
                                       stop_tol=0.0),
                         store_fields=True)
    sum_dev = 0.0
    for u in run.u_samples:
        scaled = geometry.conformal_scale(metric, u)
        angles = geometry.face_angles(scaled, extended=True)
        sum_dev = max(sum_dev,
                      float(np.abs(angles.sum(axis=1) - math.pi).max()))
    report = _composite(
        "extended_global_existence",
        [("reached_horizon", 0.0 if run.stopped == "t_max" else 1.0, 0.5),
         ("angle_sums", sum_dev, 1e-9),
         ("initially_pseudo", 0.0 if not metric.is_pl else 1.0, 0.5)],
        samples=len(run.times), seed=seed,
        params={"radius": 4, "t_max": 10.0},
        details={"stopped": run.stopped,
                 "degenerate_faces_at_start":
                     int((~metric.face_in_omega).sum()),
                 "final_min_margin":
                     float(run.nondegeneracy_margin[-1])})
    return [_timed(report, started)]


def suite_maxprinciple(seed):
    """Zero-data and comparison maximum principles over random schedules."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(3)
    zero_dev = 0.0
    comp_dev = 0.0
    runs = 20
    for k in range(runs):
        schedule = random_weight_schedule(disk, seed + k, row_cap=10.0)
        rng = np.random.default_rng(seed + 10_000 + k)
        zero_dev = max(zero_dev, max_principle_test(
            disk, schedule, np.zeros(disk.num_vertices),
            seed=seed + k).deviation)
        f0 = -rng.uniform(0.0, 1.0, disk.num_vertices)
        comp_dev = max(comp_dev, max_principle_test(
            disk, schedule, f0, tolerance=1e-8, seed=seed + k).deviation)
    report = _composite(
        "max_principle",
        [("zero_data_sup", zero_dev, 1e-10),
         ("comparison_overshoot", comp_dev, 1e-8)],
        samples=2 * runs, seed=seed,
        params={"row_cap": 10.0, "horizon": 10.0})
    return [_timed(report, started)]


def suite_uniqueness(seed):
    """Step-refinement surrogate for uniqueness under the Delaunay
    hypothesis."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(6)
    metric = geometry.regular_metric(disk)
    phi = flow.random_conformal_factor(disk, seed, l2_norm=0.5,
                                       support_radius=4)
    problem = flow.FlowProblem(metric, phi, "standard")
    runs = {}
    for h in (4e-3, 2e-3, 1e-3, 5e-4):
        runs[h] = flow.integrate(
            problem,
            flow.Schedule(h=h, t_max=5.0, stride=round(0.1 / h),
                          stop_tol=0.0),
            store_fields=True)
    pairs = [(4e-3, 2e-3), (2e-3, 1e-3), (1e-3, 5e-4)]
    reports = [uniqueness_gap(problem, runs[a], runs[b]) for a, b in pairs]
    gaps = [r.deviation for r in reports]
    ratio = gaps[0] / gaps[1]
    applicable = all(r.details["applicable"] for r in reports)
    report = _composite(
        "uniqueness_gap",
        [("gap_ratio", abs(ratio - 16.0), 4.0),
         ("gap_at_1e-3", gaps[2], 1e-8),
         ("hypothesis_applicable", 0.0 if applicable else 1.0, 0.5)],
        samples=len(runs), seed=seed,
        params={"radius": 6, "t_max": 5.0, "phi_norm": 0.5},
        details={"gaps": dict(zip(("4e-3/2e-3", "2e-3/1e-3", "1e-3/5e-4"),
                                  gaps)),
                 "ratio": ratio,
                 "min_delaunay_margin":
                     min(r.details["min_delaunay_margin"]
                         for r in reports)})
    return [_timed(report, started)]


def suite_energy(seed):
    """Energy inequality on a mid-size hexagonal run."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(8)
    metric = geometry.regular_metric(disk)
    phi = flow.random_conformal_factor(disk, seed, l2_norm=0.01,
                                       support_radius=4)
    problem = flow.FlowProblem(metric, phi, "standard")
    run = flow.integrate(problem,
                         flow.Schedule(h=1e-2, t_max=40.0, stride=5,
                                       stop_tol=0.0))
    energy = energy_monotonicity_check(run)
    l2_increase = float(np.diff(run.l2_norm).max())
    report = _composite(
        "energy_monotonicity",
        [("energy_inequality", energy.deviation, energy.tolerance),
         ("l2_monotone", l2_increase, 1e-12)],
        samples=energy.samples, seed=seed,
        params={"radius": 8, "phi_norm": 0.01},
        details={"max_lhs": energy.deviation, "slack": energy.tolerance})
    return [_timed(report, started)]


def suite_exhaustion(seed):
    """Exhaustion flows: structural invariants plus the recorded decay."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(8)
    metric = perturbed_edge_metric(disk, seed, amplitude=0.1)
    ring2 = int(np.flatnonzero(mesh_mod.graph_distances(disk, 0) == 2)[0])
    schedule = flow.Schedule(h=1e-2, t_max=0.5, stride=5, stop_tol=0.0)
    report = exhaustion_convergence_report(metric, 0, 8, schedule,
                                           tracked=(0, ring2))
    # at level 2 the ring-2 vertex sits on the level boundary: pinned at 0
    pinned_trace = float(np.abs(report.traces[1, 1]).max())
    grids_ok = report.times is not None
    check = _composite(
        "exhaustion_convergence",
        [("pinned_trace_zero", pinned_trace, 0.0),
         ("common_grid", 0.0 if grids_ok else 1.0, 0.5)],
        samples=len(report.times), seed=seed,
        params={"radius": 8, "levels": 8},
        details={"successive_diffs": report.successive_diffs.tolist(),
                 "monotone_decreasing": report.monotone_decreasing,
                 "level_vertex_counts": report.level_vertex_counts})
    return [_timed(check, started)]


def suite_convergence(seed):
    report, _ = convergence_experiment(radius=10, phi_norm=0.01, seed=seed)
    return [report]


def suite_semilinear(seed):
    """Constant-weight Laplacian plus remainder against minus curvature."""
    started = time.perf_counter()
    disk = mesh_mod.build_hexagonal_disk(4)
    metric = geometry.regular_metric(disk)
    rng = np.random.default_rng(seed)
    deviation = 0.0
    n = 1000
    for _ in range(n):
        u = rng.uniform(-0.3, 0.3, disk.num_vertices)
        problem = flow.FlowProblem(metric, u, "semilinear_hex")
        state = flow.initial_state(problem)
        lhs = flow.semilinear_rhs(problem, state)
        rhs = flow.rhs_standard(problem, state)
        active = problem.active_mask
        deviation = max(deviation,
                        float(np.abs((lhs - rhs)[active]).max()))
    report = CheckReport(
        "semilinear_identity", deviation <= 1e-10, deviation, 1e-10, n, seed,
        params={"radius": 4, "linf_bound": 0.3})
    return [_timed(report, started)]


SUITES = {
    "variational": suite_variational,
    "evolution": suite_evolution,
    "continuity": suite_continuity,
    "maxprinciple": suite_maxprinciple,
    "energy": suite_energy,
    "exhaustion": suite_exhaustion,
    "convergence": suite_convergence,
    "gaussbonnet": suite_gaussbonnet,
    "delta": suite_delta,
    "existence": suite_existence,
    "extended": suite_extended,
    "uniqueness": suite_uniqueness,
    "semilinear": suite_semilinear,
}

SUITE_ORDER = ("variational", "evolution", "gaussbonnet", "continuity",
               "delta", "existence", "extended", "maxprinciple",
               "uniqueness", "convergence", "semilinear", "energy",
               "exhaustion")


def run_suite(selector, seed):
    """Run one named suite (or ``all``); returns a list of CheckReports."""
    if selector == "all":
        reports = []
        for name in SUITE_ORDER:
            reports.extend(SUITES[name](seed))
        return reports
    if selector not in SUITES:
        raise KeyError(f"unknown suite {selector!r}; choose from "
                       f"{('all',) + tuple(SUITES)}")
    return SUITES[selector](seed)
