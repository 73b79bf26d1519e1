"""Flow right-hand sides and fixed-step time integration.

Three variants share one integrator:

* ``standard``       du_i/dt = -K_i, defined while every face keeps the
  strict triangle inequalities; leaving that region halts the run with a
  degeneration bracket.
* ``extended``       du_i/dt = -K~_i via the extended angle map; total, so
  runs continue through degenerate faces.
* ``semilinear_hex`` the constant-weight Laplacian plus the second-order
  angle remainder; an exact rewriting of the standard right-hand side on
  regular hexagonal truncations.

Pinned vertices (by default the mesh boundary) keep their initial factor
bit-exactly; everything else advances by classical 4-stage Runge-Kutta with
a fixed step.  The extended right-hand side is continuous but not Lipschitz
at the degeneracy boundary, so no adaptive error control is used; step
halving is the accuracy report instead.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import geometry, kernels
from .geometry import DegenerateFaceError

logger = logging.getLogger("yamabe")

VARIANTS = ("standard", "extended", "semilinear_hex")

# relative triangle-inequality margin below which a standard-variant stage
# counts as degenerate
FLOW_OMEGA_TOL = 1e-12

HEX_WEIGHT = math.sqrt(3.0) / 3.0


class DegenerationError(RuntimeError):
    """A standard-variant evaluation left the admissible region."""

    def __init__(self, face, time=None, s=None):
        self.face = int(face)
        self.time = time
        self.s = s
        where = f"face {self.face}"
        if time is not None:
            where += f" at t={time:.6g}"
        if s is not None:
            where += f" at quadrature point s={s:.6g}"
        super().__init__(f"triangle inequalities failed on {where}")


class DegenerationInfo(NamedTuple):
    time_lo: float
    time_hi: float
    face: int


@dataclass(frozen=True)
class Schedule:
    """Fixed-step integration plan.

    ``stride`` is the sampling interval in steps; ``stop_tol`` ends the run
    once the sup norm of the evolving vertices' curvature drops below it
    (0 disables early stopping).
    """

    h: float
    t_max: float
    stride: int = 1
    stop_tol: float = 1e-6

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("step size must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be nonnegative")
        if int(self.stride) < 1:
            raise ValueError("stride must be a positive integer")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")


class FlowProblem:
    """Mesh, fixed background metric, initial factor, variant, pinned set.

    ``pinned=None`` pins the mesh boundary (the truncation flows of the
    existence arguments); pass an explicit iterable of vertex ids, a boolean
    mask, or an empty collection to evolve everything.
    """

    def __init__(self, metric, initial_factor=None, variant="standard",
                 pinned=None):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        mesh = metric.mesh
        if initial_factor is None:
            initial_factor = np.zeros(mesh.num_vertices)
        initial_factor = np.ascontiguousarray(initial_factor, dtype=float)
        if initial_factor.shape != (mesh.num_vertices,):
            raise ValueError("initial factor must have one value per vertex")
        if initial_factor.size and not np.isfinite(initial_factor).all():
            raise ValueError("initial factor has non-finite entries")

        if pinned is None:
            pinned_mask = mesh.boundary_vertices.copy()
        else:
            pinned = np.asarray(pinned)
            if pinned.dtype == bool:
                if pinned.shape != (mesh.num_vertices,):
                    raise ValueError("pinned mask has wrong shape")
                pinned_mask = pinned.copy()
            else:
                pinned_mask = np.zeros(mesh.num_vertices, dtype=bool)
                if pinned.size:
                    pinned_mask[pinned.astype(np.int64)] = True

        if variant == "standard" and not metric.is_pl:
            raise DegenerateFaceError(
                f"face {metric.first_degenerate_face()} of the initial "
                "metric violates the triangle inequalities; the standard "
                "variant needs a PL metric (use the extended variant)",
                face=metric.first_degenerate_face())

        self.mesh = mesh
        self.initial_metric = metric
        self.initial_factor = initial_factor
        self.variant = variant
        self.pinned_mask = pinned_mask
        self.active_mask = ~pinned_mask
        self.initial_factor.setflags(write=False)
        self.pinned_mask.setflags(write=False)
        self.active_mask.setflags(write=False)

        if variant == "semilinear_hex":
            self._check_hexagonal()

    def _check_hexagonal(self):
        mesh = self.mesh
        active = np.flatnonzero(self.active_mask)
        if (mesh.degrees[active] != 6).any():
            raise ValueError(
                "semilinear_hex needs every evolving vertex to have degree 6")
        fan = np.diff(mesh.vertex_face_indptr)
        if (fan[active] != 6).any():
            raise ValueError(
                "semilinear_hex needs a full 6-face fan at every evolving "
                "vertex")
        lengths = self.initial_metric.lengths
        if lengths.size and (lengths.max() - lengths.min()
                             > 1e-12 * lengths.mean()):
            raise ValueError(
                "semilinear_hex needs a constant background metric")

    def is_hexagonal_regular(self):
        """True when the semilinear rewriting applies to this problem."""
        try:
            self._check_hexagonal()
        except ValueError:
            return False
        return True

    def __repr__(self):
        return (f"FlowProblem({self.variant}, V={self.mesh.num_vertices}, "
                f"pinned={int(self.pinned_mask.sum())})")


class FlowState:
    """Factor ``u`` at time ``t``; derived fields are computed on demand."""

    __slots__ = ("problem", "t", "u", "_metric", "_curvature", "_weights",
                 "_weights_set")

    def __init__(self, problem, t, u):
        u = np.ascontiguousarray(u, dtype=float)
        if u.shape != (problem.mesh.num_vertices,):
            raise ValueError("u must have one value per vertex")
        self.problem = problem
        self.t = float(t)
        self.u = u
        self.u.setflags(write=False)
        self._metric = None
        self._curvature = None
        self._weights = None
        self._weights_set = False

    @property
    def metric(self):
        if self._metric is None:
            self._metric = geometry.conformal_scale(
                self.problem.initial_metric, self.u)
        return self._metric

    @property
    def curvature(self):
        """Extended curvature of the current metric (total)."""
        if self._curvature is None:
            self._curvature = geometry.extended_curvature(self.metric)
        return self._curvature

    @property
    def weights(self):
        """Cotangent weights, or None while some face is degenerate."""
        if not self._weights_set:
            self._weights = (geometry.cot_weights(self.metric)
                             if self.metric.is_pl else None)
            self._weights_set = True
        return self._weights


def initial_state(problem):
    return FlowState(problem, 0.0, problem.initial_factor.copy())


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def _scaled_face_lengths(problem, u):
    mesh = problem.mesh
    lengths = kernels.scaled_lengths(mesh.edges[:, 0], mesh.edges[:, 1], u,
                                     problem.initial_metric.lengths)
    return kernels.face_lengths(mesh.face_edges, lengths)


def _rhs_standard_u(problem, u, t):
    mesh = problem.mesh
    fl = _scaled_face_lengths(problem, u)
    if mesh.num_faces:
        margins = kernels.omega_margins(fl)
        worst = int(np.argmin(margins))
        if margins[worst] <= FLOW_OMEGA_TOL:
            raise DegenerationError(worst, time=t)
        angles = kernels.face_angles(fl)
    else:
        angles = np.empty((0, 3))
    defect = kernels.angle_defects(mesh.faces, angles, mesh.num_vertices)
    out = -defect
    out[problem.pinned_mask] = 0.0
    return out


def _rhs_extended_u(problem, u, t):
    mesh = problem.mesh
    fl = _scaled_face_lengths(problem, u)
    angles = (kernels.face_angles_extended(fl) if mesh.num_faces
              else np.empty((0, 3)))
    defect = kernels.angle_defects(mesh.faces, angles, mesh.num_vertices)
    out = -defect
    out[problem.pinned_mask] = 0.0
    return out


def _rhs_semilinear_u(problem, u, t):
    mesh = problem.mesh
    lap = kernels.weighted_laplacian(
        mesh.adj_indptr, mesh.adj_vertices, mesh.adj_edges,
        np.broadcast_to(HEX_WEIGHT, (mesh.num_edges,)), u)
    out = lap + kernels.hex_remainders(mesh.faces, u, mesh.num_vertices)
    out[problem.pinned_mask] = 0.0
    return out


_RHS = {
    "standard": _rhs_standard_u,
    "extended": _rhs_extended_u,
    "semilinear_hex": _rhs_semilinear_u,
}


def rhs_standard(problem, state):
    """-K at evolving vertices, 0 at pinned ones; raises on degeneration."""
    return _rhs_standard_u(problem, state.u, state.t)


def rhs_extended(problem, state):
    """-K~ at evolving vertices, 0 at pinned ones; defined for any metric."""
    return _rhs_extended_u(problem, state.u, state.t)


def semilinear_rhs(problem, state):
    """Constant-weight Laplacian plus summed angle remainders.

    Equals :func:`rhs_standard` to round-off on regular hexagonal
    truncations; the two sides are exact rewritings of each other.
    """
    return _rhs_semilinear_u(problem, state.u, state.t)


def corner_angle(x, y):
    """Angle at a corner of a conformally scaled unit triangle.

    ``x`` and ``y`` are the differences of the log factors along the two
    incident edges.  At (0, 0) this is pi/3 with gradient (sqrt3/6, sqrt3/6).
    """
    z = (math.exp(x) + math.exp(y) - math.exp(x + y)) / (
        2.0 * math.exp(0.5 * (x + y)))
    if abs(z) > 1.0 + geometry.COSINE_SLACK:
        raise ValueError(f"corner_angle argument out of range: cos={z!r}")
    return math.acos(min(1.0, max(-1.0, z)))


def corner_angle_remainder(x, y):
    """:func:`corner_angle` minus its constant and linear parts at 0."""
    return (corner_angle(x, y) - math.pi / 3.0
            - kernels.HEX_LINEAR_COEFF * (x + y))


# ---------------------------------------------------------------------------
# Stepping and integration
# ---------------------------------------------------------------------------

def _rk4_step(rhs, problem, u, t, h):
    k1 = rhs(problem, u, t)
    k2 = rhs(problem, u + (0.5 * h) * k1, t + 0.5 * h)
    k3 = rhs(problem, u + (0.5 * h) * k2, t + 0.5 * h)
    k4 = rhs(problem, u + h * k3, t + h)
    out = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[problem.pinned_mask] = u[problem.pinned_mask]
    return out


def step(problem, state, h):
    """One classical Runge-Kutta step of size ``h``."""
    if h <= 0:
        raise ValueError("step size must be positive")
    if state.t + h == state.t:
        raise ValueError(f"step size underflow at t={state.t!r}")
    rhs = _RHS[problem.variant]
    return FlowState(problem, state.t + h,
                     _rk4_step(rhs, problem, state.u, state.t, h))


@dataclass
class TimeSeries:
    """Sampled run diagnostics; times are strictly increasing.

    Margins come from the extended angle map, so extended-variant runs
    record nonpositive values while faces are degenerate.  ``weight_samples``
    rows are NaN at samples where the metric is not PL.
    """

    times: np.ndarray
    sup_curvature: np.ndarray
    l2_norm: np.ndarray
    dirichlet: np.ndarray
    nondegeneracy_margin: np.ndarray
    delaunay_margin: np.ndarray
    stopped: str
    degeneration: Optional[DegenerationInfo]
    problem: FlowProblem
    final_factor: np.ndarray
    u_samples: Optional[np.ndarray] = None
    curvature_samples: Optional[np.ndarray] = None
    weight_samples: Optional[np.ndarray] = None
    tracked: tuple = ()
    tracked_u: Optional[np.ndarray] = None
    tracked_curvature: Optional[np.ndarray] = None

    def __len__(self):
        return self.times.size

    def to_csv(self, path):
        """Write the scalar series; identical inputs give identical bytes."""
        with open(path, "w") as fh:
            fh.write("t,sup_K,l2_u,dirichlet,ndg_margin,del_margin\n")
            for row in zip(self.times, self.sup_curvature, self.l2_norm,
                           self.dirichlet, self.nondegeneracy_margin,
                           self.delaunay_margin):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    def trace_csv(self, path):
        """Write per-vertex traces of the tracked vertices (long format)."""
        if not self.tracked:
            raise ValueError("run was not asked to track any vertices")
        with open(path, "w") as fh:
            fh.write("t,vid,u,K\n")
            for s, t in enumerate(self.times):
                for k, vid in enumerate(self.tracked):
                    fh.write(f"{t:.17g},{vid},"
                             f"{self.tracked_u[s, k]:.17g},"
                             f"{self.tracked_curvature[s, k]:.17g}\n")


def integrate(problem, schedule, *, store_fields=False, tracked=()):
    """Run the flow under ``schedule`` and sample diagnostics.

    Samples are taken at step 0, every ``schedule.stride`` steps, at the
    final step, and (for standard-variant degenerations) at the last state
    before the failed step.  ``store_fields=True`` keeps per-sample factor,
    curvature, and cotangent-weight arrays; ``tracked`` keeps per-vertex
    traces of the given vertex ids.
    """
    mesh = problem.mesh
    rhs = _RHS[problem.variant]
    h = schedule.h
    stride = int(schedule.stride)
    n_steps = (int(math.ceil(schedule.t_max / h - 1e-9))
               if schedule.t_max > 0 else 0)
    tracked = tuple(int(v) for v in tracked)

    active = problem.active_mask
    rows = []
    u_rows, k_rows, w_rows = [], [], []
    tr_u, tr_k = [], []

    def take_sample(t, u):
        fl = _scaled_face_lengths(problem, u)
        if mesh.num_faces:
            angles = kernels.face_angles_extended(fl)
            ndg = float(angles.min())
            interior = ~mesh.boundary_edges
            if interior.any():
                sums = kernels.opposite_angle_sums(
                    mesh.edge_opposite_corners[:, 0],
                    mesh.edge_opposite_corners[:, 1], angles.ravel())
                dly = float(math.pi - sums[interior].max())
            else:
                dly = math.inf
        else:
            angles = np.empty((0, 3))
            ndg = math.inf
            dly = math.inf
        curv = kernels.angle_defects(mesh.faces, angles, mesh.num_vertices)
        sup = float(np.abs(curv[active]).max()) if active.any() else 0.0
        rows.append((t, sup, float(np.linalg.norm(u)),
                     geometry.dirichlet_energy(mesh, u), ndg, dly))
        if store_fields:
            u_rows.append(u.copy())
            k_rows.append(curv)
            if mesh.num_faces and kernels.omega_margins(fl).min() > 0.0:
                w_rows.append(kernels.cot_weights(
                    mesh.edge_opposite_corners[:, 0],
                    mesh.edge_opposite_corners[:, 1], angles.ravel()))
            else:
                w_rows.append(np.full(mesh.num_edges, np.nan))
        if tracked:
            tr_u.append([u[v] for v in tracked])
            tr_k.append([curv[v] for v in tracked])
        return sup

    u = problem.initial_factor.copy()
    stopped = None
    degeneration = None
    i = 0
    while True:
        sampled = (i % stride == 0) or (i == n_steps)
        if sampled:
            sup = take_sample(i * h, u)
            if schedule.stop_tol > 0 and sup < schedule.stop_tol:
                stopped = "converged"
                break
        if i == n_steps:
            stopped = "t_max"
            break
        try:
            u = _rk4_step(rhs, problem, u, i * h, h)
        except DegenerationError as exc:
            if not sampled:
                take_sample(i * h, u)
            degeneration = DegenerationInfo(i * h, (i + 1) * h, exc.face)
            stopped = "degenerated"
            logger.info("flow degenerated on face %d in t-bracket "
                        "(%.6g, %.6g)", exc.face, i * h, (i + 1) * h)
            break
        i += 1

    data = np.asarray(rows)
    return TimeSeries(
        times=data[:, 0],
        sup_curvature=data[:, 1],
        l2_norm=data[:, 2],
        dirichlet=data[:, 3],
        nondegeneracy_margin=data[:, 4],
        delaunay_margin=data[:, 5],
        stopped=stopped,
        degeneration=degeneration,
        problem=problem,
        final_factor=u,
        u_samples=np.asarray(u_rows) if store_fields else None,
        curvature_samples=np.asarray(k_rows) if store_fields else None,
        weight_samples=np.asarray(w_rows) if store_fields else None,
        tracked=tracked,
        tracked_u=np.asarray(tr_u) if tracked else None,
        tracked_curvature=np.asarray(tr_k) if tracked else None,
    )


# ---------------------------------------------------------------------------
# Estimates and interpolation weights
# ---------------------------------------------------------------------------

def existence_time_estimate(eps, max_degree):
    """Guaranteed admissibility horizon for the standard flow.

    For an initial metric whose angles are all at least ``eps`` on a mesh
    with vertex degrees at most ``max_degree``, the flow started from a zero
    factor keeps every face nondegenerate for all t below the returned
    value: the factor budget of :func:`geometry.delta_of_epsilon` divided by
    the curvature bound (2 + max_degree) * pi.
    """
    max_degree = int(max_degree)
    if max_degree < 3:
        raise ValueError("max_degree must be at least 3")
    return geometry.delta_of_epsilon(eps) / ((2 + max_degree) * math.pi)


def interpolation_weights(problem, u, u_hat, points=16):
    """Cotangent weights averaged along the segment between two factors.

    Composite-midpoint quadrature with ``points`` nodes of the weights of
    ``(s*u + (1-s)*u_hat) * d``.  Every node must yield a nondegenerate
    metric, else :class:`DegenerationError` reports the node and face.  With
    a power-of-two node count a constant integrand is reproduced exactly.
    """
    mesh = problem.mesh
    u = np.ascontiguousarray(u, dtype=float)
    u_hat = np.ascontiguousarray(u_hat, dtype=float)
    points = int(points)
    if points < 1:
        raise ValueError("points must be positive")
    values = []
    for k in range(points):
        s = (k + 0.5) / points
        v = s * u + (1.0 - s) * u_hat
        fl = _scaled_face_lengths(problem, v)
        if mesh.num_faces:
            margins = kernels.omega_margins(fl)
            worst = int(np.argmin(margins))
            if margins[worst] <= 0.0:
                raise DegenerationError(worst, s=s)
            angles = kernels.face_angles(fl)
        else:
            angles = np.empty((0, 3))
        values.append(kernels.cot_weights(
            mesh.edge_opposite_corners[:, 0],
            mesh.edge_opposite_corners[:, 1], angles.ravel()))
    # pairwise tree so that a constant integrand averages exactly
    while len(values) > 1:
        merged = [values[k] + values[k + 1]
                  for k in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            merged.append(values[-1])
        values = merged
    weights = values[0] / points
    if weights.size:
        logger.debug("interpolation weights: min=%.6g max=%.6g",
                     weights.min(), weights.max())
    return weights


# ---------------------------------------------------------------------------
# Helpers shared by experiments and the CLI
# ---------------------------------------------------------------------------

def random_conformal_factor(mesh, seed, *, l2_norm=None, linf_norm=None,
                            support_radius=None, center=0):
    """Seeded uniform factor, optionally supported near ``center``.

    Values are uniform on [-1, 1], zeroed outside the support ball, then
    scaled to the requested l2 or sup norm (pass exactly one, or neither to
    keep the raw draw).
    """
    if l2_norm is not None and linf_norm is not None:
        raise ValueError("pass at most one of l2_norm and linf_norm")
    rng = np.random.default_rng(seed)
    values = rng.uniform(-1.0, 1.0, mesh.num_vertices)
    if support_radius is not None:
        from .mesh import graph_distances

        dist = graph_distances(mesh, center)
        values[(dist < 0) | (dist > int(support_radius))] = 0.0
    if l2_norm is not None:
        norm = np.linalg.norm(values)
        if norm == 0:
            raise ValueError("support region is empty")
        values *= l2_norm / norm
    elif linf_norm is not None:
        norm = np.abs(values).max()
        if norm == 0:
            raise ValueError("support region is empty")
        values *= linf_norm / norm
    return values


def integrate_heat(mesh, weight_schedule, f0, h, t_max, stride=1,
                   row_cap=None):
    """Fixed-step RK4 for the linear equation df/dt = L_w(t) f.

    ``weight_schedule`` maps a time to per-edge weights.  Weights must be
    nonnegative; when ``row_cap`` is given, per-vertex weight sums must stay
    at or below it.  Returns (times, samples) with one row per sample.
    """
    f = np.ascontiguousarray(f0, dtype=float).copy()
    if f.shape != (mesh.num_vertices,):
        raise ValueError("f0 must have one value per vertex")
    if h <= 0:
        raise ValueError("step size must be positive")
    stride = int(stride)

    def weights_at(t):
        w = np.ascontiguousarray(weight_schedule(t), dtype=float)
        if w.shape != (mesh.num_edges,):
            raise ValueError("weight schedule returned a wrong-shaped array")
        if w.size and w.min() < 0:
            raise ValueError(f"weight schedule is negative at t={t:.6g}")
        if row_cap is not None and w.size:
            sums = np.zeros(mesh.num_vertices)
            np.add.at(sums, mesh.edges[:, 0], w)
            np.add.at(sums, mesh.edges[:, 1], w)
            if sums.max() > row_cap:
                raise ValueError(
                    f"weight row sums exceed the cap {row_cap} at t={t:.6g}")
        return w

    def deriv(t, f):
        return kernels.weighted_laplacian(mesh.adj_indptr, mesh.adj_vertices,
                                          mesh.adj_edges, weights_at(t), f)

    n_steps = int(math.ceil(t_max / h - 1e-9)) if t_max > 0 else 0
    times = [0.0]
    samples = [f.copy()]
    for i in range(n_steps):
        t = i * h
        k1 = deriv(t, f)
        k2 = deriv(t + 0.5 * h, f + (0.5 * h) * k1)
        k3 = deriv(t + 0.5 * h, f + (0.5 * h) * k2)
        k4 = deriv(t + h, f + h * k3)
        f = f + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % stride == 0 or i + 1 == n_steps:
            times.append((i + 1) * h)
            samples.append(f.copy())
    return np.asarray(times), np.asarray(samples)
