"""Conformal scaling, angles, curvature, cotangent weights, margins, energy.

The metric kernel of the package.  A :class:`PLMetric` assigns a positive
length to every edge of a triangulation and records, per face, whether the
strict triangle inequalities hold (membership in the admissible region).
Metrics with violating faces are *pseudo* metrics; they are handled by the
extended angle map, which assigns (pi, 0, 0) to a degenerate face and is
continuous across the boundary of the admissible region.

All operations are pure functions of immutable inputs.  Sums over neighbors
run in ascending-id order (fixed by the mesh CSR layout), so repeated runs
are bit-reproducible.
"""

import math

import numpy as np

from . import kernels

TWO_PI = 2.0 * math.pi

# arccos arguments are clamped to [-1, 1]; an excursion beyond this slack is
# a logic error upstream, not round-off
COSINE_SLACK = 1e-9


def _edge_str(edge):
    return f"({int(edge[0])}, {int(edge[1])})"


class DegenerateFaceError(ValueError):
    """An operation that needs strict triangle inequalities met a face
    violating them."""

    def __init__(self, message, face=None):
        super().__init__(message)
        self.face = face


class PLMetric:
    """Positive edge lengths on a triangulation.

    Parameters
    ----------
    mesh : Triangulation
    lengths : array_like, shape (E,)
        Strictly positive edge lengths, aligned with ``mesh.edges``.

    Attributes
    ----------
    face_in_omega : bool array, shape (F,)
        Per-face strict triangle-inequality flag.
    is_pl : bool
        True when every face satisfies the inequalities; otherwise the
        instance represents a pseudo PL metric.
    """

    __slots__ = ("mesh", "lengths", "_face_lengths", "_omega_margins")

    def __init__(self, mesh, lengths):
        lengths = np.ascontiguousarray(lengths, dtype=float)
        if lengths.shape != (mesh.num_edges,):
            raise ValueError("lengths must have one value per edge")
        if lengths.size and (not np.isfinite(lengths).all()
                             or (lengths <= 0).any()):
            bad = int(np.flatnonzero(~(np.isfinite(lengths)
                                       & (lengths > 0)))[0])
            raise ValueError(
                f"edge {_edge_str(mesh.edges[bad])} has nonpositive or "
                "non-finite length")
        self.mesh = mesh
        self.lengths = lengths
        self.lengths.setflags(write=False)
        self._face_lengths = None
        self._omega_margins = None

    @property
    def face_lengths(self):
        """(F, 3) lengths; column c holds the edge opposite corner c."""
        if self._face_lengths is None:
            self._face_lengths = kernels.face_lengths(self.mesh.face_edges,
                                                      self.lengths)
            self._face_lengths.setflags(write=False)
        return self._face_lengths

    @property
    def omega_margins(self):
        """(F,) worst triangle-inequality defect relative to the perimeter."""
        if self._omega_margins is None:
            if self.mesh.num_faces:
                self._omega_margins = kernels.omega_margins(self.face_lengths)
            else:
                self._omega_margins = np.empty(0)
            self._omega_margins.setflags(write=False)
        return self._omega_margins

    @property
    def face_in_omega(self):
        return self.omega_margins > 0.0

    @property
    def is_pl(self):
        return bool(self.face_in_omega.all())

    def first_degenerate_face(self):
        """Id of some face violating the triangle inequalities, or None."""
        bad = np.flatnonzero(~self.face_in_omega)
        return int(bad[0]) if bad.size else None

    def __repr__(self):
        kind = "PL" if self.is_pl else "pseudo-PL"
        return f"PLMetric({kind}, E={self.lengths.size})"


def regular_metric(mesh, length=1.0):
    """Constant metric; on the hexagonal lattice this is the flat one."""
    if length <= 0:
        raise ValueError("length must be positive")
    return PLMetric(mesh, np.full(mesh.num_edges, float(length)))


def conformal_scale(metric, u):
    """Scale ``metric`` by the conformal factor ``u``.

    Every edge (i, j) is rescaled to ``exp((u_i + u_j)/2)`` times its
    length; triangle-inequality flags are recomputed per face.
    """
    u = np.ascontiguousarray(u, dtype=float)
    if u.shape != (metric.mesh.num_vertices,):
        raise ValueError("u must have one value per vertex")
    if u.size and not np.isfinite(u).all():
        raise ValueError("conformal factor has non-finite entries")
    scaled = kernels.scaled_lengths(metric.mesh.edges[:, 0],
                                    metric.mesh.edges[:, 1], u,
                                    metric.lengths)
    if scaled.size and not np.isfinite(scaled).all():
        bad = int(np.flatnonzero(~np.isfinite(scaled))[0])
        raise OverflowError(
            f"conformal scaling overflows on edge "
            f"{_edge_str(metric.mesh.edges[bad])}")
    return PLMetric(metric.mesh, scaled)


# ---------------------------------------------------------------------------
# Angles
# ---------------------------------------------------------------------------

def _check_positive_triple(l1, l2, l3):
    arr = np.asarray([l1, l2, l3], dtype=float)
    if not np.isfinite(arr).all() or (arr <= 0).any():
        raise ValueError("edge lengths must be positive and finite")
    return arr


def inner_angles(l1, l2, l3):
    """Law-of-cosines angles of a nondegenerate triangle.

    The angle at position a is opposite ``l_a``.  Raises
    :class:`DegenerateFaceError` when the strict triangle inequalities fail;
    use :func:`extended_angles` for a total map.
    """
    arr = _check_positive_triple(l1, l2, l3)
    if arr.sum() - 2.0 * arr.max() <= 0.0:
        raise DegenerateFaceError(
            f"lengths {arr.tolist()} violate the strict triangle inequalities; "
            "use extended_angles for generalized triangles")
    z = np.empty(3)
    a, b, c = arr
    z[0] = (b * b + c * c - a * a) / (2.0 * b * c)
    z[1] = (a * a + c * c - b * b) / (2.0 * a * c)
    z[2] = (a * a + b * b - c * c) / (2.0 * a * b)
    if (np.abs(z) > 1.0 + COSINE_SLACK).any():
        raise AssertionError(
            f"cosine argument {z} out of range for lengths {arr.tolist()}")
    return np.arccos(np.clip(z, -1.0, 1.0))


def extended_angles(l1, l2, l3):
    """Continuous extension of :func:`inner_angles` to all positive triples.

    Agrees with :func:`inner_angles` on nondegenerate triangles; when some
    ``l_a >= l_b + l_c`` the triple degenerates and the angles are pi at the
    corner opposite the long edge and 0 elsewhere.
    """
    arr = _check_positive_triple(l1, l2, l3)
    if arr.sum() - 2.0 * arr.max() <= 0.0:
        out = np.zeros(3)
        out[int(np.argmax(arr))] = math.pi
        return out
    return inner_angles(*arr)


def face_angles(metric, extended=False):
    """(F, 3) inner angles for every face; column c is the angle at corner c.

    With ``extended=False`` all faces must be nondegenerate.
    """
    if metric.mesh.num_faces == 0:
        return np.empty((0, 3))
    if extended:
        return kernels.face_angles_extended(metric.face_lengths)
    if not metric.is_pl:
        raise DegenerateFaceError(
            f"face {metric.first_degenerate_face()} violates the triangle "
            "inequalities; pass extended=True or use extended curvature",
            face=metric.first_degenerate_face())
    return kernels.face_angles(metric.face_lengths)


# ---------------------------------------------------------------------------
# Curvature and weights
# ---------------------------------------------------------------------------

def curvature(metric):
    """Angle defect 2*pi - sum of incident angles, per vertex.

    Requires a genuine PL metric; pseudo metrics raise and should go through
    :func:`extended_curvature`.  Boundary vertices get the same defect
    formula; flows never evolve them, so treat their values as reporting
    only (``mesh.boundary_vertices`` carries the flag).
    """
    if not metric.is_pl:
        raise DegenerateFaceError(
            f"face {metric.first_degenerate_face()} violates the triangle "
            "inequalities; use extended_curvature for pseudo metrics",
            face=metric.first_degenerate_face())
    angles = face_angles(metric)
    return kernels.angle_defects(metric.mesh.faces, angles,
                                 metric.mesh.num_vertices)


def extended_curvature(metric):
    """Angle defect computed from the extended angle map; total."""
    angles = face_angles(metric, extended=True)
    return kernels.angle_defects(metric.mesh.faces, angles,
                                 metric.mesh.num_vertices)


def cot_weights(metric):
    """Half-sum of cotangents of the angles opposite each edge.

    Interior edges average the two adjacent triangles; boundary edges keep
    the single-triangle term.  A weight is nonnegative exactly when the two
    opposite angles sum to at most pi, so the field is nonnegative iff the
    metric is Delaunay.
    """
    if not metric.is_pl:
        raise DegenerateFaceError(
            f"face {metric.first_degenerate_face()} is degenerate; cotangent "
            "weights are undefined on generalized triangles",
            face=metric.first_degenerate_face())
    angles = face_angles(metric)
    return kernels.cot_weights(metric.mesh.edge_opposite_corners[:, 0],
                               metric.mesh.edge_opposite_corners[:, 1],
                               angles.ravel())


def laplacian(mesh, weights, values):
    """Weighted graph Laplacian: sum_j w_ij (f_j - f_i) per vertex.

    Neighbor terms accumulate in ascending-id order.
    """
    weights = np.ascontiguousarray(weights, dtype=float)
    values = np.ascontiguousarray(values, dtype=float)
    if weights.shape != (mesh.num_edges,):
        raise ValueError("weights must have one value per edge")
    if values.shape != (mesh.num_vertices,):
        raise ValueError("values must have one value per vertex")
    return kernels.weighted_laplacian(mesh.adj_indptr, mesh.adj_vertices,
                                      mesh.adj_edges, weights, values)


def angle_jacobian(l1, l2, l3):
    """Derivatives of the three angles in the conformal factors.

    Entry (a, b) is the derivative of the angle at corner a with respect to
    the factor at corner b: half the cotangent of the third angle off the
    diagonal, minus the row sum on it.  The matrix is symmetric and
    annihilates (1, 1, 1).
    """
    cot = 1.0 / np.tan(inner_angles(l1, l2, l3))
    jac = np.empty((3, 3))
    jac[0, 1] = jac[1, 0] = 0.5 * cot[2]
    jac[0, 2] = jac[2, 0] = 0.5 * cot[1]
    jac[1, 2] = jac[2, 1] = 0.5 * cot[0]
    for a in range(3):
        jac[a, a] = 0.0
        jac[a, a] = -jac[a].sum()
    return jac


# ---------------------------------------------------------------------------
# Margins and bounds
# ---------------------------------------------------------------------------

def nondegeneracy_margin(metric):
    """Smallest inner angle over all face corners.

    The metric is uniformly nondegenerate with constant eps iff this margin
    is at least eps.
    """
    angles = face_angles(metric)
    if angles.size == 0:
        return math.inf
    return float(angles.min())


def delaunay_margin(metric):
    """Min over interior edges of pi minus the two opposite angles.

    The metric is uniformly Delaunay with constant eps iff this margin is at
    least eps; it is nonnegative exactly when all cotangent weights are.
    """
    angles = face_angles(metric)
    interior = ~metric.mesh.boundary_edges
    if not interior.any():
        return math.inf
    sums = kernels.opposite_angle_sums(
        metric.mesh.edge_opposite_corners[:, 0],
        metric.mesh.edge_opposite_corners[:, 1], angles.ravel())
    return float(math.pi - sums[interior].max())


def extended_margins(metric):
    """(nondegeneracy, Delaunay) margins from the extended angle map.

    Total: degenerate faces simply drive the margins to zero or below.
    Used for run diagnostics where strictness must not raise.
    """
    angles = face_angles(metric, extended=True)
    ndg = float(angles.min()) if angles.size else math.inf
    interior = ~metric.mesh.boundary_edges
    if interior.any():
        sums = kernels.opposite_angle_sums(
            metric.mesh.edge_opposite_corners[:, 0],
            metric.mesh.edge_opposite_corners[:, 1], angles.ravel())
        dly = float(math.pi - sums[interior].max())
    else:
        dly = math.inf
    return ndg, dly


def delta_of_epsilon(eps):
    """Sup-norm budget for conformal factors that keeps angle moves <= eps/2.

    For a triangle whose angles are all at least ``eps``, any factor with
    sup norm at most the returned value perturbs each angle by at most
    eps/2.  Closed form: log1p((2 sin^2(eps)/3) * 2 sin^2(eps/8)) / 4,
    which behaves like eps^4/192 for small eps.
    """
    if not 0.0 < eps <= math.pi / 3.0 + 1e-15:
        raise ValueError("eps must lie in (0, pi/3]")
    s = math.sin(eps)
    half = math.sin(eps / 8.0)
    return 0.25 * math.log1p((2.0 * s * s / 3.0) * (2.0 * half * half))


def dirichlet_energy(mesh, u):
    """Sum of squared differences of ``u`` across all edges."""
    u = np.ascontiguousarray(u, dtype=float)
    if u.shape != (mesh.num_vertices,):
        raise ValueError("u must have one value per vertex")
    if mesh.num_edges == 0:
        return 0.0
    return float(kernels.dirichlet_energy(mesh.edges[:, 0], mesh.edges[:, 1],
                                          u))


# ---------------------------------------------------------------------------
# Vertex-field I/O (two-column text)
# ---------------------------------------------------------------------------

def save_vertex_field(path, values):
    """Write a per-vertex field as ``<vertex-id> <value>`` lines."""
    values = np.asarray(values, dtype=float)
    with open(path, "w") as fh:
        for i, x in enumerate(values):
            fh.write(f"{i} {x:.17g}\n")


def load_vertex_field(path, num_vertices):
    """Read a two-column vertex field; ids absent from the file get 0."""
    out = np.zeros(num_vertices)
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise ValueError(f"line {lineno}: expected '<id> <value>'")
            vid = int(tokens[0])
            if vid < 0 or vid >= num_vertices:
                raise ValueError(f"line {lineno}: vertex id {vid} out of "
                                 "range")
            if vid in seen:
                raise ValueError(f"line {lineno}: duplicate vertex id {vid}")
            seen.add(vid)
            out[vid] = float(tokens[1])
    return out
