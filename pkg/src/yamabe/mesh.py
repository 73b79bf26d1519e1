"""Locally finite triangulations, hexagonal-lattice disks, exhaustions, I/O.

A :class:`Triangulation` is a pure incidence structure: dense vertex ids,
unordered edges and faces, and precomputed adjacency in CSR form (neighbor
lists are sorted ascending, which fixes the accumulation order of every
downstream sum).  Instances are immutable after construction and safe to
share across workers.

Infinite triangulations are handled as generators plus finite truncations:
:func:`build_hexagonal_disk` produces the combinatorial ball of the
triangular lattice, and :func:`exhaustion` builds the nested sequence of
sub-triangulations a boundary-pinned flow runs on.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np


class MeshError(Exception):
    """Invalid mesh topology or mesh file."""


class MeshFormatError(MeshError):
    """Mesh file does not follow the plmesh text format."""


class EmptyMeshError(MeshFormatError):
    """Mesh file declares no vertices."""


class DanglingVertexError(MeshFormatError):
    """A face references a vertex id that was never declared."""


class NonManifoldEdgeError(MeshError):
    """An edge is shared by more than two faces."""


class Triangulation:
    """Immutable triangulated surface given by faces over dense vertex ids.

    Parameters
    ----------
    num_vertices : int
        Number of vertices; ids are 0..num_vertices-1.
    faces : array_like of shape (F, 3)
        Vertex triples.  Faces are unordered; rows are canonicalized
        (sorted within rows, rows sorted lexicographically).

    Raises
    ------
    ValueError
        On out-of-range ids, repeated vertices within a face, or duplicate
        faces.
    NonManifoldEdgeError
        If some edge would belong to more than two faces.
    """

    def __init__(self, num_vertices, faces):
        n = int(num_vertices)
        if n < 0:
            raise ValueError("num_vertices must be nonnegative")
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if faces.size:
            if faces.min() < 0 or faces.max() >= n:
                raise ValueError("face references a vertex id out of range")
        faces = np.sort(faces, axis=1)
        if faces.size and (np.diff(faces, axis=1) == 0).any():
            raise ValueError("face repeats a vertex")
        order = np.lexsort((faces[:, 2], faces[:, 1], faces[:, 0]))
        faces = faces[order]
        if faces.shape[0] > 1 and (np.diff(faces, axis=0) == 0).all(
                axis=1).any():
            raise ValueError("duplicate face")

        self.num_vertices = n
        self.faces = faces

        # edges inferred from faces; face_edges[f, c] = id of the edge
        # opposite corner c (rows are sorted, so the pairs are ascending)
        nf = faces.shape[0]
        pairs = np.empty((nf, 3, 2), dtype=np.int64)
        pairs[:, 0, 0] = faces[:, 1]
        pairs[:, 0, 1] = faces[:, 2]
        pairs[:, 1, 0] = faces[:, 0]
        pairs[:, 1, 1] = faces[:, 2]
        pairs[:, 2, 0] = faces[:, 0]
        pairs[:, 2, 1] = faces[:, 1]
        edges, inverse = np.unique(pairs.reshape(-1, 2), axis=0,
                                   return_inverse=True)
        inverse = inverse.reshape(-1)
        self.edges = edges
        self.face_edges = inverse.reshape(nf, 3)
        ne = edges.shape[0]

        counts = np.bincount(inverse, minlength=ne)
        if (counts > 2).any():
            bad = int(np.argmax(counts > 2))
            raise NonManifoldEdgeError(
                f"edge ({int(edges[bad, 0])}, {int(edges[bad, 1])}) belongs to {int(counts[bad])} "
                "faces")

        # per-edge adjacent faces and the flat (face*3 + corner) index of the
        # corner opposite the edge; -1 where absent, face-id order
        flat_sorted = np.argsort(inverse, kind="stable")
        eids_sorted = inverse[flat_sorted]
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        slot = np.arange(eids_sorted.size) - starts[eids_sorted]
        self.edge_faces = np.full((ne, 2), -1, dtype=np.int64)
        self.edge_opposite_corners = np.full((ne, 2), -1, dtype=np.int64)
        self.edge_faces[eids_sorted, slot] = flat_sorted // 3
        self.edge_opposite_corners[eids_sorted, slot] = flat_sorted

        self.boundary_edges = counts == 1
        self.boundary_vertices = np.zeros(n, dtype=bool)
        if ne:
            self.boundary_vertices[edges[self.boundary_edges].ravel()] = True
        self.degrees = np.bincount(edges.ravel(), minlength=n)

        # CSR adjacency, neighbors ascending per vertex
        both = np.concatenate([edges, edges[:, ::-1]], axis=0)
        eids2 = np.concatenate([np.arange(ne), np.arange(ne)])
        order2 = np.lexsort((both[:, 1], both[:, 0]))
        self.adj_vertices = both[order2, 1]
        self.adj_edges = eids2[order2]
        self.adj_indptr = np.concatenate(
            ([0], np.cumsum(np.bincount(both[:, 0], minlength=n))))

        # CSR vertex -> incident faces, face ids ascending per vertex
        v_ids = faces.ravel()
        f_ids = np.repeat(np.arange(nf), 3)
        order3 = np.lexsort((f_ids, v_ids))
        self.vertex_face_ids = f_ids[order3]
        self.vertex_face_indptr = np.concatenate(
            ([0], np.cumsum(np.bincount(v_ids, minlength=n))))

        self._edge_id = {(int(i), int(j)): e
                         for e, (i, j) in enumerate(edges)}

        for arr in (self.faces, self.edges, self.face_edges, self.edge_faces,
                    self.edge_opposite_corners, self.boundary_edges,
                    self.boundary_vertices, self.degrees, self.adj_vertices,
                    self.adj_edges, self.adj_indptr, self.vertex_face_ids,
                    self.vertex_face_indptr):
            arr.setflags(write=False)

    @property
    def num_edges(self):
        return self.edges.shape[0]

    @property
    def num_faces(self):
        return self.faces.shape[0]

    @property
    def interior_vertices(self):
        return ~self.boundary_vertices

    def edge_id(self, i, j):
        """Edge id of the unordered pair (i, j); KeyError if absent."""
        if i > j:
            i, j = j, i
        return self._edge_id[(int(i), int(j))]

    def neighbors(self, i):
        """Neighbor ids of vertex i, ascending."""
        return self.adj_vertices[self.adj_indptr[i]:self.adj_indptr[i + 1]]

    def incident_edges(self, i):
        """Edge ids incident to vertex i, in neighbor order."""
        return self.adj_edges[self.adj_indptr[i]:self.adj_indptr[i + 1]]

    def incident_faces(self, i):
        """Face ids incident to vertex i, ascending."""
        lo = self.vertex_face_indptr[i]
        hi = self.vertex_face_indptr[i + 1]
        return self.vertex_face_ids[lo:hi]

    def __eq__(self, other):
        if not isinstance(other, Triangulation):
            return NotImplemented
        return (self.num_vertices == other.num_vertices
                and self.faces.shape == other.faces.shape
                and bool((self.faces == other.faces).all()))

    __hash__ = None

    def __repr__(self):
        return (f"Triangulation(V={self.num_vertices}, E={self.num_edges}, "
                f"F={self.num_faces})")


def euler_characteristic(t):
    """|V| - |E| + |F|."""
    return t.num_vertices - t.num_edges + t.num_faces


def graph_distances(t, sources):
    """BFS combinatorial distances from ``sources`` (-1 if unreachable)."""
    if np.isscalar(sources):
        sources = [sources]
    dist = np.full(t.num_vertices, -1, dtype=np.int64)
    queue = deque()
    for s in sources:
        s = int(s)
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        v = queue.popleft()
        d = dist[v] + 1
        for w in t.neighbors(v):
            if dist[w] < 0:
                dist[w] = d
                queue.append(int(w))
    return dist


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

_AXIAL_DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def _axial_distance(q, r):
    return (abs(q) + abs(r) + abs(q + r)) // 2


def build_hexagonal_disk(radius):
    """Combinatorial ball of radius ``radius`` in the triangular lattice.

    Vertex 0 is the center; ids are contiguous ring by ring.  Every vertex
    at lattice distance < radius has degree 6.  Counts follow the closed
    forms |V| = 1 + 3R(R+1), |E| = 3R(3R+1), |F| = 6R^2.
    """
    radius = int(radius)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    points = [(q, r)
              for q in range(-radius, radius + 1)
              for r in range(-radius, radius + 1)
              if _axial_distance(q, r) <= radius]
    points.sort(key=lambda p: (_axial_distance(*p), p))
    ids = {p: i for i, p in enumerate(points)}

    faces = []
    for (q, r) in points:
        up = ((q, r), (q + 1, r), (q, r + 1))
        if all(p in ids for p in up):
            faces.append([ids[p] for p in up])
        down = ((q, r), (q + 1, r), (q + 1, r - 1))
        if all(p in ids for p in down):
            faces.append([ids[p] for p in down])
    return Triangulation(len(points), np.asarray(faces,
                                                 dtype=np.int64).reshape(-1, 3))


def tetrahedron():
    """Closed 4-vertex surface; the standard Gauss-Bonnet fixture."""
    return Triangulation(4, [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])


# ---------------------------------------------------------------------------
# Exhaustions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExhaustionLevel:
    """One finite truncation level.

    ``base_vertices[k]`` is the base id of local vertex ``k``;
    ``interior_mask`` marks local vertices all of whose incident base faces
    lie inside the level (these are the vertices a pinned flow evolves).
    """

    triangulation: Triangulation
    base_vertices: np.ndarray
    base_edges: np.ndarray
    base_faces: np.ndarray
    interior_mask: np.ndarray

    def vertex_set(self):
        return set(int(v) for v in self.base_vertices)


@dataclass(frozen=True)
class ExhaustionSequence:
    """Nested truncations around a center vertex, innermost first."""

    base: Triangulation
    center: int
    levels: tuple
    requested: int

    @property
    def count(self):
        return len(self.levels)


def exhaustion(t, center, count):
    """Nested combinatorial-ball truncations of ``t`` around ``center``.

    Level k consists of all faces whose vertices lie within graph distance k
    of the center.  Levels saturate once every face is included; a ``count``
    beyond that range is truncated (the returned sequence reports the actual
    number of levels).
    """
    center = int(center)
    if not (0 <= center < t.num_vertices):
        raise ValueError("center is not a vertex of the triangulation")
    count = int(count)
    if count < 1:
        raise ValueError("count must be positive")
    dist = graph_distances(t, center)
    if (dist < 0).any():
        raise ValueError("triangulation is not connected")

    if t.num_faces:
        face_reach = dist[t.faces].max(axis=1)
        max_level = int(face_reach.max())
    else:
        face_reach = np.empty(0, dtype=np.int64)
        max_level = 0
    n_levels = min(count, max(max_level, 1))

    levels = []
    for k in range(1, n_levels + 1):
        face_sel = face_reach <= k
        base_faces = np.flatnonzero(face_sel)
        if base_faces.size:
            base_vertices = np.unique(t.faces[base_faces])
        else:
            base_vertices = np.asarray([center], dtype=np.int64)
        local = np.full(t.num_vertices, -1, dtype=np.int64)
        local[base_vertices] = np.arange(base_vertices.size)
        sub = Triangulation(base_vertices.size, local[t.faces[base_faces]])
        base_edges = np.asarray([
            t.edge_id(base_vertices[i], base_vertices[j])
            for i, j in sub.edges
        ], dtype=np.int64)
        interior = np.asarray([
            bool(face_sel[t.incident_faces(v)].all())
            and t.incident_faces(v).size > 0 for v in base_vertices
        ], dtype=bool)
        levels.append(
            ExhaustionLevel(sub, base_vertices, base_edges, base_faces,
                            interior))
    return ExhaustionSequence(t, center, tuple(levels), count)


# ---------------------------------------------------------------------------
# Mesh file I/O (plmesh text format)
# ---------------------------------------------------------------------------

def save_mesh(t, path, lengths=None):
    """Write ``t`` (optionally with per-edge lengths) in plmesh format.

    Format: header ``plmesh 1``, then ``v <id>`` per vertex, ``f <i> <j> <k>``
    per face, and, when ``lengths`` is given, ``len <i> <j> <value>`` per
    edge.  Edges are inferred on load.
    """
    lines = ["plmesh 1"]
    lines.extend(f"v {i}" for i in range(t.num_vertices))
    lines.extend(f"f {a} {b} {c}" for a, b, c in t.faces)
    if lengths is not None:
        lengths = np.asarray(lengths, dtype=float)
        if lengths.shape != (t.num_edges,):
            raise ValueError("lengths must have one value per edge")
        lines.extend(f"len {i} {j} {x:.17g}"
                     for (i, j), x in zip(t.edges, lengths))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh_file(path):
    """Parse a plmesh file; returns ``(Triangulation, lengths or None)``."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(n + 1, ln.strip()) for n, ln in enumerate(raw) if ln.strip()]
    if not lines or lines[0][1] != "plmesh 1":
        raise MeshFormatError("missing 'plmesh 1' header")

    vertex_ids = set()
    faces = []
    length_entries = []
    for lineno, line in lines[1:]:
        tokens = line.split()
        try:
            if tokens[0] == "v" and len(tokens) == 2:
                vid = int(tokens[1])
                if vid in vertex_ids:
                    raise MeshFormatError(
                        f"line {lineno}: duplicate vertex id {vid}")
                vertex_ids.add(vid)
            elif tokens[0] == "f" and len(tokens) == 4:
                faces.append(tuple(int(x) for x in tokens[1:]))
            elif tokens[0] == "len" and len(tokens) == 4:
                length_entries.append(
                    (int(tokens[1]), int(tokens[2]), float(tokens[3])))
            else:
                raise MeshFormatError(f"line {lineno}: unrecognized line "
                                      f"{line!r}")
        except ValueError as exc:
            raise MeshFormatError(f"line {lineno}: {exc}") from exc

    if not vertex_ids:
        raise EmptyMeshError("mesh file declares no vertices")
    n = len(vertex_ids)
    if vertex_ids != set(range(n)):
        raise MeshFormatError("vertex ids are not dense in [0, |V|)")
    for face in faces:
        for v in face:
            if v not in vertex_ids:
                raise DanglingVertexError(
                    f"face {face} references undeclared vertex {v}")
    try:
        t = Triangulation(n, np.asarray(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from exc

    if not length_entries:
        return t, None
    lengths = np.full(t.num_edges, np.nan)
    for i, j, x in length_entries:
        try:
            e = t.edge_id(i, j)
        except KeyError:
            raise MeshFormatError(
                f"len entry ({i}, {j}) is not an edge of the mesh") from None
        lengths[e] = x
    if np.isnan(lengths).any():
        missing = int(np.flatnonzero(np.isnan(lengths))[0])
        raise MeshFormatError(
            f"len section misses edge ({int(t.edges[missing, 0])}, {int(t.edges[missing, 1])})")
    return t, lengths


def load_mesh(path):
    """Load just the incidence structure from a plmesh file."""
    return load_mesh_file(path)[0]
