from collections import deque

import numpy as np
import pytest

from yamabe import mesh


def bfs_distances(t, source):
    # independent of mesh.graph_distances: adjacency rebuilt from raw faces
    adj = {v: set() for v in range(t.num_vertices)}
    for a, b, c in t.faces:
        adj[a].update((b, c))
        adj[b].update((a, c))
        adj[c].update((a, b))
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


class TestHexDisk:
    def test_radius_zero(self):
        t = mesh.build_hexagonal_disk(0)
        assert (t.num_vertices, t.num_edges, t.num_faces) == (1, 0, 0)

    def test_radius_one(self):
        t = mesh.build_hexagonal_disk(1)
        assert (t.num_vertices, t.num_edges, t.num_faces) == (7, 12, 6)
        assert t.degrees[0] == 6
        assert mesh.euler_characteristic(t) == 1

    @pytest.mark.parametrize("radius", [1, 2, 3, 5])
    def test_closed_form_counts(self, radius):
        t = mesh.build_hexagonal_disk(radius)
        assert t.num_vertices == 1 + 3 * radius * (radius + 1)
        assert t.num_edges == 3 * radius * (3 * radius + 1)
        assert t.num_faces == 6 * radius * radius
        assert mesh.euler_characteristic(t) == 1

    def test_interior_degrees_radius_two(self):
        # brute-force scan: every vertex within distance 1 has degree 6
        t = mesh.build_hexagonal_disk(2)
        dist = bfs_distances(t, 0)
        degree = {v: 0 for v in range(t.num_vertices)}
        for i, j in t.edges:
            degree[int(i)] += 1
            degree[int(j)] += 1
        for v, d in dist.items():
            if d < 2:
                assert degree[v] == 6

    def test_interior_vertices_not_boundary(self):
        t = mesh.build_hexagonal_disk(3)
        dist = bfs_distances(t, 0)
        for v in range(t.num_vertices):
            assert t.boundary_vertices[v] == (dist[v] == 3)

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            mesh.build_hexagonal_disk(-1)


class TestTriangulation:
    def test_tetrahedron_euler(self):
        t = mesh.tetrahedron()
        assert (t.num_vertices, t.num_edges, t.num_faces) == (4, 6, 4)
        assert mesh.euler_characteristic(t) == 2
        assert not t.boundary_vertices.any()
        assert not t.boundary_edges.any()

    def test_boundary_flags_consistent(self):
        t = mesh.build_hexagonal_disk(2)
        # edge is boundary iff one adjacent face; vertex iff on such an edge
        face_count = {e: 0 for e in range(t.num_edges)}
        for f in range(t.num_faces):
            for e in t.face_edges[f]:
                face_count[int(e)] += 1
        on_boundary_edge = set()
        for e, n in face_count.items():
            assert n in (1, 2)
            assert t.boundary_edges[e] == (n == 1)
            if n == 1:
                on_boundary_edge.update(int(v) for v in t.edges[e])
        for v in range(t.num_vertices):
            assert t.boundary_vertices[v] == (v in on_boundary_edge)

    def test_neighbors_ascending(self):
        t = mesh.build_hexagonal_disk(3)
        for v in range(t.num_vertices):
            nbrs = t.neighbors(v)
            assert (np.diff(nbrs) > 0).all()
            for w in nbrs:
                assert v in t.neighbors(int(w))

    def test_face_edges_opposite_convention(self):
        t = mesh.tetrahedron()
        for f in range(t.num_faces):
            for c in range(3):
                edge = t.edges[t.face_edges[f, c]]
                assert t.faces[f, c] not in edge

    def test_rejects_nonmanifold(self):
        with pytest.raises(mesh.NonManifoldEdgeError):
            mesh.Triangulation(5, [[0, 1, 2], [0, 1, 3], [0, 1, 4]])

    def test_rejects_bad_faces(self):
        with pytest.raises(ValueError):
            mesh.Triangulation(3, [[0, 1, 1]])
        with pytest.raises(ValueError):
            mesh.Triangulation(3, [[0, 1, 5]])
        with pytest.raises(ValueError):
            mesh.Triangulation(4, [[0, 1, 2], [2, 1, 0]])

    def test_structural_equality(self):
        a = mesh.build_hexagonal_disk(2)
        b = mesh.build_hexagonal_disk(2)
        assert a == b
        assert a != mesh.build_hexagonal_disk(1)

    def test_graph_distances_match_oracle(self):
        t = mesh.build_hexagonal_disk(2)
        got = mesh.graph_distances(t, 0)
        want = bfs_distances(t, 0)
        assert {v: int(d) for v, d in enumerate(got)} == want


class TestExhaustion:
    def test_levels_nested_and_center_interior(self):
        t = mesh.build_hexagonal_disk(3)
        seq = mesh.exhaustion(t, 0, 2)
        assert seq.count == 2
        v1 = seq.levels[0].vertex_set()
        v2 = seq.levels[1].vertex_set()
        assert v1 < v2
        interior1 = [int(b) for b, inner in
                     zip(seq.levels[0].base_vertices,
                         seq.levels[0].interior_mask) if inner]
        assert interior1 == [0]

    def test_single_level_valid(self):
        t = mesh.tetrahedron()
        seq = mesh.exhaustion(t, 0, 1)
        assert seq.count == 1
        assert seq.levels[0].triangulation.num_faces > 0

    def test_strict_growth_until_saturation(self):
        t = mesh.build_hexagonal_disk(3)
        seq = mesh.exhaustion(t, 0, 10)
        assert seq.count == 3  # truncated: faces reach at most distance 3
        sizes = [len(lv.vertex_set()) for lv in seq.levels]
        assert sizes == sorted(set(sizes))
        assert seq.levels[-1].vertex_set() == set(range(t.num_vertices))

    def test_interior_classification_oracle(self):
        t = mesh.build_hexagonal_disk(3)
        seq = mesh.exhaustion(t, 0, 2)
        level = seq.levels[1]
        dist = bfs_distances(t, 0)
        included = {tuple(sorted(t.faces[f])) for f in level.base_faces}
        for local, base in enumerate(level.base_vertices):
            incident = [tuple(sorted(face)) for face in t.faces
                        if int(base) in face]
            expected = all(face in included for face in incident)
            assert bool(level.interior_mask[local]) == expected
        for f in range(t.num_faces):
            inside = max(dist[v] for v in t.faces[f]) <= 2
            assert (tuple(sorted(t.faces[f])) in included) == inside

    def test_level_metric_edges_map_back(self):
        t = mesh.build_hexagonal_disk(2)
        seq = mesh.exhaustion(t, 0, 1)
        level = seq.levels[0]
        for local_e, base_e in enumerate(level.base_edges):
            lv = level.triangulation.edges[local_e]
            base_pair = sorted(int(level.base_vertices[v]) for v in lv)
            assert base_pair == sorted(int(v) for v in t.edges[base_e])

    def test_errors(self):
        t = mesh.build_hexagonal_disk(2)
        with pytest.raises(ValueError):
            mesh.exhaustion(t, 99, 1)
        with pytest.raises(ValueError):
            mesh.exhaustion(t, 0, 0)
        disconnected = mesh.Triangulation(6, [[0, 1, 2], [3, 4, 5]])
        with pytest.raises(ValueError, match="connected"):
            mesh.exhaustion(disconnected, 0, 1)


class TestMeshIO:
    def test_round_trip_tetrahedron(self, tmp_path):
        t = mesh.tetrahedron()
        path = tmp_path / "tetra.plmesh"
        mesh.save_mesh(t, path)
        loaded, lengths = mesh.load_mesh_file(path)
        assert loaded == t
        assert lengths is None

    def test_round_trip_with_lengths(self, tmp_path):
        t = mesh.build_hexagonal_disk(2)
        lengths = 1.0 + 0.01 * np.arange(t.num_edges)
        path = tmp_path / "hex.plmesh"
        mesh.save_mesh(t, path, lengths)
        loaded, back = mesh.load_mesh_file(path)
        assert loaded == t
        np.testing.assert_array_equal(back, lengths)

    def test_nonmanifold_file(self, tmp_path):
        path = tmp_path / "bad.plmesh"
        lines = ["plmesh 1"] + [f"v {i}" for i in range(5)] + [
            "f 0 1 2", "f 0 1 3", "f 0 1 4"]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(mesh.NonManifoldEdgeError):
            mesh.load_mesh(path)

    def test_empty_mesh_file(self, tmp_path):
        path = tmp_path / "empty.plmesh"
        path.write_text("plmesh 1\n")
        with pytest.raises(mesh.EmptyMeshError):
            mesh.load_mesh(path)

    def test_dangling_face_vertex(self, tmp_path):
        path = tmp_path / "dangling.plmesh"
        path.write_text("plmesh 1\nv 0\nv 1\nv 2\nf 0 1 7\n")
        with pytest.raises(mesh.DanglingVertexError):
            mesh.load_mesh(path)

    def test_malformed_lines(self, tmp_path):
        path = tmp_path / "bad.plmesh"
        path.write_text("plmesh 2\nv 0\n")
        with pytest.raises(mesh.MeshFormatError):
            mesh.load_mesh(path)
        path.write_text("plmesh 1\nv 0\nwhatever 1 2\n")
        with pytest.raises(mesh.MeshFormatError):
            mesh.load_mesh(path)
        path.write_text("plmesh 1\nv 0\nv 2\n")
        with pytest.raises(mesh.MeshFormatError, match="dense"):
            mesh.load_mesh(path)

    def test_len_entry_errors(self, tmp_path):
        t = mesh.tetrahedron()
        path = tmp_path / "t.plmesh"
        mesh.save_mesh(t, path)
        text = path.read_text() + "len 0 9 1.0\n"
        path.write_text(text)
        with pytest.raises(mesh.MeshFormatError, match="not an edge"):
            mesh.load_mesh_file(path)
        mesh.save_mesh(t, path)
        text = path.read_text() + "len 0 1 1.0\n"  # only one of six edges
        path.write_text(text)
        with pytest.raises(mesh.MeshFormatError, match="misses"):
            mesh.load_mesh_file(path)
