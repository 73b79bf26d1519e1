import math

import numpy as np
import pytest

from yamabe import kernels, mesh

BACKENDS = sorted(kernels.IMPLEMENTATIONS)


def fixture_mesh():
    return mesh.build_hexagonal_disk(2)


def fixture_lengths(t, seed=0):
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(-0.3, 0.3, t.num_edges))


@pytest.mark.parametrize("backend", BACKENDS)
class TestAgainstReference:
    """Each backend against slow, transparent Python loops."""

    def test_scaled_lengths(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["scaled_lengths"]
        t = fixture_mesh()
        rng = np.random.default_rng(1)
        u = rng.uniform(-1, 1, t.num_vertices)
        base = fixture_lengths(t)
        got = impl(t.edges[:, 0], t.edges[:, 1], u, base)
        for e, (i, j) in enumerate(t.edges):
            want = math.exp(0.5 * (u[i] + u[j])) * base[e]
            assert got[e] == pytest.approx(want, rel=1e-15)

    def test_face_angles(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["face_angles"]
        t = fixture_mesh()
        fl = kernels.IMPLEMENTATIONS[backend]["face_lengths"](
            t.face_edges, fixture_lengths(t))
        got = impl(fl)
        for f in range(t.num_faces):
            a, b, c = fl[f]
            want0 = math.acos((b * b + c * c - a * a) / (2 * b * c))
            assert got[f, 0] == pytest.approx(want0, abs=1e-14)
            assert got[f].sum() == pytest.approx(math.pi, abs=1e-12)

    def test_face_angles_extended_degenerate(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["face_angles_extended"]
        fl = np.array([[2.0, 1.0, 1.0], [1.0, 1.0, 1.0], [0.5, 0.5, 1.0]])
        got = impl(fl)
        np.testing.assert_array_equal(got[0], [math.pi, 0.0, 0.0])
        np.testing.assert_allclose(got[1], math.pi / 3, rtol=1e-14)
        np.testing.assert_array_equal(got[2], [0.0, 0.0, math.pi])

    def test_omega_margins(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["omega_margins"]
        fl = np.array([[1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [1.0, 1.0, 1.9]])
        got = impl(fl)
        want = [(3 - 2 * 1) / 3, (4 - 2 * 2) / 4, (3.9 - 2 * 1.9) / 3.9]
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_angle_defects(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["angle_defects"]
        t = fixture_mesh()
        rng = np.random.default_rng(2)
        angles = rng.uniform(0.1, 1.0, (t.num_faces, 3))
        got = impl(t.faces, angles, t.num_vertices)
        want = np.full(t.num_vertices, 2 * math.pi)
        for f in range(t.num_faces):
            for c in range(3):
                want[t.faces[f, c]] -= angles[f, c]
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_cot_weights(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["cot_weights"]
        t = fixture_mesh()
        fl = kernels.IMPLEMENTATIONS[backend]["face_lengths"](
            t.face_edges, fixture_lengths(t))
        angles = kernels.IMPLEMENTATIONS[backend]["face_angles"](fl)
        got = impl(t.edge_opposite_corners[:, 0],
                   t.edge_opposite_corners[:, 1], angles.ravel())
        flat = angles.ravel()
        for e in range(t.num_edges):
            acc = 0.0
            for slot in range(2):
                idx = t.edge_opposite_corners[e, slot]
                if idx >= 0:
                    acc += 1.0 / math.tan(flat[idx])
            assert got[e] == pytest.approx(0.5 * acc, rel=1e-13, abs=1e-15)

    def test_weighted_laplacian(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["weighted_laplacian"]
        t = fixture_mesh()
        rng = np.random.default_rng(3)
        w = rng.uniform(0.0, 2.0, t.num_edges)
        f = rng.uniform(-1.0, 1.0, t.num_vertices)
        got = impl(t.adj_indptr, t.adj_vertices, t.adj_edges, w, f)
        # dense-matrix oracle
        L = np.zeros((t.num_vertices, t.num_vertices))
        for e, (i, j) in enumerate(t.edges):
            L[i, j] += w[e]
            L[j, i] += w[e]
            L[i, i] -= w[e]
            L[j, j] -= w[e]
        np.testing.assert_allclose(got, L @ f, atol=1e-13)

    def test_hex_remainders(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["hex_remainders"]
        t = fixture_mesh()
        rng = np.random.default_rng(4)
        u = rng.uniform(-0.3, 0.3, t.num_vertices)
        got = impl(t.faces, u, t.num_vertices)
        want = np.zeros(t.num_vertices)
        for f in range(t.num_faces):
            for c in range(3):
                i, j, k = (t.faces[f, c], t.faces[f, (c + 1) % 3],
                           t.faces[f, (c + 2) % 3])
                x, y = u[j] - u[i], u[k] - u[i]
                z = (math.exp(x) + math.exp(y) - math.exp(x + y)) / (
                    2 * math.exp(0.5 * (x + y)))
                want[i] += (math.acos(max(-1.0, min(1.0, z)))
                            - math.pi / 3
                            - math.sqrt(3) / 6 * (x + y))
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_dirichlet_energy(self, backend):
        impl = kernels.IMPLEMENTATIONS[backend]["dirichlet_energy"]
        t = fixture_mesh()
        rng = np.random.default_rng(5)
        u = rng.uniform(-1, 1, t.num_vertices)
        got = impl(t.edges[:, 0], t.edges[:, 1], u)
        want = sum((u[i] - u[j]) ** 2 for i, j in t.edges)
        assert got == pytest.approx(want, rel=1e-13)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba backend unavailable")
class TestBackendAgreement:
    def test_all_kernels_agree(self):
        t = mesh.build_hexagonal_disk(3)
        rng = np.random.default_rng(6)
        u = rng.uniform(-0.4, 0.4, t.num_vertices)
        base = fixture_lengths(t, seed=7)
        a = kernels.IMPLEMENTATIONS["numpy"]
        b = kernels.IMPLEMENTATIONS["numba"]

        la = a["scaled_lengths"](t.edges[:, 0], t.edges[:, 1], u, base)
        lb = b["scaled_lengths"](t.edges[:, 0], t.edges[:, 1], u, base)
        np.testing.assert_allclose(la, lb, rtol=1e-15)

        fa = a["face_lengths"](t.face_edges, la)
        fb = b["face_lengths"](t.face_edges, lb)
        np.testing.assert_allclose(fa, fb, rtol=1e-15)
        np.testing.assert_allclose(a["omega_margins"](fa),
                                   b["omega_margins"](fb), atol=1e-15)

        aa = a["face_angles"](fa)
        ab = b["face_angles"](fb)
        np.testing.assert_allclose(aa, ab, atol=1e-13)
        np.testing.assert_allclose(a["face_angles_extended"](fa),
                                   b["face_angles_extended"](fb), atol=1e-13)
        np.testing.assert_allclose(
            a["angle_defects"](t.faces, aa, t.num_vertices),
            b["angle_defects"](t.faces, ab, t.num_vertices), atol=1e-13)
        np.testing.assert_allclose(
            a["cot_weights"](t.edge_opposite_corners[:, 0],
                             t.edge_opposite_corners[:, 1], aa.ravel()),
            b["cot_weights"](t.edge_opposite_corners[:, 0],
                             t.edge_opposite_corners[:, 1], ab.ravel()),
            atol=1e-13)
        np.testing.assert_allclose(
            a["opposite_angle_sums"](t.edge_opposite_corners[:, 0],
                                     t.edge_opposite_corners[:, 1],
                                     aa.ravel()),
            b["opposite_angle_sums"](t.edge_opposite_corners[:, 0],
                                     t.edge_opposite_corners[:, 1],
                                     ab.ravel()), atol=1e-13)
        w = np.abs(la)
        np.testing.assert_allclose(
            a["weighted_laplacian"](t.adj_indptr, t.adj_vertices,
                                    t.adj_edges, w, u),
            b["weighted_laplacian"](t.adj_indptr, t.adj_vertices,
                                    t.adj_edges, w, u), atol=1e-13)
        np.testing.assert_allclose(
            a["hex_remainders"](t.faces, u, t.num_vertices),
            b["hex_remainders"](t.faces, u, t.num_vertices), atol=1e-13)
        assert a["dirichlet_energy"](t.edges[:, 0], t.edges[:, 1], u) == \
            pytest.approx(b["dirichlet_energy"](t.edges[:, 0],
                                                t.edges[:, 1], u), rel=1e-13)


class TestBackendSelection:
    def test_active_backend_exposed(self):
        assert kernels.ACTIVE_BACKEND in kernels.IMPLEMENTATIONS
        assert kernels.face_angles is kernels.IMPLEMENTATIONS[
            kernels.ACTIVE_BACKEND]["face_angles"]

    def test_set_thread_count_noop_safe(self):
        kernels.set_thread_count(None)
        kernels.set_thread_count(1)
