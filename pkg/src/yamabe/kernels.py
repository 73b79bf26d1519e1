"""Numeric kernels shared by the geometry and flow pipelines.

Every kernel exists twice: a vectorized NumPy implementation and a numba
``@njit`` loop version.  The active set is picked once at import time from
the ``YAMABE_NUMBA`` environment variable:

* unset or ``auto``  -- use numba when it imports, NumPy otherwise
* ``0/off/false/no`` -- force the pure NumPy path
* ``1/on/true/force`` -- require numba, raise if unavailable

Both implementations of a kernel produce the same values to well below 1e-13;
each is deterministic run-to-run (fixed accumulation order), but bit-identity
across the two backends is not promised.

Kernels assume pre-validated inputs (positive lengths, aligned index arrays);
argument checking happens in the public modules.  Cosine-law arguments are
clamped to [-1, 1]; callers only pass length triples for which larger
excursions cannot arise.

Face-length convention throughout: row ``f`` of a ``(F, 3)`` length array
holds the edge length *opposite* each of the face's three corners.
"""

import math
import os

import numpy as np

TWO_PI = 2.0 * math.pi
THIRD_PI = math.pi / 3.0
HEX_LINEAR_COEFF = math.sqrt(3.0) / 6.0


def _env_choice():
    raw = os.environ.get("YAMABE_NUMBA", "auto").strip().lower()
    if raw in ("0", "off", "false", "no"):
        return False
    if raw in ("1", "on", "true", "yes", "force"):
        return True
    return None


# ---------------------------------------------------------------------------
# NumPy implementations
# ---------------------------------------------------------------------------

def _np_scaled_lengths(edge_v0, edge_v1, u, base):
    return np.exp(0.5 * (u[edge_v0] + u[edge_v1])) * base


def _np_face_lengths(face_edges, lengths):
    return lengths[face_edges]


def _np_omega_margins(face_lengths):
    # relative worst triangle-inequality defect: (perimeter - 2*max)/perimeter
    perim = face_lengths.sum(axis=1)
    return 1.0 - 2.0 * face_lengths.max(axis=1) / perim


def _np_face_angles(face_lengths):
    a = face_lengths[:, 0]
    b = face_lengths[:, 1]
    c = face_lengths[:, 2]
    out = np.empty_like(face_lengths)
    out[:, 0] = (b * b + c * c - a * a) / (2.0 * b * c)
    out[:, 1] = (a * a + c * c - b * b) / (2.0 * a * c)
    out[:, 2] = (a * a + b * b - c * c) / (2.0 * a * b)
    np.clip(out, -1.0, 1.0, out=out)
    return np.arccos(out)


def _np_face_angles_extended(face_lengths):
    angles = np.empty_like(face_lengths)
    perim = face_lengths.sum(axis=1)
    longest = np.argmax(face_lengths, axis=1)
    flat = perim - 2.0 * face_lengths[np.arange(len(perim)), longest] <= 0.0
    ok = ~flat
    if ok.any():
        angles[ok] = _np_face_angles(face_lengths[ok])
    if flat.any():
        angles[flat] = 0.0
        angles[flat, longest[flat]] = math.pi
    return angles


def _np_angle_defects(face_vertices, angles, num_vertices):
    out = np.full(num_vertices, TWO_PI)
    np.subtract.at(out, face_vertices.ravel(), angles.ravel())
    return out


def _np_cot_weights(opp0, opp1, angles_flat):
    out = np.zeros(opp0.shape[0])
    m0 = opp0 >= 0
    out[m0] = 1.0 / np.tan(angles_flat[opp0[m0]])
    m1 = opp1 >= 0
    out[m1] += 1.0 / np.tan(angles_flat[opp1[m1]])
    return 0.5 * out


def _np_opposite_angle_sums(opp0, opp1, angles_flat):
    out = np.zeros(opp0.shape[0])
    m0 = opp0 >= 0
    out[m0] = angles_flat[opp0[m0]]
    m1 = opp1 >= 0
    out[m1] += angles_flat[opp1[m1]]
    return out


def _np_weighted_laplacian(indptr, neighbors, edge_ids, weights, values):
    terms = weights[edge_ids] * (values[neighbors] - np.repeat(
        values, np.diff(indptr)))
    if terms.size == 0:
        return np.zeros(indptr.shape[0] - 1)
    out = np.add.reduceat(terms, indptr[:-1])
    out[np.diff(indptr) == 0] = 0.0
    return out


def _np_hex_remainders(face_vertices, u, num_vertices):
    out = np.zeros(num_vertices)
    for c in range(3):
        i = face_vertices[:, c]
        j = face_vertices[:, (c + 1) % 3]
        k = face_vertices[:, (c + 2) % 3]
        x = u[j] - u[i]
        y = u[k] - u[i]
        z = (np.exp(x) + np.exp(y) - np.exp(x + y)) / (
            2.0 * np.exp(0.5 * (x + y)))
        np.clip(z, -1.0, 1.0, out=z)
        rem = np.arccos(z) - THIRD_PI - HEX_LINEAR_COEFF * (x + y)
        np.add.at(out, i, rem)
    return out


def _np_dirichlet_energy(edge_v0, edge_v1, u):
    diff = u[edge_v0] - u[edge_v1]
    return float(np.dot(diff, diff))


_NUMPY_IMPL = {
    "scaled_lengths": _np_scaled_lengths,
    "face_lengths": _np_face_lengths,
    "omega_margins": _np_omega_margins,
    "face_angles": _np_face_angles,
    "face_angles_extended": _np_face_angles_extended,
    "angle_defects": _np_angle_defects,
    "cot_weights": _np_cot_weights,
    "opposite_angle_sums": _np_opposite_angle_sums,
    "weighted_laplacian": _np_weighted_laplacian,
    "hex_remainders": _np_hex_remainders,
    "dirichlet_energy": _np_dirichlet_energy,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

_choice = _env_choice()
_NUMBA_IMPL = None

if _choice is not False:
    try:
        from numba import njit
    except ImportError:
        if _choice is True:
            raise ImportError(
                "YAMABE_NUMBA requested the numba backend but numba is not "
                "installed")
        njit = None

    if njit is not None:

        @njit(cache=True)
        def _nb_scaled_lengths(edge_v0, edge_v1, u, base):
            out = np.empty(base.shape[0])
            for e in range(base.shape[0]):
                out[e] = math.exp(0.5 * (u[edge_v0[e]] + u[edge_v1[e]])) * base[e]
            return out

        @njit(cache=True)
        def _nb_face_lengths(face_edges, lengths):
            nf = face_edges.shape[0]
            out = np.empty((nf, 3))
            for f in range(nf):
                for c in range(3):
                    out[f, c] = lengths[face_edges[f, c]]
            return out

        @njit(cache=True)
        def _nb_omega_margins(face_lengths):
            nf = face_lengths.shape[0]
            out = np.empty(nf)
            for f in range(nf):
                a = face_lengths[f, 0]
                b = face_lengths[f, 1]
                c = face_lengths[f, 2]
                longest = max(a, max(b, c))
                out[f] = 1.0 - 2.0 * longest / (a + b + c)
            return out

        @njit(cache=True)
        def _nb_corner_angle(a, b, c):
            # angle opposite edge a
            z = (b * b + c * c - a * a) / (2.0 * b * c)
            if z > 1.0:
                z = 1.0
            elif z < -1.0:
                z = -1.0
            return math.acos(z)

        @njit(cache=True)
        def _nb_face_angles(face_lengths):
            nf = face_lengths.shape[0]
            out = np.empty((nf, 3))
            for f in range(nf):
                a = face_lengths[f, 0]
                b = face_lengths[f, 1]
                c = face_lengths[f, 2]
                out[f, 0] = _nb_corner_angle(a, b, c)
                out[f, 1] = _nb_corner_angle(b, a, c)
                out[f, 2] = _nb_corner_angle(c, a, b)
            return out

        @njit(cache=True)
        def _nb_face_angles_extended(face_lengths):
            nf = face_lengths.shape[0]
            out = np.empty((nf, 3))
            for f in range(nf):
                a = face_lengths[f, 0]
                b = face_lengths[f, 1]
                c = face_lengths[f, 2]
                longest = 0
                lmax = a
                if b > lmax:
                    longest = 1
                    lmax = b
                if c > lmax:
                    longest = 2
                    lmax = c
                if (a + b + c) - 2.0 * lmax <= 0.0:
                    out[f, 0] = 0.0
                    out[f, 1] = 0.0
                    out[f, 2] = 0.0
                    out[f, longest] = math.pi
                else:
                    out[f, 0] = _nb_corner_angle(a, b, c)
                    out[f, 1] = _nb_corner_angle(b, a, c)
                    out[f, 2] = _nb_corner_angle(c, a, b)
            return out

        @njit(cache=True)
        def _nb_angle_defects(face_vertices, angles, num_vertices):
            out = np.full(num_vertices, TWO_PI)
            for f in range(face_vertices.shape[0]):
                for c in range(3):
                    out[face_vertices[f, c]] -= angles[f, c]
            return out

        @njit(cache=True)
        def _nb_cot_weights(opp0, opp1, angles_flat):
            ne = opp0.shape[0]
            out = np.empty(ne)
            for e in range(ne):
                acc = 0.0
                if opp0[e] >= 0:
                    acc += 1.0 / math.tan(angles_flat[opp0[e]])
                if opp1[e] >= 0:
                    acc += 1.0 / math.tan(angles_flat[opp1[e]])
                out[e] = 0.5 * acc
            return out

        @njit(cache=True)
        def _nb_opposite_angle_sums(opp0, opp1, angles_flat):
            ne = opp0.shape[0]
            out = np.empty(ne)
            for e in range(ne):
                acc = 0.0
                if opp0[e] >= 0:
                    acc += angles_flat[opp0[e]]
                if opp1[e] >= 0:
                    acc += angles_flat[opp1[e]]
                out[e] = acc
            return out

        @njit(cache=True)
        def _nb_weighted_laplacian(indptr, neighbors, edge_ids, weights,
                                   values):
            nv = indptr.shape[0] - 1
            out = np.empty(nv)
            for i in range(nv):
                acc = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    acc += weights[edge_ids[k]] * (values[neighbors[k]] -
                                                   values[i])
                out[i] = acc
            return out

        @njit(cache=True)
        def _nb_hex_remainders(face_vertices, u, num_vertices):
            out = np.zeros(num_vertices)
            for f in range(face_vertices.shape[0]):
                for c in range(3):
                    i = face_vertices[f, c]
                    j = face_vertices[f, (c + 1) % 3]
                    k = face_vertices[f, (c + 2) % 3]
                    x = u[j] - u[i]
                    y = u[k] - u[i]
                    z = (math.exp(x) + math.exp(y) - math.exp(x + y)) / (
                        2.0 * math.exp(0.5 * (x + y)))
                    if z > 1.0:
                        z = 1.0
                    elif z < -1.0:
                        z = -1.0
                    out[i] += math.acos(z) - THIRD_PI - HEX_LINEAR_COEFF * (
                        x + y)
            return out

        @njit(cache=True)
        def _nb_dirichlet_energy(edge_v0, edge_v1, u):
            acc = 0.0
            for e in range(edge_v0.shape[0]):
                d = u[edge_v0[e]] - u[edge_v1[e]]
                acc += d * d
            return acc

        _NUMBA_IMPL = {
            "scaled_lengths": _nb_scaled_lengths,
            "face_lengths": _nb_face_lengths,
            "omega_margins": _nb_omega_margins,
            "face_angles": _nb_face_angles,
            "face_angles_extended": _nb_face_angles_extended,
            "angle_defects": _nb_angle_defects,
            "cot_weights": _nb_cot_weights,
            "opposite_angle_sums": _nb_opposite_angle_sums,
            "weighted_laplacian": _nb_weighted_laplacian,
            "hex_remainders": _nb_hex_remainders,
            "dirichlet_energy": _nb_dirichlet_energy,
        }


IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if _NUMBA_IMPL is not None:
    IMPLEMENTATIONS["numba"] = _NUMBA_IMPL

ACTIVE_BACKEND = "numba" if _NUMBA_IMPL is not None else "numpy"

_active = IMPLEMENTATIONS[ACTIVE_BACKEND]
scaled_lengths = _active["scaled_lengths"]
face_lengths = _active["face_lengths"]
omega_margins = _active["omega_margins"]
face_angles = _active["face_angles"]
face_angles_extended = _active["face_angles_extended"]
angle_defects = _active["angle_defects"]
cot_weights = _active["cot_weights"]
opposite_angle_sums = _active["opposite_angle_sums"]
weighted_laplacian = _active["weighted_laplacian"]
hex_remainders = _active["hex_remainders"]
dirichlet_energy = _active["dirichlet_energy"]


def set_thread_count(n):
    """Cap the numba threading layer at ``n`` workers; no-op on NumPy.

    Current kernels are sequential, so results never depend on this.
    """
    if ACTIVE_BACKEND != "numba" or n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
