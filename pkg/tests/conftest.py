import numpy as np
import pytest

from yamabe import flow, geometry, mesh


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # touch every hot kernel once so numba JIT compilation (first run on a
    # fresh checkout) never lands inside a timed assertion
    disk = mesh.build_hexagonal_disk(2)
    metric = geometry.regular_metric(disk)
    u = np.full(disk.num_vertices, 0.01)
    scaled = geometry.conformal_scale(metric, u)
    geometry.curvature(scaled)
    geometry.extended_curvature(scaled)
    w = geometry.cot_weights(scaled)
    geometry.laplacian(disk, w, u)
    geometry.dirichlet_energy(disk, u)
    geometry.extended_margins(scaled)
    for variant in ("standard", "extended", "semilinear_hex"):
        problem = flow.FlowProblem(metric, u, variant)
        flow.integrate(problem, flow.Schedule(h=1e-2, t_max=0.02,
                                              stop_tol=0.0),
                       store_fields=True)
