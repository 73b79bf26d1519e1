"""Combinatorial Yamabe flow on triangulated PL surfaces.

Submodules: :mod:`~yamabe.mesh` (triangulations, generators, exhaustions,
file I/O), :mod:`~yamabe.geometry` (metrics, angles, curvature, weights,
margins), :mod:`~yamabe.flow` (right-hand sides and fixed-step integration),
:mod:`~yamabe.analysis` (verification checks and experiments),
:mod:`~yamabe.cli` (command line), :mod:`~yamabe.kernels` (numba/NumPy
numeric backends).
"""

__version__ = "0.1.0"

from . import analysis, cli, flow, geometry, kernels, mesh  # noqa: F401
