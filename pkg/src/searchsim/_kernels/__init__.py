"""Kernel backend selection.

The numeric hot paths (voxel ray traversal, grid shortest paths, small
asymmetric-TSP solvers) exist twice: a compiled Cython extension
(``core``) and a pure-Python reference (``pure``). Both produce
bitwise-identical results; parity tests enforce that.

Set SEARCHSIM_KERNELS=pure or SEARCHSIM_KERNELS=compiled to force a
backend. The default prefers the compiled extension and silently falls
back to pure Python when the extension is not built.
"""

import os

# Voxel states, shared by both backends and the rest of the package.
UNKNOWN = 0
FREE = 1
OCCUPIED = 2

_requested = os.environ.get("SEARCHSIM_KERNELS", "auto").lower()

if _requested not in ("auto", "compiled", "pure"):
    raise ValueError(
        f"SEARCHSIM_KERNELS must be auto, compiled or pure, got {_requested!r}")

if _requested == "pure":
    from . import pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import pure as _impl

        BACKEND = "pure"

trace_ray = _impl.trace_ray
rays_visible = _impl.rays_visible
lidar_sweep = _impl.lidar_sweep
integrate_scan = _impl.integrate_scan
astar_grid = _impl.astar_grid
dijkstra_field = _impl.dijkstra_field
held_karp_cycle = _impl.held_karp_cycle
nn_tour = _impl.nn_tour
improve_cycle = _impl.improve_cycle


def get_backend(name):
    """Return a specific backend module ("pure" or "compiled") for tests."""
    if name == "pure":
        from . import pure

        return pure
    if name == "compiled":
        from . import core  # type: ignore[attr-defined]

        return core
    raise ValueError(name)
