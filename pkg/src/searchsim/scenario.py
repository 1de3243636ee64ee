"""Plain-text scenario files and ground-truth world construction.

A scenario is a line-oriented description of one test scene: bounding
box, voxel resolution, agent start pose, solid axis-aligned boxes, and
target points sitting on box surfaces. `#` starts a comment; blank lines
are ignored. The format round-trips byte-identically through
parse/serialize so fixtures can live in version control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioError
from .sensors import GroundTruthWorld

__all__ = ["Scenario", "parse_scenario", "serialize_scenario",
           "load_scenario", "validate_scenario", "build_world"]


@dataclass
class Scenario:
    name: str
    bounds: tuple          # (x, y, z) extent in m, origin at (0, 0, 0)
    resolution: float
    start: tuple           # (x, y, z, yaw)
    boxes: list = field(default_factory=list)    # (x0,y0,z0,x1,y1,z1)
    targets: list = field(default_factory=list)  # (x, y, z)


def _fmt(v):
    return repr(float(v))


def parse_scenario(text, origin_name="<scenario>"):
    name = None
    bounds = None
    resolution = None
    start = None
    boxes = []
    targets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        try:
            if key == "name":
                name = " ".join(args)
            elif key == "bounds":
                bounds = tuple(float(v) for v in args)
                if len(bounds) != 3:
                    raise ValueError("bounds needs 3 values")
            elif key == "resolution":
                resolution = float(args[0])
            elif key == "start":
                start = tuple(float(v) for v in args)
                if len(start) != 4:
                    raise ValueError("start needs x y z yaw")
            elif key == "box":
                box = tuple(float(v) for v in args)
                if len(box) != 6:
                    raise ValueError("box needs 6 values")
                boxes.append(box)
            elif key == "target":
                t = tuple(float(v) for v in args)
                if len(t) != 3:
                    raise ValueError("target needs 3 values")
                targets.append(t)
            else:
                raise ValueError(f"unknown directive {key!r}")
        except (ValueError, IndexError) as e:
            raise ScenarioError(
                f"{origin_name}:{lineno}: {e}") from None
    for what, v in (("name", name), ("bounds", bounds),
                    ("resolution", resolution), ("start", start)):
        if v is None:
            raise ScenarioError(f"{origin_name}: missing {what} line")
    return Scenario(name=name, bounds=bounds, resolution=resolution,
                    start=start, boxes=boxes, targets=targets)


def serialize_scenario(sc):
    lines = [f"name {sc.name}",
             "bounds " + " ".join(_fmt(v) for v in sc.bounds),
             f"resolution {_fmt(sc.resolution)}",
             "start " + " ".join(_fmt(v) for v in sc.start)]
    for b in sc.boxes:
        lines.append("box " + " ".join(_fmt(v) for v in b))
    for t in sc.targets:
        lines.append("target " + " ".join(_fmt(v) for v in t))
    return "\n".join(lines) + "\n"


def load_scenario(path):
    with open(path, "r") as fh:
        return parse_scenario(fh.read(), origin_name=str(path))


def _dims_of(sc):
    return tuple(int(round(sc.bounds[a] / sc.resolution)) for a in range(3))


def _solid_of(sc, dims):
    solid = np.zeros(dims, dtype=np.uint8)
    res = sc.resolution
    for b in sc.boxes:
        lo = [max(0, int(np.floor(b[a] / res + 1e-9))) for a in range(3)]
        hi = [min(dims[a], int(np.ceil(b[3 + a] / res - 1e-9)))
              for a in range(3)]
        if all(hi[a] > lo[a] for a in range(3)):
            solid[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = 1
    return solid


def validate_scenario(sc):
    """Structural checks with index-bearing error messages."""
    if any(v <= 0 for v in sc.bounds) or sc.resolution <= 0:
        raise ScenarioError(f"{sc.name}: bounds and resolution must be positive")
    dims = _dims_of(sc)
    if any(d < 1 for d in dims):
        raise ScenarioError(f"{sc.name}: degenerate grid dims {dims}")
    solid = _solid_of(sc, dims)
    res = sc.resolution

    def cell_of(p, what):
        idx = tuple(int(np.floor(p[a] / res)) for a in range(3))
        for a in range(3):
            if not 0 <= idx[a] < dims[a]:
                raise ScenarioError(f"{sc.name}: {what} {p} outside bounds")
        return idx

    sidx = cell_of(sc.start[:3], "start")
    if solid[sidx]:
        raise ScenarioError(f"{sc.name}: start pose inside an obstacle")
    for k, t in enumerate(sc.targets):
        idx = cell_of(t, f"target {k}")
        if not solid[idx]:
            raise ScenarioError(
                f"{sc.name}: target {k} at {t} not inside any obstacle box")
        on_surface = False
        for a in range(3):
            for d in (-1, 1):
                nb = list(idx)
                nb[a] += d
                if not 0 <= nb[a] < dims[a]:
                    continue
                if not solid[tuple(nb)]:
                    on_surface = True
        if not on_surface:
            raise ScenarioError(
                f"{sc.name}: target {k} at {t} is buried (no free face)")
    return sc


def build_world(sc):
    """Materialize the scenario into a sensing-ready truth volume."""
    validate_scenario(sc)
    dims = _dims_of(sc)
    solid = _solid_of(sc, dims)
    return GroundTruthWorld(origin=(0.0, 0.0, 0.0), resolution=sc.resolution,
                            dims=dims, solid=solid, targets=sc.targets,
                            start=sc.start)
