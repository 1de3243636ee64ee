"""Run configuration: every tunable in one dataclass plus key-value I/O.

Config files are `key value` lines with `#` comments. List values are
comma-separated. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ScenarioError

__all__ = ["SimConfig", "parse_config", "load_config", "serialize_config"]


@dataclass
class SimConfig:
    # map / sensing
    resolution: float = 0.2  # informational; the scenario's grid resolution wins
    d_max: float = 3.0
    lidar_range: float = 8.0
    camera_fov_h: float = 68.0
    camera_fov_v: float = 51.0
    band_low: float = -1.0          # < 0 means auto from scene height
    band_high: float = -1.0
    clearance: float = 0.3
    az_step: float = 3.0            # lidar azimuth step, deg
    el_step: float = 4.0            # lidar elevation step, deg
    # extraction / viewpoints
    split_threshold: float = 2.0
    w_uni: float = 0.8
    w_unk: float = 0.2
    vp_radii: tuple = (1.0, 1.5, 2.0, 2.5)
    vp_azimuths: int = 12
    vp_z_offsets: tuple = (0.0,)
    score_cap: int = 0              # 0 = score against every voxel
    # clustering / global planning
    r_vp: float = 3.0
    d_anchor: float = 1.0
    d_cost_threshold: float = 0.3
    # motion
    v_max: float = 2.0
    a_max: float = 1.5
    w_max: float = 1.2
    # loop
    replan_trigger: str = "EverySegment"   # or EveryMapChange
    integrate_dt: float = 0.2
    budget: float = 600.0
    seed: int = 0
    start_jitter: float = 0.3

    def __post_init__(self):
        if self.replan_trigger not in ("EverySegment", "EveryMapChange"):
            raise ValueError(f"bad replan_trigger {self.replan_trigger!r}")
        if self.lidar_range <= self.d_max:
            raise ValueError("lidar_range must exceed d_max")
        if self.w_uni <= self.w_unk:
            raise ValueError("w_uni must exceed w_unk")


_TUPLE_KEYS = {"vp_radii", "vp_z_offsets"}
_INT_KEYS = {"vp_azimuths", "score_cap", "seed"}
_STR_KEYS = {"replan_trigger"}


def parse_config(text, origin_name="<config>"):
    values = {}
    names = {f.name for f in fields(SimConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ScenarioError(f"{origin_name}:{lineno}: expected 'key value'")
        key, val = parts[0], parts[1].strip()
        if key not in names:
            raise ScenarioError(f"{origin_name}:{lineno}: unknown key {key!r}")
        try:
            if key in _TUPLE_KEYS:
                values[key] = tuple(float(v) for v in val.split(","))
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _STR_KEYS:
                values[key] = val
            else:
                values[key] = float(val)
        except ValueError as e:
            raise ScenarioError(f"{origin_name}:{lineno}: {e}") from None
    try:
        return SimConfig(**values)
    except ValueError as e:
        raise ScenarioError(f"{origin_name}: {e}") from None


def load_config(path):
    with open(path, "r") as fh:
        return parse_config(fh.read(), origin_name=str(path))


def serialize_config(cfg):
    lines = []
    for f in fields(SimConfig):
        v = getattr(cfg, f.name)
        if f.name in _TUPLE_KEYS:
            lines.append(f"{f.name} " + ",".join(repr(float(x)) for x in v))
        elif f.name in _INT_KEYS:
            lines.append(f"{f.name} {int(v)}")
        elif f.name in _STR_KEYS:
            lines.append(f"{f.name} {v}")
        else:
            lines.append(f"{f.name} {repr(float(v))}")
    return "\n".join(lines) + "\n"
