"""Bundled scenarios and configs, addressable by short name."""

from __future__ import annotations

from pathlib import Path

__all__ = ["scenario_path", "config_path", "list_scenarios"]

_ROOT = Path(__file__).resolve().parent


def scenario_path(name):
    """Path of a bundled scenario; accepts 'small-maze' or a real path."""
    p = Path(name)
    if p.exists():
        return p
    cand = _ROOT / "scenarios" / f"{name}.scn"
    if cand.exists():
        return cand
    known = ", ".join(sorted(q.stem for q in (_ROOT / "scenarios").glob("*.scn")))
    raise FileNotFoundError(f"no scenario {name!r} (bundled: {known})")


def config_path(name):
    p = Path(name)
    if p.exists():
        return p
    cand = _ROOT / "configs" / f"{name}.cfg"
    if cand.exists():
        return cand
    known = ", ".join(sorted(q.stem for q in (_ROOT / "configs").glob("*.cfg")))
    raise FileNotFoundError(f"no config {name!r} (bundled: {known})")


def list_scenarios():
    return sorted(p.stem for p in (_ROOT / "scenarios").glob("*.scn"))
