"""Terrain geometry, scene files, and the head-mounted distance raycast.

A scene is flat ground at z = 0 plus axis-aligned boxes.  Feet walk on box
tops; the raycast sees every box face.  Scenes also carry the waypoint list for
the heading command and the module enable/disable schedule, and serialize to a
small JSON document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SceneError(ValueError):
    """Malformed scene file."""


@dataclass(frozen=True)
class Box:
    center: tuple[float, float, float]
    size: tuple[float, float, float]
    friction: float = 1.0

    def __post_init__(self):
        if min(self.size) <= 0.0:
            raise ValueError(f"box size must be positive, got {self.size}")
        if not 0.0 <= self.friction <= 1.0:
            raise ValueError(f"friction must be in [0, 1], got {self.friction}")

    @property
    def top(self) -> float:
        return self.center[2] + self.size[2] / 2.0


@dataclass(frozen=True)
class Waypoint:
    time: float  # activation time, s
    x: float
    y: float


@dataclass(frozen=True)
class ModuleEvent:
    time: float  # s
    name: str
    enabled: bool


@dataclass(frozen=True)
class TerrainSpec:
    boxes: tuple[Box, ...] = ()
    ground_friction: float = 1.0
    waypoints: tuple[Waypoint, ...] = ()
    modules: tuple[ModuleEvent, ...] = ()
    duration: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ground_friction <= 1.0:
            raise ValueError("ground_friction must be in [0, 1]")
        if not self.duration > 0.0:
            raise ValueError("duration must be positive")


def surface_at(terrain: TerrainSpec, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Highest walkable surface under each (x, y): (heights, frictions).

    Accepts scalars or matching arrays; box tops shadow the ground plane.
    """
    if not terrain.boxes:
        if np.isscalar(x) or getattr(x, "ndim", 0) == 0:
            return 0.0, terrain.ground_friction
        shape = np.shape(x)
        return np.zeros(shape), np.full(shape, terrain.ground_friction)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    height = np.zeros_like(x)
    friction = np.full_like(x, terrain.ground_friction)
    for box in terrain.boxes:
        inside = (np.abs(x - box.center[0]) <= box.size[0] / 2.0) & (
            np.abs(y - box.center[1]) <= box.size[1] / 2.0
        )
        above = inside & (box.top > height)
        height = np.where(above, box.top, height)
        friction = np.where(above, box.friction, friction)
    return height, friction


def _ray_box(origin: np.ndarray, direction: np.ndarray, box: Box) -> float:
    """Slab-test entry distance into an AABB; inf when the ray misses."""
    t_near, t_far = 0.0, math.inf
    for axis in range(3):
        lo = box.center[axis] - box.size[axis] / 2.0
        hi = box.center[axis] + box.size[axis] / 2.0
        o, d = origin[axis], direction[axis]
        if abs(d) < 1e-12:
            if o < lo or o > hi:
                return math.inf
            continue
        t1, t2 = (lo - o) / d, (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
        if t_near > t_far:
            return math.inf
    return t_near if t_near > 1e-12 else math.inf


def raycast(
    terrain: TerrainSpec,
    origin: np.ndarray,
    direction: np.ndarray,
    max_range: float = 2.0,
) -> float:
    """Nearest hit distance against the ground plane and all boxes (inf if none)."""
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    best = math.inf
    if direction[2] < -1e-12 and origin[2] > 0.0:
        best = -origin[2] / direction[2]
    for box in terrain.boxes:
        best = min(best, _ray_box(origin, direction, box))
    return best if best <= max_range else math.inf


# -- scene files ---------------------------------------------------------------


def dump_scene(terrain: TerrainSpec, path) -> None:
    doc = {
        "boxes": [
            {
                "center": list(b.center),
                "size": list(b.size),
                "friction": b.friction,
            }
            for b in terrain.boxes
        ],
        "ground_friction": terrain.ground_friction,
        "waypoints": [{"time": w.time, "x": w.x, "y": w.y} for w in terrain.waypoints],
        "modules": [
            {"time": m.time, "name": m.name, "enabled": m.enabled}
            for m in terrain.modules
        ],
        "duration": terrain.duration,
        "seed": terrain.seed,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_scene(path) -> TerrainSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneError(f"{path}: {exc}") from exc
    try:
        boxes = tuple(
            Box(
                center=tuple(float(v) for v in b["center"]),
                size=tuple(float(v) for v in b["size"]),
                friction=float(b.get("friction", 1.0)),
            )
            for b in doc.get("boxes", ())
        )
        waypoints = tuple(
            Waypoint(time=float(w["time"]), x=float(w["x"]), y=float(w["y"]))
            for w in doc.get("waypoints", ())
        )
        modules = tuple(
            ModuleEvent(
                time=float(m["time"]), name=str(m["name"]), enabled=bool(m["enabled"])
            )
            for m in doc.get("modules", ())
        )
        return TerrainSpec(
            boxes=boxes,
            ground_friction=float(doc.get("ground_friction", 1.0)),
            waypoints=waypoints,
            modules=modules,
            duration=float(doc.get("duration", 6.0)),
            seed=int(doc.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"{path}: {exc}") from exc
