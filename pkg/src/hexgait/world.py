"""Quasi-static hexapod world: contact, friction-budget slip, and pose fitting.

Per control step the joints track their commands through a first-order servo
lag, the legs' body-frame tips are recomputed, and the body pose is re-fit so
that stance tips stay planted:

  * horizontal (x, y, yaw): 2-D rigid Procrustes fit of the holding tips onto
    their ground anchors.  Any holding tip whose fit residual exceeds its
    friction budget is released as slipping and the fit repeats without it —
    the tip then drags with the leg and the body gains no propulsion from it.
  * vertical (z, roll, pitch): linearized least squares pushing every contact
    tip's height onto its supporting surface.

A tip touches down when its predicted height reaches the local surface, keeps
contact while within a small retention band, and is recorded exactly on the
surface while in contact.  With no contacts the body simply descends.  There is
no inertia anywhere: zero commanded motion moves nothing, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .composer import N_LEGS
from .robot import RobotModel
from .sensors import ObstacleSensorConfig
from .terrain import TerrainSpec, raycast, surface_at

CONTROL_RATE = 60.0  # Hz
DT = 1.0 / CONTROL_RATE

TOUCHDOWN_TOL = 1e-9  # m: a tip must reach the surface to gain contact
RETENTION_TOL = 1e-3  # m: hysteresis band before a contact tip lifts off
GRIP_PER_STEP = 0.006  # m of tangential hold per step at friction 1
FREE_FALL_PER_STEP = 0.03  # m descent per step with no support
FALL_HEIGHT_FRACTION = 0.2  # of neutral stance height
FALL_ANGLE = math.pi / 3  # rad, roll or pitch beyond this is a fall
MAX_TILT_STEP = 0.2  # rad per step, vertical-fit safety cap
MAX_Z_STEP = 0.05  # m per step, vertical-fit safety cap
_SLIP_ITERATIONS = N_LEGS + 1


@dataclass(frozen=True)
class WorldState:
    """Snapshot of the body pose, joints, and per-leg contact bookkeeping."""

    position: np.ndarray = field(repr=False)  # (3,)
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    joints: np.ndarray = field(default=None, repr=False)  # (6, 3)
    tips: np.ndarray = field(default=None, repr=False)  # (6, 3) world
    contact: np.ndarray = field(default=None, repr=False)  # (6,) bool
    tip_speed: np.ndarray = field(default=None, repr=False)  # (6,) m/s tangential
    anchors: np.ndarray = field(default=None, repr=False)  # (6, 3) stance anchors
    fallen: bool = False
    step_count: int = 0
    body_offset: np.ndarray = field(default=None, repr=False)  # (3,) reference shift
    rot: np.ndarray = field(default=None, repr=False)  # cached world-from-body (3, 3)

    def __post_init__(self):
        if self.rot is None:
            object.__setattr__(self, "rot", rotation(self.yaw, self.pitch, self.roll))

    @property
    def pose(self) -> tuple[float, float, float, float, float, float]:
        return (*self.position, self.yaw, self.pitch, self.roll)


@dataclass(frozen=True)
class Observation:
    distance: float  # head raycast, inf for no return
    roll: float
    pitch: float
    yaw: float
    clearance: float  # body height above the surface under the body center


def rotation(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """World-from-body rotation, Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def _ground(terrain: TerrainSpec, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return surface_at(terrain, xy[..., 0], xy[..., 1])


def initial_state(
    model: RobotModel,
    terrain: TerrainSpec,
    body_offset: np.ndarray | None = None,
) -> WorldState:
    """Neutral stance at the origin; tips snapped to whatever is below them."""
    offset = np.zeros(3) if body_offset is None else np.asarray(body_offset, float)
    joints = model.neutral_joints()
    body_tips = model.leg_tips_body(joints) - offset
    ground0, _ = surface_at(terrain, 0.0, 0.0)
    position = np.array([0.0, 0.0, float(ground0) + model.neutral_height])
    tips = body_tips + position
    heights, _ = _ground(terrain, tips[:, :2])
    contact = tips[:, 2] <= heights + RETENTION_TOL
    anchors = tips.copy()
    anchors[:, 2] = np.where(contact, heights, anchors[:, 2])
    tips = anchors.copy()
    return WorldState(
        position=position,
        joints=joints,
        tips=tips,
        contact=contact,
        tip_speed=np.zeros(N_LEGS),
        anchors=anchors,
        body_offset=offset,
    )


def _fit_horizontal(
    rel_tips: np.ndarray, rel_anchors: np.ndarray
) -> tuple[np.ndarray, float]:
    """2-D rigid fit (translation, yaw increment) of tips onto anchors."""
    cu = rel_tips.mean(axis=0)
    cr = rel_anchors.mean(axis=0)
    du = rel_tips - cu
    dr = rel_anchors - cr
    sxx = float(np.sum(du * dr))
    sxy = float(np.sum(du[:, 0] * dr[:, 1] - du[:, 1] * dr[:, 0]))
    dpsi = math.atan2(sxy, sxx) if (sxx != 0.0 or sxy != 0.0) else 0.0
    c, s = math.cos(dpsi), math.sin(dpsi)
    rot = np.array([[c, -s], [s, c]])
    shift = cr - rot @ cu
    return shift, dpsi


def step_world(
    state: WorldState,
    joint_commands: np.ndarray,
    terrain: TerrainSpec,
    model: RobotModel,
    dt: float = DT,
) -> WorldState:
    """One quasi-static control step; returns the successor state."""
    if state.fallen:
        return replace(state, step_count=state.step_count + 1, tip_speed=np.zeros(N_LEGS))

    commands = model.clamp(np.asarray(joint_commands, dtype=float))
    beta = 1.0 - math.exp(-dt / model.servo_time_constant)
    joints = state.joints + beta * (commands - state.joints)
    body_tips = model.leg_tips_body(joints) - state.body_offset

    pos = state.position
    offsets = body_tips @ state.rot.T
    predicted = pos + offsets

    heights, _ = _ground(terrain, predicted[:, :2])
    margin = np.where(state.contact, RETENTION_TOL, TOUCHDOWN_TOL)
    contact = predicted[:, 2] <= heights + margin

    if not contact.any():
        position = pos - np.array([0.0, 0.0, FREE_FALL_PER_STEP])
        tips = position + offsets
        return _finish(
            state, terrain, model, position, state.yaw, state.pitch, state.roll,
            joints, tips, contact, np.zeros(N_LEGS, bool), tips.copy(), state.rot,
        )

    anchors = state.anchors.copy()
    fresh = contact & ~state.contact
    if fresh.any():
        anchors[fresh, 0] = predicted[fresh, 0]
        anchors[fresh, 1] = predicted[fresh, 1]
        anchors[fresh, 2] = heights[fresh]

    # Horizontal fit with friction-budget slip release.
    _, anchor_friction = _ground(terrain, anchors[:, :2])
    budget = anchor_friction * GRIP_PER_STEP
    hold = contact.copy()
    shift = np.zeros(2)
    dpsi = 0.0
    for _ in range(_SLIP_ITERATIONS):
        idx = np.flatnonzero(hold)
        if idx.size == 0:
            shift = np.zeros(2)
            dpsi = 0.0
            break
        rel_tips = offsets[idx, :2]
        rel_anchors = anchors[idx, :2] - pos[:2]
        if idx.size == 1:
            shift = rel_anchors[0] - rel_tips[0]
            dpsi = 0.0
        else:
            shift, dpsi = _fit_horizontal(rel_tips, rel_anchors)
        c, s = math.cos(dpsi), math.sin(dpsi)
        fitted_x = shift[0] + c * rel_tips[:, 0] - s * rel_tips[:, 1]
        fitted_y = shift[1] + s * rel_tips[:, 0] + c * rel_tips[:, 1]
        residual = np.hypot(fitted_x - rel_anchors[:, 0], fitted_y - rel_anchors[:, 1])
        slipping = residual > budget[idx]
        if not slipping.any():
            break
        hold[idx[slipping]] = False

    yaw = state.yaw + dpsi
    position = np.array([pos[0] + shift[0], pos[1] + shift[1], pos[2]])

    # Vertical fit: push contact tip heights onto their support.
    rot_yawed = rotation(yaw, state.pitch, state.roll)
    offsets = body_tips @ rot_yawed.T
    cidx = np.flatnonzero(contact)
    tip_xy = position[:2] + offsets[cidx, :2]
    target_z = np.where(
        hold[cidx],
        anchors[cidx, 2],
        surface_at(terrain, tip_xy[:, 0], tip_xy[:, 1])[0],
    )
    gap = target_z - (position[2] + offsets[cidx, 2])
    cy, sy = math.cos(yaw), math.sin(yaw)
    local_x = cy * offsets[cidx, 0] + sy * offsets[cidx, 1]
    local_y = -sy * offsets[cidx, 0] + cy * offsets[cidx, 1]
    dz, droll, dpitch = _solve_vertical(gap, local_x, local_y)
    dz = min(max(dz, -MAX_Z_STEP), MAX_Z_STEP)
    droll = min(max(droll, -MAX_TILT_STEP), MAX_TILT_STEP)
    dpitch = min(max(dpitch, -MAX_TILT_STEP), MAX_TILT_STEP)
    position[2] += dz
    roll = state.roll + droll
    pitch = state.pitch + dpitch

    # Final tip placement: holding tips sit on their anchors, slipping tips
    # follow the leg with their height snapped to the surface, swing tips are
    # free.  Slipping tips re-anchor where they ended up.
    rot_new = rotation(yaw, pitch, roll)
    tips = position + body_tips @ rot_new.T
    slipped = contact & ~hold
    if slipped.any():
        sidx = np.flatnonzero(slipped)
        tips[sidx, 2] = surface_at(terrain, tips[sidx, 0], tips[sidx, 1])[0]
        anchors[sidx] = tips[sidx]
    hidx = np.flatnonzero(hold)
    tips[hidx] = anchors[hidx]

    return _finish(
        state, terrain, model, position, yaw, pitch, roll, joints, tips, contact,
        hold, anchors, rot_new,
    )


def _solve_vertical(
    gap: np.ndarray, local_x: np.ndarray, local_y: np.ndarray
) -> tuple[float, float, float]:
    """Least-squares (dz, droll, dpitch) moving contact tips onto their targets.

    Normal equations of [1, y, -x] solved in closed form; degenerate support
    geometry (near-collinear tips) falls back to a height-only shift.
    """
    n = len(gap)
    if n == 0:
        return 0.0, 0.0, 0.0
    if n < 3:
        return float(gap.mean()), 0.0, 0.0
    yv = local_y
    xv = -local_x
    a00 = float(n)
    a01 = float(yv.sum())
    a02 = float(xv.sum())
    a11 = float(yv @ yv)
    a12 = float(yv @ xv)
    a22 = float(xv @ xv)
    b0 = float(gap.sum())
    b1 = float(yv @ gap)
    b2 = float(xv @ gap)
    det = (
        a00 * (a11 * a22 - a12 * a12)
        - a01 * (a01 * a22 - a12 * a02)
        + a02 * (a01 * a12 - a11 * a02)
    )
    if abs(det) < 1e-12:
        return float(gap.mean()), 0.0, 0.0
    i00 = a11 * a22 - a12 * a12
    i01 = a02 * a12 - a01 * a22
    i02 = a01 * a12 - a02 * a11
    i11 = a00 * a22 - a02 * a02
    i12 = a01 * a02 - a00 * a12
    i22 = a00 * a11 - a01 * a01
    dz = (i00 * b0 + i01 * b1 + i02 * b2) / det
    droll = (i01 * b0 + i11 * b1 + i12 * b2) / det
    dpitch = (i02 * b0 + i12 * b1 + i22 * b2) / det
    return dz, droll, dpitch


def _finish(
    state: WorldState,
    terrain: TerrainSpec,
    model: RobotModel,
    position: np.ndarray,
    yaw: float,
    pitch: float,
    roll: float,
    joints: np.ndarray,
    tips: np.ndarray,
    contact: np.ndarray,
    hold: np.ndarray,
    anchors: np.ndarray,
    rot: np.ndarray,
) -> WorldState:
    # Tangential speed counts only while contact persists across the step:
    # swing motion before touchdown is not slip.
    continuing = contact & state.contact
    dxy = np.hypot(
        tips[:, 0] - state.tips[:, 0], tips[:, 1] - state.tips[:, 1]
    )
    tip_speed = np.where(continuing, dxy / DT, 0.0)

    ground_center, _ = surface_at(terrain, position[0], position[1])
    clearance = position[2] - float(ground_center)
    fallen = (
        clearance < FALL_HEIGHT_FRACTION * model.neutral_height
        or abs(roll) > FALL_ANGLE
        or abs(pitch) > FALL_ANGLE
    )
    return WorldState(
        position=position,
        yaw=yaw,
        pitch=pitch,
        roll=roll,
        joints=joints,
        tips=tips,
        contact=contact,
        tip_speed=tip_speed,
        anchors=anchors,
        fallen=bool(fallen),
        step_count=state.step_count + 1,
        body_offset=state.body_offset,
        rot=rot,
    )


def observe(
    state: WorldState,
    terrain: TerrainSpec,
    model: RobotModel,
    sensor: ObstacleSensorConfig,
    max_range: float = 2.0,
) -> Observation:
    """Head raycast plus the pose angles the gate pipeline consumes."""
    rot = state.rot
    head = state.position + rot @ (
        np.array([model.body_length / 2.0, 0.0, 0.0]) - state.body_offset
    )
    pitch_rad = math.radians(sensor.mount_pitch_deg)
    direction = rot @ np.array([math.sin(pitch_rad), 0.0, -math.cos(pitch_rad)])
    distance = raycast(terrain, head, direction, max_range=max_range)
    ground_center, _ = surface_at(terrain, state.position[0], state.position[1])
    return Observation(
        distance=distance,
        roll=state.roll,
        pitch=state.pitch,
        yaw=state.yaw,
        clearance=float(state.position[2] - ground_center),
    )
