"""Kinematic hexapod model: hip layout, leg geometry, forward kinematics.

Each leg has a hip-yaw joint (J0), a femur-pitch joint (J1) and a tibia-pitch
joint (J2).  In the leg's sagittal plane, with r the horizontal reach from the
hip and z the height,

    r = coxa + femur*cos(q1) + tibia*cos(q1 - q2)
    z =        femur*sin(q1) + tibia*sin(q1 - q2)

so q1 > 0 raises the femur and q2 > 0 bends the knee downward.  A fully
stretched leg (q1 = q2 = 0) spans coxa + femur + tibia.  The neutral knee angle
is solved at model construction so the standing tip sits exactly
`neutral_height` below the hip plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .composer import N_JOINTS, N_LEGS

BODY_LENGTH = 0.42
LEG_REACH = 0.25  # coxa + femur + tibia fully stretched


@dataclass(frozen=True)
class RobotModel:
    body_length: float = BODY_LENGTH
    body_width: float = 0.24
    coxa: float = 0.05
    femur: float = 0.10
    tibia: float = 0.10
    neutral_height: float = 0.135
    neutral_femur_pitch: float = -0.5
    servo_time_constant: float = 0.05  # s, first-order position tracking
    joint_limits: np.ndarray = field(default=None, repr=False)  # (3, 2) rad

    def __post_init__(self):
        if self.joint_limits is None:
            limits = np.array([[-0.8, 0.8], [-1.5, 0.8], [-0.3, 2.2]])
        else:
            limits = np.array(self.joint_limits, dtype=float)
            if limits.shape != (N_JOINTS, 2):
                raise ValueError(f"joint_limits must be ({N_JOINTS}, 2)")
        limits.flags.writeable = False
        object.__setattr__(self, "joint_limits", limits)

        half_l = self.body_length / 2.0 - 0.03
        half_w = self.body_width / 2.0
        hips = np.array(
            [
                [half_l, half_w, 0.0],  # L1
                [half_l, -half_w, 0.0],  # R1
                [0.0, half_w, 0.0],  # L2
                [0.0, -half_w, 0.0],  # R2
                [-half_l, half_w, 0.0],  # L3
                [-half_l, -half_w, 0.0],  # R3
            ]
        )
        hips.flags.writeable = False
        object.__setattr__(self, "hip_positions", hips)
        yaws = np.array(
            [math.pi / 2, -math.pi / 2] * 3
        )  # legs point straight sideways at q0 = 0
        yaws.flags.writeable = False
        object.__setattr__(self, "mount_yaws", yaws)

        # Solve the neutral knee so the stance tip is exactly neutral_height
        # below the hip plane at the chosen femur pitch.
        q1 = self.neutral_femur_pitch
        s = (-self.neutral_height - self.femur * math.sin(q1)) / self.tibia
        if not -1.0 <= s <= 1.0:
            raise ValueError(
                f"neutral_height {self.neutral_height} unreachable at femur pitch {q1}"
            )
        q2 = q1 - math.asin(s)
        neutral = np.array([0.0, q1, q2])
        neutral.flags.writeable = False
        object.__setattr__(self, "neutral_angles", neutral)

    @property
    def leg_reach(self) -> float:
        return self.coxa + self.femur + self.tibia

    def neutral_joints(self) -> np.ndarray:
        return np.tile(self.neutral_angles, (N_LEGS, 1))

    def clamp(self, commands: np.ndarray) -> np.ndarray:
        return np.clip(commands, self.joint_limits[:, 0], self.joint_limits[:, 1])

    def leg_tips_body(self, joints: np.ndarray) -> np.ndarray:
        """Body-frame tip positions, (6, 3), for per-leg joint angles (6, 3)."""
        q0, q1, q2 = joints[:, 0], joints[:, 1], joints[:, 2]
        reach = self.coxa + self.femur * np.cos(q1) + self.tibia * np.cos(q1 - q2)
        height = self.femur * np.sin(q1) + self.tibia * np.sin(q1 - q2)
        ang = self.mount_yaws + q0
        tips = np.empty((N_LEGS, 3))
        tips[:, 0] = self.hip_positions[:, 0] + reach * np.cos(ang)
        tips[:, 1] = self.hip_positions[:, 1] + reach * np.sin(ang)
        tips[:, 2] = self.hip_positions[:, 2] + height
        return tips


DEFAULT_MODEL = RobotModel()
