"""Composition of the base weight set with sensor-gated behavior modules.

Motor commands are built per leg and joint as

    M[l, j] = sign[l, j] * sum_h P_h[l] * (Wb[h, j]
              + sum_n routing_n[l, j] * S_n * Wn[h, j])

where P is the premotor activation vector evaluated at the leg's phase, Wb is
the always-active base set, and each module n contributes through a scalar gate
S_n and a static per-leg/per-joint routing mask in {-1, 0, +1}.  Disabled slots
are skipped outright, so a stack with a slot disabled computes the exact same
operation sequence as a stack built without it.

All legs share one learned trajectory (central encoding); the six legs differ
only by a phase offset (tripod gait: {L1, R2, L3} at 0, {R1, L2, R3} at half a
period) and a hip-yaw mirror sign between body sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .premotor import PremotorLayer, activations

N_LEGS = 6
N_JOINTS = 3  # J0 coxa yaw, J1 femur pitch, J2 tibia pitch
# Leg index order: L1, R1, L2, R2, L3, R3 (front to hind).
LEFT_LEGS = (0, 2, 4)
RIGHT_LEGS = (1, 3, 5)
FRONT_LEGS = (0, 1)
TRIPOD_A = (0, 3, 4)  # L1, R2, L3 — phase 0
TRIPOD_B = (1, 2, 5)  # R1, L2, R3 — phase T/2

WEIGHT_FORMAT_VERSION = 1


class DuplicateModuleError(ValueError):
    """A slot with that name is already in the stack."""


class UnknownModuleError(KeyError):
    """No slot with that name exists in the stack."""


class GateMismatchError(ValueError):
    """Gate vector length differs from the enabled slot count."""


class WeightFormatError(ValueError):
    """Weight file is malformed, wrong version, or wrong shape."""


def _frozen_array(values, shape=None, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class WeightSet:
    """One module's H x 3 matrix of plastic synapses (the learned policy)."""

    name: str
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.weights, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != N_JOINTS:
            raise ValueError(f"weights must be (H, {N_JOINTS}), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)

    @property
    def hidden_count(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ModuleSlot:
    """A gated weight set plus its per-leg/per-joint routing mask."""

    weight_set: WeightSet
    gate_source: str
    routing: np.ndarray = field(repr=False)  # (6, 3) in {-1, 0, +1}
    enabled: bool = True

    def __post_init__(self):
        arr = np.array(self.routing, dtype=float)
        if arr.shape != (N_LEGS, N_JOINTS):
            raise ValueError(f"routing must be ({N_LEGS}, {N_JOINTS}), got {arr.shape}")
        if not np.isin(arr, (-1.0, 0.0, 1.0)).all():
            raise ValueError("routing entries must be -1, 0 or +1")
        arr.flags.writeable = False
        object.__setattr__(self, "routing", arr)

    @property
    def name(self) -> str:
        return self.weight_set.name


def tripod_phase_offsets(period: int) -> np.ndarray:
    """Per-leg phase offsets in steps for the standard insect tripod."""
    offsets = np.zeros(N_LEGS, dtype=int)
    offsets[list(TRIPOD_B)] = period // 2
    offsets.flags.writeable = False
    return offsets


def mirror_joint_signs() -> np.ndarray:
    """Hip yaw mirrored between sides; pitch joints shared as-is."""
    signs = np.ones((N_LEGS, N_JOINTS))
    signs[list(RIGHT_LEGS), 0] = -1.0
    signs.flags.writeable = False
    return signs


@dataclass(frozen=True)
class ControllerStack:
    """Immutable controller snapshot: base set, module slots, leg phasing."""

    base: WeightSet
    slots: tuple[ModuleSlot, ...] = ()
    leg_phase: np.ndarray = field(default=None, repr=False)  # (6,) step offsets
    joint_sign: np.ndarray = field(default=None, repr=False)  # (6, 3)

    def __post_init__(self):
        if self.leg_phase is None:
            object.__setattr__(self, "leg_phase", np.zeros(N_LEGS, dtype=int))
        else:
            object.__setattr__(
                self, "leg_phase", _frozen_array(self.leg_phase, (N_LEGS,), int)
            )
        if self.joint_sign is None:
            object.__setattr__(self, "joint_sign", mirror_joint_signs())
        else:
            object.__setattr__(
                self, "joint_sign", _frozen_array(self.joint_sign, (N_LEGS, N_JOINTS))
            )
        names = [slot.name for slot in self.slots]
        if len(set(names)) != len(names):
            raise DuplicateModuleError(f"duplicate slot names in {names}")

    # -- slot management ----------------------------------------------------

    def slot_names(self) -> tuple[str, ...]:
        return tuple(slot.name for slot in self.slots)

    def enabled_slots(self) -> tuple[ModuleSlot, ...]:
        return tuple(slot for slot in self.slots if slot.enabled)

    def _index_of(self, name: str) -> int:
        for i, slot in enumerate(self.slots):
            if slot.name == name:
                return i
        raise UnknownModuleError(name)

    def add_module(self, slot: ModuleSlot) -> "ControllerStack":
        if slot.name in self.slot_names():
            raise DuplicateModuleError(slot.name)
        return replace(self, slots=self.slots + (slot,))

    def remove_module(self, name: str) -> "ControllerStack":
        i = self._index_of(name)
        return replace(self, slots=self.slots[:i] + self.slots[i + 1 :])

    def set_enabled(self, name: str, flag: bool) -> "ControllerStack":
        i = self._index_of(name)
        slots = list(self.slots)
        slots[i] = replace(slots[i], enabled=bool(flag))
        return replace(self, slots=tuple(slots))

    def with_base_weights(self, weights: np.ndarray) -> "ControllerStack":
        return replace(self, base=WeightSet(self.base.name, weights))

    def with_slot_weights(self, name: str, weights: np.ndarray) -> "ControllerStack":
        i = self._index_of(name)
        slots = list(self.slots)
        slots[i] = replace(
            slots[i], weight_set=WeightSet(name, weights)
        )
        return replace(self, slots=tuple(slots))

    # -- evaluation ----------------------------------------------------------

    def _slot_term(self, slot: ModuleSlot, acts: np.ndarray, gate: float) -> np.ndarray:
        return slot.routing * (gate * (acts @ slot.weight_set.weights))

    def motor_output(self, activations_per_leg: np.ndarray, gates) -> np.ndarray:
        """Joint position commands (6 x 3) for one control step."""
        acts = np.asarray(activations_per_leg, dtype=float)
        if acts.shape != (N_LEGS, self.base.hidden_count):
            raise ValueError(
                f"activations must be ({N_LEGS}, {self.base.hidden_count}),"
                f" got {acts.shape}"
            )
        enabled = self.enabled_slots()
        gates = list(gates)
        if len(gates) != len(enabled):
            raise GateMismatchError(
                f"{len(gates)} gates supplied for {len(enabled)} enabled slots"
            )
        total = acts @ self.base.weights
        for slot, gate in zip(enabled, gates):
            total = total + self._slot_term(slot, acts, float(gate))
        return self.joint_sign * total

    def base_contribution(self, activations_per_leg: np.ndarray) -> np.ndarray:
        acts = np.asarray(activations_per_leg, dtype=float)
        return self.joint_sign * (acts @ self.base.weights)

    def module_contribution(
        self, activations_per_leg: np.ndarray, gates, name: str
    ) -> np.ndarray:
        """The named slot's additive term of the motor output (raw, unnormalized)."""
        i = self._index_of(name)
        slot = self.slots[i]
        if not slot.enabled:
            return np.zeros((N_LEGS, N_JOINTS))
        enabled = self.enabled_slots()
        gates = list(gates)
        if len(gates) != len(enabled):
            raise GateMismatchError(
                f"{len(gates)} gates supplied for {len(enabled)} enabled slots"
            )
        gate = float(gates[enabled.index(slot)])
        acts = np.asarray(activations_per_leg, dtype=float)
        return self.joint_sign * self._slot_term(slot, acts, gate)


def leg_activations(
    layer: PremotorLayer,
    cpg_trace: np.ndarray,
    step_index: int,
    stack: ControllerStack,
) -> np.ndarray:
    """Per-leg activation rows at phase (step_index + leg offset) mod T."""
    trace = np.asarray(cpg_trace, dtype=float)
    period = len(trace)
    rows = np.empty((N_LEGS, layer.params.hidden_count))
    for leg in range(N_LEGS):
        o0, o1 = trace[(step_index + int(stack.leg_phase[leg])) % period]
        rows[leg] = activations(layer, o0, o1)
    return rows


# -- serialization -----------------------------------------------------------
#
# Versioned JSON document; floats round-trip bit-exactly via repr (17
# significant digits).  The base set is stored with routing null and an empty
# gate source.


@dataclass(frozen=True)
class WeightRecord:
    """A weight set as stored on disk, with its slot wiring (if any)."""

    weight_set: WeightSet
    routing: np.ndarray | None = None
    gate_source: str = ""

    def is_base(self) -> bool:
        return self.routing is None

    def to_slot(self, enabled: bool = True) -> ModuleSlot:
        if self.routing is None:
            raise WeightFormatError(
                f"weight set '{self.weight_set.name}' has no routing; it is a base set"
            )
        return ModuleSlot(
            weight_set=self.weight_set,
            gate_source=self.gate_source,
            routing=self.routing,
            enabled=enabled,
        )


def save_weights(record: WeightRecord | WeightSet, path) -> None:
    if isinstance(record, WeightSet):
        record = WeightRecord(weight_set=record)
    ws = record.weight_set
    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "name": ws.name,
        "hidden_count": ws.hidden_count,
        "joints": N_JOINTS,
        "weights": [[float(v) for v in row] for row in ws.weights],
        "routing": None
        if record.routing is None
        else [[int(v) for v in row] for row in record.routing],
        "gate_source": record.gate_source,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_weights(path) -> WeightRecord:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise WeightFormatError(f"{path}: not valid JSON ({exc})") from exc
    version = doc.get("format_version")
    if version != WEIGHT_FORMAT_VERSION:
        raise WeightFormatError(
            f"{path}: format version {version!r}, expected {WEIGHT_FORMAT_VERSION}"
        )
    h = int(doc["hidden_count"])
    joints = int(doc["joints"])
    if joints != N_JOINTS:
        raise WeightFormatError(f"{path}: joint count {joints}, expected {N_JOINTS}")
    weights = np.array(doc["weights"], dtype=float)
    if weights.shape != (h, joints):
        raise WeightFormatError(
            f"{path}: weights shape {weights.shape} does not match"
            f" hidden_count={h}, joints={joints}"
        )
    routing = doc.get("routing")
    if routing is not None:
        routing = np.array(routing, dtype=float)
        if routing.shape != (N_LEGS, N_JOINTS):
            raise WeightFormatError(f"{path}: routing shape {routing.shape}")
    return WeightRecord(
        weight_set=WeightSet(str(doc["name"]), weights),
        routing=routing,
        gate_source=str(doc.get("gate_source", "")),
    )
