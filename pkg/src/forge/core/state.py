"""Avatar state: a value type plus pure setter operations.

Setters never mutate; they return a new state and a (possibly empty) list of
warnings. Out-of-range inputs clamp with a warning, NaN/inf is rejected, and
unknown names fail with suggestions so agents can self-correct.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from ..errors import (
    InvalidNumber,
    SlotMismatch,
    UnknownAsset,
    UnknownJoint,
    UnknownKey,
    UnknownPreset,
    UnknownSlot,
)
from .registry import AGE_RANGE, DEFAULT_AGE, HEIGHT_RANGE, ParameterRegistry
from .skeleton import CANONICAL_JOINTS


@dataclass(frozen=True)
class Warning:
    kind: str          # clamp | override | dropped_channel | ...
    message: str


@dataclass(frozen=True)
class AvatarState:
    key_values: dict[str, float] = field(default_factory=dict)
    height_cm: float = 175.0
    age_years: float = DEFAULT_AGE
    slots: dict[str, str] = field(default_factory=dict)
    pose: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    seed: int = 0
    preset: str | None = None


def new_avatar(registry: ParameterRegistry, preset: str | None = None, seed: int = 0) -> AvatarState:
    """Fresh avatar: registry defaults, optionally overridden by a preset.

    Identical (seed, preset) always yields an identical state. The reserved
    preset name 'default' means plain defaults.
    """
    key_values = {k.name: k.default for k in registry.keys.values()}
    state = AvatarState(
        key_values=key_values,
        height_cm=registry.base_height_cm,
        age_years=DEFAULT_AGE,
        slots={},
        pose={},
        seed=seed,
        preset=None,
    )
    if preset is None or preset == "default":
        return state
    pdef = registry.presets.get(preset)
    if pdef is None:
        known = ", ".join(registry.presets) or "(none)"
        raise UnknownPreset(f"unknown preset {preset!r}; available: {known}")
    key_values.update(pdef.key_values)
    return replace(
        state,
        key_values=key_values,
        height_cm=pdef.height_cm if pdef.height_cm is not None else state.height_cm,
        age_years=pdef.age_years if pdef.age_years is not None else state.age_years,
        slots=dict(pdef.slots),
        preset=preset,
    )


def _check_finite(value: float, what: str) -> float:
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise InvalidNumber(f"{what} must be a finite number, got {value!r}")
    return value


def _clamp(value: float, lo: float, hi: float, what: str) -> tuple[float, list[Warning]]:
    if value < lo or value > hi:
        clamped = min(max(value, lo), hi)
        return clamped, [Warning("clamp", f"{what} {value:g} clamped to {clamped:g} (range [{lo:g}, {hi:g}])")]
    return value, []


def set_key(
    state: AvatarState, registry: ParameterRegistry, name: str, value: float
) -> tuple[AvatarState, list[Warning]]:
    value = _check_finite(value, f"key {name!r}")
    alias = registry.aliases.get(name)
    if alias == "height_cm":
        return set_height(state, value)
    if alias == "age_years":
        return set_age(state, value)
    kdef = registry.keys.get(name)
    if kdef is None:
        raise UnknownKey(name, registry.suggest(name))
    value, warnings = _clamp(value, kdef.lo, kdef.hi, f"key {name!r}")
    key_values = dict(state.key_values)
    key_values[name] = value
    return replace(state, key_values=key_values), warnings


def set_height(state: AvatarState, value_cm: float) -> tuple[AvatarState, list[Warning]]:
    value_cm = _check_finite(value_cm, "height_cm")
    value_cm, warnings = _clamp(value_cm, *HEIGHT_RANGE, "height_cm")
    return replace(state, height_cm=value_cm), warnings


def set_age(state: AvatarState, years: float) -> tuple[AvatarState, list[Warning]]:
    years = _check_finite(years, "age_years")
    years, warnings = _clamp(years, *AGE_RANGE, "age_years")
    return replace(state, age_years=years), warnings


def aging_weight(age_years: float) -> float:
    """Linear aging curve: 0 at age 25, 1 at age 80."""
    return min(max((age_years - DEFAULT_AGE) / 55.0, 0.0), 1.0)


def set_slot(
    state: AvatarState, registry: ParameterRegistry, slot: str, asset: str
) -> tuple[AvatarState, list[Warning]]:
    if slot not in registry.slots:
        known = ", ".join(registry.slots)
        raise UnknownSlot(f"unknown slot {slot!r}; slots: {known}")
    info = registry.assets.get(asset)
    if info is None:
        candidates = ", ".join(a.id for a in registry.assets_for_slot(slot)) or "(none)"
        raise UnknownAsset(f"unknown asset {asset!r}; assets for slot {slot!r}: {candidates}")
    if info.slot != slot:
        raise SlotMismatch(f"asset {asset!r} is tagged for slot {info.slot!r}, not {slot!r}")
    warnings = []
    if slot in state.slots:
        warnings.append(Warning("override", f"slot {slot!r} rebound from {state.slots[slot]!r} to {asset!r}"))
    slots = dict(state.slots)
    slots[slot] = asset
    return replace(state, slots=slots), warnings


def set_pose(
    state: AvatarState, joint: str, rx: float, ry: float, rz: float
) -> tuple[AvatarState, list[Warning]]:
    if joint not in CANONICAL_JOINTS:
        known = ", ".join(CANONICAL_JOINTS)
        raise UnknownJoint(f"unknown joint {joint!r}; joints: {known}")
    angles = tuple(_check_finite(a, f"pose {joint}") for a in (rx, ry, rz))
    pose = dict(state.pose)
    pose[joint] = angles
    return replace(state, pose=pose), []


def state_hash(state: AvatarState) -> str:
    """Hash of the observable avatar parameters.

    Seed and preset are provenance, not geometry, and are excluded so that a
    state rebuilt through an edit script hashes identically.
    """
    doc = {
        "keys": {k: repr(v) for k, v in sorted(state.key_values.items())},
        "height_cm": repr(state.height_cm),
        "age_years": repr(state.age_years),
        "slots": dict(sorted(state.slots.items())),
        "pose": {j: [repr(a) for a in angles] for j, angles in sorted(state.pose.items())},
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def state_to_json(state: AvatarState) -> dict:
    return {
        "key_values": dict(sorted(state.key_values.items())),
        "height_cm": state.height_cm,
        "age_years": state.age_years,
        "slots": dict(sorted(state.slots.items())),
        "pose": {j: list(a) for j, a in sorted(state.pose.items())},
        "seed": state.seed,
        "preset": state.preset,
    }


def state_from_json(doc: dict) -> AvatarState:
    return AvatarState(
        key_values={k: float(v) for k, v in doc.get("key_values", {}).items()},
        height_cm=float(doc.get("height_cm", 175.0)),
        age_years=float(doc.get("age_years", DEFAULT_AGE)),
        slots=dict(doc.get("slots", {})),
        pose={j: tuple(float(x) for x in a) for j, a in doc.get("pose", {}).items()},
        seed=int(doc.get("seed", 0)),
        preset=doc.get("preset"),
    )
