"""Validation, transactional application, and state diffing for edit scripts.

apply_script is all-or-nothing: any error leaves the input state untouched
and reports every problem found, so a single reply from the agent carries the
complete picture back into the next round.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core.registry import AGE_RANGE, HEIGHT_RANGE, ParameterRegistry
from ..core.skeleton import CANONICAL_JOINTS
from ..core.state import (
    AvatarState,
    Warning,
    new_avatar,
    set_age,
    set_height,
    set_key,
    set_pose,
    set_slot,
    state_hash,
)
from ..errors import ForgeError
from .ast import Comment, EditScript, Pose, Preset, SetAge, SetHeight, SetKey, Span, Wear
from .printer import print_statement


@dataclass(frozen=True)
class Diagnostic:
    severity: str        # error | warning
    span: Span
    code: str            # unknown_key | out_of_range | duplicate_target | ...
    message: str


@dataclass
class ApplyReport:
    applied: int = 0
    warnings: list[str] = field(default_factory=list)
    errors: list[tuple[Span, str]] = field(default_factory=list)
    state_hash: str = ""

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        lines = [f"applied {self.applied} statements"]
        lines += [f"warning: {w}" for w in self.warnings]
        lines += [f"error at line {s[0]}, col {s[1]}: {m}" for s, m in self.errors]
        return "\n".join(lines)


def validate(script: EditScript, registry: ParameterRegistry) -> list[Diagnostic]:
    """Static checks against the registry; [] means clean."""
    diags: list[Diagnostic] = []
    seen_targets: set[str] = set()
    for stmt in script.statements:
        if isinstance(stmt, SetKey):
            target = f"{stmt.category}.{stmt.name}"
            alias = registry.aliases.get(stmt.name)
            kdef = registry.keys.get(stmt.name)
            if alias is None and kdef is None:
                suggestions = ", ".join(registry.suggest(stmt.name))
                diags.append(Diagnostic(
                    "error", stmt.span, "unknown_key",
                    f"unknown key {stmt.name!r}; nearest key names: {suggestions}",
                ))
                continue
            if kdef is not None and kdef.category != stmt.category:
                diags.append(Diagnostic(
                    "warning", stmt.span, "wrong_category",
                    f"key {stmt.name!r} is a {kdef.category} key, not {stmt.category}",
                ))
            if target in seen_targets:
                diags.append(Diagnostic(
                    "warning", stmt.span, "duplicate_target",
                    f"duplicate set of {target}; the last value wins",
                ))
            seen_targets.add(target)
            if kdef is not None and not kdef.lo <= stmt.value <= kdef.hi:
                diags.append(Diagnostic(
                    "warning", stmt.span, "out_of_range",
                    f"{stmt.value:g} is outside [{kdef.lo:g}, {kdef.hi:g}] for {stmt.name!r}; it will clamp",
                ))
        elif isinstance(stmt, SetHeight):
            if not HEIGHT_RANGE[0] <= stmt.value_cm <= HEIGHT_RANGE[1]:
                diags.append(Diagnostic(
                    "warning", stmt.span, "out_of_range",
                    f"height {stmt.value_cm:g} outside [{HEIGHT_RANGE[0]:g}, {HEIGHT_RANGE[1]:g}]; it will clamp",
                ))
        elif isinstance(stmt, SetAge):
            if not AGE_RANGE[0] <= stmt.years <= AGE_RANGE[1]:
                diags.append(Diagnostic(
                    "warning", stmt.span, "out_of_range",
                    f"age {stmt.years:g} outside [{AGE_RANGE[0]:g}, {AGE_RANGE[1]:g}]; it will clamp",
                ))
        elif isinstance(stmt, Wear):
            if stmt.slot not in registry.slots:
                diags.append(Diagnostic(
                    "error", stmt.span, "unknown_slot",
                    f"unknown slot {stmt.slot!r}; slots: {', '.join(registry.slots)}",
                ))
            else:
                info = registry.assets.get(stmt.asset)
                if info is None:
                    options = ", ".join(a.id for a in registry.assets_for_slot(stmt.slot)) or "(none)"
                    diags.append(Diagnostic(
                        "error", stmt.span, "unknown_asset",
                        f"unknown asset {stmt.asset!r}; assets for {stmt.slot!r}: {options}",
                    ))
                elif info.slot != stmt.slot:
                    diags.append(Diagnostic(
                        "error", stmt.span, "slot_mismatch",
                        f"asset {stmt.asset!r} belongs to slot {info.slot!r}, not {stmt.slot!r}",
                    ))
        elif isinstance(stmt, Pose):
            if stmt.joint not in CANONICAL_JOINTS:
                diags.append(Diagnostic(
                    "error", stmt.span, "unknown_joint",
                    f"unknown joint {stmt.joint!r}; joints: {', '.join(CANONICAL_JOINTS)}",
                ))
        elif isinstance(stmt, Preset):
            if stmt.id != "default" and stmt.id not in registry.presets:
                diags.append(Diagnostic(
                    "error", stmt.span, "unknown_preset",
                    f"unknown preset {stmt.id!r}; presets: {', '.join(registry.presets)}",
                ))
    return diags


def apply_script(
    script: EditScript,
    state: AvatarState,
    registry: ParameterRegistry,
    pack=None,
) -> tuple[AvatarState, ApplyReport]:
    """Apply a script transactionally: errors leave `state` unchanged."""
    report = ApplyReport()
    diags = validate(script, registry)
    for d in diags:
        if d.severity == "error":
            report.errors.append((d.span, d.message))
    if report.errors:
        report.state_hash = state_hash(state)
        return state, report

    current = state
    warnings: list[Warning] = []
    try:
        for stmt in script.statements:
            if isinstance(stmt, Comment):
                continue
            if isinstance(stmt, Preset):
                current = new_avatar(registry, None if stmt.id == "default" else stmt.id,
                                     seed=current.seed)
                w = []
            elif isinstance(stmt, SetKey):
                current, w = set_key(current, registry, stmt.name, stmt.value)
            elif isinstance(stmt, SetHeight):
                current, w = set_height(current, stmt.value_cm)
            elif isinstance(stmt, SetAge):
                current, w = set_age(current, stmt.years)
            elif isinstance(stmt, Wear):
                current, w = set_slot(current, registry, stmt.slot, stmt.asset)
            elif isinstance(stmt, Pose):
                current, w = set_pose(current, stmt.joint, stmt.rx, stmt.ry, stmt.rz)
            else:
                raise TypeError(f"unhandled statement {stmt!r}")
            report.applied += 1
            warnings.extend(w)
    except ForgeError as exc:
        # Defense in depth: validation should have caught this already.
        report.errors.append(((0, 0), str(exc)))
        report.state_hash = state_hash(state)
        return state, ApplyReport(0, [], report.errors, report.state_hash)

    report.warnings = [f"{w.kind}: {w.message}" for w in warnings]
    report.state_hash = state_hash(current)
    return current, report


def diff(before: AvatarState, after: AvatarState, registry: ParameterRegistry) -> EditScript:
    """Minimal script turning `before` into `after` (up to the state hash).

    Slots and pose entries can only be added or changed by the language, so a
    removal forces a reset through `preset default` followed by a full rebuild
    of `after`.
    """
    if state_hash(before) == state_hash(after):
        return EditScript()

    removed_slots = set(before.slots) - set(after.slots)
    removed_pose = set(before.pose) - set(after.pose)
    if removed_slots or removed_pose:
        fresh = new_avatar(registry, None, seed=after.seed)
        statements = [Preset("default")] + _field_diff(fresh, after, registry)
        return EditScript(tuple(statements))
    return EditScript(tuple(_field_diff(before, after, registry)))


def _field_diff(a: AvatarState, b: AvatarState, registry: ParameterRegistry) -> list:
    out = []
    categories = {k.name: k.category for k in registry.keys.values()}
    for name in sorted(set(a.key_values) | set(b.key_values)):
        av = a.key_values.get(name)
        bv = b.key_values.get(name)
        if bv is not None and av != bv:
            out.append(SetKey(categories.get(name, "body"), name, bv))
    if a.height_cm != b.height_cm:
        out.append(SetHeight(b.height_cm))
    if a.age_years != b.age_years:
        out.append(SetAge(b.age_years))
    for slot in sorted(b.slots):
        if a.slots.get(slot) != b.slots[slot]:
            out.append(Wear(slot, b.slots[slot]))
    for joint in sorted(b.pose):
        if a.pose.get(joint) != b.pose[joint]:
            rx, ry, rz = b.pose[joint]
            out.append(Pose(joint, rx, ry, rz))
    return out


def script_text(script: EditScript) -> str:
    return "".join(print_statement(s) + "\n" for s in script.statements)
