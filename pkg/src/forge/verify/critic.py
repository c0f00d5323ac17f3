"""Verification critics.

The rule critic evaluates each extracted attribute through its registry
binding predicate: deterministic, offline, and the mandatory core of the
loop. The VLM critic scores rendered views against a fixed rubric and is
advisory or primary depending on configuration.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..agents.attributes import AttributeSpec
from ..agents.client import ChatClient
from ..core.mesh import Mesh, measure_height
from ..core.registry import ParameterRegistry
from ..core.state import AvatarState
from ..errors import EmptyMesh

ADVISORY_SCORE = 0.5

VLM_RUBRIC = ("anatomical_accuracy", "pose_alignment", "description_fidelity")


@dataclass
class Criterion:
    name: str
    passed: bool
    score: float                 # in [0, 1]
    evidence: str
    mandatory: bool = True


@dataclass
class CritiqueReport:
    round: int = 0
    criteria: list[Criterion] = field(default_factory=list)
    aggregate: float = 1.0
    passed: bool = True
    feedback_text: str = ""
    manual_candidate: tuple[tuple[str, ...], str, str] | None = None

    def finalize(self, threshold: float) -> "CritiqueReport":
        if self.criteria:
            self.aggregate = sum(c.score for c in self.criteria) / len(self.criteria)
        else:
            self.aggregate = 1.0
        mandatory_ok = all(c.passed for c in self.criteria if c.mandatory)
        self.passed = self.aggregate >= threshold and mandatory_ok
        return self

    def failed_criteria(self) -> list[Criterion]:
        return [c for c in self.criteria if not c.passed]

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "criteria": [
                {"name": c.name, "passed": c.passed, "score": c.score,
                 "evidence": c.evidence, "mandatory": c.mandatory}
                for c in self.criteria
            ],
            "aggregate": self.aggregate,
            "passed": self.passed,
            "feedback_text": self.feedback_text,
        }


# ---------------------------------------------------------------------------
# rule critic

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _match_tokens(text: str) -> set[str]:
    return {t.rstrip("s") for t in _TOKEN_RE.findall(text.lower())}


def _key_value(state: AvatarState, registry: ParameterRegistry, key: str) -> float:
    kdef = registry.keys.get(key)
    default = kdef.default if kdef else 0.0
    return state.key_values.get(key, default)


def _eval_predicate(predicate, state, registry, spec) -> tuple[bool, str, str]:
    """Returns (passed, evidence, fix guidance)."""
    op = predicate[0]
    if op == "key_min":
        key, lim = predicate[1], float(predicate[2])
        value = _key_value(state, registry, key)
        return (value >= lim,
                f"key {key!r} = {value:g} (needs >= {lim:g})",
                f"set the {key!r} key to {lim:g} or higher")
    if op == "key_max":
        key, lim = predicate[1], float(predicate[2])
        value = _key_value(state, registry, key)
        return (value <= lim,
                f"key {key!r} = {value:g} (needs <= {lim:g})",
                f"set the {key!r} key to {lim:g} or lower")
    if op == "key_between":
        key, lo, hi = predicate[1], float(predicate[2]), float(predicate[3])
        value = _key_value(state, registry, key)
        return (lo <= value <= hi,
                f"key {key!r} = {value:g} (needs [{lo:g}, {hi:g}])",
                f"keep the {key!r} key between {lo:g} and {hi:g}")
    if op == "height_min":
        lim = float(predicate[1])
        return (state.height_cm >= lim,
                f"height_cm = {state.height_cm:g} (needs >= {lim:g})",
                f"use height_cm = {lim:g} or more")
    if op == "height_max":
        lim = float(predicate[1])
        return (state.height_cm <= lim,
                f"height_cm = {state.height_cm:g} (needs <= {lim:g})",
                f"use height_cm = {lim:g} or less")
    if op == "height_between":
        lo, hi = float(predicate[1]), float(predicate[2])
        return (lo <= state.height_cm <= hi,
                f"height_cm = {state.height_cm:g} (needs [{lo:g}, {hi:g}])",
                f"keep height_cm between {lo:g} and {hi:g}")
    if op == "height_tolerance":
        tol = float(predicate[1])
        target = spec.height_cm or 0.0
        ok = abs(state.height_cm - target) <= tol
        return (ok,
                f"height_cm = {state.height_cm:g} (requested {target:g} +/- {tol:g})",
                f"set height_cm = {target:g}")
    if op == "age_tolerance":
        tol = float(predicate[1])
        target = spec.age_years or 0.0
        ok = abs(state.age_years - target) <= tol
        return (ok,
                f"age_years = {state.age_years:g} (requested {target:g} +/- {tol:g})",
                f"set age_years = {target:g}")
    raise ValueError(f"unknown predicate op {op!r}")


def _slot_criterion(slot: str, descriptor: str, color, state, registry) -> tuple[bool, str, str]:
    asset_id = state.slots.get(slot)
    want = _match_tokens(f"{descriptor} {color or ''}")
    if asset_id is None:
        options = [a.id for a in registry.assets_for_slot(slot)
                   if want & _match_tokens(" ".join(a.tags) + " " + a.id)]
        hint = options[0] if options else "(pick any matching asset)"
        return (False,
                f"slot {slot!r} is empty (requested {descriptor!r})",
                f'wear {slot} "{hint}"')
    info = registry.assets.get(asset_id)
    have = _match_tokens(" ".join(info.tags) + " " + info.id) if info else set()
    ok = bool(want & have)
    return (ok,
            f"slot {slot!r} = {asset_id!r}, tags {sorted(have)} vs requested {sorted(want)}",
            f"pick a {slot} asset whose tags match {sorted(want)}")


_ATTRIBUTE_TAGS = {
    "sex": ("body", "build"),
    "build": ("body", "build"),
    "height": ("height", "body"),
    "age": ("age", "face"),
    "facial_hair": ("face", "hair"),
    "hair": ("hair", "clothing"),
    "skin_tone": ("face", "skin"),
    "expression": ("face", "expression"),
    "pose": ("pose", "body"),
}


def criterion_tags(name: str) -> tuple[str, ...]:
    if name.startswith("clothing:"):
        return ("clothing", name.split(":", 1)[1])
    if name == "apply":
        return ("dsl", "apply")
    return _ATTRIBUTE_TAGS.get(name, (name, "body"))


def rule_critique(
    state: AvatarState,
    spec: AttributeSpec,
    registry: ParameterRegistry,
    mesh: Mesh | None = None,
    threshold: float = 1.0,
    round_no: int = 0,
) -> CritiqueReport:
    """Deterministic attribute-by-attribute verification."""
    report = CritiqueReport(round=round_no)
    guidance_bits: list[str] = []

    def bound_criterion(name: str, attribute: str, value) -> None:
        binding = registry.binding_for(attribute)
        if binding is None:
            report.criteria.append(Criterion(
                name=name, passed=True, score=ADVISORY_SCORE, mandatory=False,
                evidence=f"advisory: no binding for {attribute!r} (value {value!r})",
            ))
            return
        ok, evidence, fix = _eval_predicate(binding.predicate, state, registry, spec)
        report.criteria.append(Criterion(name=name, passed=ok, score=1.0 if ok else 0.0,
                                         evidence=evidence))
        if not ok:
            guidance_bits.append(f"When the request implies {attribute}, {fix}.")

    if spec.sex:
        bound_criterion("sex", f"sex={spec.sex}", spec.sex)
    if spec.build:
        bound_criterion("build", f"build={spec.build}", spec.build)
    if spec.height_cm is not None:
        bound_criterion("height", "height_numeric", spec.height_cm)
    elif spec.height_qualitative:
        bound_criterion("height", f"height={spec.height_qualitative}", spec.height_qualitative)
    if spec.age_years is not None:
        bound_criterion("age", "age_numeric", spec.age_years)
    if spec.facial_hair:
        bound_criterion("facial_hair", f"facial_hair={spec.facial_hair}", spec.facial_hair)
    if spec.hair:
        hair = spec.hair if isinstance(spec.hair, dict) else {"style": str(spec.hair)}
        ok, evidence, fix = _slot_criterion(
            "hair", str(hair.get("style", "")), hair.get("color"), state, registry)
        report.criteria.append(Criterion("hair", ok, 1.0 if ok else 0.0, evidence))
        if not ok:
            guidance_bits.append(f"For hair requests, {fix}.")
    for item in spec.clothing:
        name = f"clothing:{item.slot}"
        ok, evidence, fix = _slot_criterion(item.slot, item.descriptor, item.color, state, registry)
        report.criteria.append(Criterion(name, ok, 1.0 if ok else 0.0, evidence))
        if not ok:
            guidance_bits.append(f"For {item.descriptor!r} requests, {fix}.")
    for name in ("skin_tone", "expression", "pose"):
        value = getattr(spec, name)
        if value:
            report.criteria.append(Criterion(
                name=name, passed=True, score=ADVISORY_SCORE, mandatory=False,
                evidence=f"advisory: no binding for {name!r} (value {value!r})",
            ))

    if mesh is not None:
        try:
            measured = measure_height(mesh)
        except EmptyMesh:
            measured = None
        if measured is not None:
            for c in report.criteria:
                if c.name == "height":
                    c.evidence += f"; measured mesh height {measured:.1f} cm"

    report.finalize(threshold)
    report.feedback_text = _feedback_text(report)
    if not report.passed and report.failed_criteria():
        tags: list[str] = []
        for c in report.failed_criteria():
            for t in criterion_tags(c.name):
                if t not in tags:
                    tags.append(t)
        failure = "; ".join(f"{c.name}: {c.evidence}" for c in report.failed_criteria())
        report.manual_candidate = (tuple(tags), failure, " ".join(guidance_bits)[:500])
    if not report.criteria:
        report.feedback_text = "Degenerate: the input produced no checkable criteria."
    return report


def _feedback_text(report: CritiqueReport) -> str:
    if not report.criteria:
        return "Degenerate: the input produced no checkable criteria."
    lines = [f"Verification {'passed' if report.passed else 'failed'} "
             f"(aggregate {report.aggregate:.2f}):"]
    for c in report.criteria:
        mark = "PASS" if c.passed else "FAIL"
        lines.append(f"- {mark} {c.name}: {c.evidence}")
    if not report.passed:
        names = ", ".join(c.name for c in report.failed_criteria())
        lines.append(f"Fix the failed criteria ({names}) and keep the passing values.")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# VLM critic

_VLM_INSTRUCTIONS = f"""\
Score the avatar renders (front, back, left, right views) against the request.
Reply with ONE JSON object: {{"anatomical_accuracy": 0-10, "pose_alignment": 0-10,
"description_fidelity": 0-10}} and nothing else."""


def vlm_critique(
    renders: list[bytes],
    prompt_text: str,
    client: ChatClient,
    threshold: float = 0.8,
    round_no: int = 0,
) -> CritiqueReport:
    """Rubric scoring of the four canonical views (0-10, normalized)."""
    import base64

    if len(renders) != 4:
        raise ValueError(f"expected 4 renders (front, back, left, right), got {len(renders)}")
    content = [{"type": "text", "text": f"Request: {prompt_text}"}]
    for png in renders:
        content.append({
            "type": "image_url",
            "image_url": {"url": "data:image/png;base64," + base64.b64encode(png).decode()},
        })
    messages = [
        {"role": "system", "content": _VLM_INSTRUCTIONS},
        {"role": "user", "content": content},
    ]

    scores: dict[str, float] | None = None
    for attempt in range(2):
        reply = client.complete(messages)
        try:
            doc = json.loads(_first_json(reply))
            scores = {name: float(doc[name]) for name in VLM_RUBRIC}
            break
        except (ValueError, KeyError, TypeError):
            if attempt == 0:
                messages = messages + [
                    {"role": "assistant", "content": reply},
                    {"role": "user", "content":
                        "Reply with exactly the JSON object described, no other text."},
                ]

    report = CritiqueReport(round=round_no)
    for name in VLM_RUBRIC:
        if scores is None:
            report.criteria.append(Criterion(name, False, 0.0, "unscorable", mandatory=False))
        else:
            value = min(max(scores[name] / 10.0, 0.0), 1.0)
            report.criteria.append(Criterion(
                name, value >= threshold, value,
                f"{name} scored {scores[name]:g}/10", mandatory=False,
            ))
    report.finalize(threshold)
    report.feedback_text = _feedback_text(report)
    return report


def _first_json(text: str) -> str:
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        raise ValueError("no JSON object in reply")
    return text[start:end + 1]


def merge_reports(rule: CritiqueReport, vlm: CritiqueReport, threshold: float,
                  round_no: int) -> CritiqueReport:
    """Mode `both`: union of criteria; only rule criteria are mandatory."""
    report = CritiqueReport(round=round_no)
    report.criteria = list(rule.criteria) + [
        Criterion(c.name, c.passed, c.score, c.evidence, mandatory=False)
        for c in vlm.criteria
    ]
    report.finalize(threshold)
    report.feedback_text = _feedback_text(report)
    report.manual_candidate = rule.manual_candidate
    return report
