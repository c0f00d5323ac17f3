"""Deterministic prompt assembly with a hard token budget.

The bundle mandates the chain-of-thought reply sections (Observation, Plan,
Reminders, Code); only Code is machine-consumed. Manual guidance is trimmed
lowest-score-first when the budget bites, and free-text sections are cut
before the structural ones, so the grammar and registry digest always ride
along.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..core.registry import ParameterRegistry
from ..core.state import AvatarState
from ..dsl.parser import GRAMMAR
from .attributes import AttributeSpec

MIN_BUDGET_TOKENS = 1200
DEFAULT_BUDGET_TOKENS = 6000

SYSTEM_PREAMBLE = """\
You drive a parametric humanoid generator by writing edit scripts. Study the
generator reference and usage guidance, then reply with exactly these
sections, in order:

Observation: what the request asks for.
Plan: the concrete parameter choices and why.
Reminders: pitfalls to avoid, from the usage guidance.
Code: one fenced block, ```aedit ... ```, containing only edit-language
statements.
"""

REPLY_FORMAT = """\
Reply sections: Observation / Plan / Reminders / Code. The Code section must
be a single ```aedit fenced block of edit-language statements and is the only
part that gets executed."""


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


@dataclass
class PromptBundle:
    system: str
    sections: list[tuple[str, str]]          # ordered (title, body)
    token_budget: int
    dropped_manual: int = 0

    def text(self) -> str:
        parts = []
        for title, body in self.sections:
            parts.append(f"## {title}\n{body}")
        return "\n\n".join(parts)

    def messages(self) -> list[dict]:
        return [
            {"role": "system", "content": self.system},
            {"role": "user", "content": self.text()},
        ]

    def token_estimate(self) -> int:
        return estimate_tokens(self.system) + estimate_tokens(self.text())


def state_digest(state: AvatarState, registry: ParameterRegistry) -> str:
    lines = [f"height_cm = {state.height_cm:g}", f"age_years = {state.age_years:g}"]
    for name in sorted(state.key_values):
        value = state.key_values[name]
        default = registry.keys[name].default if name in registry.keys else 0.0
        if value != default:
            lines.append(f"{name} = {value:g}")
    for slot in sorted(state.slots):
        lines.append(f"{slot} = {state.slots[slot]}")
    for joint in sorted(state.pose):
        rx, ry, rz = state.pose[joint]
        lines.append(f"pose {joint} = ({rx:g}, {ry:g}, {rz:g})")
    return "\n".join(lines)


def build_prompt(
    spec: AttributeSpec | None,
    state: AvatarState | None,
    registry: ParameterRegistry,
    manual_hits: list,
    prior_report=None,
    budget_tokens: int = DEFAULT_BUDGET_TOKENS,
    extra_request: str = "",
) -> PromptBundle:
    """Assemble the generation prompt; deterministic for identical inputs."""
    if budget_tokens < MIN_BUDGET_TOKENS:
        raise ValueError(f"token budget must be at least {MIN_BUDGET_TOKENS}")

    manual_hits = list(manual_hits)
    dropped = 0

    def sections_for(hits: list) -> list[tuple[str, str]]:
        out: list[tuple[str, str]] = []
        out.append(("Generator reference", registry.digest()))
        out.append(("Edit language", GRAMMAR.rstrip()))
        if hits:
            guidance = "\n".join(f"- [{', '.join(e.tags)}] {e.guidance}" for e in hits)
        else:
            guidance = "(none yet)"
        out.append(("Usage guidance", guidance))
        if spec is not None:
            import json as _json
            out.append(("Request attributes", _json.dumps(spec.to_json(), sort_keys=True, indent=1)))
        if extra_request:
            out.append(("Request", extra_request))
        if state is not None:
            out.append(("Current avatar state", state_digest(state, registry)))
        feedback = ""
        if prior_report is not None:
            feedback = getattr(prior_report, "feedback_text", "") or ""
        out.append(("Previous critique", feedback if feedback else "(none)"))
        out.append(("Reply format", REPLY_FORMAT))
        return out

    bundle = PromptBundle(SYSTEM_PREAMBLE, sections_for(manual_hits), budget_tokens)
    while bundle.token_estimate() > budget_tokens and manual_hits:
        manual_hits.pop()     # hits arrive best-first; drop from the tail
        dropped += 1
        bundle = PromptBundle(SYSTEM_PREAMBLE, sections_for(manual_hits), budget_tokens)

    if bundle.token_estimate() > budget_tokens:
        bundle = PromptBundle(
            SYSTEM_PREAMBLE,
            _shrink_sections(bundle.sections, budget_tokens),
            budget_tokens,
        )
    bundle.dropped_manual = dropped
    return bundle


def _shrink_sections(sections: list[tuple[str, str]], budget_tokens: int) -> list[tuple[str, str]]:
    """Cut free-text sections, then the registry digest, to honor the budget."""
    sections = dict(sections)
    soft = ("Previous critique", "Request attributes", "Request", "Current avatar state",
            "Generator reference")
    for title in soft:
        body = sections.get(title)
        if body is None:
            continue
        over_chars = _over_chars(sections, budget_tokens)
        if over_chars <= 0:
            break
        keep = max(len(body) - over_chars - 16, 64)
        if keep < len(body):
            sections[title] = body[:keep] + "\n...(truncated)"
    return list(sections.items())


def _over_chars(sections: dict, budget_tokens: int) -> int:
    text = "\n\n".join(f"## {t}\n{b}" for t, b in sections.items())
    over_tokens = estimate_tokens(SYSTEM_PREAMBLE) + estimate_tokens(text) - budget_tokens
    return over_tokens * 4
