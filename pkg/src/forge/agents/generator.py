"""Turning model replies into edit scripts, with bounded self-repair."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..core.registry import ParameterRegistry
from ..dsl import EditScript, parse, validate
from ..errors import EditSyntaxError, NoAvatarYet, UnparseableCode
from .client import ChatClient
from .prompts import PromptBundle, build_prompt

_SECTION_RE = re.compile(
    r"^[ \t#*]*(Observation|Plan|Reminders|Code)\s*:\s*", re.IGNORECASE | re.MULTILINE
)
_FENCE_RE = re.compile(r"```(?:aedit)?[ \t]*\n(.*?)```", re.DOTALL)


@dataclass
class GenerationResult:
    script: EditScript
    code_text: str
    cot: dict[str, str] = field(default_factory=dict)
    repair_count: int = 0
    raw_replies: list[str] = field(default_factory=list)


def split_sections(reply: str) -> dict[str, str]:
    """Observation/Plan/Reminders/Code section bodies, lowercased keys."""
    sections: dict[str, str] = {}
    matches = list(_SECTION_RE.finditer(reply))
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(reply)
        sections[m.group(1).lower()] = reply[m.end():end].strip()
    return sections


def extract_code(reply: str) -> str | None:
    m = _FENCE_RE.search(reply)
    if m:
        return m.group(1)
    sections = split_sections(reply)
    code = sections.get("code")
    if code:
        return code
    return None


def generate_script(bundle: PromptBundle, client: ChatClient) -> GenerationResult:
    """One completion plus at most one repair round; Code must parse."""
    messages = bundle.messages()
    result = GenerationResult(script=EditScript(), code_text="")
    reply = client.complete(messages)
    result.raw_replies.append(reply)

    for attempt in range(2):
        code = extract_code(reply)
        problem: str | None = None
        if code is None:
            problem = "the reply has no fenced ```aedit code block"
        else:
            try:
                script = parse(code)
            except EditSyntaxError as exc:
                problem = f"the code block does not parse: {exc}"
            else:
                sections = split_sections(reply)
                result.script = script
                result.code_text = code
                result.cot = {
                    name: sections.get(name, "")
                    for name in ("observation", "plan", "reminders")
                }
                result.repair_count = attempt
                return result
        if attempt == 0:
            messages = messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content":
                    f"Problem: {problem}. Reply again with the same sections; the Code "
                    "section must be one fenced ```aedit block of valid statements."},
            ]
            reply = client.complete(messages)
            result.raw_replies.append(reply)
        else:
            raise UnparseableCode(f"no usable code after one repair round: {problem}")
    raise AssertionError("unreachable")


def feedback_to_script(
    session,
    feedback_text: str,
    client: ChatClient,
    registry: ParameterRegistry,
    manual_hits: list | None = None,
) -> GenerationResult:
    """Natural-language feedback on the session's current avatar -> script.

    The prompt carries the current state digest so relative requests ("a bit
    taller") resolve to absolute statements; the script is validated against
    the registry before it is returned, with one repair round.
    """
    state = getattr(session, "current_state", None)
    if state is None:
        raise NoAvatarYet("this session has no avatar yet; send a prompt first")
    bundle = build_prompt(
        spec=None,
        state=state,
        registry=registry,
        manual_hits=manual_hits or [],
        extra_request=f"User feedback on the current avatar: {feedback_text}",
    )
    result = generate_script(bundle, client)
    diagnostics = [d for d in validate(result.script, registry) if d.severity == "error"]
    if diagnostics:
        problems = "; ".join(d.message for d in diagnostics)
        repair = build_prompt(
            spec=None,
            state=state,
            registry=registry,
            manual_hits=manual_hits or [],
            extra_request=(
                f"User feedback on the current avatar: {feedback_text}\n"
                f"Your previous script was rejected: {problems}. Emit a corrected script."
            ),
        )
        result = generate_script(repair, client)
        diagnostics = [d for d in validate(result.script, registry) if d.severity == "error"]
        if diagnostics:
            raise UnparseableCode(
                "feedback script failed validation: " + "; ".join(d.message for d in diagnostics)
            )
        result.repair_count += 1
    return result
