"""AST of the avatar edit language.

Statements are absolute sets, applied in order; there are no expressions,
variables, or control flow by design. Source spans are (line, column), both
1-based, excluded from equality so parse/print round-trips compare clean.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

Span = tuple[int, int]

_NO_SPAN: Span = (0, 0)

# Key names may contain spaces ("Shoulder Width"); slots, joints, and preset
# ids are plain identifiers.
KEY_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_ ]*\Z")
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class SetKey:
    category: str       # body | face
    name: str
    value: float
    span: Span = field(default=_NO_SPAN, compare=False)


@dataclass(frozen=True)
class SetHeight:
    value_cm: float
    span: Span = field(default=_NO_SPAN, compare=False)


@dataclass(frozen=True)
class SetAge:
    years: float
    span: Span = field(default=_NO_SPAN, compare=False)


@dataclass(frozen=True)
class Wear:
    slot: str
    asset: str
    span: Span = field(default=_NO_SPAN, compare=False)


@dataclass(frozen=True)
class Pose:
    joint: str
    rx: float
    ry: float
    rz: float
    span: Span = field(default=_NO_SPAN, compare=False)


@dataclass(frozen=True)
class Preset:
    id: str
    span: Span = field(default=_NO_SPAN, compare=False)


@dataclass(frozen=True)
class Comment:
    text: str
    span: Span = field(default=_NO_SPAN, compare=False)


Statement = SetKey | SetHeight | SetAge | Wear | Pose | Preset | Comment


@dataclass(frozen=True)
class EditScript:
    statements: tuple[Statement, ...] = ()

    def __len__(self) -> int:
        return len(self.statements)

    def effective(self) -> list[Statement]:
        """Statements that change state (everything but comments)."""
        return [s for s in self.statements if not isinstance(s, Comment)]
