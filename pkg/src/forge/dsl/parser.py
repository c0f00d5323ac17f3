"""Line-oriented recursive-descent parser for the edit language.

Grammar:
    script  := (line NEWLINE)*
    line    := set | height | age | wear | pose | preset | comment | blank
    set     := "set" ("body" | "face") "." (IDENT | STRING) "=" NUMBER
    height  := "height_cm" "=" NUMBER
    age     := "age_years" "=" NUMBER
    wear    := "wear" IDENT STRING
    pose    := "pose" IDENT "rot" "(" NUMBER "," NUMBER "," NUMBER ")"
    preset  := "preset" IDENT
    comment := "#" ANY*

Any input, including random bytes, either parses or raises EditSyntaxError
with a line/column span and a one-line fix hint; nothing else escapes.
"""

from __future__ import annotations

import re

from ..errors import EditSyntaxError
from .ast import (
    Comment,
    EditScript,
    KEY_NAME_RE,
    Pose,
    Preset,
    SetAge,
    SetHeight,
    SetKey,
    Statement,
    Wear,
)

# Shown verbatim to agents so the reply language is never guessed.
GRAMMAR = '''\
script  := (line NEWLINE)*
line    := set | height | age | wear | pose | preset | comment | blank
set     := "set" ("body" | "face") "." (IDENT | STRING) "=" NUMBER
height  := "height_cm" "=" NUMBER
age     := "age_years" "=" NUMBER
wear    := "wear" IDENT STRING
pose    := "pose" IDENT "rot" "(" NUMBER "," NUMBER "," NUMBER ")"
preset  := "preset" IDENT
comment := "#" ANY*
'''

_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_STRING_RE = re.compile(r'"([^"\n]*)"')
_WS_RE = re.compile(r"[ \t]*")


class _Cursor:
    def __init__(self, text: str, line_no: int):
        self.text = text
        self.line_no = line_no
        self.pos = 0

    def skip_ws(self):
        self.pos = _WS_RE.match(self.text, self.pos).end()

    @property
    def col(self) -> int:
        return self.pos + 1

    @property
    def span(self) -> tuple[int, int]:
        return (self.line_no, self.col)

    def fail(self, message: str, hint: str = ""):
        raise EditSyntaxError(message, self.span, hint)

    def match(self, regex: re.Pattern) -> str | None:
        m = regex.match(self.text, self.pos)
        if m is None:
            return None
        self.pos = m.end()
        return m.group(0)

    def expect_word(self, word: str, hint: str = ""):
        self.skip_ws()
        if not self.text.startswith(word, self.pos):
            self.fail(f"expected {word!r}", hint or f'expected "{word}"')
        self.pos += len(word)

    def expect_number(self, what: str) -> float:
        self.skip_ws()
        value = self.match(_NUMBER_RE)
        if value is None:
            self.fail(f"expected a number for {what}", "write a numeric literal like 0.8")
        return float(value)

    def expect_ident(self, what: str) -> str:
        self.skip_ws()
        value = self.match(_IDENT_RE)
        if value is None:
            self.fail(f"expected an identifier for {what}", "identifiers look like gym_outfit")
        return value

    def expect_string(self, what: str) -> str:
        self.skip_ws()
        m = _STRING_RE.match(self.text, self.pos)
        if m is None:
            self.fail(f"expected a quoted string for {what}", 'wrap the value in double quotes')
        self.pos = m.end()
        return m.group(1)

    def expect_eol(self):
        self.skip_ws()
        if self.pos != len(self.text):
            self.fail("unexpected trailing input", "one statement per line")


def parse(source: str) -> EditScript:
    """Parse edit-language source into an EditScript (or raise EditSyntaxError)."""
    statements: list[Statement] = []
    for line_no, raw in enumerate(source.splitlines(), 1):
        line = raw.rstrip("\r")
        stmt = _parse_line(line, line_no)
        if stmt is not None:
            statements.append(stmt)
    return EditScript(tuple(statements))


def _parse_line(line: str, line_no: int) -> Statement | None:
    cur = _Cursor(line, line_no)
    cur.skip_ws()
    if cur.pos == len(line):
        return None
    span = cur.span
    if line[cur.pos] == "#":
        return Comment(line[cur.pos + 1:], span=span)

    word = cur.match(_IDENT_RE)
    if word == "set":
        return _parse_set(cur, span)
    if word == "height_cm":
        cur.expect_word("=", 'expected "="')
        value = cur.expect_number("height_cm")
        cur.expect_eol()
        return SetHeight(value, span=span)
    if word == "age_years":
        cur.expect_word("=", 'expected "="')
        value = cur.expect_number("age_years")
        cur.expect_eol()
        return SetAge(value, span=span)
    if word == "wear":
        slot = cur.expect_ident("slot name")
        asset = cur.expect_string("asset id")
        cur.expect_eol()
        return Wear(slot, asset, span=span)
    if word == "pose":
        joint = cur.expect_ident("joint name")
        cur.expect_word("rot", 'expected "rot(x, y, z)"')
        cur.expect_word("(")
        rx = cur.expect_number("x rotation")
        cur.expect_word(",")
        ry = cur.expect_number("y rotation")
        cur.expect_word(",")
        rz = cur.expect_number("z rotation")
        cur.expect_word(")")
        cur.expect_eol()
        return Pose(joint, rx, ry, rz, span=span)
    if word == "preset":
        preset_id = cur.expect_ident("preset id")
        cur.expect_eol()
        return Preset(preset_id, span=span)

    cur.pos = span[1] - 1
    cur.fail(
        f"unknown statement {word or line[cur.pos:cur.pos + 10]!r}",
        "statements: set, height_cm, age_years, wear, pose, preset, #",
    )


def _parse_set(cur: _Cursor, span) -> SetKey:
    cur.skip_ws()
    category = cur.match(_IDENT_RE)
    if category not in ("body", "face"):
        cur.fail("expected target category", 'targets start with "body." or "face."')
    cur.expect_word(".", 'expected "." after the category')
    cur.skip_ws()
    if cur.pos < len(cur.text) and cur.text[cur.pos] == '"':
        name = cur.expect_string("key name")
        if not KEY_NAME_RE.match(name):
            cur.fail(f"invalid key name {name!r}", "letters, digits, _ and inner spaces only")
    else:
        name = cur.expect_ident("key name")
    cur.expect_word("=", 'expected "="')
    value = cur.expect_number("key value")
    cur.expect_eol()
    return SetKey(category, name, value, span=span)
