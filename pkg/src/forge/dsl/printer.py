"""Canonical formatter; parse(print_script(s)) is structurally s."""

from __future__ import annotations

from .ast import Comment, EditScript, Pose, Preset, SetAge, SetHeight, SetKey, Statement, Wear


def _num(x: float) -> str:
    return repr(float(x))


def _key(name: str) -> str:
    return f'"{name}"' if " " in name else name


def print_statement(stmt: Statement) -> str:
    if isinstance(stmt, SetKey):
        return f"set {stmt.category}.{_key(stmt.name)} = {_num(stmt.value)}"
    if isinstance(stmt, SetHeight):
        return f"height_cm = {_num(stmt.value_cm)}"
    if isinstance(stmt, SetAge):
        return f"age_years = {_num(stmt.years)}"
    if isinstance(stmt, Wear):
        return f'wear {stmt.slot} "{stmt.asset}"'
    if isinstance(stmt, Pose):
        return f"pose {stmt.joint} rot({_num(stmt.rx)}, {_num(stmt.ry)}, {_num(stmt.rz)})"
    if isinstance(stmt, Preset):
        return f"preset {stmt.id}"
    if isinstance(stmt, Comment):
        return f"#{stmt.text}"
    raise TypeError(f"not a statement: {stmt!r}")


def print_script(script: EditScript) -> str:
    return "".join(print_statement(s) + "\n" for s in script.statements)
