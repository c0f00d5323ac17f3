from .ast import (
    Comment,
    EditScript,
    Pose,
    Preset,
    SetAge,
    SetHeight,
    SetKey,
    Statement,
    Wear,
)
from .parser import parse
from .printer import print_script
from .interp import ApplyReport, Diagnostic, apply_script, diff, validate

__all__ = [
    "EditScript", "Statement", "SetKey", "SetHeight", "SetAge", "Wear",
    "Pose", "Preset", "Comment",
    "parse", "print_script",
    "ApplyReport", "Diagnostic", "apply_script", "diff", "validate",
]
