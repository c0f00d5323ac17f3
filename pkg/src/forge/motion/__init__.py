from .clips import MotionClip, catalog_digest, load_library, parse_clip
from .commands import (
    Blend,
    Mirror,
    MotionCommand,
    Select,
    Speed,
    Trim,
    apply_commands,
    blend_clips,
    parse_program,
    text_to_commands,
    validate_program,
)
from .retarget import BoundClip, CANONICAL_LEG_LENGTH_CM, retarget, sample

__all__ = [
    "MotionClip", "load_library", "parse_clip", "catalog_digest",
    "MotionCommand", "Select", "Speed", "Trim", "Mirror", "Blend",
    "parse_program", "validate_program", "text_to_commands", "apply_commands",
    "blend_clips",
    "BoundClip", "retarget", "sample", "CANONICAL_LEG_LENGTH_CM",
]
