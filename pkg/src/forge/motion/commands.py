"""Motion command programs: the text interface to the clip library.

The model answers motion requests in a one-line-per-command mini-grammar:

    select <clip>
    speed <factor> [from <t0> to <t1>]
    trim <t0> <t1>
    mirror
    blend <clip> <crossfade_s>

Duration arithmetic is exact: Speed over [a, b] rescales in-range key times
by 1/factor and shifts later keys, Trim re-bases to zero, Blend crossfades
channel values over the overlap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import RangeOutOfClip, UnknownClip, UnparseableProgram
from .clips import MotionClip, catalog_digest


@dataclass(frozen=True)
class Select:
    clip: str


@dataclass(frozen=True)
class Speed:
    factor: float
    t0: float | None = None     # None = whole clip
    t1: float | None = None


@dataclass(frozen=True)
class Trim:
    t0: float
    t1: float


@dataclass(frozen=True)
class Mirror:
    pass


@dataclass(frozen=True)
class Blend:
    clip: str
    crossfade_s: float


MotionCommand = Select | Speed | Trim | Mirror | Blend

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)"
_PATTERNS = [
    (re.compile(rf"select\s+(\w+)\s*$"), lambda m: Select(m.group(1))),
    (re.compile(rf"speed\s+({_NUM})\s+from\s+({_NUM})\s+to\s+({_NUM})\s*$"),
     lambda m: Speed(float(m.group(1)), float(m.group(2)), float(m.group(3)))),
    (re.compile(rf"speed\s+({_NUM})\s*$"), lambda m: Speed(float(m.group(1)))),
    (re.compile(rf"trim\s+({_NUM})\s+({_NUM})\s*$"),
     lambda m: Trim(float(m.group(1)), float(m.group(2)))),
    (re.compile(r"mirror\s*$"), lambda m: Mirror()),
    (re.compile(rf"blend\s+(\w+)\s+({_NUM})\s*$"),
     lambda m: Blend(m.group(1), float(m.group(2)))),
]


def parse_program(text: str) -> list[MotionCommand]:
    program: list[MotionCommand] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        for pattern, build in _PATTERNS:
            m = pattern.match(line)
            if m:
                program.append(build(m))
                break
        else:
            raise UnparseableProgram(
                f"line {lineno}: {line!r} is not a motion command "
                "(select/speed/trim/mirror/blend)")
    if not program:
        raise UnparseableProgram("empty program")
    return program


def validate_program(program: list[MotionCommand], catalog: dict[str, MotionClip]) -> None:
    if not isinstance(program[0], Select):
        raise UnparseableProgram("the first command must be `select <clip>`")
    for cmd in program:
        if isinstance(cmd, (Select, Blend)):
            name = cmd.clip
            if name not in catalog:
                known = ", ".join(sorted(catalog)) or "(library is empty)"
                raise UnknownClip(f"no clip named {name!r}; available: {known}")
        if isinstance(cmd, Speed) and cmd.factor <= 0:
            raise UnparseableProgram("speed factor must be > 0")
        if isinstance(cmd, Blend) and cmd.crossfade_s < 0:
            raise UnparseableProgram("crossfade must be >= 0")


def text_to_commands(request: str, catalog: dict[str, MotionClip], client) -> list[MotionCommand]:
    """Ask the model for a command program; one repair round on parse failure."""
    system = (
        "Translate the user's motion request into motion commands, one per line.\n"
        "Commands: select <clip> | speed <factor> [from <t0> to <t1>] | "
        "trim <t0> <t1> | mirror | blend <clip> <crossfade_s>.\n"
        "The first line must be `select <clip>`. Times are seconds.\n"
        f"Clip library:\n{catalog_digest(catalog)}"
    )
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": request},
    ]
    reply = client.complete(messages)
    for attempt in range(2):
        try:
            program = parse_program(_strip_fence(reply))
            validate_program(program, catalog)
            return program
        except UnparseableProgram as exc:
            if attempt == 1:
                raise
            messages = messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content":
                    f"That program is invalid ({exc}). Reply again with only valid "
                    "command lines."},
            ]
            reply = client.complete(messages)
    raise AssertionError("unreachable")


_FENCE_RE = re.compile(r"```[a-z]*\s*\n(.*?)```", re.DOTALL)


def _strip_fence(reply: str) -> str:
    m = _FENCE_RE.search(reply)
    return m.group(1) if m else reply


# ---------------------------------------------------------------------------
# command application

def apply_commands(program: list[MotionCommand], catalog: dict[str, MotionClip]) -> MotionClip:
    validate_program(program, catalog)
    clip = catalog[program[0].clip].copy()
    for cmd in program[1:]:
        if isinstance(cmd, Select):
            clip = catalog[cmd.clip].copy()
        elif isinstance(cmd, Speed):
            clip = _apply_speed(clip, cmd)
        elif isinstance(cmd, Trim):
            clip = _apply_trim(clip, cmd)
        elif isinstance(cmd, Mirror):
            clip = _apply_mirror(clip)
        elif isinstance(cmd, Blend):
            clip = blend_clips(clip, catalog[cmd.clip], cmd.crossfade_s)
    clip.validate()
    return clip


def _remap_keys(keys: list, fn) -> list:
    return [(fn(k[0]), k[1], k[2], k[3]) for k in keys]


def _apply_speed(clip: MotionClip, cmd: Speed) -> MotionClip:
    a = 0.0 if cmd.t0 is None else cmd.t0
    b = clip.duration_s if cmd.t1 is None else cmd.t1
    if not (0.0 <= a < b <= clip.duration_s + 1e-9):
        raise RangeOutOfClip(
            f"speed range [{a:g}, {b:g}] outside clip duration {clip.duration_s:g}")
    if cmd.factor == 1.0:
        return clip
    span = b - a
    stretched = span / cmd.factor
    shift = stretched - span

    def remap(t: float) -> float:
        if t < a:
            return t
        if t <= b:
            return a + (t - a) / cmd.factor
        return t + shift

    out = clip.copy()
    out.duration_s = clip.duration_s + shift
    out.channels = {j: _remap_keys(keys, remap) for j, keys in clip.channels.items()}
    out.root_translation = _remap_keys(clip.root_translation, remap)
    return out


def _trim_channel(keys: list, t0: float, t1: float) -> list:
    start = _sample_channel(keys, t0)
    end = _sample_channel(keys, t1)
    inner = [k for k in keys if t0 < k[0] < t1]
    out = [(0.0, *start)] + [(k[0] - t0, k[1], k[2], k[3]) for k in inner]
    if t1 - t0 > out[-1][0]:
        out.append((t1 - t0, *end))
    return out


def _apply_trim(clip: MotionClip, cmd: Trim) -> MotionClip:
    if not (0.0 <= cmd.t0 < cmd.t1 <= clip.duration_s + 1e-9):
        raise RangeOutOfClip(
            f"trim range [{cmd.t0:g}, {cmd.t1:g}] outside clip duration {clip.duration_s:g}")
    out = clip.copy()
    out.duration_s = cmd.t1 - cmd.t0
    out.channels = {j: _trim_channel(keys, cmd.t0, cmd.t1) for j, keys in clip.channels.items()}
    if clip.root_translation:
        out.root_translation = _trim_channel(clip.root_translation, cmd.t0, cmd.t1)
    return out


def _mirror_joint(name: str) -> str:
    if name.startswith("l_"):
        return "r_" + name[2:]
    if name.startswith("r_"):
        return "l_" + name[2:]
    return name


def _apply_mirror(clip: MotionClip) -> MotionClip:
    out = clip.copy()
    # Reflection across the sagittal plane: swap sides, negate y/z rotation
    # components and the x translation component.
    out.channels = {
        _mirror_joint(j): [(t, rx, -ry, -rz) for t, rx, ry, rz in keys]
        for j, keys in clip.channels.items()
    }
    out.root_translation = [(t, -x, y, z) for t, x, y, z in clip.root_translation]
    return out


def _sample_channel(keys: list, t: float) -> tuple[float, float, float]:
    if not keys:
        return (0.0, 0.0, 0.0)
    if t <= keys[0][0]:
        return keys[0][1:]
    if t >= keys[-1][0]:
        return keys[-1][1:]
    for i in range(1, len(keys)):
        if keys[i][0] >= t:
            t0, *v0 = keys[i - 1]
            t1, *v1 = keys[i]
            w = (t - t0) / (t1 - t0)
            return tuple(a + (b - a) * w for a, b in zip(v0, v1))
    return keys[-1][1:]


def blend_clips(first: MotionClip, second: MotionClip, crossfade_s: float) -> MotionClip:
    if crossfade_s > min(first.duration_s, second.duration_s):
        raise RangeOutOfClip(
            f"crossfade {crossfade_s:g}s exceeds a clip duration "
            f"({first.duration_s:g}s / {second.duration_s:g}s)")
    d1 = first.duration_s
    offset = d1 - crossfade_s
    duration = d1 + second.duration_s - crossfade_s
    fps = max(first.fps, second.fps)
    out = MotionClip(
        name=f"{first.name}+{second.name}",
        duration_s=duration,
        fps=fps,
        description=f"{first.name} into {second.name}",
    )

    joints = sorted(set(first.channels) | set(second.channels))
    for joint in joints:
        k1 = first.channels.get(joint, [])
        k2 = second.channels.get(joint, [])
        out.channels[joint] = _blend_channel(k1, k2, d1, crossfade_s, offset, duration, fps)
    if first.root_translation or second.root_translation:
        out.root_translation = _blend_channel(
            first.root_translation, second.root_translation,
            d1, crossfade_s, offset, duration, fps)
    return out


def _blend_channel(k1, k2, d1, crossfade_s, offset, duration, fps) -> list:
    out: list = [k for k in k1 if k[0] < offset]
    if crossfade_s > 0:
        steps = max(2, int(round(crossfade_s * fps)) + 1)
        for i in range(steps):
            t = offset + crossfade_s * i / (steps - 1)
            w = (t - offset) / crossfade_s
            v1 = _sample_channel(k1, t)
            v2 = _sample_channel(k2, t - offset)
            value = tuple(a + (b - a) * w for a, b in zip(v1, v2))
            if not out or t > out[-1][0] + 1e-12:
                out.append((t, *value))
    for k in k2:
        t = k[0] + offset
        if t > (out[-1][0] if out else -1.0) + 1e-12 and t <= duration + 1e-9:
            out.append((t, k[1], k[2], k[3]))
    if not out:
        out = [(0.0, *_sample_channel(k2, 0.0))]
    return out
