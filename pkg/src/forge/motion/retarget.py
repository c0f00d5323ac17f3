"""Binding canonical-skeleton clips to a specific avatar skeleton.

Joint-angle channels map by name and are copied bit-exactly; only the root
translation scales, by the ratio of avatar leg length to canonical leg
length (which equals the avatar's uniform height scale by construction).
Channels for joints the target skeleton lacks are dropped with a warning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core.skeleton import Skeleton, make_skeleton
from ..core.state import Warning
from .clips import Key, MotionClip

_CANONICAL = make_skeleton()
CANONICAL_LEG_LENGTH_CM = _CANONICAL.leg_length()


@dataclass
class BoundClip:
    name: str
    duration_s: float
    fps: float
    channels: dict[str, list[Key]]
    root_translation: list[Key]
    translation_scale: float
    warnings: list[Warning] = field(default_factory=list)
    description: str = ""


def retarget(clip: MotionClip, skeleton: Skeleton) -> BoundClip:
    scale = skeleton.leg_length() / CANONICAL_LEG_LENGTH_CM
    channels: dict[str, list[Key]] = {}
    warnings: list[Warning] = []
    dropped = []
    for joint, keys in clip.channels.items():
        if skeleton.has(joint):
            channels[joint] = list(keys)
        else:
            dropped.append(joint)
    if dropped:
        warnings.append(Warning(
            "dropped_channel",
            f"target skeleton lacks joints {sorted(dropped)}; their channels were dropped"))
    root = [(t, x * scale, y * scale, z * scale) for t, x, y, z in clip.root_translation]
    return BoundClip(
        name=clip.name,
        duration_s=clip.duration_s,
        fps=clip.fps,
        channels=channels,
        root_translation=root,
        translation_scale=scale,
        warnings=warnings,
        description=clip.description,
    )


def _lerp_keys(keys: list[Key], t: float) -> tuple[float, float, float]:
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


def sample(clip: BoundClip | MotionClip, t: float) -> tuple[dict[str, tuple], tuple]:
    """Pose (joint -> Euler XYZ degrees) and root offset at time t.

    Linear interpolation between bracketing keys, clamped at both ends.
    """
    pose = {joint: _lerp_keys(keys, t) for joint, keys in clip.channels.items()}
    root = _lerp_keys(clip.root_translation, t) if clip.root_translation else (0.0, 0.0, 0.0)
    return pose, root
