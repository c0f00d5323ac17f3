"""Keyframed motion clips and the clip file format.

Clip files are line-oriented text: a header, then `joint <name>` or `root`
sections of `key <t> <a> <b> <c>` lines (Euler XYZ degrees for joints, cm
offsets for the root). Keyframe times must be strictly increasing within
[0, duration]; all joints must be canonical.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources

from ..core.skeleton import CANONICAL_JOINTS
from ..errors import ClipValidationError

Key = tuple[float, float, float, float]      # (time_s, a, b, c)


@dataclass
class MotionClip:
    name: str
    duration_s: float
    fps: float
    channels: dict[str, list[Key]] = field(default_factory=dict)
    root_translation: list[Key] = field(default_factory=list)
    description: str = ""

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ClipValidationError(f"clip {self.name!r}: duration must be positive")
        if self.fps <= 0:
            raise ClipValidationError(f"clip {self.name!r}: fps must be positive")
        for joint, keys in self.channels.items():
            if joint not in CANONICAL_JOINTS:
                raise ClipValidationError(f"clip {self.name!r}: unknown joint {joint!r}")
            self._check_keys(keys, f"joint {joint!r}")
        if self.root_translation:
            self._check_keys(self.root_translation, "root translation")

    def _check_keys(self, keys: list[Key], what: str) -> None:
        if not keys:
            raise ClipValidationError(f"clip {self.name!r}: {what} has no keys")
        last = -1.0
        for t, *_ in keys:
            if t < 0 or t > self.duration_s + 1e-9:
                raise ClipValidationError(
                    f"clip {self.name!r}: {what} key at {t:g}s outside [0, {self.duration_s:g}]")
            if t <= last:
                raise ClipValidationError(
                    f"clip {self.name!r}: {what} keyframe times must be strictly increasing")
            last = t

    def copy(self) -> "MotionClip":
        return MotionClip(
            name=self.name,
            duration_s=self.duration_s,
            fps=self.fps,
            channels={j: list(k) for j, k in self.channels.items()},
            root_translation=list(self.root_translation),
            description=self.description,
        )

    def summary(self) -> str:
        return f"{self.name} ({self.duration_s:g}s, {len(self.channels)} joints): {self.description}"


def parse_clip(text: str, source: str = "<clip>") -> MotionClip:
    name = ""
    duration = 0.0
    fps = 30.0
    description = ""
    channels: dict[str, list[Key]] = {}
    root: list[Key] = []
    current: list[Key] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "forge-clip":
                continue
            elif tag == "name":
                name = parts[1]
            elif tag == "duration":
                duration = float(parts[1])
            elif tag == "fps":
                fps = float(parts[1])
            elif tag == "desc":
                description = line.partition(" ")[2]
            elif tag == "joint":
                current = channels.setdefault(parts[1], [])
            elif tag == "root":
                current = root
            elif tag == "key":
                if current is None:
                    raise ClipValidationError(f"{source}:{lineno}: key before any section")
                current.append((float(parts[1]), float(parts[2]), float(parts[3]), float(parts[4])))
            else:
                raise ClipValidationError(f"{source}:{lineno}: unknown record {tag!r}")
        except (IndexError, ValueError) as exc:
            raise ClipValidationError(f"{source}:{lineno}: malformed line {line!r}") from exc
    clip = MotionClip(name=name, duration_s=duration, fps=fps,
                      channels=channels, root_translation=root, description=description)
    clip.validate()
    return clip


def load_library(path: str | None = None) -> dict[str, MotionClip]:
    """Load the clip catalog; `None` loads the shipped library."""
    catalog: dict[str, MotionClip] = {}
    if path is None:
        package = resources.files("forge.motion") / "clips"
        entries = sorted(p.name for p in package.iterdir() if p.name.endswith(".clip"))
        for fname in entries:
            clip = parse_clip((package / fname).read_text(encoding="utf-8"), source=fname)
            catalog[clip.name] = clip
        return catalog
    if not os.path.isdir(path):
        return catalog
    for fname in sorted(os.listdir(path)):
        if fname.endswith(".clip"):
            with open(os.path.join(path, fname), encoding="utf-8") as fh:
                clip = parse_clip(fh.read(), source=fname)
            catalog[clip.name] = clip
    return catalog


def catalog_digest(catalog: dict[str, MotionClip]) -> str:
    return "\n".join(clip.summary() for _name, clip in sorted(catalog.items()))
