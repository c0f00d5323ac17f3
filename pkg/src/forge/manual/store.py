"""The dynamic manual: an append-only store of generator-usage guidance.

Entries come from two sources: a seed layer generated from the registry
(static docs) and learned entries distilled from critic feedback. Storage is
one JSON event per line in `manual.log` under the store root; the log replays
to the in-memory state, and nothing is ever rewritten in place.

Retrieval is lexical and deterministic:
    score = 2 * |tag overlap| + |query keywords present in the guidance|
with ties broken by usage_count, then recency, then entry id.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field

from ..errors import ManualLoadError, PackIoError

GUIDANCE_MAX_CHARS = 500

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def guidance_similarity(a: str, b: str) -> float:
    """Jaccard similarity of normalized token sets."""
    ta, tb = set(_tokens(a)), set(_tokens(b))
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def entry_id(source: str, tags: tuple[str, ...], failure: str, guidance: str) -> str:
    blob = json.dumps([source, list(tags), failure, guidance], separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ManualEntry:
    id: str
    created_at: float
    sequence: int                   # monotonically increasing per store
    source: str                     # seed | learned
    tags: tuple[str, ...]
    failure_description: str
    guidance: str
    usage_count: int = 0
    last_used_at: float | None = None


class Duplicate:
    """Returned by learn() when the candidate matched an existing entry."""

    def __init__(self, existing_id: str):
        self.existing_id = existing_id

    def __repr__(self):
        return f"Duplicate({self.existing_id!r})"


@dataclass
class ManualStore:
    root: str | None = None
    entries: dict[str, ManualEntry] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)          # insertion order
    tag_index: dict[str, list[str]] = field(default_factory=dict)
    version: int = 0

    # -- construction ------------------------------------------------------

    @classmethod
    def open(cls, root: str) -> "ManualStore":
        store = cls(root=root)
        path = store._log_path()
        if path and os.path.isfile(path):
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise ManualLoadError(f"corrupt manual log: {exc.msg}", lineno) from exc
                    store._replay(event, lineno)
        return store

    def _log_path(self) -> str | None:
        return os.path.join(self.root, "manual.log") if self.root else None

    def _replay(self, event: dict, lineno: int) -> None:
        kind = event.get("event")
        if kind == "add":
            try:
                entry = ManualEntry(
                    id=event["id"],
                    created_at=float(event["created_at"]),
                    sequence=int(event["sequence"]),
                    source=event["source"],
                    tags=tuple(event["tags"]),
                    failure_description=event["failure"],
                    guidance=event["guidance"],
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ManualLoadError(f"bad add event: {exc}", lineno) from exc
            self._insert(entry)
        elif kind == "touch":
            entry = self.entries.get(event.get("id", ""))
            if entry is None:
                raise ManualLoadError(f"touch of unknown entry {event.get('id')!r}", lineno)
            entry.usage_count += 1
            entry.last_used_at = float(event.get("at", 0.0))
        else:
            raise ManualLoadError(f"unknown event kind {kind!r}", lineno)
        self.version += 1

    def _insert(self, entry: ManualEntry) -> None:
        self.entries[entry.id] = entry
        self.order.append(entry.id)
        for tag in entry.tags:
            self.tag_index.setdefault(tag, []).append(entry.id)

    def _append_event(self, event: dict) -> None:
        path = self._log_path()
        if path is None:
            return
        try:
            os.makedirs(self.root, exist_ok=True)
            with open(path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
        except OSError as exc:
            raise PackIoError(f"cannot append to {path}: {exc}") from exc

    # -- operations --------------------------------------------------------

    def learn(self, tags, failure_description: str, guidance: str,
              source: str = "learned") -> str | Duplicate:
        """Add one guidance entry, deduplicating near-paraphrases.

        A candidate is a duplicate of an existing entry when they share at
        least two tags and the normalized-token Jaccard similarity of the
        guidance texts is >= 0.8; the existing entry's usage_count is bumped
        instead.
        """
        tags = tuple(tags)
        if not tags or not failure_description.strip() or not guidance.strip():
            raise ValueError("tags, failure_description, and guidance must be non-empty")
        guidance = guidance[:GUIDANCE_MAX_CHARS]

        for other in self.entries.values():
            shared = len(set(tags) & set(other.tags))
            dup = (
                shared >= 2 and guidance_similarity(guidance, other.guidance) >= 0.8
            ) or (
                # identical content is always a duplicate, however few tags
                tags == other.tags
                and guidance == other.guidance
                and failure_description == other.failure_description
            )
            if dup:
                self.touch(other.id)
                return Duplicate(other.id)

        new_id = entry_id(source, tags, failure_description, guidance)
        entry = ManualEntry(
            id=new_id,
            created_at=time.time(),
            sequence=len(self.order),
            source=source,
            tags=tags,
            failure_description=failure_description,
            guidance=guidance,
        )
        self._insert(entry)
        self.version += 1
        self._append_event({
            "event": "add",
            "id": entry.id,
            "created_at": entry.created_at,
            "sequence": entry.sequence,
            "source": entry.source,
            "tags": list(entry.tags),
            "failure": entry.failure_description,
            "guidance": entry.guidance,
        })
        return new_id

    def touch(self, entry_id_: str) -> None:
        entry = self.entries[entry_id_]
        entry.usage_count += 1
        entry.last_used_at = time.time()
        self.version += 1
        self._append_event({"event": "touch", "id": entry_id_, "at": entry.last_used_at})

    def seed(self, registry) -> int:
        """Seed the static layer from the registry; idempotent."""
        added = 0
        for text in seed_texts(registry):
            tags, failure, guidance = text
            if not isinstance(self.learn(tags, failure, guidance, source="seed"), Duplicate):
                added += 1
        return added

    def retrieve(self, tags, query_text: str = "", k: int = 5) -> list[ManualEntry]:
        """Top-k entries by lexical score; deterministic total order."""
        if k <= 0:
            return []
        tag_set = set(tags)
        query_tokens = set(_tokens(query_text))
        scored = []
        for eid in self.order:
            entry = self.entries[eid]
            guidance_tokens = set(_tokens(entry.guidance))
            score = 2 * len(tag_set & set(entry.tags)) + len(query_tokens & guidance_tokens)
            scored.append((-score, -entry.usage_count, -entry.created_at, -entry.sequence, eid, entry))
        scored.sort(key=lambda t: t[:5])
        return [t[5] for t in scored[:k]]

    def all_entries(self) -> list[ManualEntry]:
        return [self.entries[eid] for eid in self.order]

    def persist(self, root: str) -> "ManualStore":
        """Write the full event log under `root` and return the bound store.

        Stores created with a root persist incrementally; this handles the
        in-memory case. Usage counters replay as repeated touch events.
        """
        events: list[dict] = []
        for eid in self.order:
            e = self.entries[eid]
            events.append({
                "event": "add", "id": e.id, "created_at": e.created_at,
                "sequence": e.sequence, "source": e.source, "tags": list(e.tags),
                "failure": e.failure_description, "guidance": e.guidance,
            })
        for eid in self.order:
            e = self.entries[eid]
            for _ in range(e.usage_count):
                events.append({"event": "touch", "id": e.id, "at": e.last_used_at or e.created_at})
        try:
            os.makedirs(root, exist_ok=True)
            with open(os.path.join(root, "manual.log"), "w", encoding="utf-8", newline="\n") as fh:
                for event in events:
                    fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
        except OSError as exc:
            raise PackIoError(f"cannot write manual log under {root}: {exc}") from exc
        return ManualStore.open(root)


def seed_texts(registry) -> list[tuple[tuple[str, ...], str, str]]:
    """Static seed guidance derived from the registry plus language notes."""
    out: list[tuple[tuple[str, ...], str, str]] = []
    for category in ("body", "face"):
        keys = registry.keys_in_category(category) if registry else []
        if not keys:
            continue
        names = ", ".join(f'"{k.name}"' if " " in k.name else k.name for k in keys)
        out.append((
            (category, "keys"),
            f"Agents guess {category} key names that do not exist.",
            f"Valid {category} keys ({len(keys)}): {names}. Values live in [-1, 1]; 0 is neutral.",
        ))
    slots = list(registry.slots.values()) if registry else []
    for slot in slots:
        assets = registry.assets_for_slot(slot.name)
        ids = ", ".join(a.id for a in assets) or "(none shipped)"
        out.append((
            ("clothing", slot.name),
            f"Agents invent asset paths for the {slot.name} slot.",
            f'Use wear {slot.name} "<asset>" with one of: {ids}.',
        ))
    out.extend([
        (("dsl", "syntax"),
         "Model output drifts into Python or prose instead of the edit language.",
         'One statement per line: set body.muscular = 0.8 / set body."Shoulder Width" = 0.8 / '
         'height_cm = 200 / age_years = 25 / wear outfit "<asset>" / pose l_shoulder rot(0, 0, -40) / '
         "preset male_athletic. No loops, no variables."),
        (("dsl", "keys"),
         "Key names with spaces break parsing when unquoted.",
         'Quote multi-word key names: set body."Thigh Thickness" = 0.7.'),
        (("height",),
         "Stature requests get encoded as a body key instead of the height field.",
         "Set stature with height_cm = <value>; the valid range is 140 to 220 centimeters. "
         "Do not invent a Height key."),
        (("age",),
         "Age requests get mapped onto face keys by hand.",
         "Set age_years = <years> (18 to 80); aging facial keys are driven automatically."),
        (("pose",),
         "Pose rotations are written in radians or quaternions.",
         "pose <joint> rot(rx, ry, rz) takes XYZ Euler degrees about the joint's rest position."),
        (("clothing", "color"),
         "Color requests are attached to keys rather than assets.",
         "Colors come from the chosen asset's tags; pick an asset whose tags mention the color."),
    ])
    return out
