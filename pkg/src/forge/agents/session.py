"""Sessions: the append-only record of one avatar's design loop.

A session directory holds session.json (inputs, status, current state), one
JSON file per round under rounds/, the per-round renders, and the exported
.glb files, so every failed attempt stays inspectable after the fact.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field

from ..core.state import AvatarState, state_from_json, state_hash, state_to_json
from ..errors import UnknownSession

STATUSES = ("idle", "generating", "awaiting_feedback")


@dataclass
class Session:
    id: str
    created_at: float
    seed: int = 0
    status: str = "idle"
    inputs: list[dict] = field(default_factory=list)      # {kind, text|image_sha, at}
    rounds: list[dict] = field(default_factory=list)      # round records, append-only
    current_state: AvatarState | None = None

    def record_input(self, kind: str, text: str = "", image_sha: str = "") -> None:
        entry = {"kind": kind, "at": time.time()}
        if text:
            entry["text"] = text
        if image_sha:
            entry["image_sha"] = image_sha
        self.inputs.append(entry)

    def add_round(self, record: dict) -> None:
        record = dict(record)
        record["round"] = len(self.rounds) + 1
        self.rounds.append(record)


class SessionStore:
    """Directory-per-session persistence under <root>/sessions/."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(self.sessions_dir, exist_ok=True)

    @property
    def sessions_dir(self) -> str:
        return os.path.join(self.root, "sessions")

    def session_dir(self, session_id: str) -> str:
        return os.path.join(self.sessions_dir, session_id)

    def create(self, seed: int = 0, session_id: str | None = None) -> Session:
        session = Session(id=session_id or uuid.uuid4().hex[:12],
                          created_at=time.time(), seed=seed)
        self.save(session)
        return session

    def list_ids(self) -> list[str]:
        if not os.path.isdir(self.sessions_dir):
            return []
        return sorted(
            d for d in os.listdir(self.sessions_dir)
            if os.path.isfile(os.path.join(self.sessions_dir, d, "session.json"))
        )

    def save(self, session: Session) -> None:
        sdir = self.session_dir(session.id)
        os.makedirs(os.path.join(sdir, "rounds"), exist_ok=True)
        doc = {
            "id": session.id,
            "created_at": session.created_at,
            "seed": session.seed,
            "status": session.status,
            "inputs": session.inputs,
            "round_count": len(session.rounds),
            "current_state": (
                state_to_json(session.current_state) if session.current_state else None
            ),
            "current_hash": (
                state_hash(session.current_state) if session.current_state else None
            ),
        }
        with open(os.path.join(sdir, "session.json"), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
        for i, record in enumerate(session.rounds, 1):
            path = os.path.join(sdir, "rounds", f"round_{i:04d}.json")
            if not os.path.isfile(path):
                with open(path, "w", encoding="utf-8") as fh:
                    json.dump(record, fh, sort_keys=True, indent=1)

    def load(self, session_id: str) -> Session:
        sdir = self.session_dir(session_id)
        meta_path = os.path.join(sdir, "session.json")
        if not os.path.isfile(meta_path):
            raise UnknownSession(f"no session {session_id!r}")
        with open(meta_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        state = state_from_json(doc["current_state"]) if doc.get("current_state") else None
        if state is not None and doc.get("current_hash"):
            if state_hash(state) != doc["current_hash"]:
                raise UnknownSession(f"session {session_id!r} state hash mismatch on disk")
        rounds = []
        rdir = os.path.join(sdir, "rounds")
        if os.path.isdir(rdir):
            for fname in sorted(os.listdir(rdir)):
                if fname.endswith(".json"):
                    with open(os.path.join(rdir, fname), encoding="utf-8") as fh:
                        rounds.append(json.load(fh))
        status = doc.get("status", "idle")
        if status == "generating":
            # A crash mid-generation leaves no in-flight work to resume.
            status = "awaiting_feedback" if state is not None else "idle"
        return Session(
            id=doc["id"],
            created_at=doc["created_at"],
            seed=doc.get("seed", 0),
            status=status,
            inputs=doc.get("inputs", []),
            rounds=rounds,
            current_state=state,
        )

    def renders_dir(self, session_id: str, round_no: int) -> str:
        return os.path.join(self.session_dir(session_id), "renders", f"round_{round_no}")

    def write_render(self, session_id: str, round_no: int, view: str, png: bytes) -> str:
        rdir = self.renders_dir(session_id, round_no)
        os.makedirs(rdir, exist_ok=True)
        path = os.path.join(rdir, f"{view}.png")
        with open(path, "wb") as fh:
            fh.write(png)
        return path

    def glb_path(self, session_id: str, name: str = "avatar") -> str:
        return os.path.join(self.session_dir(session_id), f"{name}.glb")
