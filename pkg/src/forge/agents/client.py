"""Chat-completions clients: live HTTP, scripted mock, and record/replay.

The wire protocol is the common chat-completions shape (messages array,
optional image content parts) against a configurable base URL, so any
compatible server works. Replay files are one JSON document per
request/response pair, keyed by a content hash of the request.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field

import httpx

from ..errors import ClientError, ReplayMiss

logger = logging.getLogger("forge.client")

ENV_BASE_URL = "FORGE_LLM_BASE_URL"
ENV_MODEL = "FORGE_LLM_MODEL"
ENV_API_KEY = "FORGE_LLM_API_KEY"
ENV_VLM_MODEL = "FORGE_VLM_MODEL"
ENV_MOCK_DIR = "FORGE_MOCK_DIR"


@dataclass
class ChatConfig:
    base_url: str = "http://localhost:8080/v1"
    model: str = "default"
    api_key: str | None = None
    timeout_s: float = 60.0
    max_retries: int = 2

    @classmethod
    def from_env(cls, model_var: str = ENV_MODEL) -> "ChatConfig":
        return cls(
            base_url=os.environ.get(ENV_BASE_URL, cls.base_url),
            model=os.environ.get(model_var, cls.model),
            api_key=os.environ.get(ENV_API_KEY),
        )


def request_fingerprint(messages: list[dict], model: str) -> str:
    blob = json.dumps({"model": model, "messages": messages},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


class ChatClient:
    """Interface: complete(messages) -> assistant text."""

    def complete(self, messages: list[dict], model: str | None = None) -> str:
        raise NotImplementedError


class HttpChatClient(ChatClient):
    def __init__(self, config: ChatConfig):
        self.config = config

    def complete(self, messages: list[dict], model: str | None = None) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {"model": model or self.config.model, "messages": messages}
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                logger.debug("POST %s model=%s attempt=%d", url, payload["model"], attempt)
                resp = httpx.post(url, json=payload, headers=headers,
                                  timeout=self.config.timeout_s)
                resp.raise_for_status()
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning("chat request failed (attempt %d): %s", attempt, exc)
                if attempt < self.config.max_retries:
                    time.sleep(min(2.0 ** attempt * 0.2, 5.0))
        raise ClientError(f"chat completion failed after {self.config.max_retries + 1} attempts: "
                          f"{last_error}") from last_error


class MockChatClient(ChatClient):
    """Deterministic scripted client.

    Resolution order per request: fingerprint map, substring rules matched
    against the flattened request text (first match wins), then the ordered
    queue. Running out of answers is a ClientError.
    """

    def __init__(
        self,
        responses: list[str] | None = None,
        by_fingerprint: dict[str, list[str] | str] | None = None,
        rules: list[tuple[str, str]] | None = None,
    ):
        self.queue = list(responses or [])
        self.by_fingerprint = {
            k: list(v) if isinstance(v, list) else [v]
            for k, v in (by_fingerprint or {}).items()
        }
        self.rules = list(rules or [])
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict], model: str | None = None) -> str:
        self.calls.append(messages)
        fp = request_fingerprint(messages, model or "mock")
        if fp in self.by_fingerprint and self.by_fingerprint[fp]:
            return self.by_fingerprint[fp].pop(0)
        flat = flatten_messages(messages)
        for needle, response in self.rules:
            if needle in flat:
                return response
        if self.queue:
            return self.queue.pop(0)
        raise ClientError("mock client has no response for this request")


def flatten_messages(messages: list[dict]) -> str:
    parts = []
    for m in messages:
        content = m.get("content", "")
        if isinstance(content, str):
            parts.append(content)
        else:
            for item in content:
                if item.get("type") == "text":
                    parts.append(item.get("text", ""))
                elif item.get("type") == "image_url":
                    parts.append("[image]")
    return "\n".join(parts)


class RecordReplayClient(ChatClient):
    """Wraps another client to record, or serves recorded responses back.

    One file per pair: <dir>/<fingerprint>.json with the full request and the
    response text. Replays are byte-deterministic.
    """

    def __init__(self, directory: str, mode: str, inner: ChatClient | None = None,
                 model: str = "default"):
        if mode not in ("record", "replay"):
            raise ValueError(f"mode must be record or replay, not {mode!r}")
        if mode == "record" and inner is None:
            raise ValueError("record mode needs an inner client")
        self.directory = directory
        self.mode = mode
        self.inner = inner
        self.model = model

    def _path(self, fingerprint: str) -> str:
        return os.path.join(self.directory, fingerprint + ".json")

    def complete(self, messages: list[dict], model: str | None = None) -> str:
        fp = request_fingerprint(messages, model or self.model)
        path = self._path(fp)
        if self.mode == "replay":
            if not os.path.isfile(path):
                raise ReplayMiss(f"no recorded response for request {fp} under {self.directory}")
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)["response"]
        response = self.inner.complete(messages, model=model)
        os.makedirs(self.directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(
                {"request": {"model": model or self.model, "messages": messages},
                 "response": response},
                fh, sort_keys=True, indent=1,
            )
            fh.write("\n")
        return response


def client_from_env(mock_subdir: str | None = None) -> ChatClient:
    """Build the configured client: replay when FORGE_MOCK_DIR is set."""
    mock_dir = os.environ.get(ENV_MOCK_DIR)
    if mock_dir:
        directory = os.path.join(mock_dir, mock_subdir) if mock_subdir else mock_dir
        return RecordReplayClient(directory, "replay")
    return HttpChatClient(ChatConfig.from_env())
