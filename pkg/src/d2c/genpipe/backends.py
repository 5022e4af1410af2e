"""Model backends: a chat-completions HTTP client and a replay store.

Requests are identified by a fingerprint over the prompt text and the
attachment content digests (model name deliberately excluded, so a recorded
cassette can drive any backbone). Replay backends never touch the network.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
from abc import ABC, abstractmethod
from enum import Enum
from pathlib import Path

import requests

from ..errors import BackendError, ParseError, ReplayMissError, ValidationError
from .prompts import Attachment, Prompt


def _attachment_bytes(att: Attachment) -> bytes:
    if isinstance(att.ref, bytes):
        return att.ref
    return Path(att.ref).read_bytes()


def fingerprint_prompt(prompt: Prompt) -> str:
    """Hash of (system text, user text, ordered attachment digests)."""
    h = hashlib.sha256()
    h.update(prompt.system.encode("utf-8"))
    h.update(b"\x00")
    h.update(prompt.user.encode("utf-8"))
    for att in prompt.attachments:
        h.update(b"\x00")
        h.update(hashlib.sha256(_attachment_bytes(att)).digest())
    return h.hexdigest()


class CassetteMode(str, Enum):
    RECORD = "RECORD"
    REPLAY = "REPLAY"


class ReplayCassette:
    """Ordered fingerprint -> response store, persisted as a JSON array of
    {"fingerprint": hex, "response": text} records."""

    def __init__(self, path: str | Path, mode: CassetteMode = CassetteMode.REPLAY):
        self.path = Path(path)
        self.mode = mode
        self._lock = threading.Lock()
        self._responses: dict[str, str] = {}
        if self.path.exists():
            self._load()
        elif mode is CassetteMode.REPLAY:
            raise BackendError(f"replay cassette {self.path} does not exist")

    def _load(self) -> None:
        try:
            raw = json.loads(self.path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed cassette {self.path}: {e.msg}", offset=e.pos) from e
        if not isinstance(raw, list):
            raise ValidationError(f"cassette {self.path} must be a JSON array")
        for i, row in enumerate(raw):
            if not isinstance(row, dict) or not isinstance(row.get("fingerprint"), str) \
                    or not isinstance(row.get("response"), str):
                raise ValidationError(f"cassette {self.path}: bad record at index {i}")
            if row["fingerprint"] in self._responses:
                raise ValidationError(
                    f"cassette {self.path}: duplicate fingerprint {row['fingerprint']}"
                )
            self._responses[row["fingerprint"]] = row["response"]

    @property
    def cassette_id(self) -> str:
        return self.path.name

    def __len__(self) -> int:
        return len(self._responses)

    def lookup(self, fingerprint: str) -> str:
        try:
            return self._responses[fingerprint]
        except KeyError:
            raise ReplayMissError(fingerprint) from None

    def record(self, fingerprint: str, response: str) -> None:
        if self.mode is not CassetteMode.RECORD:
            raise BackendError("cassette is not in RECORD mode")
        with self._lock:
            self._responses[fingerprint] = response
            self._save_locked()

    def _save_locked(self) -> None:
        rows = [{"fingerprint": fp, "response": r} for fp, r in self._responses.items()]
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(json.dumps(rows, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)


class VlmBackend(ABC):
    """A model endpoint that turns a prompt into response text."""

    kind: str = ""
    model: str = ""
    cassette_id: str | None = None

    @abstractmethod
    def complete(self, prompt: Prompt) -> str:
        raise NotImplementedError


class ReplayBackend(VlmBackend):
    """Deterministic offline backend serving recorded responses only."""

    kind = "REPLAY"
    model = "replay"

    def __init__(self, cassette: ReplayCassette | str | Path):
        if not isinstance(cassette, ReplayCassette):
            cassette = ReplayCassette(cassette, CassetteMode.REPLAY)
        self.cassette = cassette
        self.cassette_id = cassette.cassette_id

    def complete(self, prompt: Prompt) -> str:
        return self.cassette.lookup(fingerprint_prompt(prompt))


_MIME_BY_SUFFIX = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".webp": "image/webp",
}


def _data_url(att: Attachment) -> str:
    mime = "image/png"
    if not isinstance(att.ref, bytes):
        mime = _MIME_BY_SUFFIX.get(Path(att.ref).suffix.lower(), "image/png")
    payload = base64.b64encode(_attachment_bytes(att)).decode("ascii")
    return f"data:{mime};base64,{payload}"


class HttpChatBackend(VlmBackend):
    """Chat-completions style HTTP backend.

    The auth token is read from the environment variable named by
    `token_env` at call time and never logged. `temperature=None` leaves
    the provider default in place. A shared instance is safe across page
    threads; `max_in_flight` bounds concurrent requests.
    """

    kind = "HTTP_CHAT"

    def __init__(
        self,
        endpoint: str,
        model: str,
        *,
        token_env: str = "D2C_API_TOKEN",
        temperature: float | None = None,
        timeout: float = 120.0,
        max_in_flight: int = 4,
        record_to: ReplayCassette | None = None,
    ):
        if max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")
        self.endpoint = endpoint
        self.model = model
        self.token_env = token_env
        self.temperature = temperature
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._session = requests.Session()
        self.record_to = record_to
        self.cassette_id = record_to.cassette_id if record_to else None

    def _payload(self, prompt: Prompt) -> dict:
        content: list[dict] = [{"type": "text", "text": prompt.user}]
        for att in prompt.attachments:
            content.append({"type": "image_url", "image_url": {"url": _data_url(att)}})
        messages = []
        if prompt.system:
            messages.append({"role": "system", "content": prompt.system})
        messages.append({"role": "user", "content": content})
        payload = {"model": self.model, "messages": messages}
        if self.temperature is not None:
            payload["temperature"] = self.temperature
        return payload

    def complete(self, prompt: Prompt) -> str:
        token = os.environ.get(self.token_env)
        if not token:
            raise BackendError(f"environment variable {self.token_env} is not set")
        with self._slots:
            try:
                resp = self._session.post(
                    self.endpoint,
                    json=self._payload(prompt),
                    headers={"Authorization": f"Bearer {token}"},
                    timeout=self.timeout,
                )
            except requests.RequestException as e:
                raise BackendError(f"request to {self.endpoint} failed: {e}") from e
        if resp.status_code != 200:
            raise BackendError(f"backend returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise BackendError(f"unexpected response shape from {self.endpoint}") from e
        if not isinstance(text, str):
            raise BackendError("backend response content is not text")
        if self.record_to is not None:
            self.record_to.record(fingerprint_prompt(prompt), text)
        return text


def http_backend_from_config(cfg: dict, record_to: ReplayCassette | None = None) -> HttpChatBackend:
    """Build an HTTP backend from a config mapping (endpoint/model required;
    token_env, temperature, timeout, max_in_flight optional)."""
    endpoint = cfg.get("endpoint")
    model = cfg.get("model")
    if not endpoint or not model:
        raise ValidationError("backend config requires 'endpoint' and 'model'")
    return HttpChatBackend(
        endpoint,
        model,
        token_env=cfg.get("token_env", "D2C_API_TOKEN"),
        temperature=cfg.get("temperature"),
        timeout=float(cfg.get("timeout", 120.0)),
        max_in_flight=int(cfg.get("max_in_flight", 4)),
        record_to=record_to,
    )
