"""Model gateway: one entry point, three backends.

``live`` talks to a chat-completions endpoint over HTTP, ``replay``
serves recorded completions with zero network, ``scripted`` pops a
test-supplied queue. Cassettes key on SHA-256 of the exact prompt bytes
plus the model name, and store the full prompt so a recording can be
audited later. Every request, on any backend, is appended to the audit
log before anything else happens; if that append fails the request
fails, because an unlogged outbound prompt is worse than a dead one.

Credentials come exclusively from the environment variable named in the
model config. They never appear in config files, cassettes, or logs.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import time
from dataclasses import dataclass, field

from .errors import (AuditLogError, CassetteMissError, MetasqlError,
                     ScriptExhaustedError)
from .prompts import PromptBundle, token_estimate

BACKENDS = ("live", "replay", "scripted")


@dataclass
class ModelConfig:
    model_name: str
    endpoint: str = ""
    credential_env: str = ""
    timeout_s: float = 60.0
    decoding: dict = field(default_factory=dict)


@dataclass
class CompletionRecord:
    prompt_hash: str
    model_name: str
    prompt: str
    completion: str
    latency_s: float
    backend: str


def prompt_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_cassette(path: str) -> dict[tuple[str, str], dict]:
    """Read a cassette file into a (model_name, prompt_hash) map.

    Later records win, so re-recording a prompt overrides history
    without rewriting the file.
    """
    entries: dict[tuple[str, str], dict] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MetasqlError(
                    f"{path}:{lineno}: invalid cassette record: {exc}") from exc
            entries[(record["model_name"], record["prompt_hash"])] = record
    return entries


class LlmGateway:
    """Completion gateway with recording, replay, and mandatory audit."""

    def __init__(self, config: ModelConfig, *, backend: str,
                 audit_log_path: str, cassette_path: str | None = None,
                 script: list[str] | None = None):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self.config = config
        self.backend = backend
        self.audit_log_path = audit_log_path
        self.cassette_path = cassette_path
        self.network_calls = 0
        self._script: list[str] = list(script or [])
        self._cassette: dict[tuple[str, str], dict] = {}
        if backend == "replay":
            if not cassette_path:
                raise ValueError("replay backend requires a cassette path")
            self._cassette = load_cassette(cassette_path)
        if backend == "live" and not config.endpoint:
            raise ValueError("live backend requires an endpoint")

    # -- public API ----------------------------------------------------------

    def complete(self, prompt: str | PromptBundle) -> CompletionRecord:
        text = prompt.text if isinstance(prompt, PromptBundle) else prompt
        digest = prompt_sha256(text)
        self._audit(digest, text)
        if self.backend == "scripted":
            record = self._complete_scripted(digest, text)
        elif self.backend == "replay":
            record = self._complete_replay(digest, text)
        else:
            record = self._complete_live(digest, text)
        if self.backend != "replay" and self.cassette_path:
            self._record(record)
        return record

    def remaining_script(self) -> int:
        return len(self._script)

    # -- backends -------------------------------------------------------------

    def _complete_scripted(self, digest: str, text: str) -> CompletionRecord:
        if not self._script:
            raise ScriptExhaustedError(
                "scripted backend has no completion queued for this request")
        return CompletionRecord(prompt_hash=digest,
                                model_name=self.config.model_name,
                                prompt=text,
                                completion=self._script.pop(0),
                                latency_s=0.0, backend="scripted")

    def _complete_replay(self, digest: str, text: str) -> CompletionRecord:
        key = (self.config.model_name, digest)
        entry = self._cassette.get(key)
        if entry is None:
            raise CassetteMissError(
                f"no recording for model {self.config.model_name!r} "
                f"prompt sha256 {digest}")
        return CompletionRecord(prompt_hash=digest,
                                model_name=self.config.model_name,
                                prompt=text,
                                completion=entry["completion"],
                                latency_s=float(entry.get("latency_s", 0.0)),
                                backend="replay")

    def _complete_live(self, digest: str, text: str) -> CompletionRecord:
        import httpx  # deferred so offline use never touches it

        headers = {}
        if self.config.credential_env:
            secret = os.environ.get(self.config.credential_env)
            if not secret:
                raise MetasqlError(
                    f"credential environment variable "
                    f"{self.config.credential_env!r} is not set")
            headers["Authorization"] = f"Bearer {secret}"
        payload = {"model": self.config.model_name,
                   "messages": [{"role": "user", "content": text}]}
        payload.update(self.config.decoding)
        started = time.monotonic()
        self.network_calls += 1
        response = httpx.post(self.config.endpoint, json=payload,
                              headers=headers, timeout=self.config.timeout_s)
        response.raise_for_status()
        body = response.json()
        try:
            completion = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MetasqlError(
                f"malformed completion response: {exc}") from exc
        return CompletionRecord(prompt_hash=digest,
                                model_name=self.config.model_name,
                                prompt=text, completion=completion,
                                latency_s=time.monotonic() - started,
                                backend="live")

    # -- persistence -----------------------------------------------------------

    def _audit(self, digest: str, text: str) -> None:
        entry = {
            "ts": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "model_name": self.config.model_name,
            "backend": self.backend,
            "prompt_hash": digest,
            "token_estimate": token_estimate(text),
            "prompt": text,
        }
        try:
            with open(self.audit_log_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry) + "\n")
        except OSError as exc:
            raise AuditLogError(
                f"cannot append to audit log {self.audit_log_path}: {exc}") from exc

    def _record(self, record: CompletionRecord) -> None:
        entry = {"prompt_hash": record.prompt_hash,
                 "model_name": record.model_name,
                 "prompt": record.prompt,
                 "completion": record.completion,
                 "latency_s": record.latency_s}
        with open(self.cassette_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(entry) + "\n")


def scan_log_for_values(path: str, needles: list[str]) -> list[str]:
    """Return the needles that appear anywhere in the log file. Used by
    the privacy audit: database cell values must never show up."""
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    return [needle for needle in needles if needle and needle in text]
