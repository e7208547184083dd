"""Application configuration.

One JSON file wires databases, models, backend mode, and pipeline
defaults. Model entries name the environment variable holding their
credential; secrets themselves never live in the file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import MetasqlError
from .gateway import ModelConfig
from .pipeline import PipelineFlags


@dataclass
class AppConfig:
    databases: dict[str, str] = field(default_factory=dict)
    models: dict[str, ModelConfig] = field(default_factory=dict)
    default_model: str = ""
    backend: str = "replay"
    cassette_path: str | None = None
    audit_log_path: str = "audit_log.jsonl"
    demo_file: str | None = None
    preview_rows: int = 200
    flags: PipelineFlags = field(default_factory=PipelineFlags)

    def model(self, name: str | None = None) -> ModelConfig:
        key = name or self.default_model
        if key not in self.models:
            raise MetasqlError(f"unknown model {key!r}")
        return self.models[key]


def load_config(path: str) -> AppConfig:
    """Parse a config file; unknown keys are rejected so typos surface."""
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise MetasqlError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MetasqlError(f"invalid config {path}: {exc}") from exc
    return parse_config(raw, where=path)


_TOP_KEYS = {"databases", "models", "default_model", "backend",
             "cassette_path", "audit_log_path", "demo_file", "preview_rows",
             "defaults"}
_MODEL_KEYS = {"model_name", "endpoint", "credential_env", "timeout_s",
               "decoding"}
_FLAG_KEYS = {"k_demos", "include_schema", "include_cot", "max_attempts",
              "allow_star", "repair_source_dialect"}


def parse_config(raw: dict, where: str = "config") -> AppConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise MetasqlError(f"{where}: unknown keys {sorted(unknown)}")
    config = AppConfig()
    config.databases = dict(raw.get("databases") or {})
    for name, spec in (raw.get("models") or {}).items():
        bad = set(spec) - _MODEL_KEYS
        if bad:
            raise MetasqlError(f"{where}: model {name}: unknown keys {sorted(bad)}")
        config.models[name] = ModelConfig(
            model_name=spec.get("model_name", name),
            endpoint=spec.get("endpoint", ""),
            credential_env=spec.get("credential_env", ""),
            timeout_s=float(spec.get("timeout_s", 60.0)),
            decoding=dict(spec.get("decoding") or {}))
    config.default_model = raw.get("default_model") or \
        (next(iter(config.models)) if config.models else "")
    config.backend = raw.get("backend", "replay")
    config.cassette_path = raw.get("cassette_path")
    config.audit_log_path = raw.get("audit_log_path", "audit_log.jsonl")
    config.demo_file = raw.get("demo_file")
    config.preview_rows = int(raw.get("preview_rows", 200))
    defaults = raw.get("defaults") or {}
    bad = set(defaults) - _FLAG_KEYS
    if bad:
        raise MetasqlError(f"{where}: defaults: unknown keys {sorted(bad)}")
    config.flags = PipelineFlags(**defaults)
    return config
