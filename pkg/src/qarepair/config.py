"""Run configuration: a YAML/JSON file plus command-line overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError, QARepairError
from .evaluation import DefaultGrader, Grader, ModelGrader
from .model_io import load_prompts
from .models import ChatCompletionModel, ModelBackend, ScriptedModel
from .pipeline import DEFAULT_K_B, DEFAULT_K_R, Backends, PipelineMode
from .retrievers import LocalCorpusRetriever, ScriptedRetriever, WebSearchRetriever

RETRIEVAL_KINDS = ("mock", "corpus", "web")
MODEL_KINDS = ("mock", "http")
GRADER_KINDS = ("default", "external")
# Keys inside backend sections that hold filesystem paths.
_PATH_KEYS = ("path", "cache_dir")


@dataclass
class RunConfig:
    corpus_path: str | None = None
    output_path: str | None = None
    mode: str = PipelineMode.FULL.value
    k_b: int = DEFAULT_K_B
    k_r: int = DEFAULT_K_R
    concurrency: int = 1
    retrieval: dict[str, Any] = field(default_factory=lambda: {"kind": "mock"})
    model: dict[str, Any] = field(default_factory=lambda: {"kind": "mock"})
    grader: dict[str, Any] = field(default_factory=lambda: {"kind": "default"})
    prompt_path: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**copy.deepcopy(dict(data)))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def check(self) -> None:
        """Validate values; raises ConfigError with an actionable message."""
        try:
            PipelineMode(self.mode)
        except ValueError:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {[m.value for m in PipelineMode]}")
        for name in ("k_b", "k_r", "concurrency"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1 (got {value!r})")
        for section, kinds in (("retrieval", RETRIEVAL_KINDS), ("model", MODEL_KINDS), ("grader", GRADER_KINDS)):
            conf = getattr(self, section)
            if not isinstance(conf, dict) or conf.get("kind") not in kinds:
                raise ConfigError(f"{section}.kind must be one of {list(kinds)}")


def _resolve(path: str | None, base: Path) -> str | None:
    if path is None:
        return None
    p = Path(path).expanduser()
    return str((p if p.is_absolute() else base / p).resolve())


def resolve_paths(cfg: RunConfig, base: Path) -> RunConfig:
    cfg = RunConfig.from_dict(cfg.to_dict())
    cfg.corpus_path = _resolve(cfg.corpus_path, base)
    cfg.output_path = _resolve(cfg.output_path, base)
    cfg.prompt_path = _resolve(cfg.prompt_path, base)
    for section in (cfg.retrieval, cfg.model, cfg.grader):
        for key in _PATH_KEYS:
            if section.get(key):
                section[key] = _resolve(section[key], base)
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file (YAML or JSON); relative paths resolve against its directory."""
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {p}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {p} must contain a mapping")
    return resolve_paths(RunConfig.from_dict(data), p.resolve().parent)


def parse_backend_spec(spec: str) -> dict[str, Any]:
    """``kind`` or ``kind:path`` shorthand, e.g. ``mock:script.json``."""
    kind, _, rest = spec.partition(":")
    out: dict[str, Any] = {"kind": kind}
    if rest:
        out["path"] = rest
    return out


def _need(conf: Mapping[str, Any], key: str, section: str) -> Any:
    if not conf.get(key):
        raise ConfigError(f"{section}.{key} is required for kind {conf.get('kind')!r}")
    return conf[key]


def _need_file(conf: Mapping[str, Any], section: str) -> str:
    path = _need(conf, "path", section)
    if not Path(path).is_file():
        raise ConfigError(f"{section}.path does not exist: {path}")
    return path


def build_retriever(conf: Mapping[str, Any]):
    kind = conf.get("kind")
    try:
        if kind == "mock":
            return ScriptedRetriever.from_file(_need_file(conf, "retrieval"))
        if kind == "corpus":
            return LocalCorpusRetriever.from_jsonl(
                _need_file(conf, "retrieval"), k1=float(conf.get("k1", 1.5)), b=float(conf.get("b", 0.75))
            )
        if kind == "web":
            return WebSearchRetriever(
                endpoint=_need(conf, "endpoint", "retrieval"),
                auth_env=conf.get("auth_env"),
                timeout=float(conf.get("timeout", 20.0)),
                max_retries=int(conf.get("max_retries", 3)),
                cache_dir=conf.get("cache_dir"),
            )
    except ConfigError:
        raise
    except (QARepairError, ValueError) as exc:
        raise ConfigError(f"cannot load retrieval backend: {exc}")
    raise ConfigError(f"unknown retrieval kind {kind!r}")


def _http_model(conf: Mapping[str, Any], section: str) -> ChatCompletionModel:
    return ChatCompletionModel(
        endpoint=_need(conf, "endpoint", section),
        model=_need(conf, "model_name", section),
        auth_env=conf.get("auth_env"),
        timeout=float(conf.get("timeout", 60.0)),
        max_retries=int(conf.get("max_retries", 3)),
        temperature=float(conf.get("temperature", 0.0)),
    )


def build_model(conf: Mapping[str, Any]) -> ModelBackend:
    kind = conf.get("kind")
    try:
        if kind == "mock":
            return ScriptedModel.from_file(_need_file(conf, "model"))
        if kind == "http":
            return _http_model(conf, "model")
    except ConfigError:
        raise
    except (QARepairError, ValueError) as exc:
        raise ConfigError(f"cannot load model backend: {exc}")
    raise ConfigError(f"unknown model kind {kind!r}")


def build_grader(conf: Mapping[str, Any]) -> Grader:
    kind = conf.get("kind", "default")
    if kind == "default":
        return DefaultGrader()
    if kind == "external":
        return ModelGrader(_http_model(conf, "grader"))
    raise ConfigError(f"unknown grader kind {kind!r}")


def build_backends(cfg: RunConfig) -> Backends:
    try:
        prompts = load_prompts(cfg.prompt_path)
    except (OSError, QARepairError) as exc:
        raise ConfigError(f"cannot load prompt templates: {exc}")
    return Backends(build_retriever(cfg.retrieval), build_model(cfg.model), prompts)
