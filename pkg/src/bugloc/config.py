"""Run configuration: a TOML or JSON key/value file, overridable by flags."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .indexer import DEFAULT_SEG_LEN
from .negatives import DEFAULT_TOP_N
from .providers import DEFAULT_DIM
from .ranker import DEFAULT_K, STRATEGIES, STRATEGY_SCORE_MERGE

PROVIDER_KINDS = ("deterministic_test", "remote_http")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "deterministic_test"
    url: str | None = None
    dim: int = DEFAULT_DIM


@dataclass(frozen=True)
class Config:
    repo_root: Path
    store_dir: Path
    issue_export_path: Path | None = None
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    seg_len: int = DEFAULT_SEG_LEN
    k: int = DEFAULT_K
    strategy: str = STRATEGY_SCORE_MERGE
    bug_labels: tuple[str, ...] = ("bug",)
    top_n: int = DEFAULT_TOP_N
    include_globs: tuple[str, ...] = ()
    exclude_globs: tuple[str, ...] = ()


def _read_raw(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def load_config(path: str | Path, overrides: dict | None = None) -> Config:
    """Parse and validate a config file; ``overrides`` win over file values."""
    raw = _read_raw(Path(path))
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table/object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    for key in ("repo_root", "store_dir"):
        if key not in raw:
            raise ConfigError(f"config is missing required key {key!r}")

    provider_raw = raw.get("provider", {})
    if not isinstance(provider_raw, dict):
        raise ConfigError("provider must be a table with kind/url/dim")
    kind = provider_raw.get("kind", "deterministic_test")
    if kind not in PROVIDER_KINDS:
        raise ConfigError(f"provider.kind must be one of {PROVIDER_KINDS}, got {kind!r}")
    if kind == "remote_http" and not provider_raw.get("url"):
        raise ConfigError("provider.kind remote_http requires provider.url")
    provider = ProviderConfig(
        kind=kind,
        url=provider_raw.get("url"),
        dim=int(provider_raw.get("dim", DEFAULT_DIM)),
    )

    config = Config(
        repo_root=Path(raw["repo_root"]),
        store_dir=Path(raw["store_dir"]),
        issue_export_path=Path(raw["issue_export_path"]) if raw.get("issue_export_path") else None,
        provider=provider,
        seg_len=int(raw.get("seg_len", DEFAULT_SEG_LEN)),
        k=int(raw.get("k", DEFAULT_K)),
        strategy=str(raw.get("strategy", STRATEGY_SCORE_MERGE)),
        bug_labels=tuple(raw.get("bug_labels", ("bug",))),
        top_n=int(raw.get("top_n", DEFAULT_TOP_N)),
        include_globs=tuple(raw.get("include_globs", ())),
        exclude_globs=tuple(raw.get("exclude_globs", ())),
    )
    if config.seg_len < 1:
        raise ConfigError("seg_len must be >= 1")
    if config.k < 1:
        raise ConfigError("k must be >= 1")
    if config.top_n < 1:
        raise ConfigError("top_n must be >= 1")
    if config.strategy not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}, got {config.strategy!r}")
    if config.provider.dim < 1:
        raise ConfigError("provider.dim must be >= 1")
    return config
