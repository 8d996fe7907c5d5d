"""Walk a source tree and split files into prefix-annotated code segments.

Each file is tokenized and cut into consecutive windows of at most
``seg_len`` tokens; every window carries the same prefix (package/class
names when detectable, else the file path) so a segment embeds with its
location context.
"""
from __future__ import annotations

import fnmatch
import hashlib
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .tokenize import tokenize

logger = logging.getLogger(__name__)

DEFAULT_SEG_LEN = 512
_BINARY_SNIFF_BYTES = 8192
_MAX_PREFIX_NAMES = 32

_EXT_LANGUAGE = {
    ".java": "java",
    ".c": "c_cpp",
    ".h": "c_cpp",
    ".cc": "c_cpp",
    ".cpp": "c_cpp",
    ".cxx": "c_cpp",
    ".hpp": "c_cpp",
    ".hh": "c_cpp",
    ".go": "go",
}

_JAVA_PACKAGE_RE = re.compile(r"\bpackage\s+([A-Za-z_][\w.]*)\s*;")
_JAVA_TYPE_RE = re.compile(r"\b(?:class|interface|enum|record)\s+([A-Za-z_]\w*)")
_GO_PACKAGE_RE = re.compile(r"^\s*package\s+([A-Za-z_]\w*)\s*$", re.MULTILINE)
_GO_DECL_RE = re.compile(r"^func\s+(?:\([^)]*\)\s*)?([A-Za-z_]\w*)|^type\s+([A-Za-z_]\w*)", re.MULTILINE)
_CPP_NAMESPACE_RE = re.compile(r"\bnamespace\s+([A-Za-z_][\w:]*)")
_CPP_TYPE_RE = re.compile(r"\b(?:class|struct)\s+([A-Za-z_]\w*)")


class PrefixMode(str, Enum):
    DECLARATIONS = "declarations"
    PATH_ONLY = "path_only"


def stable_hash64(text: str) -> str:
    """64-bit content hash as 16 hex chars; stable across processes."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class SourceFile:
    path: str
    content: str
    content_hash: str
    language_hint: str

    @classmethod
    def from_content(cls, path: str, content: str) -> "SourceFile":
        ext = Path(path).suffix.lower()
        return cls(
            path=path,
            content=content,
            content_hash=stable_hash64(content),
            language_hint=_EXT_LANGUAGE.get(ext, "other"),
        )


@dataclass(frozen=True)
class CodeSegment:
    segment_id: str
    file_path: str
    index: int
    prefix: str
    body_tokens: tuple[str, ...]
    text: str


@dataclass(frozen=True)
class IndexerConfig:
    seg_len: int = DEFAULT_SEG_LEN
    include_globs: tuple[str, ...] = ()
    exclude_globs: tuple[str, ...] = ()
    prefix_mode: PrefixMode = PrefixMode.DECLARATIONS

    def __post_init__(self) -> None:
        if self.seg_len < 1:
            raise ValueError("seg_len must be >= 1")


@dataclass
class IndexResult:
    files: list[SourceFile]
    segments: list[CodeSegment]
    skipped: list[str] = field(default_factory=list)
    config: IndexerConfig = field(default_factory=IndexerConfig)

    def report(self) -> dict:
        return {
            "files": len(self.files),
            "segments": len(self.segments),
            "skipped": sorted(self.skipped),
            "seg_len": self.config.seg_len,
            "prefix_mode": self.config.prefix_mode.value,
        }


def _path_prefix(path: str) -> str:
    return path.replace("/", " ")


def _declaration_prefix(file: SourceFile) -> str | None:
    """Package/namespace plus declared type/function names, or None.

    A regex line scan, not a parse: nested declarations may leak in and
    exotic syntax may be missed. Good enough for location context.
    """
    content = file.content
    if file.language_hint == "java":
        package = _JAVA_PACKAGE_RE.search(content)
        if not package:
            return None
        names = _JAVA_TYPE_RE.findall(content)
    elif file.language_hint == "go":
        package = _GO_PACKAGE_RE.search(content)
        if not package:
            return None
        names = [a or b for a, b in _GO_DECL_RE.findall(content)]
    elif file.language_hint == "c_cpp":
        package = _CPP_NAMESPACE_RE.search(content)
        if not package:
            return None
        names = _CPP_TYPE_RE.findall(content)
    else:
        return None
    seen: list[str] = []
    for name in names:
        if name and name not in seen:
            seen.append(name)
    return " ".join([package.group(1)] + seen[:_MAX_PREFIX_NAMES])


def extract_prefix(file: SourceFile, mode: PrefixMode = PrefixMode.DECLARATIONS) -> str:
    if mode is PrefixMode.DECLARATIONS:
        prefix = _declaration_prefix(file)
        if prefix is not None:
            return prefix
    return _path_prefix(file.path)


def segment_file(file: SourceFile, cfg: IndexerConfig) -> list[CodeSegment]:
    """Consecutive token windows of the file body; empty file yields none."""
    tokens = tokenize(file.content)
    if not tokens:
        return []
    prefix = extract_prefix(file, cfg.prefix_mode)
    segments = []
    for start in range(0, len(tokens), cfg.seg_len):
        body = tuple(tokens[start : start + cfg.seg_len])
        index = start // cfg.seg_len
        body_text = " ".join(body)
        segments.append(
            CodeSegment(
                segment_id=f"{file.path}#{index}",
                file_path=file.path,
                index=index,
                prefix=prefix,
                body_tokens=body,
                text=f"{prefix}\n{body_text}" if prefix else body_text,
            )
        )
    return segments


def _matches(path: str, globs: tuple[str, ...]) -> bool:
    return any(fnmatch.fnmatch(path, g) for g in globs)


def _is_binary(raw: bytes) -> bool:
    return b"\x00" in raw[:_BINARY_SNIFF_BYTES]


def index_repository(root: str | Path, cfg: IndexerConfig | None = None) -> IndexResult:
    """Index every text file under ``root`` into files and segments.

    Output order is deterministic: lexicographic by path, then segment
    index. Binary files (NUL byte in the first 8 KiB), glob-excluded
    paths, and unreadable files are skipped; skips land in the report.
    """
    cfg = cfg or IndexerConfig()
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"index root is not a readable directory: {root}")

    result = IndexResult(files=[], segments=[], config=cfg)
    paths = []
    for path in root.rglob("*"):
        if not path.is_file() or path.is_symlink():
            continue
        rel = path.relative_to(root).as_posix()
        if rel.startswith(".git/") or "/.git/" in rel:
            continue
        paths.append((rel, path))
    paths.sort(key=lambda pair: pair[0])

    for rel, path in paths:
        if cfg.include_globs and not _matches(rel, cfg.include_globs):
            continue
        if _matches(rel, cfg.exclude_globs):
            result.skipped.append(rel)
            continue
        if "\t" in rel or "\n" in rel:
            logger.warning("skipping path with control characters: %r", rel)
            result.skipped.append(rel)
            continue
        try:
            raw = path.read_bytes()
        except OSError as exc:
            logger.warning("skipping unreadable file %s: %s", rel, exc)
            result.skipped.append(rel)
            continue
        if _is_binary(raw):
            result.skipped.append(rel)
            continue
        file = SourceFile.from_content(rel, raw.decode("utf-8", errors="replace"))
        result.files.append(file)
        result.segments.extend(segment_file(file, cfg))
    return result
