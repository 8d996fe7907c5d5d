"""Mine commit messages from git and bug reports from issue exports.

Git access shells out to the system ``git`` binary with stable plumbing
flags: ``log --name-status -M`` plus first-parent diffs for merges, so
every commit (merges included) carries its changed-file set and renames
are recorded under the new path.

Issue exports are a JSON array of objects:

    {"id": str, "title": str, "body": str, "labels": [str],
     "state": "closed"|"open",
     "linked_commits": [hex], "linked_pr_commits": [hex]}
"""
from __future__ import annotations

import json
import logging
import subprocess
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import GitError, IngestError

logger = logging.getLogger(__name__)

DEFAULT_BUG_LABELS = ("bug",)

_RECORD_SEP = "\x01"
_FIELD_SEP = "\x02"
_BODY_END = "\x03"


@dataclass(frozen=True)
class CommitRecord:
    commit_id: str
    message: str
    changed_files: frozenset[str]
    timestamp: int


@dataclass(frozen=True)
class BugReport:
    bug_id: str
    title: str
    body: str
    ground_truth_files: frozenset[str] = frozenset()
    linked_commit_ids: tuple[str, ...] = ()

    @property
    def query_text(self) -> str:
        return f"{self.title}\n{self.body}" if self.body else self.title


def _run_git(repo: Path, args: list[str]) -> str:
    try:
        proc = subprocess.run(
            ["git", "-C", str(repo)] + args,
            capture_output=True,
            text=True,
            check=False,
        )
    except FileNotFoundError as exc:
        raise GitError("git binary not found on PATH") from exc
    if proc.returncode != 0:
        stderr = proc.stderr.strip()
        if "does not have any commits yet" in stderr:
            return ""
        raise GitError(f"git {' '.join(args[:1])} failed in {repo}: {stderr}")
    return proc.stdout


def _parse_name_status(block: str) -> frozenset[str]:
    files = set()
    for line in block.splitlines():
        line = line.strip("\n")
        if not line or "\t" not in line:
            continue
        parts = line.split("\t")
        status = parts[0]
        if status[:1] in ("R", "C") and len(parts) >= 3:
            files.add(parts[2])  # rename/copy: record the new path
        elif status[:1] in ("A", "M", "D", "T") and len(parts) >= 2:
            files.add(parts[1])
    return frozenset(files)


def load_commits(repo: str | Path, limit: int | None = None) -> list[CommitRecord]:
    """Commit records newest-first, with full changed-file sets.

    Merge commits report their diff against the first parent. A repo with
    no commits yields an empty list; anything that is not a git repo is
    fatal.
    """
    repo = Path(repo)
    if limit == 0:
        # still validate that this actually is a repository
        _run_git(repo, ["rev-parse", "--git-dir"])
        return []
    args = [
        "log",
        "-M",
        "--name-status",
        "--diff-merges=first-parent",
        f"--pretty=format:{_RECORD_SEP}%H{_FIELD_SEP}%ct{_FIELD_SEP}%B{_BODY_END}",
    ]
    if limit is not None:
        args += ["-n", str(limit)]
    output = _run_git(repo, args)
    records: list[CommitRecord] = []
    for chunk in output.split(_RECORD_SEP):
        if not chunk.strip():
            continue
        try:
            header, _, name_status = chunk.partition(_BODY_END)
            commit_id, timestamp, message = header.split(_FIELD_SEP)
            records.append(
                CommitRecord(
                    commit_id=commit_id,
                    message=message.strip(),
                    changed_files=_parse_name_status(name_status),
                    timestamp=int(timestamp),
                )
            )
        except ValueError as exc:
            logger.warning("skipping unparsable commit record: %s", exc)
    return records


def load_bug_reports(
    export: str | Path,
    bug_labels: tuple[str, ...] = DEFAULT_BUG_LABELS,
    ground_truth_mode: bool = True,
) -> list[BugReport]:
    """Load bug reports from a JSON issue export.

    Issues missing the bug label are dropped. In ground-truth mode,
    issues that are not closed or have no linked commits/PRs are dropped
    too (no code change means no ground truth); live-query mode keeps
    them. Records missing required fields are skipped with a warning.
    """
    export = Path(export)
    try:
        raw = json.loads(export.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"malformed issue export {export}: {exc}") from exc
    except OSError as exc:
        raise IngestError(f"cannot read issue export {export}: {exc}") from exc
    if not isinstance(raw, list):
        raise IngestError(f"issue export {export} must be a JSON array of issues")

    wanted = {label.lower() for label in bug_labels}
    reports: list[BugReport] = []
    for position, record in enumerate(raw):
        if not isinstance(record, dict):
            logger.warning("issue at index %d is not an object; skipped", position)
            continue
        missing = [key for key in ("id", "title", "body", "labels") if key not in record]
        if missing:
            logger.warning(
                "issue at index %d missing required fields %s; skipped", position, missing
            )
            continue
        labels = {str(label).lower() for label in record["labels"]}
        if not labels & wanted:
            continue
        links = tuple(
            str(c) for c in list(record.get("linked_commits") or [])
            + list(record.get("linked_pr_commits") or [])
        )
        if ground_truth_mode:
            if str(record.get("state", "")).lower() != "closed":
                continue
            if not links:
                continue
        title = str(record["title"])
        body = str(record["body"])
        if not (title.strip() or body.strip()):
            logger.warning("issue %s has empty title and body; skipped", record["id"])
            continue
        reports.append(
            BugReport(
                bug_id=str(record["id"]),
                title=title,
                body=body,
                linked_commit_ids=links,
            )
        )
    return reports


def build_ground_truth(
    reports: list[BugReport], commits: list[CommitRecord]
) -> list[BugReport]:
    """Resolve linked commits to changed-file unions.

    Unresolvable commit ids are ignored with a warning; reports whose
    union ends up empty are dropped.
    """
    by_id = {commit.commit_id: commit for commit in commits}
    out: list[BugReport] = []
    for report in reports:
        files: set[str] = set()
        for commit_id in report.linked_commit_ids:
            commit = by_id.get(commit_id)
            if commit is None:
                logger.warning(
                    "bug %s links unknown commit %s; link ignored", report.bug_id, commit_id
                )
                continue
            files |= commit.changed_files
        if not files:
            continue
        out.append(replace(report, ground_truth_files=frozenset(files)))
    return out
