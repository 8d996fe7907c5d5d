from __future__ import annotations

import json
import subprocess
from pathlib import Path

import pytest

from bugloc import DeterministicProvider


def run_git(repo: Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args], capture_output=True, text=True, check=True
    )
    return proc.stdout


def make_git_repo(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    subprocess.run(["git", "init", "-q", "-b", "main", str(path)], check=True)
    run_git(path, "config", "user.email", "dev@example.com")
    run_git(path, "config", "user.name", "dev")
    return path


def commit_all(repo: Path, message: str) -> str:
    run_git(repo, "add", "-A")
    run_git(repo, "commit", "-q", "-m", message)
    return run_git(repo, "rev-parse", "HEAD").strip()


@pytest.fixture
def provider() -> DeterministicProvider:
    return DeterministicProvider()


@pytest.fixture
def fixture_repo(tmp_path: Path) -> dict:
    """Small git repo with known history: adds, an edit, a rename, a merge."""
    repo = make_git_repo(tmp_path / "repo")
    (repo / "src").mkdir()
    (repo / "src/a.java").write_text(
        "package demo.core; public class Alpha { int parseHeader() { return 1; } }\n"
    )
    (repo / "src/b.java").write_text(
        "package demo.core; public class Beta { void writeFooter() {} }\n"
    )
    c1 = commit_all(repo, "add alpha and beta parsers")

    (repo / "old.c").write_text("int legacy_entry(void) { return 0; }\n")
    c2 = commit_all(repo, "add legacy entry point")

    run_git(repo, "mv", "old.c", "new.c")
    c3 = commit_all(repo, "rename legacy entry point file")

    run_git(repo, "checkout", "-q", "-b", "side")
    (repo / "side.go").write_text("package side\n\nfunc SideJob() int { return 2 }\n")
    c4 = commit_all(repo, "side branch adds side job")
    run_git(repo, "checkout", "-q", "main")
    (repo / "src/a.java").write_text(
        "package demo.core; public class Alpha { int parseHeader() { return 2; } }\n"
    )
    c5 = commit_all(repo, "fix header parsing off by one")
    run_git(repo, "merge", "-q", "--no-ff", "side", "-m", "merge side branch")
    c6 = run_git(repo, "rev-parse", "HEAD").strip()

    return {
        "repo": repo,
        "adds": c1,
        "legacy": c2,
        "rename": c3,
        "side": c4,
        "fix": c5,
        "merge": c6,
    }


def write_issue_export(path: Path, issues: list[dict]) -> Path:
    path.write_text(json.dumps(issues, indent=2), encoding="utf-8")
    return path
