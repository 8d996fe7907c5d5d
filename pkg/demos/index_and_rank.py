"""Walkthrough: index a small repository and rank files for a bug report.

Builds a throwaway git repo with three source files, runs the full
indexing pipeline (segments + commit messages -> embedding stores), and
ranks a query against it with all three strategies.

Run:  python demos/index_and_rank.py
"""
from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path

from bugloc import Config, ProviderConfig, RankingEngine, build_index

FILES = {
    "src/parser.java": (
        "package demo.parse; public class Parser {\n"
        "  int frobnicateWidget(int x) { return x + 1; }\n"
        "}\n"
    ),
    "src/render.go": "package render\n\nfunc PaintCanvas(width int) int {\n\treturn width * 2\n}\n",
    "lib/util.c": "int quiet_helper(void) { return 7; }\n",
}
COMMITS = [
    ("src/parser.java", "fix widget frobnication rounding"),
    ("src/render.go", "paint canvas twice as wide"),
    ("lib/util.c", "add quiet helper for diagnostics"),
]


def build_repo(root: Path) -> None:
    subprocess.run(["git", "init", "-q", "-b", "main", str(root)], check=True)
    git = lambda *args: subprocess.run(["git", "-C", str(root), *args], check=True)
    git("config", "user.email", "demo@example.com")
    git("config", "user.name", "demo")
    for path, message in COMMITS:
        target = root / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(FILES[path])
        git("add", "-A")
        git("commit", "-q", "-m", message)


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        repo = Path(tmp) / "repo"
        repo.mkdir()
        build_repo(repo)

        config = Config(
            repo_root=repo,
            store_dir=Path(tmp) / "store",
            provider=ProviderConfig(kind="deterministic_test", dim=128),
            seg_len=32,
            k=5,
        )

        print("== indexing ==")
        summary = build_index(config)
        print(json.dumps(summary, indent=2, sort_keys=True))

        engine = RankingEngine.load(config)
        query = "calling frobnicateWidget returns an off by one result"
        print(f"\n== query ==\n{query}\n")

        for strategy in ("score_merge", "file_union"):
            doc = engine.rank("demo-bug", query, strategy=strategy)
            print(f"-- files ({strategy}) --")
            for entry in doc["files"]:
                print(
                    f"  {entry['path']:<18} count={entry['count']} "
                    f"best={entry['best_score']:.4f} "
                    f"via {len(entry['segments'])} segment(s), {len(entry['commits'])} commit(s)"
                )

        doc = engine.rank("demo-bug", query)
        print("\n-- top segments --")
        for item in doc["segments"][:3]:
            print(f"  {item['segment_id']:<22} {item['score']:.4f}")
        print("-- top commits --")
        for item in doc["commits"][:3]:
            print(f"  {item['commit_id'][:10]:<12} {item['score']:.4f}")


if __name__ == "__main__":
    main()
