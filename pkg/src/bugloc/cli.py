"""Command-line interface: index, rank, eval, gen-negatives, serve."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import Config, load_config
from .errors import BuglocError
from .indexer import IndexerConfig, index_repository
from .ingest import build_ground_truth, load_bug_reports, load_commits
from .metrics import evaluate, format_table, report_to_json_text
from .negatives import generate_training_pairs, write_pairs_ndjson
from .pipeline import RankingEngine, build_index, make_provider, render_ranking
from .ranker import STRATEGIES
from .indexer import stable_hash64

logger = logging.getLogger(__name__)

EVAL_MODES = ("segment", "commit", "score_merge", "file_union")


def cmd_index(config: Config, args: argparse.Namespace) -> int:
    if not Path(config.repo_root).is_dir():
        raise BuglocError(f"repo_root does not exist: {config.repo_root}")
    summary = build_index(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_rank(config: Config, args: argparse.Namespace) -> int:
    if args.text:
        text = args.text
        bug_id = f"query-{stable_hash64(text)}"
    elif args.report:
        record = json.loads(Path(args.report).read_text(encoding="utf-8"))
        title = str(record.get("title", ""))
        body = str(record.get("body", ""))
        text = f"{title}\n{body}" if body else title
        bug_id = str(record.get("id", f"query-{stable_hash64(text)}"))
    else:
        raise BuglocError("rank needs --text or --report")
    if not text.strip():
        raise BuglocError("query text is empty")

    engine = RankingEngine.load(config)
    doc = engine.rank(bug_id, text, k=args.k, strategy=args.strategy)
    if args.granularity != "all":
        keep = {"file": "files", "segment": "segments", "commit": "commits"}[args.granularity]
        doc = {key: value for key, value in doc.items() if key in ("bug_id", "strategy", "k", keep)}
    sys.stdout.write(render_ranking(doc))
    return 0


def _ground_truth_reports(config: Config, export: Path):
    reports = load_bug_reports(export, bug_labels=config.bug_labels, ground_truth_mode=True)
    commits = load_commits(config.repo_root)
    return build_ground_truth(reports, commits)


def cmd_eval(config: Config, args: argparse.Namespace) -> int:
    export = Path(args.ground_truth or config.issue_export_path or "")
    if not export.is_file():
        raise BuglocError(f"ground-truth export not found: {export}")
    k_list = sorted({int(k) for k in args.k_list.split(",") if k.strip()})
    if not k_list:
        raise BuglocError("--k must list at least one cutoff")
    queries = _ground_truth_reports(config, export)
    engine = RankingEngine.load(config)
    max_k = max(k_list)

    rows = {}
    for mode in EVAL_MODES:
        rows[mode] = evaluate(
            queries,
            lambda report, mode=mode: engine.rank_files(report.query_text, mode, k=max_k),
            k_list,
        )
    out_dir = Path(args.out or config.store_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval_report.json").write_text(report_to_json_text(rows), encoding="utf-8")
    table = format_table(rows, k_list)
    (out_dir / "eval_report.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return 0


def cmd_gen_negatives(config: Config, args: argparse.Namespace) -> int:
    export = Path(args.positives)
    if not export.is_file():
        raise BuglocError(f"positives export not found: {export}")
    queries = _ground_truth_reports(config, export)
    indexer_cfg = IndexerConfig(
        seg_len=config.seg_len,
        include_globs=config.include_globs,
        exclude_globs=config.exclude_globs,
    )
    corpus = index_repository(config.repo_root, indexer_cfg).files
    positives = [
        (report, path) for report in queries for path in sorted(report.ground_truth_files)
    ]
    pairs = generate_training_pairs(
        positives, corpus, make_provider(config), top_n=config.top_n, seg_len=config.seg_len
    )
    write_pairs_ndjson(pairs, args.out)
    print(f"wrote {len(pairs)} pairs to {args.out}")
    return 0


def cmd_serve(config: Config, args: argparse.Namespace) -> int:
    from .service import run_service  # deferred: pulls in signal handling

    run_service(config, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bugloc", description=__doc__)
    parser.add_argument("--config", required=True, help="path to TOML or JSON config")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("index", help="index the repository and build embedding stores")

    rank = sub.add_parser("rank", help="rank files/segments/commits for a query")
    rank.add_argument("--text", help="bug report text")
    rank.add_argument("--report", help="path to a JSON bug report {id,title,body}")
    rank.add_argument("--k", type=int, default=None)
    rank.add_argument("--strategy", choices=STRATEGIES, default=None)
    rank.add_argument(
        "--granularity", choices=("all", "file", "segment", "commit"), default="all"
    )

    ev = sub.add_parser("eval", help="evaluate ranking against ground truth")
    ev.add_argument("--ground-truth", dest="ground_truth", default=None,
                    help="issue export with linked commits (defaults to issue_export_path)")
    ev.add_argument("--k", dest="k_list", default="1,3,5,10", help="comma-separated cutoffs")
    ev.add_argument("--out", default=None, help="directory for eval_report.{json,txt}")

    gen = sub.add_parser("gen-negatives", help="emit training pairs as NDJSON")
    gen.add_argument("--positives", required=True, help="issue export with linked commits")
    gen.add_argument("--out", required=True, help="output NDJSON path")

    serve = sub.add_parser("serve", help="run the HTTP query service")
    serve.add_argument("--port", type=int, default=8080)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        handler = {
            "index": cmd_index,
            "rank": cmd_rank,
            "eval": cmd_eval,
            "gen-negatives": cmd_gen_negatives,
            "serve": cmd_serve,
        }[args.command]
        return handler(config, args)
    except BuglocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
