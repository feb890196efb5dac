"""Command line front end.

Every pipeline stage is a subcommand that reads the previous stage's
artifact and writes its own, so a full run can be reproduced or resumed
piecewise:

    polarimeter synth --out d.jsonl --truth d_truth.tsv
    polarimeter run --input d.jsonl --hashtag synthetic --out-dir out/
    polarimeter build-graph --input d.jsonl --hashtag synthetic --out-dir out/
    polarimeter score --input d.jsonl --hashtag synthetic --out-dir out/

Exit codes: 0 scored, 1 error, 2 method not applicable, 3 degenerate
(root-graph too small). Note 2 and 3 are outcomes, not failures; usage
errors exit 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import classifier as _classifier
from . import community as _community
from . import corpus as _corpus
from . import evaluation as _evaluation
from . import ingest as _ingest
from . import pipeline as _pipeline
from . import polarity as _polarity
from .errors import (
    DegenerateGraphError,
    InvalidParamsError,
    NotApplicableError,
    PolarimeterError,
)
from .pipeline import (
    EXIT_DEGENERATE,
    EXIT_ERROR,
    EXIT_NOT_APPLICABLE,
    EXIT_OK,
    PipelineConfig,
)
from .polarity import _derive_seed

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 means "not applicable" here,
    so remap usage problems to exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_ingest_flags(p):
    p.add_argument("--input", action="append", metavar="JSONL",
                   help="input file; repeatable")
    p.add_argument("--hashtag", action="append", dest="hashtags", metavar="TAG",
                   help="topic hashtag; repeatable")
    p.add_argument("--keyword", action="append", dest="keywords", metavar="WORD",
                   help="topic keyword (substring match); repeatable")
    p.add_argument("--from", dest="window_from", type=int, metavar="TS",
                   help="window start timestamp (inclusive)")
    p.add_argument("--to", dest="window_to", type=int, metavar="TS",
                   help="window end timestamp (inclusive)")
    p.add_argument("--max-chars", type=int, choices=(140, 280),
                   help="truncate tweet text")
    p.add_argument("--strict", dest="strict_parse", action="store_const", const=True,
                   help="fail on the first malformed input line")


def _add_classifier_flags(p):
    p.add_argument("--dim", type=int, help="embedding size")
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--epochs", type=int, help="training epochs")
    p.add_argument("--word-ngrams", type=int, help="max word n-gram order")
    p.add_argument("--min-count", type=int, help="min token count for the vocabulary")
    p.add_argument("--hash-buckets", type=int, help="n-gram hash table size")


def _add_score_flags(p):
    p.add_argument("--cluster", dest="method", choices=_polarity.METHODS,
                   help="community detection method")
    p.add_argument("--runs", dest="n_runs", type=int, help="scoring runs to average")
    p.add_argument("--threshold", type=float, help="characteristic-user probability")
    p.add_argument("--min-degree", dest="min_total_degree", type=int,
                   help="root-graph pruning threshold")
    p.add_argument("--applicability-runs", type=int, help="trainings in the applicability check")
    p.add_argument("--no-lowercase", dest="lowercase", action="store_const", const=False,
                   help="keep original casing in sanitized text")
    p.add_argument("--emoji-lexicon", metavar="TSV", help="emoji-to-word table path")


def _add_common_flags(p):
    p.add_argument("--config", metavar="JSON", help="config file; flags override it")
    p.add_argument("--out-dir", metavar="DIR", help="artifact directory")
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--threads", dest="n_threads", type=int,
                   help="training threads (>1 is nondeterministic)")


_CONFIG_KEYS = (
    "input", "out_dir", "hashtags", "keywords", "window_from", "window_to",
    "max_chars", "strict_parse", "method", "n_runs", "seed", "threshold",
    "min_total_degree", "applicability_runs", "dim", "lr", "epochs",
    "word_ngrams", "min_count", "hash_buckets", "lowercase", "emoji_lexicon",
    "n_threads",
)


def _build_config(args) -> PipelineConfig:
    base = PipelineConfig.load(args.config).to_dict() if getattr(args, "config", None) else {}
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    return PipelineConfig.from_dict(base)


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    config = _build_config(args)
    code, payload = _pipeline.run_pipeline(config)
    _print_json(payload)
    return code


def _cmd_ingest_stats(args) -> int:
    config = _build_config(args)
    config.topic_filter()
    if not config.input:
        raise InvalidParamsError("at least one --input file is required")
    records = _pipeline.load_records(config)
    stats = _ingest.dataset_stats(records)
    payload = {
        "n_records": stats.n_records,
        "n_users": stats.n_users,
        "retweet_fraction": stats.retweet_fraction,
        "window": list(stats.window) if stats.window else None,
        "skipped_lines": records.skipped,
        "duplicate_ids": records.duplicates,
    }
    if args.out:
        _ingest.save_records(records, args.out)
        payload["records_written"] = args.out
    _print_json(payload)
    return EXIT_OK


def _cmd_build_graph(args) -> int:
    config = _build_config(args)
    config.topic_filter()
    if not config.input:
        raise InvalidParamsError("at least one --input file is required")
    out = _out_dir(config)
    records = _pipeline.load_records(config)
    from . import graph as _graph

    g = _graph.build_graph(records)
    root = _graph.prune_low_degree(g, min_total_degree=config.min_total_degree)
    _pipeline.save_root_graph(root, out / "graph.tsv", config.config_hash())
    _print_json({
        "nodes": root.n_nodes, "edges": root.n_edges,
        "component_size": root.component_size, "pruned": root.pruned_count,
        "artifact": str(out / "graph.tsv"),
    })
    return EXIT_OK


def _cmd_cluster(args) -> int:
    config = _build_config(args)
    out = _out_dir(config)
    graph_path = args.graph or out / "graph.tsv"
    _pipeline.require_artifact(graph_path, "root-graph", "build-graph", config.config_hash())
    root = _pipeline.load_root_graph(graph_path)
    if config.method == "walktrap":
        partition = _community.walktrap(root)
    else:
        partition = _community.louvain(root, seed=_derive_seed(config.seed, "cluster", 0))
    _pipeline.save_partition(partition, out / "partition.tsv", config.config_hash())
    _print_json({
        "method": partition.method,
        "communities": partition.n_communities,
        "modularity": partition.modularity_q,
        "artifact": str(out / "partition.tsv"),
    })
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _build_config(args)
    out = _out_dir(config)
    chash = config.config_hash()
    if args.corpus:
        _pipeline.require_artifact(args.corpus, "corpus", "train", chash)
        corpus = _corpus.load_corpus(args.corpus)
    else:
        if not config.input:
            raise InvalidParamsError("need --corpus or --input plus a partition artifact")
        partition_path = args.partition or out / "partition.tsv"
        _pipeline.require_artifact(partition_path, "partition", "cluster", chash)
        partition = _community.load_partition(partition_path, method=config.method)
        records = _pipeline.load_records(config)
        lexicon = config.lexicon()
        deduped = _corpus.dedupe(records, lexicon, lowercase=config.lowercase)
        docs = _corpus.build_user_documents(
            deduped, set(partition.assignment), lexicon, lowercase=config.lowercase)
        pair = _community.principal_pair(partition)
        corpus = _corpus.build_training_corpus(
            pair, docs, seed=_derive_seed(config.seed, "corpus", 0))
        _pipeline.save_corpus(corpus, out / "corpus.tsv", chash)
    cfg = replace(config.classifier_config(), seed=_derive_seed(config.seed, "train", 0))
    model = _classifier.train(corpus, cfg, n_threads=_pipeline.effective_threads(config))
    _classifier.save(model, out / "model.bin", meta={"config": chash})
    _print_json({
        "examples": len(corpus),
        "vocabulary": len(model.vocabulary),
        "final_loss": model.epoch_losses[-1] if model.epoch_losses else None,
        "artifact": str(out / "model.bin"),
    })
    return EXIT_OK


def _cmd_score(args) -> int:
    config = _build_config(args)
    if not config.input:
        raise InvalidParamsError("at least one --input file is required")
    out = _out_dir(config)
    chash = config.config_hash()
    graph_path = args.graph or out / "graph.tsv"
    _pipeline.require_artifact(graph_path, "root-graph", "build-graph", chash)
    root = _pipeline.load_root_graph(graph_path)
    records = _pipeline.load_records(config)
    options = replace(config.score_options(), n_threads=_pipeline.effective_threads(config))
    try:
        report = _polarity.score_discussion(
            records, options, lexicon=config.lexicon(), root=root)
    except NotApplicableError as exc:
        payload = {"status": "not_applicable", "reason": str(exc),
                   "applicability": exc.report, "config_hash": chash}
        _pipeline._write_json(out / "report.json", payload)
        _print_json(payload)
        return EXIT_NOT_APPLICABLE
    payload = {"status": "ok", "config_hash": chash, **report.to_dict()}
    _pipeline._write_json(out / "report.json", payload)
    _print_json(payload)
    return EXIT_OK


def _read_manifest(path):
    rows = []
    base = Path(path).parent
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or row == ["path", "label"]:
                continue
            if len(row) != 2:
                raise InvalidParamsError(f"manifest row must be path,label: {row}")
            rel, label = row[0].strip(), row[1].strip()
            if label not in ("controversial", "non_controversial"):
                raise InvalidParamsError(f"unknown ground-truth label {label!r}")
            rows.append((str((base / rel)) if not Path(rel).is_absolute() else rel, label))
    if not rows:
        raise InvalidParamsError(f"manifest {path} has no entries")
    return rows


def _cmd_eval(args) -> int:
    config = _build_config(args)
    entries = _read_manifest(args.manifest)
    lexicon = config.lexicon()
    options = replace(config.score_options(), n_threads=_pipeline.effective_threads(config))
    results = []
    scores = []
    for path, label in entries:
        entry_config = replace(config, input=(path,))
        records = _pipeline.load_records(entry_config)
        status = "ok"
        dmc_mean = 0.0
        try:
            report = _polarity.score_discussion(records, options, lexicon=lexicon)
            dmc_mean = report.dmc_mean
        except NotApplicableError:
            # not applicable means "no confident split": score 0 so the
            # batch completes and AUC remains computable
            status = "not_applicable"
        except DegenerateGraphError:
            status = "degenerate"
        results.append({"path": path, "label": label,
                        "dmc_mean": dmc_mean, "status": status})
        scores.append(_evaluation.LabeledScore(path, dmc_mean, label == "controversial"))
        logger.info("scored %s: %s %.4f", path, status, dmc_mean)
    auc = _evaluation.auc_roc(scores)
    payload = {"auc_roc": auc, "method": options.method, "discussions": results}
    if config.out_dir:
        out = _out_dir(config)
        _pipeline._write_json(out / "eval.json", payload)
    _print_json(payload)
    return EXIT_OK


def _cmd_synth(args) -> int:
    params = _evaluation.SynthParams(
        users_per_side=args.users_per_side,
        tweets_per_user=args.tweets_per_user,
        vocab_size=args.vocab_size,
        vocab_overlap=args.overlap,
        cross_retweet_prob=args.cross,
        intra_retweet_mean=args.retweet_mean,
        tokens_per_tweet=args.tokens_per_tweet,
        single_community=args.single_community,
        seed=args.seed if args.seed is not None else 0,
    )
    records, info = _evaluation.generate_discussion(params)
    _ingest.save_records(records, args.out)
    truth = args.truth or str(Path(args.out).with_suffix("")) + "_truth.tsv"
    with open(truth, "w", encoding="utf-8") as fh:
        for user in sorted(info.membership):
            fh.write(f"{user}\t{info.membership[user]}\n")
    _print_json({
        "records": len(records),
        "tweets": info.n_tweets,
        "retweets": info.n_retweets,
        "expected_duplicates": info.n_duplicates_expected,
        "cross_edges": info.cross_edges,
        "records_path": args.out,
        "truth_path": truth,
    })
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _build_config(args)
    sizes = [float(s) for s in args.sizes.split(",") if s.strip()]
    table = _evaluation.benchmark_scaling(
        sizes, config.classifier_config(), seed=config.seed)
    payload = {
        "rows": [{"size_kb": r.size_kb, "seconds": r.seconds} for r in table.rows],
        "slope": table.slope,
        "intercept": table.intercept,
        "r_squared": table.r_squared,
    }
    _print_json(payload)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarimeter",
                     description="Controversy scoring for social-media discussions")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="full pipeline: ingest to report")
    _add_ingest_flags(p); _add_score_flags(p); _add_classifier_flags(p); _add_common_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("ingest-stats", help="dataset summary after filtering")
    _add_ingest_flags(p); _add_common_flags(p)
    p.add_argument("--out", metavar="JSONL", help="also write the filtered records")
    p.set_defaults(func=_cmd_ingest_stats)

    p = sub.add_parser("build-graph", help="build and prune the root-graph")
    _add_ingest_flags(p); _add_common_flags(p)
    p.add_argument("--min-degree", dest="min_total_degree", type=int,
                   help="root-graph pruning threshold")
    p.set_defaults(func=_cmd_build_graph)

    p = sub.add_parser("cluster", help="community detection on the graph artifact")
    _add_common_flags(p)
    p.add_argument("--graph", metavar="TSV", help="root-graph artifact (default out-dir/graph.tsv)")
    p.add_argument("--cluster", dest="method", choices=_polarity.METHODS)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("train", help="build the corpus and train the classifier")
    _add_ingest_flags(p); _add_score_flags(p); _add_classifier_flags(p); _add_common_flags(p)
    p.add_argument("--partition", metavar="TSV", help="partition artifact (default out-dir/partition.tsv)")
    p.add_argument("--corpus", metavar="TSV", help="train directly from a corpus TSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", help="multi-run scoring protocol from the graph artifact")
    _add_ingest_flags(p); _add_score_flags(p); _add_classifier_flags(p); _add_common_flags(p)
    p.add_argument("--graph", metavar="TSV", help="root-graph artifact (default out-dir/graph.tsv)")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="AUC-ROC over a labeled manifest")
    _add_ingest_flags(p); _add_score_flags(p); _add_classifier_flags(p); _add_common_flags(p)
    p.add_argument("--manifest", required=True, metavar="CSV", help='rows of "path,label"')
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic discussion")
    p.add_argument("--out", required=True, metavar="JSONL")
    p.add_argument("--truth", metavar="TSV", help="ground-truth sidecar path")
    p.add_argument("--users-per-side", type=int, default=500)
    p.add_argument("--tweets-per-user", type=int, default=10)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--overlap", type=float, default=0.1)
    p.add_argument("--cross", type=float, default=0.02)
    p.add_argument("--retweet-mean", type=float, default=5.0)
    p.add_argument("--tokens-per-tweet", type=int, default=25)
    p.add_argument("--single-community", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="train+predict runtime scaling")
    _add_classifier_flags(p); _add_common_flags(p)
    p.add_argument("--sizes", required=True, metavar="KB,KB,...",
                   help="comma-separated corpus sizes in KB, ascending")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NotApplicableError as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except DegenerateGraphError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except PolarimeterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
