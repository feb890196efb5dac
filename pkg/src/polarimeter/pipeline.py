"""File-based pipeline orchestration.

One resolved configuration drives every stage; each stage writes an
artifact under the output directory so later stages (or a curious human)
can pick up where it left off:

    stats.json      ingest summary
    graph.tsv       pruned root-graph edges
    partition.tsv   run-0 community assignment
    corpus.tsv      run-0 balanced training corpus
    model.bin       run-0 trained classifier
    report.json     scores, applicability, timings

Artifact TSVs start with a header line carrying a format version and the
hash of the producing configuration. A hash mismatch when a later stage
reads the file is only a warning: configs legitimately differ between a
stage run and a full run.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from . import classifier as _classifier
from . import community as _community
from . import corpus as _corpus
from . import graph as _graph
from . import ingest as _ingest
from . import polarity as _polarity
from .errors import (
    DegenerateGraphError,
    InvalidParamsError,
    MissingArtifactError,
    NotApplicableError,
    PolarimeterError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_APPLICABLE = 2
EXIT_DEGENERATE = 3

_HEADER_TAG = "# polarimeter"
ARTIFACT_VERSION = 1

STAGE_HINTS = {
    "config": "fix the flag or config-file value named in the message",
    "ingest": "check the JSONL input; use --strict off (default) to skip bad lines",
    "graph": "the discussion is too small after pruning; lower --min-degree or widen the topic filter",
    "community": "the root-graph did not split in two; the topic may not be polarized",
    "corpus": "a principal community has no usable text; check the emoji lexicon and filters",
    "train": "the corpus is empty or degenerate; inspect corpus.tsv",
    "score": "see report.json for applicability details",
}


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the end-to-end run; serializable to one JSON file."""

    input: tuple = ()
    out_dir: str = "out"
    hashtags: tuple = ()
    keywords: tuple = ()
    window_from: int | None = None
    window_to: int | None = None
    max_chars: int | None = None
    strict_parse: bool = False
    method: str = "louvain"
    n_runs: int = 20
    seed: int = 0
    threshold: float = 0.9
    min_total_degree: int = 3
    applicability_runs: int = 10
    dim: int = 100
    lr: float = 0.1
    epochs: int = 20
    word_ngrams: int = 2
    min_count: int = 1
    hash_buckets: int = 2_000_000
    lowercase: bool = True
    emoji_lexicon: str | None = None
    n_threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParamsError(f"unknown config keys: {sorted(unknown)}")
        clean = dict(data)
        for key in ("input", "hashtags", "keywords"):
            if key in clean and clean[key] is not None:
                clean[key] = tuple(clean[key])
        return cls(**clean)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        # save() embeds the hash for provenance; it is not a config field
        data.pop("config_hash", None)
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("input", "hashtags", "keywords"):
            out[key] = list(out[key])
        return out

    def save(self, path) -> None:
        data = self.to_dict()
        data["config_hash"] = self.config_hash()
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]

    # component views; constructing them is also the validation step
    def topic_filter(self) -> _ingest.TopicFilter:
        window_from = 0 if self.window_from is None else self.window_from
        window_to = 2**62 if self.window_to is None else self.window_to
        return _ingest.TopicFilter(
            hashtags=frozenset(self.hashtags),
            keywords=frozenset(self.keywords),
            window=(window_from, window_to),
            max_chars=self.max_chars,
        )

    def classifier_config(self) -> _classifier.ClassifierConfig:
        return _classifier.ClassifierConfig(
            dim=self.dim, lr=self.lr, epochs=self.epochs,
            word_ngrams=self.word_ngrams, min_count=self.min_count,
            hash_buckets=self.hash_buckets, seed=self.seed,
        )

    def score_options(self, skip_applicability: bool = False) -> _polarity.ScoreOptions:
        return _polarity.ScoreOptions(
            method=self.method, n_runs=self.n_runs, seed=self.seed,
            threshold=self.threshold,
            applicability_runs=self.applicability_runs,
            classifier=self.classifier_config(),
            lowercase=self.lowercase,
            min_total_degree=self.min_total_degree,
            skip_applicability=skip_applicability,
            n_threads=self.n_threads,
        )

    def lexicon(self) -> _corpus.EmojiLexicon:
        if self.emoji_lexicon:
            return _corpus.EmojiLexicon.from_tsv(self.emoji_lexicon)
        return _corpus.EmojiLexicon.bundled()

    def validate(self) -> None:
        self.topic_filter()
        self.classifier_config()
        self.score_options()
        if not self.input:
            raise InvalidParamsError("at least one --input file is required")


def effective_threads(config: PipelineConfig) -> int:
    """POLARIMETER_THREADS caps whatever the config asks for."""
    cap = os.environ.get("POLARIMETER_THREADS")
    if cap is None:
        return config.n_threads
    try:
        cap_val = int(cap)
    except ValueError:
        raise InvalidParamsError(f"POLARIMETER_THREADS={cap!r} is not an integer")
    return max(1, min(config.n_threads, cap_val))


def artifact_header(kind: str, config_hash: str, **meta) -> str:
    parts = [_HEADER_TAG, kind, f"v{ARTIFACT_VERSION}", f"config={config_hash}"]
    parts.extend(f"{k}={v}" for k, v in meta.items())
    return " ".join(parts)


def read_artifact_header(path) -> dict | None:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if not first.startswith(_HEADER_TAG):
        return None
    tokens = first[len(_HEADER_TAG):].split()
    if len(tokens) < 2:
        return None
    out = {"kind": tokens[0], "version": tokens[1]}
    for tok in tokens[2:]:
        if "=" in tok:
            key, val = tok.split("=", 1)
            out[key] = val
    return out


def require_artifact(path, kind: str, producer: str, config_hash: str | None = None) -> dict:
    """Check a prerequisite artifact exists and looks right; hash
    mismatches warn, everything else raises."""
    if not Path(path).exists():
        raise MissingArtifactError(
            f"missing {kind} artifact {path}; produce it with `polarimeter {producer}`"
        )
    header = read_artifact_header(path)
    if header is None:
        logger.warning("%s: no artifact header; assuming a bare %s file", path, kind)
        return {}
    if header.get("kind") != kind:
        raise MissingArtifactError(
            f"{path} is a {header.get('kind')!r} artifact, expected {kind!r};"
            f" produce it with `polarimeter {producer}`"
        )
    if config_hash and header.get("config") not in (None, config_hash):
        logger.warning(
            "%s was produced by config %s, current config is %s",
            path, header.get("config"), config_hash,
        )
    return header


def load_records(config: PipelineConfig) -> _ingest.RecordBatch:
    """Concatenate all input files, filtered. Simple concatenation:
    cross-file duplicate tweet ids are not collapsed."""
    topic = config.topic_filter()
    merged = _ingest.RecordBatch()
    for path in config.input:
        batch = _ingest.load_records(path, topic, strict=config.strict_parse)
        merged.extend(batch)
        merged.skipped += batch.skipped
        merged.duplicates += batch.duplicates
    return merged


def save_root_graph(root: _graph.RootGraph, path, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(artifact_header(
            "root-graph", config_hash,
            component_size=root.component_size, pruned=root.pruned_count,
        ) + "\n")
        for (u, v), w in sorted(root.edges.items()):
            fh.write(f"{u}\t{v}\t{w}\n")


def load_root_graph(path) -> _graph.RootGraph:
    header = read_artifact_header(path) or {}
    g = _graph.load_edges(path)
    component_size = int(header.get("component_size", g.n_nodes))
    pruned = int(header.get("pruned", 0))
    return _graph.RootGraph(g.nodes, g.edges, component_size, pruned)


def save_partition(partition: _community.Partition, path, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(artifact_header(
            "partition", config_hash,
            method=partition.method, q=f"{partition.modularity_q:.6f}",
        ) + "\n")
        for node in sorted(partition.assignment):
            fh.write(f"{node}\t{partition.assignment[node]}\n")


def save_corpus(corpus: _corpus.TrainingCorpus, path, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(artifact_header("corpus", config_hash,
                                 n_per_class=corpus.n_per_class) + "\n")
        for label, doc in corpus.examples:
            fh.write(f"__label__{label}\t{doc.text}\n")


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def run_pipeline(config: PipelineConfig) -> tuple:
    """Execute every stage, write artifacts, and map outcomes to the
    exit-code contract: 0 scored, 2 not applicable, 3 degenerate.

    Returns (exit_code, report_dict); report.json always exists
    afterwards, whatever the outcome, so batch drivers can read one
    format.
    """
    try:
        config.validate()
    except (PolarimeterError, ValueError) as exc:
        raise InvalidParamsError(f"stage 'config': {exc} (hint: {STAGE_HINTS['config']})") from exc

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash()
    config.save(out / "config.json")

    records = load_records(config)
    stats = _ingest.dataset_stats(records)
    _write_json(out / "stats.json", {
        "n_records": stats.n_records,
        "n_users": stats.n_users,
        "retweet_fraction": stats.retweet_fraction,
        "window": list(stats.window) if stats.window else None,
        "skipped_lines": records.skipped,
        "duplicate_ids": records.duplicates,
    })

    options = config.score_options()
    threads = effective_threads(config)
    if threads != options.n_threads:
        options = replace(options, n_threads=threads)

    sink = {}
    try:
        report = _polarity.score_discussion(
            records, options, lexicon=config.lexicon(), artifact_sink=sink)
    except DegenerateGraphError as exc:
        payload = {"status": "degenerate", "reason": str(exc), "config_hash": chash}
        _write_json(out / "report.json", payload)
        return EXIT_DEGENERATE, payload
    except NotApplicableError as exc:
        payload = {
            "status": "not_applicable", "reason": str(exc),
            "applicability": exc.report, "config_hash": chash,
        }
        _write_json(out / "report.json", payload)
        return EXIT_NOT_APPLICABLE, payload

    if "root" in sink:
        save_root_graph(sink["root"], out / "graph.tsv", chash)
    if "partition" in sink:
        save_partition(sink["partition"], out / "partition.tsv", chash)
    if "corpus" in sink:
        save_corpus(sink["corpus"], out / "corpus.tsv", chash)
    if "model" in sink:
        _classifier.save(sink["model"], out / "model.bin", meta={"config": chash})

    payload = {"status": "ok", "config_hash": chash, **report.to_dict()}
    _write_json(out / "report.json", payload)
    return EXIT_OK, payload
