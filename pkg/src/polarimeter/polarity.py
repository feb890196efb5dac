"""Signed polarity over the root-graph and the controversy score.

Users the classifier tags with high confidence become signed seeds
(+p for C1, -p for C2). Seed values spread to everyone else by
iterative label propagation on the undirected weighted graph, and the
final field is summarized by the dipole-moment score

    DMC = (1 - delta_a) * tau

where delta_a is the normalized imbalance between positive and negative
node counts and tau is half the distance between the two sides' mean
values. Zero-valued nodes dilute delta_a's denominator but belong to
neither side.
"""

from __future__ import annotations

import logging
import time
import zlib
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from . import classifier as _classifier
from . import community as _community
from . import corpus as _corpus
from . import graph as _graph
from .classifier import ClassifierConfig
from .errors import (
    EmptyFieldError,
    InvalidParamsError,
    NoSeedsError,
    NotApplicableError,
    OneSidedSeedsError,
    SingleCommunityError,
)

logger = logging.getLogger(__name__)

METHODS = ("louvain", "walktrap")


def _derive_seed(seed: int, tag: str, k: int) -> int:
    """Stable, platform-independent sub-seed for one pipeline stage."""
    return zlib.crc32(f"{seed}:{tag}:{k}".encode("utf-8")) & 0x7FFFFFFF


def select_characteristic_users(model, root_docs, threshold: float = 0.9) -> dict:
    """Signed seed per user whose predicted probability reaches the
    threshold: +p for label C1, -p for C2. Raises NoSeeds/OneSidedSeeds
    when a sign is missing; callers doing applicability counting read the
    counts off the exception."""
    seeds = {}
    n_plus = n_minus = 0
    for doc in root_docs:
        pred = model.predict_full(doc.text)
        if pred.n_features == 0 or pred.probability < threshold:
            continue
        if pred.label == _classifier.LABELS[0]:
            seeds[doc.user_id] = pred.probability
            n_plus += 1
        else:
            seeds[doc.user_id] = -pred.probability
            n_minus += 1
    if n_plus == 0 and n_minus == 0:
        raise NoSeedsError("no user reaches the confidence threshold", 0, 0)
    if n_plus == 0 or n_minus == 0:
        raise OneSidedSeedsError(
            f"seeds are one-sided: {n_plus} positive, {n_minus} negative",
            n_plus, n_minus,
        )
    return seeds


@dataclass(frozen=True)
class ApplicabilityReport:
    passed: bool
    threshold: float
    runs: tuple  # of (seed, n_plus, n_minus)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "threshold": self.threshold,
            "runs": [
                {"seed": s, "n_plus": p, "n_minus": m} for s, p, m in self.runs
            ],
        }


def check_applicability(train_fn, corpus, root_docs, runs: int = 10,
                        threshold: float = 0.9, seeds=None) -> ApplicabilityReport:
    """The method applies to a discussion iff every one of `runs`
    trainings yields at least one seed of each sign. Failure is a result,
    not an exception."""
    if runs < 1:
        raise InvalidParamsError("applicability needs at least 1 run")
    if seeds is None:
        seeds = list(range(runs))
    if len(seeds) != runs:
        raise InvalidParamsError("got a seed list of the wrong length")
    outcomes = []
    passed = True
    for s in seeds:
        model = train_fn(corpus, s)
        try:
            assignment = select_characteristic_users(model, root_docs, threshold)
        except NoSeedsError as exc:  # includes OneSidedSeeds
            outcomes.append((s, exc.n_plus, exc.n_minus))
            passed = False
            continue
        n_plus = sum(1 for v in assignment.values() if v > 0)
        outcomes.append((s, n_plus, len(assignment) - n_plus))
    return ApplicabilityReport(passed, threshold, tuple(outcomes))


@dataclass(frozen=True)
class PolarityField:
    """Node values in [-1, 1] plus convergence metadata."""

    values: dict
    iterations: int
    residual: float
    converged: bool


def label_propagation(root_graph, seeds: dict, tolerance: float = 1e-6,
                      max_iters: int = 1000) -> PolarityField:
    """Jacobi-style propagation: every non-seed node repeatedly becomes
    the weighted mean of its neighbors; seed nodes stay clamped. Stops
    when the largest per-node change drops below `tolerance`."""
    nodes = sorted(root_graph.nodes)
    if not nodes:
        raise EmptyFieldError("propagation over an empty graph")
    seeds = {u: v for u, v in seeds.items() if u in root_graph.nodes}
    if not seeds:
        raise NoSeedsError("no seeds on the root-graph", 0, 0)

    index = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    adj = root_graph.undirected()
    rows, cols, data = [], [], []
    for u in nodes:
        for v, w in adj[u].items():
            rows.append(index[u])
            cols.append(index[v])
            data.append(float(w))
    W = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    degree = np.asarray(W.sum(axis=1)).ravel()
    scale = np.divide(1.0, degree, out=np.zeros(n), where=degree > 0)

    x = np.zeros(n)
    seed_idx = np.sort(np.array([index[u] for u in seeds], dtype=np.int64))
    seed_val = np.array([seeds[nodes[i]] for i in seed_idx])
    x[seed_idx] = seed_val

    iterations = 0
    residual = float("inf")
    for _ in range(max_iters):
        x_new = (W @ x) * scale
        x_new[seed_idx] = seed_val
        iterations += 1
        residual = float(np.max(np.abs(x_new - x))) if n else 0.0
        x = x_new
        if residual < tolerance:
            break
    values = {u: float(x[index[u]]) for u in nodes}
    return PolarityField(values, iterations, residual, residual < tolerance)


@dataclass(frozen=True)
class DmcScore:
    dmc: float
    delta_a: float
    tau: float
    n_plus: int
    n_minus: int
    n_zero: int
    gc_plus: float
    gc_minus: float

    def to_dict(self) -> dict:
        return {
            "dmc": self.dmc, "delta_a": self.delta_a, "tau": self.tau,
            "n_plus": self.n_plus, "n_minus": self.n_minus, "n_zero": self.n_zero,
            "gc_plus": self.gc_plus, "gc_minus": self.gc_minus,
        }


def dmc(polarity: PolarityField) -> DmcScore:
    """Dipole-moment score of a polarity field; see the module docstring
    for the formula."""
    if not polarity.values:
        raise EmptyFieldError("cannot score an empty field")
    vals = np.array(list(polarity.values.values()))
    pos = vals[vals > 0]
    neg = vals[vals < 0]
    n = len(vals)
    gc_plus = float(pos.mean()) if len(pos) else 0.0
    gc_minus = float(neg.mean()) if len(neg) else 0.0
    delta_a = abs(len(pos) - len(neg)) / n
    tau = abs(gc_plus - gc_minus) / 2.0
    return DmcScore(
        dmc=(1.0 - delta_a) * tau,
        delta_a=delta_a,
        tau=tau,
        n_plus=int(len(pos)),
        n_minus=int(len(neg)),
        n_zero=int(n - len(pos) - len(neg)),
        gc_plus=gc_plus,
        gc_minus=gc_minus,
    )


@dataclass(frozen=True)
class ScoreOptions:
    method: str = "louvain"
    n_runs: int = 20
    seed: int = 0
    threshold: float = 0.9
    applicability_runs: int = 10
    classifier: ClassifierConfig = ClassifierConfig()
    lowercase: bool = True
    min_total_degree: int = 3
    tolerance: float = 1e-6
    max_iters: int = 1000
    skip_applicability: bool = False
    n_threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParamsError(f"unknown method {self.method!r}")
        if self.n_runs < 1:
            raise InvalidParamsError("n_runs must be >= 1")
        if not 0.5 < self.threshold <= 1.0:
            raise InvalidParamsError("threshold must be in (0.5, 1]")


@dataclass(frozen=True)
class RunResult:
    score: DmcScore
    iterations: int
    n_seeds_plus: int
    n_seeds_minus: int
    timings_ms: dict
    warning: str | None = None

    def to_dict(self) -> dict:
        out = self.score.to_dict()
        out["iterations"] = self.iterations
        out["n_seeds_plus"] = self.n_seeds_plus
        out["n_seeds_minus"] = self.n_seeds_minus
        out["timings_ms"] = dict(self.timings_ms)
        if self.warning:
            out["warning"] = self.warning
        return out


@dataclass(frozen=True)
class ScoreReport:
    dmc_mean: float
    dmc_std: float
    method: str
    runs: tuple  # of RunResult
    applicability: ApplicabilityReport | None
    shared_timings_ms: dict
    root_nodes: int
    pruned_nodes: int

    def to_dict(self) -> dict:
        return {
            "dmc_mean": self.dmc_mean,
            "dmc_std": self.dmc_std,
            "method": self.method,
            "runs": [r.to_dict() for r in self.runs],
            "applicability": self.applicability.to_dict() if self.applicability else None,
            "shared_timings_ms": dict(self.shared_timings_ms),
            "root_nodes": self.root_nodes,
            "pruned_nodes": self.pruned_nodes,
        }


def _zero_score(n_nodes: int) -> DmcScore:
    return DmcScore(dmc=0.0, delta_a=1.0, tau=0.0, n_plus=0, n_minus=0,
                    n_zero=n_nodes, gc_plus=0.0, gc_minus=0.0)


class _Timer:
    def __init__(self):
        self.ms = {}

    def stage(self, name):
        return _Stage(self, name)


class _Stage:
    def __init__(self, timer, name):
        self.timer, self.name = timer, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timer.ms[self.name] = self.timer.ms.get(self.name, 0.0) + (
            time.perf_counter() - self.t0) * 1000.0
        return False


def score_discussion(records, options: ScoreOptions | None = None,
                     lexicon=None, root=None, artifact_sink: dict | None = None) -> ScoreReport:
    """Full scoring protocol: build and prune the graph once (it is
    deterministic), then run cluster -> corpus -> train -> seed ->
    propagate -> score `n_runs` times with per-run derived seeds, and
    average. Walktrap is deterministic, so its partition is computed once
    and reused; Louvain re-runs with a fresh shuffle seed each time.

    Raises Degenerate (tiny root-graph) and NotApplicable (the ten-
    training seed check failed). A run whose clustering or seed selection
    degenerates contributes a zero score with a warning instead of
    aborting the batch; a discussion whose clustering cannot even split
    in two scores zero outright.

    `root` injects a previously computed root-graph (it is a pure
    function of the records, so this is just a recomputation saving).
    `artifact_sink`, when given, receives the run-0 partition, corpus and
    model plus the root-graph, for stage-artifact export.
    """
    if options is None:
        options = ScoreOptions()
    if lexicon is None:
        lexicon = _corpus.EmojiLexicon.bundled()
    shared = _Timer()

    with shared.stage("graph"):
        if root is None:
            g = _graph.build_graph(records)
            root = _graph.prune_low_degree(g, min_total_degree=options.min_total_degree)
    with shared.stage("documents"):
        deduped = _corpus.dedupe(records, lexicon, lowercase=options.lowercase)
        root_docs = _corpus.build_user_documents(
            deduped, root.nodes, lexicon, lowercase=options.lowercase)

    walktrap_cache = {}

    def cluster(run_seed):
        if options.method == "walktrap":
            # deterministic, so one computation serves every run
            if "partition" not in walktrap_cache:
                walktrap_cache["partition"] = _community.walktrap(root)
            return walktrap_cache["partition"]
        return _community.louvain(root, seed=run_seed)

    def train_fn(corpus_, train_seed):
        cfg = replace(options.classifier, seed=train_seed)
        return _classifier.train(corpus_, cfg, n_threads=options.n_threads)

    if artifact_sink is not None:
        artifact_sink["root"] = root

    applicability = None
    if not options.skip_applicability:
        with shared.stage("applicability"):
            partition = cluster(_derive_seed(options.seed, "cluster", -1))
            try:
                pair = _community.principal_pair(partition)
            except SingleCommunityError:
                logger.warning("clustering found a single community, scoring 0")
                runs = tuple(
                    RunResult(_zero_score(root.n_nodes), 0, 0, 0, {},
                              "single_community")
                    for _ in range(options.n_runs)
                )
                if artifact_sink is not None:
                    artifact_sink["partition"] = partition
                return ScoreReport(0.0, 0.0, options.method, runs, None,
                                   shared.ms, root.n_nodes, root.pruned_count)
            corpus_ = _corpus.build_training_corpus(
                pair, root_docs, seed=_derive_seed(options.seed, "corpus", -1))
            applicability = check_applicability(
                train_fn, corpus_, root_docs,
                runs=options.applicability_runs,
                threshold=options.threshold,
                seeds=[_derive_seed(options.seed, "app-train", i)
                       for i in range(options.applicability_runs)],
            )
        if not applicability.passed:
            raise NotApplicableError(
                "method not applicable: a training produced one-sided seeds",
                report=applicability.to_dict(),
            )

    runs = []
    for j in range(options.n_runs):
        timer = _Timer()
        warning = None
        n_plus = n_minus = 0
        iterations = 0
        with timer.stage("community"):
            partition = cluster(_derive_seed(options.seed, "cluster", j))
        if artifact_sink is not None and j == 0:
            artifact_sink["partition"] = partition
        try:
            pair = _community.principal_pair(partition)
        except SingleCommunityError:
            warning = "single_community"
            logger.warning("run %d: single community, scoring 0", j)
            runs.append(RunResult(_zero_score(root.n_nodes), 0, 0, 0,
                                  timer.ms, warning))
            continue
        with timer.stage("corpus"):
            corpus_ = _corpus.build_training_corpus(
                pair, root_docs, seed=_derive_seed(options.seed, "corpus", j))
        with timer.stage("train"):
            model = train_fn(corpus_, _derive_seed(options.seed, "train", j))
        if artifact_sink is not None and j == 0:
            artifact_sink["corpus"] = corpus_
            artifact_sink["model"] = model
        try:
            with timer.stage("predict"):
                seeds = select_characteristic_users(
                    model, root_docs, options.threshold)
        except NoSeedsError as exc:
            warning = "one_sided_seeds" if isinstance(exc, OneSidedSeedsError) else "no_seeds"
            logger.warning("run %d: %s, scoring 0", j, warning)
            runs.append(RunResult(_zero_score(root.n_nodes), 0,
                                  exc.n_plus, exc.n_minus, timer.ms, warning))
            continue
        n_plus = sum(1 for v in seeds.values() if v > 0)
        n_minus = len(seeds) - n_plus
        with timer.stage("propagate"):
            polarity = label_propagation(
                root, seeds, tolerance=options.tolerance,
                max_iters=options.max_iters)
        iterations = polarity.iterations
        with timer.stage("score"):
            score = dmc(polarity)
        runs.append(RunResult(score, iterations, n_plus, n_minus, timer.ms, None))

    values = np.array([r.score.dmc for r in runs])
    return ScoreReport(
        dmc_mean=float(values.mean()),
        dmc_std=float(values.std()),
        method=options.method,
        runs=tuple(runs),
        applicability=applicability,
        shared_timings_ms=shared.ms,
        root_nodes=root.n_nodes,
        pruned_nodes=root.pruned_count,
    )
