"""Evaluation utilities: AUC-ROC against labeled discussions, a synthetic
discussion generator that doubles as a test oracle, and train/predict
runtime scaling measurements.

The generator plants two user populations with partially overlapping
Zipf vocabularies and mostly same-side retweets. It keeps exact
bookkeeping (expected duplicate count, surviving tokens per user, cross
edges) so tests can check pipeline stages against construction instead
of against another implementation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierConfig, train
from .corpus import LABEL_C1, LABEL_C2, TrainingCorpus, UserDocument
from .errors import InvalidParamsError, OneClassOnlyError
from .ingest import InteractionRecord

ZIPF_EXPONENT = 1.1


@dataclass(frozen=True)
class LabeledScore:
    discussion_id: str
    dmc: float
    controversial: bool


def auc_roc(scores) -> float:
    """Mann-Whitney AUC: the fraction of (controversial, non-controversial)
    pairs ranked correctly, ties worth half."""
    pos = [s.dmc for s in scores if s.controversial]
    neg = [s.dmc for s in scores if not s.controversial]
    if not pos or not neg:
        raise OneClassOnlyError("need at least one score of each class")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


@dataclass(frozen=True)
class SynthParams:
    users_per_side: int = 500
    tweets_per_user: int = 10
    vocab_size: int = 2000
    vocab_overlap: float = 0.1
    cross_retweet_prob: float = 0.02
    intra_retweet_mean: float = 5.0
    tokens_per_tweet: int = 25
    single_community: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.users_per_side < 2:
            raise InvalidParamsError("users_per_side must be >= 2")
        if self.tweets_per_user < 1:
            raise InvalidParamsError("tweets_per_user must be >= 1")
        if self.vocab_size < 1:
            raise InvalidParamsError("vocab_size must be >= 1")
        if not 0.0 <= self.vocab_overlap <= 1.0:
            raise InvalidParamsError("vocab_overlap must be in [0, 1]")
        if not 0.0 <= self.cross_retweet_prob <= 1.0:
            raise InvalidParamsError("cross_retweet_prob must be in [0, 1]")
        if not self.intra_retweet_mean > 0:
            raise InvalidParamsError("intra_retweet_mean must be > 0")
        if self.tokens_per_tweet < 3:
            raise InvalidParamsError("tokens_per_tweet must be >= 3")


@dataclass(frozen=True)
class GenerationInfo:
    """Construction facts for oracle checks."""

    membership: dict  # user -> "left" | "right" | "single"
    n_tweets: int
    n_retweets: int
    n_duplicates_expected: int  # records a sanitized-text dedupe would drop
    doc_tokens: dict  # user -> token count surviving that dedupe
    cross_edges: int


def _side_vocab(params: SynthParams):
    """Ranked token lists per side; the overlap fraction of ranks is
    shared, spread evenly from head to tail."""
    if params.single_community:
        vocab = [f"w{i}" for i in range(2 * params.vocab_size)]
        return {"single": vocab}
    shared_marks = [
        int((i + 1) * params.vocab_overlap) > int(i * params.vocab_overlap)
        for i in range(params.vocab_size)
    ]
    left = [f"w{i}" if shared_marks[i] else f"l{i}" for i in range(params.vocab_size)]
    right = [f"w{i}" if shared_marks[i] else f"r{i}" for i in range(params.vocab_size)]
    return {"left": left, "right": right}


def generate_discussion(params: SynthParams | None = None):
    """Build a synthetic discussion; returns (records, GenerationInfo).

    All original tweets are emitted first, then retweets as
    "RT @user: <original text>", which sanitize down to the quoted text
    and are therefore exact duplicates by construction. Deterministic for
    a given seed.
    """
    if params is None:
        params = SynthParams()
    rng = np.random.default_rng(params.seed)

    vocab = _side_vocab(params)
    sides = list(vocab)
    users = {}
    if params.single_community:
        users["single"] = [f"u{i:04d}" for i in range(2 * params.users_per_side)]
    else:
        users["left"] = [f"l{i:04d}" for i in range(params.users_per_side)]
        users["right"] = [f"r{i:04d}" for i in range(params.users_per_side)]
    membership = {u: side for side in sides for u in users[side]}

    probs = {}
    for side in sides:
        ranks = np.arange(1, len(vocab[side]) + 1, dtype=np.float64)
        p = ranks ** -ZIPF_EXPONENT
        probs[side] = p / p.sum()

    records = []
    texts_by_user = {}
    seen_texts = set()
    doc_tokens = {}
    n_duplicates = 0
    counter = 0

    def emit(user, text, retweet_of=None):
        nonlocal counter, n_duplicates
        counter += 1
        records.append(InteractionRecord(
            tweet_id=f"t{counter:06d}",
            user_id=user,
            text=text,
            timestamp=counter,
            retweet_of_user=retweet_of,
            hashtags=("synthetic",),
        ))
        # mirror the downstream sanitized-text dedupe exactly
        core = text.split(": ", 1)[1] if retweet_of else text
        if core in seen_texts:
            n_duplicates += 1
        else:
            seen_texts.add(core)
            doc_tokens[user] = doc_tokens.get(user, 0) + len(core.split())

    for side in sides:
        side_vocab = np.array(vocab[side])
        for user in users[side]:
            for _ in range(params.tweets_per_user):
                length = max(3, int(rng.poisson(params.tokens_per_tweet)))
                tokens = side_vocab[rng.choice(len(side_vocab), size=length, p=probs[side])]
                text = " ".join(tokens)
                texts_by_user.setdefault(user, []).append(text)
                emit(user, text)

    n_tweets = counter
    cross_edges = 0
    for side in sides:
        other = sides[1 - sides.index(side)] if len(sides) == 2 else side
        for user in users[side]:
            n_retweets = int(rng.poisson(params.intra_retweet_mean))
            for _ in range(n_retweets):
                target_side = side
                if len(sides) == 2 and rng.random() < params.cross_retweet_prob:
                    target_side = other
                pool = users[target_side]
                target = user
                while target == user:
                    target = pool[int(rng.integers(len(pool)))]
                if target_side != side:
                    cross_edges += 1
                original = texts_by_user[target][int(rng.integers(len(texts_by_user[target])))]
                emit(user, f"RT @{target}: {original}", retweet_of=target)

    info = GenerationInfo(
        membership=membership,
        n_tweets=n_tweets,
        n_retweets=counter - n_tweets,
        n_duplicates_expected=n_duplicates,
        doc_tokens=doc_tokens,
        cross_edges=cross_edges,
    )
    return records, info


@dataclass(frozen=True)
class BenchmarkRow:
    size_kb: float
    seconds: float


@dataclass(frozen=True)
class BenchmarkTable:
    rows: tuple
    slope: float
    intercept: float
    r_squared: float


def _bench_corpus(target_kb: float, seed: int) -> TrainingCorpus:
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, 5001, dtype=np.float64)
    p = ranks ** -ZIPF_EXPONENT
    p /= p.sum()
    tokens = np.array([f"b{i}" for i in range(5000)])
    examples = []
    total = 0
    i = 0
    while total < target_kb * 1024:
        text = " ".join(tokens[rng.choice(5000, size=200, p=p)])
        label = LABEL_C1 if i % 2 == 0 else LABEL_C2
        examples.append((label, UserDocument(f"u{i}", text, 1)))
        total += len(text.encode("utf-8"))
        i += 1
    if len(examples) % 2:
        examples.pop()
    return TrainingCorpus(tuple(examples), len(examples) // 2)


def benchmark_scaling(sizes_kb, config: ClassifierConfig | None = None,
                      seed: int = 0) -> BenchmarkTable:
    """Train+predict wall time as a function of corpus size, with a least
    squares linear fit. Empty input gives an empty table."""
    sizes = list(sizes_kb)
    if sizes != sorted(sizes):
        raise InvalidParamsError("sizes must be ascending")
    if config is None:
        config = ClassifierConfig()
    rows = []
    for size in sizes:
        corpus = _bench_corpus(size, seed)
        actual_kb = sum(len(d.text.encode("utf-8")) for _, d in corpus.examples) / 1024.0
        t0 = time.perf_counter()
        model = train(corpus, config)
        for _, doc in corpus.examples:
            model.predict_full(doc.text)
        rows.append(BenchmarkRow(actual_kb, time.perf_counter() - t0))
    if not rows:
        return BenchmarkTable((), float("nan"), float("nan"), float("nan"))
    x = np.array([r.size_kb for r in rows])
    y = np.array([r.seconds for r in rows])
    if len(rows) == 1 or np.ptp(x) == 0:
        # a line through one x location is underdetermined
        return BenchmarkTable(tuple(rows), float("nan"), float(y.mean()), float("nan"))
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return BenchmarkTable(tuple(rows), float(slope), float(intercept), r2)
