"""Linear bag-of-features text classifier.

Architecture: each unigram (and hashed word n-gram) owns an embedding
row; a document is the mean of its feature rows; a dim x 2 linear head
plus softmax gives label probabilities. Trained with plain SGD, one
example at a time, learning rate decaying linearly to zero.

Bucket rows for hashed n-grams are materialized lazily: the matrix is
allocated with np.zeros, so untouched pages stay virtual and the default
2M-bucket table costs almost nothing in resident memory. Model files
store only the vocabulary rows plus the bucket rows actually seen in
training, which keeps artifacts small while round-tripping predictions
bit for bit.
"""

from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .corpus import LABEL_C1, LABEL_C2, TrainingCorpus
from .errors import (
    CorruptModelError,
    DegenerateCorpusError,
    EmptyCorpusError,
    InvalidParamsError,
    ModelVersionError,
)

LABELS = (LABEL_C1, LABEL_C2)

_MAGIC = b"PLMC"
_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


@lru_cache(maxsize=1 << 20)
def _gram_bucket(gram: str, buckets: int) -> int:
    # the bucket of an n-gram depends only on its text, so the cache is
    # shared across models and the repeated trainings of one discussion
    return _fnv1a(gram.encode("utf-8")) % buckets


@dataclass(frozen=True)
class ClassifierConfig:
    dim: int = 100
    lr: float = 0.1
    epochs: int = 20
    word_ngrams: int = 2
    min_count: int = 1
    hash_buckets: int = 2_000_000
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParamsError("dim must be >= 1")
        if self.epochs < 1:
            raise InvalidParamsError("epochs must be >= 1")
        if not self.lr > 0:
            raise InvalidParamsError("lr must be > 0")
        if self.word_ngrams < 1:
            raise InvalidParamsError("word_ngrams must be >= 1")
        if self.min_count < 1:
            raise InvalidParamsError("min_count must be >= 1")
        if self.hash_buckets < 1:
            raise InvalidParamsError("hash_buckets must be >= 1")


class Prediction(NamedTuple):
    label: str
    probability: float
    n_features: int

    @property
    def no_features(self) -> bool:
        return self.n_features == 0


def _softmax2(z: np.ndarray) -> np.ndarray:
    # float64 so the two components sum to 1 within 1e-9 even when the
    # weights are float32
    shifted = np.asarray(z, dtype=np.float64)
    shifted -= shifted.max()
    e = np.exp(shifted)
    return e / e.sum()


def _loss_and_grads(embeddings, out_weights, ids, weights, label_idx):
    """Forward + backward for one document.

    `ids`/`weights` are the unique feature rows and their mean weights
    (counts / n_features). Returns (loss, probs, grad_rows, grad_out)
    where grad_rows aligns with `ids`. Pure; dtype follows the inputs, so
    the gradient-check suite can run it in float64.
    """
    rows = embeddings[ids]
    hidden = weights @ rows
    z = hidden @ out_weights
    p = _softmax2(z)
    loss = -np.log(p[label_idx])
    dz = p.copy()
    dz[label_idx] -= 1.0
    grad_out = np.outer(hidden, dz)
    # two explicit elementwise terms, not a matvec: addition commutes
    # bitwise, so label-swapped training mirrors exactly
    grad_hidden = out_weights[:, 0] * dz[0] + out_weights[:, 1] * dz[1]
    grad_rows = weights[:, None] * grad_hidden[None, :]
    return loss, p, grad_rows, grad_out


class TextClassifier:
    """Trained model; immutable in use, safe for concurrent predict."""

    def __init__(self, vocabulary, embeddings, out_weights, config,
                 epoch_losses=(), seen_buckets=frozenset()):
        self.vocabulary = vocabulary
        self.embeddings = embeddings
        self.out_weights = out_weights
        self.labels = LABELS
        self.config = config
        self.epoch_losses = tuple(epoch_losses)
        self.seen_buckets = frozenset(seen_buckets)
        if not np.isfinite(embeddings[: len(vocabulary)]).all() or not np.isfinite(out_weights).all():
            raise CorruptModelError("model weights contain NaN/Inf")

    def _features(self, text: str):
        """Unique feature ids and mean weights for a text; unknown tokens
        are dropped before n-grams are formed."""
        vocab = self.vocabulary
        cfg = self.config
        kept = [t for t in text.split() if t in vocab]
        ids = [vocab[t] for t in kept]
        n_vocab = len(vocab)
        for order in range(2, cfg.word_ngrams + 1):
            for i in range(len(kept) - order + 1):
                gram = " ".join(kept[i:i + order])
                ids.append(n_vocab + _gram_bucket(gram, cfg.hash_buckets))
        if not ids:
            return None, None, 0
        arr = np.asarray(ids, dtype=np.int64)
        uniq, counts = np.unique(arr, return_counts=True)
        weights = (counts / len(arr)).astype(np.float32)
        return uniq, weights, len(arr)

    def predict_full(self, text: str) -> Prediction:
        ids, weights, nfeat = self._features(text)
        if nfeat == 0:
            return Prediction(LABELS[0], 0.5, 0)
        hidden = weights @ self.embeddings[ids]
        p = _softmax2(hidden @ self.out_weights)
        idx = int(np.argmax(p))
        return Prediction(LABELS[idx], float(p[idx]), nfeat)

    def predict(self, text: str):
        pred = self.predict_full(text)
        return pred.label, pred.probability

    def probabilities(self, text: str) -> np.ndarray:
        ids, weights, nfeat = self._features(text)
        if nfeat == 0:
            return np.array([0.5, 0.5])
        hidden = weights @ self.embeddings[ids]
        return _softmax2(hidden @ self.out_weights)


def _build_vocab(token_lists, min_count):
    counts = {}
    for tokens in token_lists:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
    vocab = {}
    for tokens in token_lists:
        for tok in tokens:
            if tok not in vocab and counts[tok] >= min_count:
                vocab[tok] = len(vocab)
    return vocab


def train(corpus: TrainingCorpus, config: ClassifierConfig | None = None,
          n_threads: int = 1) -> TextClassifier:
    """SGD training. Single-threaded mode (default) is bit-deterministic
    for a given seed; n_threads > 1 updates shared weights from several
    threads without locks and is accepted as nondeterministic."""
    if config is None:
        config = ClassifierConfig()
    if len(corpus) == 0:
        raise EmptyCorpusError("training corpus has no examples")

    token_lists = [doc.text.split() for _, doc in corpus.examples]
    if all(not toks for toks in token_lists):
        raise DegenerateCorpusError("all documents are empty after tokenization")
    vocab = _build_vocab(token_lists, config.min_count)
    if not vocab:
        raise DegenerateCorpusError(
            f"no token reaches min_count={config.min_count}"
        )

    n_vocab = len(vocab)
    rng = np.random.default_rng(config.seed)
    embeddings = np.zeros((n_vocab + config.hash_buckets, config.dim), dtype=np.float32)
    bound = 1.0 / config.dim
    embeddings[:n_vocab] = rng.uniform(-bound, bound, size=(n_vocab, config.dim)).astype(np.float32)
    out_weights = np.zeros((config.dim, 2), dtype=np.float32)

    model = TextClassifier(vocab, embeddings, out_weights, config)

    featurized = []
    label_idx = []
    seen_buckets = set()
    for (label, doc), tokens in zip(corpus.examples, token_lists):
        ids, weights, nfeat = model._features(doc.text)
        if nfeat == 0:
            continue
        featurized.append((ids, weights))
        label_idx.append(LABELS.index(label))
        seen_buckets.update(int(i) for i in ids if i >= n_vocab)
    if not featurized:
        raise DegenerateCorpusError("all documents are empty after tokenization")

    n = len(featurized)
    total_updates = config.epochs * n
    lr0 = config.lr
    epoch_losses = []

    def run_chunk(order, offset, stride, epoch, loss_out):
        local = 0.0
        for k in range(offset, len(order), stride):
            t = epoch * n + k
            lr = lr0 * (1.0 - t / total_updates)
            ids, weights = featurized[order[k]]
            lab = label_idx[order[k]]
            loss, _, grad_rows, grad_out = _loss_and_grads(
                embeddings, out_weights, ids, weights, lab
            )
            embeddings[ids] -= lr * grad_rows
            out_weights[...] -= lr * grad_out
            local += float(loss)
        loss_out[offset] = local

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        loss_out = {}
        if n_threads <= 1:
            run_chunk(order, 0, 1, epoch, loss_out)
        else:
            threads = [
                threading.Thread(target=run_chunk, args=(order, i, n_threads, epoch, loss_out))
                for i in range(n_threads)
            ]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
        epoch_losses.append(sum(loss_out.values()) / n)

    return TextClassifier(vocab, embeddings, out_weights, config,
                          epoch_losses=epoch_losses, seen_buckets=seen_buckets)


def save(model: TextClassifier, path, meta: dict | None = None) -> None:
    """Binary model file: magic, version byte, JSON header (config, vocab,
    losses, caller metadata), vocabulary rows, seen bucket rows, output
    weights. Floats are little-endian float32."""
    cfg = model.config
    header = {
        "config": {
            "dim": cfg.dim, "lr": cfg.lr, "epochs": cfg.epochs,
            "word_ngrams": cfg.word_ngrams, "min_count": cfg.min_count,
            "hash_buckets": cfg.hash_buckets, "seed": cfg.seed,
        },
        "labels": list(model.labels),
        "vocab": list(model.vocabulary.keys()),
        "epoch_losses": list(model.epoch_losses),
        "n_bucket_rows": len(model.seen_buckets),
        "meta": meta or {},
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    n_vocab = len(model.vocabulary)
    bucket_ids = np.asarray(sorted(model.seen_buckets), dtype=np.int64)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<B", _VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(model.embeddings[:n_vocab], dtype="<f4").tobytes())
        fh.write(bucket_ids.astype("<i8").tobytes())
        if len(bucket_ids):
            fh.write(np.ascontiguousarray(model.embeddings[bucket_ids], dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.out_weights, dtype="<f4").tobytes())


def load(path) -> TextClassifier:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 9 or raw[:4] != _MAGIC:
        raise CorruptModelError(f"{path}: not a model file")
    version = raw[4]
    if version != _VERSION:
        raise ModelVersionError(f"{path}: model version {version}, expected {_VERSION}")
    (blob_len,) = struct.unpack_from("<I", raw, 5)
    pos = 9
    try:
        header = json.loads(raw[pos:pos + blob_len].decode("utf-8"))
        pos += blob_len
        cfg = ClassifierConfig(**header["config"])
        vocab_tokens = header["vocab"]
        n_vocab = len(vocab_tokens)
        n_bucket = int(header["n_bucket_rows"])
        dim = cfg.dim

        def take(count, dtype, itemsize):
            nonlocal pos
            nbytes = count * itemsize
            if pos + nbytes > len(raw):
                raise CorruptModelError(f"{path}: truncated model file")
            arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
            pos += nbytes
            return arr

        vocab_rows = take(n_vocab * dim, "<f4", 4).reshape(n_vocab, dim)
        bucket_ids = take(n_bucket, "<i8", 8).astype(np.int64)
        bucket_rows = take(n_bucket * dim, "<f4", 4).reshape(n_bucket, dim)
        out_weights = take(2 * dim, "<f4", 4).reshape(dim, 2).copy()
        if pos != len(raw):
            raise CorruptModelError(f"{path}: trailing bytes in model file")
    except (KeyError, ValueError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        if isinstance(exc, (CorruptModelError, ModelVersionError)):
            raise
        raise CorruptModelError(f"{path}: malformed model file ({exc})") from exc

    embeddings = np.zeros((n_vocab + cfg.hash_buckets, dim), dtype=np.float32)
    embeddings[:n_vocab] = vocab_rows
    if n_bucket:
        embeddings[bucket_ids] = bucket_rows
    vocabulary = {tok: i for i, tok in enumerate(vocab_tokens)}
    model = TextClassifier(vocabulary, embeddings, out_weights, cfg,
                           epoch_losses=header.get("epoch_losses", ()),
                           seen_buckets=(int(b) for b in bucket_ids))
    model.meta = header.get("meta", {})
    return model
