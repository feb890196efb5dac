"""Text preparation: sanitization, emoji translation, per-user documents,
and the balanced labeled training corpus.

The sanitizer is deliberately language-agnostic: no stemming, no stop
words. Hashtag symbols are stripped but the tag word is kept, because
tags are exactly the kind of community vocabulary the classifier should
see.
"""

from __future__ import annotations

import random
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import EmptySideError
from .ingest import RecordBatch

LABEL_C1 = "C1"
LABEL_C2 = "C2"
_LABEL_PREFIX = "__label__"

_URL_RE = re.compile(r"(?:https?://\S+|\bwww\.\S+|\bt\.co/\S+)")
_MENTION_RE = re.compile(r"@\w+")
_LEADING_RT_RE = re.compile(r"^(?:\s*rt\b[:\s]*)+", re.IGNORECASE)


class EmojiLexicon:
    """Emoji (or emoticon) codepoint-sequence -> single word token.

    Replacement is longest-match-first so multi-codepoint sequences win
    over their prefixes.
    """

    def __init__(self, mapping: dict):
        for key, word in mapping.items():
            if not key:
                raise ValueError("empty lexicon key")
            if not word or any(ch.isspace() for ch in word):
                raise ValueError(f"lexicon word for {key!r} must be a single nonblank token")
        self._mapping = dict(mapping)
        if mapping:
            alternation = "|".join(
                re.escape(k) for k in sorted(mapping, key=len, reverse=True)
            )
            self._pattern = re.compile(alternation)
        else:
            self._pattern = None

    @classmethod
    def from_tsv(cls, path) -> "EmojiLexicon":
        mapping = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected emoji<TAB>word")
                mapping[parts[0]] = parts[1]
        return cls(mapping)

    @classmethod
    def bundled(cls) -> "EmojiLexicon":
        return _bundled_lexicon()

    def replace(self, text: str) -> str:
        if self._pattern is None:
            return text
        return self._pattern.sub(lambda m: f" {self._mapping[m.group(0)]} ", text)

    def __len__(self) -> int:
        return len(self._mapping)

    def __contains__(self, key) -> bool:
        return key in self._mapping


@lru_cache(maxsize=1)
def _bundled_lexicon() -> EmojiLexicon:
    path = resources.files("polarimeter").joinpath("data/emoji_lexicon.tsv")
    with resources.as_file(path) as real:
        return EmojiLexicon.from_tsv(real)


class _PunctToSpace(dict):
    """str.translate table mapping Unicode punctuation to a space, built
    lazily per codepoint."""

    def __missing__(self, cp):
        repl = 0x20 if unicodedata.category(chr(cp)).startswith("P") else cp
        self[cp] = repl
        return repl


_PUNCT_TABLE = _PunctToSpace()


def _drop_leading_rt(text: str) -> str:
    return _LEADING_RT_RE.sub("", text)


def sanitize(text: str, lexicon: EmojiLexicon, lowercase: bool = True) -> str:
    """Normalize tweet text to space-separated vocabulary tokens.

    In order: emoji -> lexicon word; strip URLs and @-mentions; drop the
    leading retweet marker; punctuation to spaces; collapse whitespace;
    lowercase; trim. Idempotent, and never returns leading/trailing or
    doubled whitespace.
    """
    s = lexicon.replace(text)
    s = _URL_RE.sub(" ", s)
    s = _MENTION_RE.sub(" ", s)
    s = _drop_leading_rt(s)
    s = s.translate(_PUNCT_TABLE)
    s = " ".join(s.split())
    if lowercase:
        s = s.lower()
    # punctuation removal can expose a marker that was not leading before
    s = _drop_leading_rt(s).strip()
    return s


def dedupe(records, lexicon: EmojiLexicon | None = None, lowercase: bool = True) -> RecordBatch:
    """Keep the first record for each distinct sanitized text.

    Bare retweets sanitize to the original tweet's text, so they are the
    typical casualties. The returned batch carries the removed count in
    `.duplicates`.
    """
    if lexicon is None:
        lexicon = EmojiLexicon.bundled()
    seen = set()
    out = RecordBatch()
    removed = 0
    for record in records:
        key = sanitize(record.text, lexicon, lowercase=lowercase)
        if key in seen:
            removed += 1
            continue
        seen.add(key)
        out.append(record)
    out.duplicates = removed
    return out


@dataclass(frozen=True)
class UserDocument:
    """All of one user's sanitized text, concatenated."""

    user_id: str
    text: str
    source_tweet_count: int


def build_user_documents(records, users, lexicon: EmojiLexicon | None = None,
                         lowercase: bool = True) -> list:
    """One document per user in `users` with at least one nonempty
    sanitized tweet; text-less users are omitted. Records should already
    be deduplicated."""
    if lexicon is None:
        lexicon = EmojiLexicon.bundled()
    users = set(users)
    pieces = {}
    counts = {}
    for record in records:
        if record.user_id not in users:
            continue
        clean = sanitize(record.text, lexicon, lowercase=lowercase)
        if not clean:
            continue
        pieces.setdefault(record.user_id, []).append(clean)
        counts[record.user_id] = counts.get(record.user_id, 0) + 1
    return [
        UserDocument(uid, " ".join(pieces[uid]), counts[uid])
        for uid in sorted(pieces)
    ]


@dataclass(frozen=True)
class TrainingCorpus:
    """Balanced labeled examples: exactly n_per_class per label."""

    examples: tuple  # of (label, UserDocument)
    n_per_class: int

    def __post_init__(self):
        counts = {LABEL_C1: 0, LABEL_C2: 0}
        for label, _ in self.examples:
            counts[label] += 1
        if counts[LABEL_C1] != counts[LABEL_C2] or counts[LABEL_C1] != self.n_per_class:
            raise AssertionError(f"corpus is unbalanced: {counts}")

    def texts(self) -> list:
        return [doc.text for _, doc in self.examples]

    def labels(self) -> list:
        return [label for label, _ in self.examples]

    def __len__(self) -> int:
        return len(self.examples)


def build_training_corpus(pair, docs, seed: int = 0) -> TrainingCorpus:
    """Label documents by principal-community membership and balance the
    classes by sampling the larger side down to the smaller, uniformly
    with `seed`."""
    c1_docs = [d for d in docs if d.user_id in pair.c1_users]
    c2_docs = [d for d in docs if d.user_id in pair.c2_users]
    if not c1_docs:
        raise EmptySideError("community C1 has no users with usable text")
    if not c2_docs:
        raise EmptySideError("community C2 has no users with usable text")
    n = min(len(c1_docs), len(c2_docs))
    rng = random.Random(seed)

    def pick(side):
        if len(side) == n:
            return side
        chosen = sorted(rng.sample(range(len(side)), n))
        return [side[i] for i in chosen]

    examples = [(LABEL_C1, d) for d in pick(c1_docs)]
    examples += [(LABEL_C2, d) for d in pick(c2_docs)]
    return TrainingCorpus(tuple(examples), n)


def save_corpus(corpus: TrainingCorpus, path) -> None:
    """TSV export, one "__label__<L><TAB>text" line per example."""
    with open(path, "w", encoding="utf-8") as fh:
        for label, doc in corpus.examples:
            fh.write(f"{_LABEL_PREFIX}{label}\t{doc.text}\n")


def load_corpus(path) -> TrainingCorpus:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            # "#" starts artifact headers; sanitized text never keeps one
            if not line or line.startswith("#"):
                continue
            try:
                tagged, text = line.split("\t", 1)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected label<TAB>text") from None
            if not tagged.startswith(_LABEL_PREFIX):
                raise ValueError(f"{path}:{lineno}: label must start with {_LABEL_PREFIX}")
            label = tagged[len(_LABEL_PREFIX):]
            if label not in (LABEL_C1, LABEL_C2):
                raise ValueError(f"{path}:{lineno}: unknown label {label!r}")
            examples.append((label, UserDocument(f"u{lineno}", text, 0)))
    n_c1 = sum(1 for lab, _ in examples if lab == LABEL_C1)
    return TrainingCorpus(tuple(examples), n_c1)
