"""Load, filter, and truncate discussion records from JSONL dumps.

A topic is a set of hashtags and/or keywords plus an observation window.
Records are one JSON object per line with the fields
{"tweet_id","user_id","text","retweet_of_user","timestamp","hashtags","lang"};
retweet_of_user and lang are optional.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

from .errors import ParseError

logger = logging.getLogger(__name__)

# Character budgets Twitter has used; None means no truncation.
ALLOWED_MAX_CHARS = (None, 140, 280)


@dataclass(frozen=True)
class InteractionRecord:
    """One post: an original tweet, or a retweet of another user."""

    tweet_id: str
    user_id: str
    text: str
    timestamp: int
    retweet_of_user: str | None = None
    hashtags: tuple[str, ...] = ()
    lang: str | None = None

    @property
    def is_retweet(self) -> bool:
        return self.retweet_of_user is not None


@dataclass(frozen=True)
class TopicFilter:
    """Hashtags/keywords plus a time window defining one discussion.

    Hashtags are matched against the record's hashtag list; keywords are
    matched as case-insensitive substrings of the text. At least one
    hashtag or keyword is required.
    """

    hashtags: frozenset[str] = frozenset()
    keywords: frozenset[str] = frozenset()
    window: tuple[int, int] = (0, 2**62)
    max_chars: int | None = None

    def __post_init__(self):
        tags = frozenset(h.lstrip("#").lower() for h in self.hashtags)
        words = frozenset(k.lower() for k in self.keywords)
        if not tags and not words:
            raise ValueError("topic filter needs at least one hashtag or keyword")
        start, end = self.window
        if start > end:
            raise ValueError(f"window start {start} is after end {end}")
        if self.max_chars not in ALLOWED_MAX_CHARS:
            raise ValueError(f"max_chars must be one of {ALLOWED_MAX_CHARS}")
        object.__setattr__(self, "hashtags", tags)
        object.__setattr__(self, "keywords", words)

    def matches(self, record: InteractionRecord) -> bool:
        start, end = self.window
        if not start <= record.timestamp <= end:
            return False
        if self.hashtags.intersection(record.hashtags):
            return True
        text = record.text.lower()
        return any(word in text for word in self.keywords)

    def truncate(self, text: str) -> str:
        # Python slicing counts Unicode scalar values, so this can never
        # split a code point. Grapheme clusters may still be cut, matching
        # the platform's own character budget semantics.
        if self.max_chars is None:
            return text
        return text[: self.max_chars]


class RecordBatch(list):
    """List of InteractionRecord plus ingestion bookkeeping."""

    def __init__(self, records=(), skipped: int = 0, duplicates: int = 0):
        super().__init__(records)
        self.skipped = skipped
        self.duplicates = duplicates


@dataclass(frozen=True)
class DatasetStats:
    n_records: int
    n_users: int
    retweet_fraction: float
    window: tuple[int, int] | None


def parse_record(obj: dict) -> InteractionRecord:
    """Build a validated record from a decoded JSON object.

    Raises ValueError for records that must be rejected rather than
    repaired: missing ids, self-retweets, or empty text on an original
    tweet.
    """
    tweet_id = obj.get("tweet_id")
    user_id = obj.get("user_id")
    if not isinstance(tweet_id, str) or not tweet_id:
        raise ValueError("missing or empty tweet_id")
    if not isinstance(user_id, str) or not user_id:
        raise ValueError("missing or empty user_id")
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise ValueError("text must be a string")
    retweet_of = obj.get("retweet_of_user")
    if retweet_of is not None and not isinstance(retweet_of, str):
        raise ValueError("retweet_of_user must be a string")
    if retweet_of == user_id:
        raise ValueError("retweet_of_user equals user_id")
    if not text and retweet_of is None:
        raise ValueError("empty text on a non-retweet record")
    timestamp = obj.get("timestamp")
    if not isinstance(timestamp, (int, float)):
        raise ValueError("missing or non-numeric timestamp")
    hashtags = obj.get("hashtags", [])
    if not isinstance(hashtags, list) or not all(isinstance(h, str) for h in hashtags):
        raise ValueError("hashtags must be a list of strings")
    lang = obj.get("lang")
    if lang is not None and not isinstance(lang, str):
        raise ValueError("lang must be a string")
    return InteractionRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        text=text,
        timestamp=int(timestamp),
        retweet_of_user=retweet_of,
        hashtags=tuple(h.lstrip("#").lower() for h in hashtags),
        lang=lang,
    )


def load_records(path, topic: TopicFilter, strict: bool = False) -> RecordBatch:
    """Read a JSONL file and return the records matching `topic`, in file order.

    Malformed lines raise ParseError when strict, otherwise they are
    skipped and counted on the returned batch. Duplicate tweet_ids keep
    the first occurrence.
    """
    records = []
    skipped = 0
    duplicates = 0
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("line is not a JSON object")
                record = parse_record(obj)
            except (ValueError, TypeError) as exc:
                if strict:
                    raise ParseError(str(exc), lineno) from exc
                skipped += 1
                logger.debug("skipping line %d: %s", lineno, exc)
                continue
            if record.tweet_id in seen_ids:
                duplicates += 1
                continue
            seen_ids.add(record.tweet_id)
            if not topic.matches(record):
                continue
            truncated = topic.truncate(record.text)
            if len(truncated) != len(record.text):
                record = replace(record, text=truncated)
            records.append(record)
    if skipped:
        logger.warning("skipped %d malformed line(s) in %s", skipped, path)
    return RecordBatch(records, skipped=skipped, duplicates=duplicates)


def dataset_stats(records) -> DatasetStats:
    """Exact counts over a record sequence, mirroring dataset summary tables."""
    n = len(records)
    if n == 0:
        return DatasetStats(0, 0, 0.0, None)
    users = {r.user_id for r in records}
    n_retweets = sum(1 for r in records if r.is_retweet)
    timestamps = [r.timestamp for r in records]
    return DatasetStats(
        n_records=n,
        n_users=len(users),
        retweet_fraction=n_retweets / n,
        window=(min(timestamps), max(timestamps)),
    )


def record_to_dict(record: InteractionRecord) -> dict:
    """JSONL-schema dict for a record; optional fields omitted when unset."""
    out = {
        "tweet_id": record.tweet_id,
        "user_id": record.user_id,
        "text": record.text,
        "timestamp": record.timestamp,
        "hashtags": list(record.hashtags),
    }
    if record.retweet_of_user is not None:
        out["retweet_of_user"] = record.retweet_of_user
    if record.lang is not None:
        out["lang"] = record.lang
    return out


def save_records(records, path) -> None:
    """Write records back out in the ingest JSONL schema."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")
