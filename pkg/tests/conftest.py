import sys
from pathlib import Path

import pytest

# make helpers importable as a top-level module from every test file
sys.path.insert(0, str(Path(__file__).parent))

from polarimeter.evaluation import SynthParams, generate_discussion
from polarimeter.ingest import save_records

# shared synthetic discussions; ~100 users per side keeps the classifier
# well past the undertrained regime while staying cheap to score
SYNTH_BASE = dict(users_per_side=100, tweets_per_user=8, vocab_size=500,
                  vocab_overlap=0.05, intra_retweet_mean=4.0)


@pytest.fixture(scope="session")
def synth_data(tmp_path_factory):
    """Saved JSONL fixtures: a polarized discussion, a single-community
    one, and a 5-user slice too small to survive pruning. Values are
    (path, records, info)."""
    root = tmp_path_factory.mktemp("synth")
    out = {}
    for name, extra in (("controversial", {"seed": 14}),
                        ("single", {"single_community": True, "seed": 9})):
        records, info = generate_discussion(SynthParams(**SYNTH_BASE, **extra))
        path = root / f"{name}.jsonl"
        save_records(records, path)
        out[name] = (path, records, info)

    records, info = out["controversial"][1], out["controversial"][2]
    keep = set(sorted(info.membership)[:5])
    tiny = [r for r in records
            if r.user_id in keep and (r.retweet_of_user in keep or r.retweet_of_user is None)]
    tiny_path = root / "tiny.jsonl"
    save_records(tiny, tiny_path)
    out["tiny"] = (tiny_path, tiny, None)
    return out
