"""One-shot generator for src/polarimeter/data/emoji_lexicon.tsv.

Builds an emoji -> word table from Unicode character names for the main
pictograph blocks, plus a curated set of ASCII emoticons. Word tokens are
the character name lowercased with separators removed, so every emoji maps
to a single vocabulary token. Re-run only to regenerate the bundled data.
"""

import unicodedata
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "polarimeter" / "data" / "emoji_lexicon.tsv"

BLOCKS = [
    (0x1F300, 0x1F5FF),  # misc symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
]

# Hand-picked emoticons. Deliberately excludes sequences that can occur
# inside URLs (":/", "=/", "8)") since emoji replacement runs before URL
# stripping.
EMOTICONS = {
    ":)": "happy", ":-)": "happy", ":]": "happy", ":-]": "happy",
    "=)": "happy", "=]": "happy", "^_^": "happy",
    ":D": "laughing", ":-D": "laughing", "=D": "laughing",
    ";)": "wink", ";-)": "wink", ";D": "wink",
    ":(": "sad", ":-(": "sad", ":[": "sad", "=(": "sad", "=[": "sad",
    ":'(": "crying", ":'-(": "crying", "T_T": "crying", ";_;": "crying",
    ":P": "playful", ":-P": "playful", ":p": "playful", ":-p": "playful",
    ";P": "playful",
    ":O": "surprised", ":-O": "surprised", ":o": "surprised", ":-o": "surprised",
    ":*": "kiss", ":-*": "kiss",
    "<3": "love", "</3": "brokenheart",
    "-_-": "annoyed", "o_O": "confused", "O_o": "confused",
    ":3": "cute", ">:(": "angry", ":|": "neutral", ":-|": "neutral",
}

# Overrides where the mechanical name is clumsy.
OVERRIDES = {
    "\U0001F622": "crying",        # crying face
    "❤": "love",              # heavy black heart
    "❤️": "love",
}


def name_token(ch: str) -> str:
    name = unicodedata.name(ch, "")
    if not name:
        return ""
    return "".join(c for c in name.lower() if c.isalnum())


def main() -> None:
    table = {}
    for lo, hi in BLOCKS:
        for cp in range(lo, hi + 1):
            ch = chr(cp)
            token = name_token(ch)
            if token:
                table[ch] = token
    table.update(EMOTICONS)
    table.update(OVERRIDES)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", encoding="utf-8") as fh:
        for key in sorted(table):
            fh.write(f"{key}\t{table[key]}\n")
    print(f"wrote {len(table)} entries to {OUT}")


if __name__ == "__main__":
    main()
