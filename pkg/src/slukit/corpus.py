"""Utterance model, tokenization and JSONL corpus I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError

NONE_INTENT = "none"

_APOSTROPHES = str.maketrans({"’": "'", "ʼ": "'", "`": "'"})


def tokenize(text: str) -> list[str]:
    """Split on whitespace, then after every apostrophe.

    >>> tokenize("allume l'ampoule s'il te plaît")
    ['allume', "l'", 'ampoule', "s'", 'il', 'te', 'plaît']
    """
    tokens = []
    for chunk in text.translate(_APOSTROPHES).split():
        tokens.extend(split_elision(chunk))
    return tokens


def split_elision(word: str) -> list[str]:
    parts = []
    start = 0
    for i, ch in enumerate(word):
        if ch == "'":
            parts.append(word[start : i + 1])
            start = i + 1
    if start < len(word):
        parts.append(word[start:])
    return parts


def detokenize(tokens: Iterable[str]) -> str:
    """Inverse of :func:`tokenize` for canonical token lists (elided tokens re-glued)."""
    out = []
    glue = False
    for tok in tokens:
        if out and not glue:
            out.append(" ")
        out.append(tok)
        glue = tok.endswith("'")
    return "".join(out)


@dataclass(frozen=True)
class SlotSpan:
    label: str
    start: int
    end: int
    value: str

    def to_dict(self) -> dict:
        return {"label": self.label, "start": self.start, "end": self.end, "value": self.value}


@dataclass(frozen=True)
class Utterance:
    id: str
    tokens: tuple[str, ...]
    intent: str = NONE_INTENT
    slots: tuple[SlotSpan, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "slots", tuple(self.slots))
        prev_end = 0
        for s in self.slots:
            if not 0 <= s.start < s.end <= len(self.tokens):
                raise CorpusError(f"{self.id}: slot {s.label} [{s.start},{s.end}) out of bounds")
            if s.start < prev_end:
                raise CorpusError(f"{self.id}: slots overlap or are unordered at {s.label}")
            if s.value != detokenize(self.tokens[s.start : s.end]):
                raise CorpusError(f"{self.id}: slot {s.label} value {s.value!r} does not match tokens")
            prev_end = s.end

    @classmethod
    def build(cls, id, tokens, intent=NONE_INTENT, spans=(), meta=None) -> "Utterance":
        """Create from ``(label, start, end)`` triples; slot values are filled in."""
        tokens = tuple(tokens)
        slots = tuple(
            SlotSpan(label, start, end, detokenize(tokens[start:end]))
            for label, start, end in sorted(spans, key=lambda t: (t[1], t[2]))
        )
        return cls(id, tokens, intent, slots, dict(meta or {}))

    @property
    def text(self) -> str:
        return detokenize(self.tokens)

    def labels(self) -> list[str]:
        return [s.label for s in self.slots]

    def spans(self) -> list[tuple[str, int, int]]:
        return [(s.label, s.start, s.end) for s in self.slots]

    def same_annotation(self, other: "Utterance") -> bool:
        return (self.tokens, self.intent, self.slots) == (other.tokens, other.intent, other.slots)

    def with_id(self, new_id: str) -> "Utterance":
        return replace(self, id=new_id, meta=dict(self.meta))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tokens": list(self.tokens),
            "intent": self.intent,
            "slots": [s.to_dict() for s in self.slots],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Utterance":
        try:
            tokens = d["tokens"]
            if isinstance(tokens, str):
                tokens = tokenize(tokens)
            slots = [
                SlotSpan(s["label"], int(s["start"]), int(s["end"]),
                         s.get("value", detokenize(tokens[int(s["start"]) : int(s["end"])])))
                for s in d.get("slots", [])
            ]
            return cls(str(d["id"]), tuple(tokens), d.get("intent", NONE_INTENT), tuple(slots), dict(d.get("meta") or {}))
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusError(f"bad utterance record: {e!r}") from e


def read_jsonl(path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}:{lineno}: record is not an object")
            yield rec


def dumps(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(dumps(rec))
            f.write("\n")
            n += 1
    return n


def load_corpus(path) -> list[Utterance]:
    out = []
    for i, rec in enumerate(read_jsonl(path), 1):
        try:
            out.append(Utterance.from_dict(rec))
        except CorpusError as e:
            raise CorpusError(f"{path}:{i}: {e}") from e
    return out


def save_corpus(path, corpus: Iterable[Utterance]) -> int:
    return write_jsonl(path, (u.to_dict() for u in corpus))


def vocabulary(corpus: Iterable[Utterance]) -> set[str]:
    vocab: set[str] = set()
    for u in corpus:
        vocab.update(u.tokens)
    return vocab


def ensure_path(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    return p
