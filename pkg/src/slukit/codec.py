"""Symbol-enriched transcriptions.

An enriched transcription is the plain utterance text with the intent symbol
at both ends and every slot wrapped in its concept symbol::

    @ vocadom ^allume^ }la lumière} @

Decoding is tolerant: hypothesis strings produced by a recognizer routinely
drop or duplicate symbols, so the parser repairs what it can and reports every
repair in :class:`DecodeDiagnostics` instead of failing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import NONE_INTENT, Utterance, split_elision
from .errors import CodecError, SymbolTableError

DEFAULT_SYMBOLS = Path(__file__).with_name("data") / "symbols.json"


@dataclass(frozen=True)
class SymbolTable:
    intent_symbols: dict
    concept_symbols: dict
    mask_char: str = "*"
    repeat: int = 1

    def __post_init__(self):
        if NONE_INTENT in self.intent_symbols:
            raise SymbolTableError("the 'none' intent cannot have a symbol")
        if self.repeat not in (1, 2):
            raise SymbolTableError(f"repeat must be 1 or 2, got {self.repeat}")
        chars = list(self.intent_symbols.values()) + list(self.concept_symbols.values()) + [self.mask_char]
        for c in chars:
            if not isinstance(c, str) or len(c) != 1:
                raise SymbolTableError(f"symbols must be single characters, got {c!r}")
            if c.isspace() or c.isalnum() or c == "'":
                raise SymbolTableError(f"{c!r} cannot be used as a symbol")
        if len(set(chars)) != len(chars):
            dup = sorted({c for c in chars if chars.count(c) > 1})
            raise SymbolTableError(f"symbols are not pairwise distinct: {dup}")
        object.__setattr__(self, "_intent_of", {v: k for k, v in self.intent_symbols.items()})
        object.__setattr__(self, "_concept_of", {v: k for k, v in self.concept_symbols.items()})

    @classmethod
    def load(cls, path=None, repeat=None) -> "SymbolTable":
        path = Path(path) if path else DEFAULT_SYMBOLS
        with open(path, encoding="utf-8") as f:
            d = json.load(f)
        return cls.from_dict(d, repeat=repeat)

    @classmethod
    def from_dict(cls, d, repeat=None) -> "SymbolTable":
        try:
            return cls(
                dict(d["intents"]),
                dict(d["concepts"]),
                d.get("mask", "*"),
                int(repeat if repeat is not None else d.get("repeat", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SymbolTableError(f"bad symbol table: {e!r}") from e

    def to_dict(self) -> dict:
        return {"intents": self.intent_symbols, "concepts": self.concept_symbols,
                "mask": self.mask_char, "repeat": self.repeat}

    def with_repeat(self, repeat) -> "SymbolTable":
        return SymbolTable(self.intent_symbols, self.concept_symbols, self.mask_char, repeat)

    def intent_for(self, ch):
        return self._intent_of.get(ch)

    def concept_for(self, ch):
        return self._concept_of.get(ch)

    def is_symbol(self, ch) -> bool:
        return ch in self._intent_of or ch in self._concept_of

    @property
    def alphabet(self) -> set[str]:
        return set(self._intent_of) | set(self._concept_of)


def default_symbols(repeat=None) -> SymbolTable:
    return SymbolTable.load(None, repeat=repeat)


@dataclass
class DecodeDiagnostics:
    repairs: list[str] = field(default_factory=list)

    def add(self, msg):
        self.repairs.append(msg)

    def __bool__(self):
        return bool(self.repairs)

    def __len__(self):
        return len(self.repairs)


def _surface_groups(tokens):
    # a token ending in an apostrophe is glued to the next one
    groups = []
    cur = []
    for tok in tokens:
        cur.append(tok)
        if not tok.endswith("'"):
            groups.append(" ".join(cur).replace("' ", "'"))
            cur = []
    if cur:
        groups.append("".join(cur))
    return groups


def _render(tokens):
    return " ".join(_surface_groups(tokens))


def _check_tokens(tokens, st, where):
    for tok in tokens:
        bad = [c for c in tok if st.is_symbol(c)]
        if bad or not tok or any(c.isspace() for c in tok):
            raise CodecError(f"{where}: token {tok!r} contains a reserved symbol or whitespace")


def encode(u: Utterance, st: SymbolTable, intents=True) -> str:
    """Render ``u`` as an enriched transcription. ``intents=False`` gives the concept-only form."""
    _check_tokens(u.tokens, st, u.id)
    pieces = []
    pos = 0
    outside = []

    def flush():
        if outside:
            pieces.append(_render(outside))
            outside.clear()

    for s in u.slots:
        if s.start < pos:
            raise CodecError(f"{u.id}: overlapping slots")
        sym = st.concept_symbols.get(s.label)
        if sym is None:
            raise CodecError(f"{u.id}: no symbol for concept {s.label!r}")
        outside.extend(u.tokens[pos : s.start])
        flush()
        pieces.append(f"{sym}{_render(u.tokens[s.start : s.end])}{sym}")
        pos = s.end
    outside.extend(u.tokens[pos:])
    flush()

    body = " ".join(pieces)
    if not intents or u.intent == NONE_INTENT:
        return body
    sym = st.intent_symbols.get(u.intent)
    if sym is None:
        raise CodecError(f"{u.id}: no symbol for intent {u.intent!r}")
    group = sym * st.repeat
    return f"{group} {body} {group}" if body else f"{group} {group}"


def _lex(text, st):
    """Split into ('sym', ch) and ('word', token) items."""
    items = []
    word = []

    def end_word():
        if word:
            for tok in split_elision("".join(word)):
                items.append(("word", tok))
            word.clear()

    for ch in text.replace("’", "'"):
        if ch.isspace():
            end_word()
        elif st.is_symbol(ch):
            end_word()
            items.append(("sym", ch))
        else:
            word.append(ch)
    end_word()
    return items


def decode(text: str, st: SymbolTable, id="", meta=None):
    """Parse an enriched transcription; returns ``(Utterance, DecodeDiagnostics)``."""
    diag = DecodeDiagnostics()
    items = _lex(text, st)

    intent_syms = [ch for kind, ch in items if kind == "sym" and st.intent_for(ch)]
    if intent_syms:
        first = intent_syms[0]
        intent = st.intent_for(first)
        others = sorted({st.intent_for(c) for c in intent_syms} - {intent})
        if others:
            diag.add(f"conflicting intent symbols {others}; kept {intent!r}")
        n = intent_syms.count(first)
        if n != 2 * st.repeat:
            diag.add(f"intent symbol {first!r} appears {n} times, expected {2 * st.repeat}")
    else:
        intent = NONE_INTENT

    tokens = []
    spans = []
    open_label = None
    open_start = 0

    def close(label, start, end, how):
        if how:
            diag.add(how)
        if end > start:
            spans.append((label, start, end))
        else:
            diag.add(f"empty {label} region dropped")

    for kind, val in items:
        if kind == "word":
            tokens.append(val)
            continue
        label = st.concept_for(val)
        if label is None:
            continue
        if open_label is None:
            open_label, open_start = label, len(tokens)
        elif open_label == label:
            close(label, open_start, len(tokens), None)
            open_label = None
        else:
            # regions never nest: an unterminated region ends where the next one starts
            close(open_label, open_start, len(tokens), f"unterminated {open_label} region closed before {label}")
            open_label, open_start = label, len(tokens)
    if open_label is not None:
        close(open_label, open_start, len(tokens), f"unterminated {open_label} region closed at end")

    u = Utterance.build(id, tokens, intent, spans, meta)
    return u, diag


def extract_symbol_sequence(text: str, st: SymbolTable) -> list[str]:
    """Concept labels in the order their regions open (after decode repairs)."""
    u, _ = decode(text, st)
    return u.labels()


def mask_outside_slots(text: str, st: SymbolTable) -> str:
    """Replace each surface word outside concept regions by the mask character.

    The first word after the opening intent symbols (the activation keyword)
    is kept; utterances without intent have no keyword and are fully masked.
    """
    u, diag = decode(text, st)
    if diag:
        raise CodecError(f"cannot mask malformed transcription: {'; '.join(diag.repairs)}")
    mask = st.mask_char
    tokens = []
    spans = []
    pos = 0
    keep_first = u.intent != NONE_INTENT

    def masked(seg, first_kept):
        groups = _surface_groups(seg)
        out = []
        for i, g in enumerate(groups):
            if first_kept and i == 0:
                out.extend(split_elision(g))
            else:
                out.append(mask)
        return out

    for s in u.slots:
        seg = u.tokens[pos : s.start]
        tokens.extend(masked(seg, keep_first and pos == 0))
        start = len(tokens)
        tokens.extend(u.tokens[s.start : s.end])
        spans.append((s.label, start, len(tokens)))
        pos = s.end
    tokens.extend(masked(u.tokens[pos:], keep_first and pos == 0))
    out = Utterance.build(u.id, tokens, u.intent, spans)
    return encode(out, st, intents=u.intent != NONE_INTENT)
