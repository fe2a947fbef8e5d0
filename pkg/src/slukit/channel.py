"""Seeded noisy channel over enriched transcriptions (a stand-in for ASR output)."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .codec import SymbolTable, decode, extract_symbol_sequence
from .corpus import detokenize, split_elision
from .errors import PlanError
from .metrics import align, cer
from .stats import CorrelationReport, correlate


@dataclass(frozen=True)
class NoiseProfile:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    symbol_del: float = 0.0
    confusion_vocab: tuple = ()
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "confusion_vocab", tuple(sorted(set(self.confusion_vocab))))
        for k in ("p_sub", "p_del", "p_ins", "symbol_del"):
            v = getattr(self, k)
            if not 0 <= v <= 1:
                raise PlanError(f"{k} must be in [0, 1], got {v}")
        if self.p_sub + self.p_del > 1:
            raise PlanError("p_sub + p_del must not exceed 1")

    @classmethod
    def from_dict(cls, d) -> "NoiseProfile":
        known = {"p_sub", "p_del", "p_ins", "symbol_del", "confusion_vocab", "seed", "name"}
        extra = set(d) - known
        if extra:
            raise PlanError(f"unknown noise profile fields {sorted(extra)}")
        try:
            return cls(**{k: (tuple(v) if k == "confusion_vocab" else v) for k, v in d.items()})
        except TypeError as e:
            raise PlanError(f"bad noise profile: {e}") from e

    def to_dict(self) -> dict:
        d = asdict(self)
        d["confusion_vocab"] = list(self.confusion_vocab)
        return d

    def label(self) -> str:
        return self.name or f"sub={self.p_sub:g},del={self.p_del:g},ins={self.p_ins:g},sym={self.symbol_del:g}"


def load_profiles(path) -> list[NoiseProfile]:
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    items = d if isinstance(d, list) else d.get("profiles", [d])
    return [NoiseProfile.from_dict(x) for x in items]


@dataclass
class ChannelEvents:
    sub: int = 0
    dele: int = 0
    ins: int = 0
    sym_del: int = 0
    words: int = 0

    def to_dict(self):
        return {"sub": self.sub, "del": self.dele, "ins": self.ins, "sym_del": self.sym_del, "words": self.words}


def _segments(chunk, st):
    """Split a whitespace chunk into alternating runs of symbols and word characters."""
    runs = []
    for ch in chunk:
        is_sym = st.is_symbol(ch)
        if runs and runs[-1][0] == is_sym and not is_sym:
            runs[-1][1].append(ch)
        else:
            runs.append((is_sym, [ch]))
    return [(is_sym, "".join(chars)) for is_sym, chars in runs]


def corrupt_text(text: str, st: SymbolTable, profile: NoiseProfile, rng: random.Random, vocab=None):
    """Corrupt one enriched transcription; returns ``(hypothesis, ChannelEvents)``.

    Each word token is deleted with ``p_del`` or else substituted with
    ``p_sub``, and followed by a random insertion with ``p_ins``. Every
    delimiter character is dropped independently with ``symbol_del``.
    """
    pool = list(vocab if vocab is not None else profile.confusion_vocab)
    ev = ChannelEvents()
    out_chunks = []
    for chunk in text.split():
        piece = []
        for is_sym, run in _segments(chunk, st):
            if is_sym:
                if profile.symbol_del and rng.random() < profile.symbol_del:
                    ev.sym_del += 1
                else:
                    piece.append(run)
                continue
            words = []
            for tok in split_elision(run):
                ev.words += 1
                u = rng.random()
                if u < profile.p_del:
                    ev.dele += 1
                elif u < profile.p_del + profile.p_sub and len(pool) > 1:
                    cand = rng.choice(pool)
                    while cand == tok:
                        cand = rng.choice(pool)
                    words.append(cand)
                    ev.sub += 1
                else:
                    words.append(tok)
                if profile.p_ins and rng.random() < profile.p_ins and pool:
                    words.append(rng.choice(pool))
                    ev.ins += 1
            piece.append(detokenize(words))
        piece = "".join(piece)
        if piece:
            out_chunks.append(piece)
    return " ".join(out_chunks), ev


def _rng(profile, uid):
    # keyed per utterance so results do not depend on processing order
    return random.Random(f"{profile.seed}/{uid}")


def confusion_vocabulary(texts: Iterable[str], st: SymbolTable) -> list[str]:
    vocab = set()
    for t in texts:
        u, _ = decode(t, st)
        vocab.update(u.tokens)
    return sorted(w for w in vocab if not any(st.is_symbol(c) for c in w) and w != st.mask_char)


def corrupt(corpus: Sequence[tuple[str, str]], profile: NoiseProfile, st: SymbolTable) -> list[dict]:
    """Corrupt ``(id, enriched)`` pairs; returns hypothesis records ``{id, enriched, meta}``.

    Without an explicit ``confusion_vocab`` the substitution pool is the
    corpus vocabulary.
    """
    corpus = list(corpus)
    vocab = profile.confusion_vocab or tuple(confusion_vocabulary((t for _, t in corpus), st))
    vocab = [w for w in vocab if not any(st.is_symbol(c) for c in w)]
    out = []
    for uid, text in corpus:
        hyp, ev = corrupt_text(text, st, profile, _rng(profile, uid), vocab)
        out.append({"id": uid, "enriched": hyp, "meta": {"channel": ev.to_dict(), "profile": profile.label()}})
    return out


def utterance_scores(ref_text: str, hyp_text: str, st: SymbolTable) -> tuple[float, float | None]:
    """(word WER, CER) for one pair of enriched strings; CER is None without reference concepts."""
    ref, _ = decode(ref_text, st)
    hyp, _ = decode(hyp_text, st)
    c = cer(ref.labels(), hyp.labels())
    return align(ref.tokens, hyp.tokens).wer, (None if c.empty_ref else c.cer)


@dataclass
class StudyResult:
    profile: NoiseProfile
    report: CorrelationReport
    mean_wer: float
    mean_cer: float
    n: int
    wer: list = field(default_factory=list, repr=False)
    cer: list = field(default_factory=list, repr=False)


def wer_cer_study(reference: Sequence[tuple[str, str]], profiles: Iterable[NoiseProfile], st: SymbolTable,
                  min_utterances=100) -> list[StudyResult]:
    """Correlate per-utterance WER and CER under each noise profile."""
    reference = list(reference)
    for uid, text in reference:
        if not extract_symbol_sequence(text, st):
            raise ValueError(f"{uid}: every reference utterance needs at least one concept")
    if len(reference) < min_utterances:
        raise ValueError(f"need at least {min_utterances} utterances, got {len(reference)}")
    results = []
    for prof in profiles:
        hyps = corrupt(reference, prof, st)
        w, c = [], []
        for (uid, ref), h in zip(reference, hyps):
            a, b = utterance_scores(ref, h["enriched"], st)
            w.append(a)
            c.append(b)
        results.append(StudyResult(prof, correlate(w, c), sum(w) / len(w), sum(c) / len(c), len(w), wer=w, cer=c))
    return results
