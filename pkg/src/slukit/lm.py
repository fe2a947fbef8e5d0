"""Add-k smoothed n-gram language model, perplexity and OOV counts."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


@dataclass
class NGramModel:
    order: int
    k: float
    vocab: frozenset
    counts: dict = field(default_factory=lambda: defaultdict(Counter))  # context tuple -> Counter
    context_totals: Counter = field(default_factory=Counter)

    @property
    def outcomes(self) -> list[str]:
        """Every word the model can predict: the vocabulary, end of sentence and UNK."""
        return sorted(self.vocab) + [EOS, UNK]

    def _context(self, history: Sequence[str]) -> tuple:
        if self.order == 1:
            return ()
        padded = [BOS] * (self.order - 1) + [self.map(w) for w in history]
        return tuple(padded[-(self.order - 1):])

    def map(self, word: str) -> str:
        return word if word in self.vocab or word in (BOS, EOS) else UNK

    def prob(self, word: str, history: Sequence[str] = ()) -> float:
        ctx = self._context(history)
        c = self.counts.get(ctx)
        num = (c[self.map(word)] if c else 0) + self.k
        return num / (self.context_totals[ctx] + self.k * (len(self.vocab) + 2))

    def sentence_logprob(self, tokens: Sequence[str]) -> tuple[float, int]:
        """Natural-log probability including end of sentence, and the number of predictions."""
        lp = 0.0
        seq = list(tokens) + [EOS]
        for i, w in enumerate(seq):
            lp += math.log(self.prob(w, seq[:i]))
        return lp, len(seq)

    @classmethod
    def uniform(cls, vocab: Iterable[str], order: int = 1) -> "NGramModel":
        """Untrained model: every outcome equally likely."""
        return cls(order, 1.0, frozenset(vocab))


def train(corpus: Iterable[Sequence[str]], order: int = 3, k: float = 1.0) -> NGramModel:
    if order < 1:
        raise ValueError("order must be >= 1")
    if k <= 0:
        raise ValueError("smoothing constant k must be > 0")
    sents = [list(s) for s in corpus]
    if not sents:
        raise ValueError("empty training corpus")
    vocab = frozenset(w for s in sents for w in s)
    model = NGramModel(order, k, vocab)
    for s in sents:
        padded = [BOS] * (order - 1) + s + [EOS]
        for i in range(order - 1, len(padded)):
            ctx = tuple(padded[i - order + 1 : i])
            model.counts[ctx][padded[i]] += 1
            model.context_totals[ctx] += 1
    return model


def perplexity(model: NGramModel, test: Iterable[Sequence[str]]) -> float:
    total = 0.0
    n = 0
    for s in test:
        lp, m = model.sentence_logprob(s)
        total += lp
        n += m
    if n == 0:
        raise ValueError("empty test set")
    return math.exp(-total / n)


def oov_count(train_vocab: Iterable[str], test: Iterable[Sequence[str]]) -> tuple[int, int]:
    """(word types, word tokens) of ``test`` missing from ``train_vocab``."""
    vocab = set(train_vocab)
    types = set()
    tokens = 0
    for s in test:
        for w in s:
            if w not in vocab:
                types.add(w)
                tokens += 1
    return len(types), tokens


@dataclass(frozen=True)
class CorpusStats:
    utterances: int
    words: int
    perplexity: float
    oov_types: int
    oov_tokens: int

    HEADER = "utterances\twords\tperpl.\tOOV types\tOOV tokens"

    def row(self) -> str:
        return f"{self.utterances}\t{self.words}\t{self.perplexity:.2f}\t{self.oov_types}\t{self.oov_tokens}"


def corpus_stats(train_sents, test_sents, order=3, k=1.0) -> CorpusStats:
    """Training-corpus row: size, vocabulary, perplexity on the test set and OOV w.r.t. it."""
    train_sents = [list(s) for s in train_sents]
    test_sents = [list(s) for s in test_sents]
    model = train(train_sents, order, k)
    types, toks = oov_count(model.vocab, test_sents)
    return CorpusStats(len(train_sents), len(model.vocab), perplexity(model, test_sents), types, toks)
