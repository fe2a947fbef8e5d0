"""Grammar-driven corpora, enriched transcriptions and evaluation for end-to-end SLU."""

__version__ = "0.1.0"

from .codec import SymbolTable, decode, encode, default_symbols, mask_outside_slots
from .corpus import Utterance, SlotSpan, load_corpus, save_corpus, tokenize, detokenize
from .grammar import Grammar, load_grammar
from .metrics import align, cer, corpus_report, intent_scores, wer
from .stats import correlate, pearson, spearman

__all__ = [
    "SymbolTable", "decode", "encode", "default_symbols", "mask_outside_slots",
    "Utterance", "SlotSpan", "load_corpus", "save_corpus", "tokenize", "detokenize",
    "Grammar", "load_grammar",
    "align", "cer", "corpus_report", "intent_scores", "wer",
    "correlate", "pearson", "spearman",
]
