"""WER alignment, order-free concept error rate, intent F1 and corpus reports."""

from __future__ import annotations

import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import Utterance
from .errors import CorpusError

MATCH, SUB, DEL, INS = "=", "S", "D", "I"


@dataclass(frozen=True)
class AlignmentResult:
    ops: tuple  # (op, ref_token | None, hyp_token | None)
    I: int
    D: int
    S: int
    N: int
    wer: float
    empty_ref: bool = False

    @property
    def errors(self) -> int:
        return self.I + self.D + self.S

    def replay(self, ref: Sequence) -> list:
        """Apply the edit script to ``ref``; yields the hypothesis."""
        out = []
        i = 0
        for op, r, h in self.ops:
            if op == INS:
                out.append(h)
                continue
            if ref[i] != r:
                raise ValueError("edit script does not match reference")
            i += 1
            if op == MATCH:
                out.append(r)
            elif op == SUB:
                out.append(h)
        return out


def edit_distance(ref: Sequence, hyp: Sequence) -> int:
    prev = list(range(len(hyp) + 1))
    for i in range(1, len(ref) + 1):
        cur = [i] + [0] * len(hyp)
        r = ref[i - 1]
        for j in range(1, len(hyp) + 1):
            cur[j] = min(prev[j - 1] + (r != hyp[j - 1]), prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[-1]


def align(ref: Sequence, hyp: Sequence) -> AlignmentResult:
    """Minimal unit-cost Levenshtein alignment of two token sequences.

    Backtrace prefers match, then substitution, then deletion, then insertion.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        row, prev = d[i], d[i - 1]
        row[0] = i
        r = ref[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (r != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)

    ops = []
    i, j = n, m
    I = D = S = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i][j] == d[i - 1][j - 1]:
            ops.append((MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + 1:
            ops.append((SUB, ref[i - 1], hyp[j - 1]))
            S += 1
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            ops.append((DEL, ref[i - 1], None))
            D += 1
            i -= 1
        else:
            ops.append((INS, None, hyp[j - 1]))
            I += 1
            j -= 1
    ops.reverse()
    if n:
        wer = (I + S + D) / n * 100
    else:
        # no reference words: report insertions as a percentage sentinel
        wer = I * 100.0
    return AlignmentResult(tuple(ops), I, D, S, n, wer, empty_ref=n == 0)


def wer(ref: Sequence, hyp: Sequence) -> float:
    return align(ref, hyp).wer


@dataclass(frozen=True)
class CerResult:
    matched: int
    substituted: int
    deleted: int
    inserted: int
    N_ref: int
    cer: float
    empty_ref: bool = False

    @property
    def errors(self) -> int:
        return self.substituted + self.deleted + self.inserted


def cer(ref_labels: Iterable, hyp_labels: Iterable) -> CerResult:
    """Concept error rate ignoring label order.

    Labels are matched as multisets; leftover reference and hypothesis labels
    are paired off as substitutions, the rest count as deletions/insertions.
    Items may be any hashable, e.g. ``(label, value)`` pairs for value-aware scoring.
    """
    ref = Counter(ref_labels)
    hyp = Counter(hyp_labels)
    n_ref = sum(ref.values())
    matched = sum((ref & hyp).values())
    ref_left = n_ref - matched
    hyp_left = sum(hyp.values()) - matched
    sub = min(ref_left, hyp_left)
    dele = ref_left - sub
    ins = hyp_left - sub
    if n_ref:
        rate = (sub + dele + ins) / n_ref * 100
    else:
        rate = ins * 100.0
    return CerResult(matched, sub, dele, ins, n_ref, rate, empty_ref=n_ref == 0)


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    @property
    def support(self) -> int:
        return self.tp + self.fn


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class IntentConfusion:
    classes: dict = field(default_factory=dict)  # intent -> ClassCounts
    n: int = 0

    def _micro(self):
        tp = sum(c.tp for c in self.classes.values())
        fp = sum(c.fp for c in self.classes.values())
        fn = sum(c.fn for c in self.classes.values())
        return ClassCounts(tp, fp, fn)

    @property
    def micro_precision(self):
        return self._micro().precision

    @property
    def micro_recall(self):
        return self._micro().recall

    @property
    def micro_f1(self):
        return self._micro().f1

    def _active(self):
        return [c for c in self.classes.values() if c.tp + c.fp + c.fn]

    @property
    def macro_precision(self):
        act = self._active()
        return sum(c.precision for c in act) / len(act) if act else 0.0

    @property
    def macro_recall(self):
        act = self._active()
        return sum(c.recall for c in act) / len(act) if act else 0.0

    @property
    def macro_f1(self):
        act = self._active()
        return sum(c.f1 for c in act) / len(act) if act else 0.0

    @property
    def f1(self):
        return self.micro_f1


def intent_scores(pairs: Iterable[tuple[str, str]], classes: Iterable[str] = ()) -> IntentConfusion:
    """One-vs-rest counts per intent; ``classes`` adds intents that may never occur."""
    conf = IntentConfusion({c: ClassCounts() for c in classes})
    for ref, hyp in pairs:
        conf.n += 1
        conf.classes.setdefault(ref, ClassCounts())
        conf.classes.setdefault(hyp, ClassCounts())
        if ref == hyp:
            conf.classes[ref].tp += 1
        else:
            conf.classes[ref].fn += 1
            conf.classes[hyp].fp += 1
    if conf.n == 0:
        raise ValueError("intent_scores needs at least one pair")
    return conf


@dataclass(frozen=True)
class UtteranceScore:
    id: str
    wer: AlignmentResult
    cer: CerResult
    ref_intent: str
    hyp_intent: str
    meta: dict

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "wer": round(self.wer.wer, 6),
            "cer": None if self.cer.empty_ref else round(self.cer.cer, 6),
            "ref_intent": self.ref_intent,
            "hyp_intent": self.hyp_intent,
            "I": self.wer.I, "D": self.wer.D, "S": self.wer.S, "N": self.wer.N,
            "concepts_ref": self.cer.N_ref, "concept_errors": self.cer.errors,
            "meta": self.meta,
        }


def score_utterance(ref: Utterance, hyp: Utterance, with_values=False) -> UtteranceScore:
    if with_values:
        r = [(s.label, s.value) for s in ref.slots]
        h = [(s.label, s.value) for s in hyp.slots]
    else:
        r, h = ref.labels(), hyp.labels()
    return UtteranceScore(ref.id, align(ref.tokens, hyp.tokens), cer(r, h), ref.intent, hyp.intent, ref.meta)


@dataclass(frozen=True)
class ReportRow:
    model: str
    group: str
    wer: float
    cer: float
    f1: float
    n: int
    macro_f1: float = 0.0


@dataclass
class EvalReport:
    rows: list[ReportRow]
    scores: list[UtteranceScore]

    def to_tsv(self) -> str:
        out = io.StringIO()
        out.write("Model\tGroup\tWER\tCER\tF1\tN\n")
        for r in self.rows:
            out.write(f"{r.model}\t{r.group}\t{_fmt(r.wer)}\t{_fmt(r.cer)}\t{_fmt(r.f1)}\t{r.n}\n")
        return out.getvalue()

    def row(self, group="All") -> ReportRow:
        for r in self.rows:
            if r.group == group:
                return r
        raise KeyError(group)


def _fmt(x):
    return "-" if x is None else f"{x:.2f}"


def _aggregate(model, group, scores) -> ReportRow:
    words = sum(s.wer.N for s in scores)
    werr = sum(s.wer.errors for s in scores)
    # utterances without reference concepts have no defined CER
    counted = [s.cer for s in scores if not s.cer.empty_ref]
    concepts = sum(c.N_ref for c in counted)
    cerr = sum(c.errors for c in counted)
    conf = intent_scores((s.ref_intent, s.hyp_intent) for s in scores)
    return ReportRow(
        model,
        group,
        werr / words * 100 if words else None,
        cerr / concepts * 100 if concepts else None,
        conf.micro_f1 * 100,
        len(scores),
        conf.macro_f1 * 100,
    )


def meta_value(meta: dict, key: str):
    cur = meta
    for part in key.removeprefix("meta.").split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def corpus_report(refs: Iterable[Utterance], hyps: Iterable[Utterance], group_by=None,
                  model="system", with_values=False) -> EvalReport:
    """Score aligned corpora. WER and CER are pooled rates (total errors / total reference items)."""
    hyp_by_id = {}
    for h in hyps:
        if h.id in hyp_by_id:
            raise CorpusError(f"duplicate hypothesis id {h.id!r}")
        hyp_by_id[h.id] = h
    refs = list(refs)
    ref_ids = {r.id for r in refs}
    if len(ref_ids) != len(refs):
        raise CorpusError("duplicate reference ids")
    missing = sorted(ref_ids - hyp_by_id.keys())
    extra = sorted(hyp_by_id.keys() - ref_ids)
    if missing or extra:
        raise CorpusError(f"id mismatch: {len(missing)} missing hypotheses {missing[:3]}, {len(extra)} extra {extra[:3]}")
    scores = [score_utterance(r, hyp_by_id[r.id], with_values) for r in sorted(refs, key=lambda u: u.id)]
    if not scores:
        raise CorpusError("empty corpus")

    rows = [_aggregate(model, "All", scores)]
    if group_by:
        groups = defaultdict(list)
        for s in scores:
            v = meta_value(s.meta, group_by)
            groups["(none)" if v is None else str(v)].append(s)
        for g in sorted(groups):
            rows.append(_aggregate(model, g, groups[g]))
    return EvalReport(rows, scores)
