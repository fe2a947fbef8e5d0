"""Controlled lexical and syntactic degradation of annotated corpora."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Utterance, tokenize
from .errors import PlanError

DATA = Path(__file__).with_name("data")
DEFAULT_SUBSTITUTIONS = DATA / "oov_substitutions.json"
DEFAULT_SYNTAX_PLAN = DATA / "syntax_plan.json"

KEYWORD = "keyword"
# cumulative: step k activates the first k groups
OOV_SCHEDULE = (("action", "device-setting"), ("device",), ("location",), (KEYWORD,))

_ALIASES = {"key-words": KEYWORD, "keywords": KEYWORD}


def _category(name):
    return _ALIASES.get(name, name)


def schedule_categories(step: int) -> list[str]:
    if not 0 <= step <= len(OOV_SCHEDULE):
        raise PlanError(f"OOV step must be in 0..{len(OOV_SCHEDULE)}, got {step}")
    return [c for group in OOV_SCHEDULE[:step] for c in group]


def _matches(category, label):
    # a category covers its own label and hyphenated sub-labels (location -> location-room)
    return label == category or label.startswith(category + "-")


@dataclass
class SubstitutionPlan:
    step: int
    categories: list[str]
    substitutions: dict  # category -> {word: replacement}

    @classmethod
    def from_dict(cls, d) -> "SubstitutionPlan":
        try:
            step = int(d.get("step", 0))
            subs = {_category(c): dict(m) for c, m in d.get("substitutions", {}).items()}
            cats = d.get("categories")
            cats = schedule_categories(step) if cats is None else [_category(c) for c in cats]
        except (TypeError, ValueError, AttributeError) as e:
            raise PlanError(f"bad substitution plan: {e!r}") from e
        if not set(schedule_categories(step)) <= set(cats):
            raise PlanError(f"step {step} must activate {schedule_categories(step)}, got {cats}")
        return cls(step, cats, subs)

    @classmethod
    def load(cls, path) -> "SubstitutionPlan":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def for_step(cls, step: int, substitutions=None) -> "SubstitutionPlan":
        """The cumulative plan for ``step`` drawn from a full substitution inventory."""
        if substitutions is None:
            with open(DEFAULT_SUBSTITUTIONS, encoding="utf-8") as f:
                substitutions = json.load(f)["substitutions"]
        return cls(step, schedule_categories(step), {_category(c): dict(m) for c, m in substitutions.items()})

    def to_dict(self) -> dict:
        return {"step": self.step, "categories": self.categories, "substitutions": self.substitutions}

    def active(self) -> dict:
        return {c: self.substitutions.get(c, {}) for c in self.categories}

    def inverse(self) -> "SubstitutionPlan":
        inv = {}
        for c, m in self.substitutions.items():
            back = {v: k for k, v in m.items()}
            if len(back) != len(m):
                raise PlanError(f"substitutions for {c!r} are not invertible")
            inv[c] = back
        return SubstitutionPlan(self.step, list(self.categories), inv)

    def validate(self, train_vocab) -> None:
        vocab = set(train_vocab)
        for c, m in self.active().items():
            for word, repl in m.items():
                clash = [t for t in tokenize(repl) if t in vocab]
                if clash:
                    raise PlanError(f"replacement {repl!r} for {word!r} ({c}) occurs in the training vocabulary")


@dataclass
class SubstitutionStats:
    step: int
    word_types: int
    words: int
    pct_types: float
    pct_words: float
    vocab_size: int = 0
    total_words: int = 0

    HEADER = "Substitutions\t#Word Type\t#Words\t(%) Word Type\t(%) Total Words"

    def row(self) -> str:
        return f"Step {self.step}\t{self.word_types}\t{self.words}\t{self.pct_types:.2f}\t{self.pct_words:.2f}"


def apply_oov(corpus: Iterable[Utterance], plan: SubstitutionPlan, train_vocab=None):
    """Swap in-slot words of active categories (and keywords) for out-of-vocabulary synonyms.

    Returns ``(new_corpus, SubstitutionStats)``; spans are re-indexed when a
    replacement has a different token count.
    """
    corpus = list(corpus)
    if train_vocab is not None:
        plan.validate(train_vocab)
    active = plan.active()
    slot_maps = {c: m for c, m in active.items() if c != KEYWORD and m}
    kw_map = active.get(KEYWORD, {})

    replaced_types = set()
    replaced_tokens = 0
    all_types = set()
    all_tokens = 0
    out = []
    for u in corpus:
        all_types.update(u.tokens)
        all_tokens += len(u.tokens)
        label_at = [None] * len(u.tokens)
        for s in u.slots:
            for i in range(s.start, s.end):
                label_at[i] = s.label
        new_tokens = []
        index_map = []  # old index -> (new start, new end)
        for i, tok in enumerate(u.tokens):
            repl = None
            label = label_at[i]
            if label is None:
                repl = kw_map.get(tok)
            else:
                for c, m in slot_maps.items():
                    if _matches(c, label) and tok in m:
                        repl = m[tok]
                        break
            start = len(new_tokens)
            if repl is None:
                new_tokens.append(tok)
            else:
                new_tokens.extend(tokenize(repl))
                replaced_types.add(tok)
                replaced_tokens += 1
            index_map.append((start, len(new_tokens)))
        spans = [(s.label, index_map[s.start][0], index_map[s.end - 1][1]) for s in u.slots]
        out.append(Utterance.build(u.id, new_tokens, u.intent, spans, u.meta))

    stats = SubstitutionStats(
        plan.step,
        len(replaced_types),
        replaced_tokens,
        100 * len(replaced_types) / len(all_types) if all_types else 0.0,
        100 * replaced_tokens / all_tokens if all_tokens else 0.0,
        len(all_types),
        all_tokens,
    )
    return out, stats


def oov_schedule(corpus, substitutions=None, train_vocab=None, steps=(1, 2, 3, 4)):
    """Apply each cumulative step to the original corpus; returns [(step, corpus, stats)]."""
    corpus = list(corpus)
    results = []
    for step in steps:
        plan = SubstitutionPlan.for_step(step, substitutions)
        new, stats = apply_oov(corpus, plan, train_vocab)
        results.append((step, new, stats))
    return results


# ---------------------------------------------------------------- syntax

@dataclass
class SyntaxPlan:
    step: int
    verb_rewrites: dict = field(default_factory=dict)
    disfluency_templates: list = field(default_factory=list)
    determiners: list = field(default_factory=list)
    action_label: str = "action"
    device_label: str = "device"

    @classmethod
    def from_dict(cls, d) -> "SyntaxPlan":
        try:
            plan = cls(
                int(d.get("step", 1)),
                dict(d.get("verb_rewrites", {})),
                list(d.get("disfluency_templates", [])),
                list(d.get("determiners", [])),
                d.get("action_label", "action"),
                d.get("device_label", "device"),
            )
        except (TypeError, ValueError) as e:
            raise PlanError(f"bad syntax plan: {e!r}") from e
        if plan.step not in (1, 2):
            raise PlanError(f"syntax step must be 1 or 2, got {plan.step}")
        for t in list(plan.verb_rewrites.values()) + plan.disfluency_templates:
            _parse_template(t)
        return plan

    @classmethod
    def load(cls, path=None, step=None) -> "SyntaxPlan":
        with open(path or DEFAULT_SYNTAX_PLAN, encoding="utf-8") as f:
            d = json.load(f)
        if step is not None:
            d["step"] = step
        return cls.from_dict(d)


def _parse_template(template):
    """Split a template into parts and locate the single bracketed slot region."""
    parts = []
    start = end = None
    for raw in template.split():
        if raw.startswith("["):
            if start is not None:
                raise PlanError(f"template {template!r} opens more than one slot")
            start = len(parts)
            raw = raw[1:]
        closing = raw.endswith("]")
        if closing:
            raw = raw[:-1]
        if raw:
            parts.append(raw)
        if closing:
            if start is None or end is not None:
                raise PlanError(f"template {template!r} has unbalanced brackets")
            end = len(parts)
    if start is None or end is None or end <= start:
        raise PlanError(f"template {template!r} must mark exactly one non-empty slot with [...]")
    return parts, start, end


def _expand(template, fields):
    """Expand placeholders; returns (tokens, slot_start, slot_end) or None if a field is missing."""
    parts, start, end = _parse_template(template)
    tokens = []
    s = e = None
    for i, p in enumerate(parts):
        if i == start:
            s = len(tokens)
        if p.startswith("{") and p.endswith("}"):
            val = fields.get(p[1:-1])
            if not val:
                return None
            tokens.extend(val)
        else:
            tokens.extend(tokenize(p))
        if i == end - 1:
            e = len(tokens)
    if e <= s:
        return None
    return tokens, s, e


def apply_syntax(corpus: Iterable[Utterance], plan: SyntaxPlan) -> list[Utterance]:
    """Step 1 rewrites action verbs into periphrastic constructions; step 2 also
    adds a disfluency next to every device slot."""
    dets = set(plan.determiners)
    out = []
    for u in corpus:
        tokens = []
        spans = []
        pos = 0
        for sl in u.slots:
            tokens.extend(u.tokens[pos : sl.start])
            seg = list(u.tokens[sl.start : sl.end])
            res = None
            if sl.label == plan.action_label and sl.value in plan.verb_rewrites:
                res = _expand(plan.verb_rewrites[sl.value], {"slot": seg})
            elif sl.label == plan.device_label and plan.step >= 2:
                fields = {"slot": seg}
                if len(seg) > 1 and seg[0] in dets:
                    fields["det"], fields["rest"] = [seg[0]], seg[1:]
                for t in plan.disfluency_templates:
                    res = _expand(t, fields)
                    if res:
                        break
            if res is None:
                res = (seg, 0, len(seg))
            new, s, e = res
            base = len(tokens)
            tokens.extend(new)
            spans.append((sl.label, base + s, base + e))
            pos = sl.end
        tokens.extend(u.tokens[pos:])
        out.append(Utterance.build(u.id, tokens, u.intent, spans, u.meta))
    return out


def split_by_length(corpus: Iterable[Utterance], threshold: int):
    """Partition into (long, short): long utterances have more than ``threshold`` tokens."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    long, short = [], []
    for u in corpus:
        (long if len(u.tokens) > threshold else short).append(u)
    return long, short


def mean_length(corpus: Iterable[Utterance]) -> float:
    lens = [len(u.tokens) for u in corpus]
    return sum(lens) / len(lens) if lens else 0.0
