"""Feature-annotated context-free grammar for generating labelled voice commands.

Grammar files are line oriented::

    %start S
    %intent set_device check_device
    %concept location
    %concept location-room < location

    S -> KW CMD
    KW -> "vocadom" {role=keyword}
    CMD -> ACTION "la" "lumière" {intent=set_device} @2
    ACTION -> "allume" {concept=action}

Quoted items are terminals (tokenized like corpus text, ``""`` derives nothing),
bare identifiers are nonterminals. ``concept=`` turns the subtree into a slot,
``intent=`` sets the utterance intent, ``role=keyword`` records the derived
words as the activation keyword. ``@w`` is a non-negative sampling weight.
"""

from __future__ import annotations

import hashlib
import itertools
import random
import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator

from .corpus import NONE_INTENT, Utterance, detokenize, tokenize
from .errors import DerivationDepthError, GrammarError, UndefinedSymbolError

DEFAULT_MAX_DEPTH = 20
DEMO_GRAMMAR = Path(__file__).with_name("data") / "demo.g"

FEATURE_KEYS = ("intent", "concept", "role")


@dataclass(frozen=True)
class Terminal:
    text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class GrammarRule:
    lhs: str
    rhs: tuple  # of str (nonterminal) or Terminal
    features: tuple[tuple[str, str], ...] = ()
    weight: Fraction = Fraction(1)
    line: int = 0

    def feature(self, key, default=None):
        for k, v in self.features:
            if k == key:
                return v
        return default


@dataclass
class SemanticSpace:
    intents: set[str] = field(default_factory=set)
    concepts: dict[str, str | None] = field(default_factory=dict)  # name -> parent

    def __post_init__(self):
        self.intents.add(NONE_INTENT)

    def ancestors(self, concept):
        seen = []
        parent = self.concepts.get(concept)
        while parent is not None:
            if parent in seen or parent == concept:
                raise GrammarError(f"concept tree has a cycle through {concept!r}")
            seen.append(parent)
            parent = self.concepts.get(parent)
        return seen

    def children(self, concept):
        return sorted(c for c, p in self.concepts.items() if p == concept)


# one fragment of a derivation: tokens, (label, start, end) spans, intent, keyword
_Frag = tuple


_EMPTY: _Frag = ((), (), None, None)

_LEX = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<weight>@[0-9]+(?:[./][0-9]+)?)
  | (?P<lbrace>\{)
  | (?P<rbrace>\})
  | (?P<kv>[A-Za-z_][\w-]*=[^\s{}]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<comment>\#.*)
    """,
    re.VERBOSE,
)


def _lex(line, lineno):
    pos = 0
    out = []
    while pos < len(line):
        m = _LEX.match(line, pos)
        if m is None:
            raise GrammarError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            out.append((kind, m.group(), pos + 1))
        pos = m.end()
    return out


def _unquote(s):
    return re.sub(r"\\(.)", r"\1", s[1:-1])


class Grammar:
    """A validated, immutable grammar. Build with :func:`load_grammar`."""

    def __init__(self, rules, start, space, digest="", max_depth=DEFAULT_MAX_DEPTH):
        self.rules: tuple[GrammarRule, ...] = tuple(rules)
        self.start = start
        self.space = space
        self.digest = digest
        self.max_depth = max_depth
        by_lhs = defaultdict(list)
        for r in self.rules:
            by_lhs[r.lhs].append(r)
        self._by_lhs = {k: tuple(v) for k, v in by_lhs.items()}
        self._recursive = self._find_recursive()
        self._cache: dict[str, list] = {}

    # -- structure -------------------------------------------------------
    @property
    def rule_count(self) -> int:
        return len(self.rules)

    @property
    def nonterminals(self) -> set[str]:
        return set(self._by_lhs)

    def reachable(self, start=None) -> set[str]:
        start = start or self.start
        seen = {start}
        stack = [start]
        while stack:
            for r in self._by_lhs.get(stack.pop(), ()):
                for item in r.rhs:
                    if isinstance(item, str) and item not in seen:
                        seen.add(item)
                        stack.append(item)
        return seen

    def intents(self) -> set[str]:
        return {r.feature("intent") for r in self.rules if r.feature("intent")}

    def concepts(self) -> set[str]:
        return {r.feature("concept") for r in self.rules if r.feature("concept")}

    def keywords(self) -> set[str]:
        out = set()
        for r in self.rules:
            if r.feature("role") == "keyword":
                for item in r.rhs:
                    if isinstance(item, Terminal):
                        out.update(item.tokens)
        return out

    def terminal_vocabulary(self) -> set[str]:
        return {t for r in self.rules for item in r.rhs if isinstance(item, Terminal) for t in item.tokens}

    def _find_recursive(self):
        # nonterminals that can reach themselves or reach something that can
        succ = {nt: {i for r in rs for i in r.rhs if isinstance(i, str)} for nt, rs in self._by_lhs.items()}
        closure = {}
        for nt in succ:
            seen = set()
            stack = list(succ[nt])
            while stack:
                x = stack.pop()
                if x not in seen:
                    seen.add(x)
                    stack.extend(succ.get(x, ()))
            closure[nt] = seen
        cyclic = {nt for nt in succ if nt in closure[nt]}
        return {nt for nt in succ if nt in cyclic or closure[nt] & cyclic}

    # -- derivation -------------------------------------------------------
    def _apply(self, rule, frag):
        tokens, spans, intent, keyword = frag
        concept = rule.feature("concept")
        if concept is not None:
            if not tokens:
                raise GrammarError(f"concept {concept!r} derives an empty span", rule.line)
            spans = ((concept, 0, len(tokens)),)
        new_intent = rule.feature("intent")
        if new_intent is not None:
            if intent is not None and intent != new_intent:
                raise GrammarError(f"conflicting intents {intent!r} and {new_intent!r}", rule.line)
            intent = new_intent
        if rule.feature("role") == "keyword":
            keyword = detokenize(tokens)
        return tokens, spans, intent, keyword

    @staticmethod
    def _concat(a, b):
        off = len(a[0])
        spans = a[1] + tuple((l, s + off, e + off) for l, s, e in b[1])
        intent = a[2]
        if b[2] is not None:
            if intent is not None and intent != b[2]:
                raise GrammarError(f"conflicting intents {intent!r} and {b[2]!r} in one derivation")
            intent = b[2]
        return a[0] + b[0], spans, intent, a[3] if a[3] is not None else b[3]

    def _item_frags(self, item, depth):
        if isinstance(item, Terminal):
            return ((item.tokens, (), None, None),)
        if item not in self._recursive:
            return self._cached(item, depth)
        return self._lazy(item, depth)

    def _cached(self, nt, depth):
        frags = self._cache.get(nt)
        if frags is None:
            if depth > self.max_depth:
                raise DerivationDepthError(f"derivation depth exceeded {self.max_depth} at {nt!r}")
            frags = []
            for rule in self._by_lhs[nt]:
                parts = [self._item_frags(i, depth + 1) for i in rule.rhs]
                for combo in itertools.product(*parts):
                    frag = _EMPTY
                    for c in combo:
                        frag = self._concat(frag, c)
                    frags.append(self._apply(rule, frag))
            self._cache[nt] = frags
        return frags

    def _lazy(self, nt, depth):
        if depth > self.max_depth:
            raise DerivationDepthError(f"derivation depth exceeded {self.max_depth} at {nt!r}")
        for rule in self._by_lhs[nt]:
            for frag in self._seq(rule.rhs, depth + 1):
                yield self._apply(rule, frag)

    def _seq(self, rhs, depth):
        if not rhs:
            yield _EMPTY
            return
        for first in self._item_frags(rhs[0], depth):
            for rest in self._seq(rhs[1:], depth):
                yield self._concat(first, rest)

    def _sample_frag(self, nt, rng, depth):
        if depth > self.max_depth:
            raise DerivationDepthError(f"derivation depth exceeded {self.max_depth} at {nt!r}")
        rules = self._by_lhs[nt]
        weights = [float(r.weight) for r in rules]
        if sum(weights) <= 0:
            raise GrammarError(f"all rules for {nt!r} have zero weight")
        rule = rng.choices(rules, weights=weights)[0]
        frag = _EMPTY
        for item in rule.rhs:
            if isinstance(item, Terminal):
                part = (item.tokens, (), None, None)
            else:
                part = self._sample_frag(item, rng, depth + 1)
            frag = self._concat(frag, part)
        return self._apply(rule, frag)

    def _to_utterance(self, frag, uid):
        tokens, spans, intent, keyword = frag
        meta = {"source": "grammar"}
        if keyword is not None:
            meta["keyword"] = keyword
        return Utterance.build(uid, tokens, intent or NONE_INTENT, spans, meta)

    def enumerate(self, limit=None, start=None, id_prefix="gen-") -> Iterator[Utterance]:
        """Yield distinct utterances in rule order, first derivation of each wins."""
        if limit is not None and limit < 1:
            raise ValueError("limit must be >= 1")
        start = start or self.start
        if start not in self._by_lhs:
            raise UndefinedSymbolError(start)
        seen = set()
        n = 0
        for frag in self._item_frags(start, 0):
            if frag[0] in seen:
                continue
            seen.add(frag[0])
            n += 1
            yield self._to_utterance(frag, f"{id_prefix}{n:06d}")
            if limit is not None and n >= limit:
                return

    def sample(self, n, seed, start=None, id_prefix="smp-") -> list[Utterance]:
        if n < 1:
            raise ValueError("n must be >= 1")
        start = start or self.start
        if start not in self._by_lhs:
            raise UndefinedSymbolError(start)
        rng = random.Random(seed)
        return [self._to_utterance(self._sample_frag(start, rng, 0), f"{id_prefix}{i:06d}") for i in range(1, n + 1)]


def enumerate_utterances(grammar: Grammar, limit=None, **kw) -> Iterator[Utterance]:
    return grammar.enumerate(limit, **kw)


def sample(grammar: Grammar, n: int, seed: int, **kw) -> list[Utterance]:
    return grammar.sample(n, seed, **kw)


def load_grammar(source, max_depth=DEFAULT_MAX_DEPTH) -> Grammar:
    """Parse and validate grammar text. ``source`` may be text, a path, or ``"demo"``."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and (source == "demo" or Path(source).is_file())):
        path = DEMO_GRAMMAR if source == "demo" else Path(source)
        source = path.read_text(encoding="utf-8")
    rules = []
    start = None
    space = SemanticSpace()
    for lineno, raw in enumerate(source.split("\n"), 1):
        line = raw.rstrip("\r")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("%"):
            start = _directive(stripped, lineno, space, start)
            continue
        rules.append(_parse_rule(line, lineno))

    if not rules:
        raise GrammarError("no start symbol")
    start = start or rules[0].lhs
    _validate(rules, start, space)
    digest = hashlib.sha256(source.encode("utf-8")).hexdigest()
    return Grammar(rules, start, space, digest, max_depth)


def _directive(line, lineno, space, start):
    parts = line.split()
    name = parts[0]
    if name == "%start":
        if len(parts) != 2:
            raise GrammarError("%start takes one nonterminal", lineno)
        return parts[1]
    if name == "%intent":
        if len(parts) < 2:
            raise GrammarError("%intent needs at least one name", lineno)
        space.intents.update(parts[1:])
        return start
    if name == "%concept":
        # %concept name [< parent]
        if len(parts) == 2:
            space.concepts.setdefault(parts[1], None)
        elif len(parts) == 4 and parts[2] == "<":
            space.concepts.setdefault(parts[3], None)
            space.concepts[parts[1]] = parts[3]
        else:
            raise GrammarError("expected '%concept name [< parent]'", lineno)
        return start
    raise GrammarError(f"unknown directive {name}", lineno, 1)


def _parse_rule(line, lineno):
    toks = _lex(line, lineno)
    if len(toks) < 3 or toks[0][0] != "ident" or toks[1][0] != "arrow":
        col = toks[0][2] if toks else 1
        raise GrammarError("expected 'NONTERMINAL -> rhs ...'", lineno, col)
    lhs = toks[0][1]
    rhs = []
    features = {}
    weight = Fraction(1)
    i = 2
    while i < len(toks):
        kind, text, col = toks[i]
        if kind == "string":
            value = _unquote(text)
            rhs.append(Terminal(value, tuple(tokenize(value))))
        elif kind == "ident":
            if features or i and toks[i - 1][0] == "weight":
                raise GrammarError("symbols must precede features and weight", lineno, col)
            rhs.append(text)
        elif kind == "lbrace":
            i += 1
            while i < len(toks) and toks[i][0] != "rbrace":
                k2, t2, c2 = toks[i]
                if k2 != "kv":
                    raise GrammarError(f"expected key=value, got {t2!r}", lineno, c2)
                key, _, val = t2.partition("=")
                if key not in FEATURE_KEYS:
                    raise GrammarError(f"unknown feature {key!r}", lineno, c2)
                if key in features:
                    raise GrammarError(f"duplicate feature {key!r}", lineno, c2)
                features[key] = val
                i += 1
            if i == len(toks):
                raise GrammarError("unterminated feature block", lineno, col)
        elif kind == "weight":
            weight = Fraction(text[1:])
        else:
            raise GrammarError(f"unexpected {text!r}", lineno, col)
        i += 1
    if not rhs:
        raise GrammarError("empty right-hand side", lineno)
    return GrammarRule(lhs, tuple(rhs), tuple(sorted(features.items())), weight, lineno)


def _validate(rules, start, space):
    defined = {r.lhs for r in rules}
    if start not in defined:
        raise UndefinedSymbolError(start)
    for r in rules:
        for item in r.rhs:
            if isinstance(item, str) and item not in defined:
                raise UndefinedSymbolError(item, r.line)
        intent = r.feature("intent")
        if intent is not None and intent not in space.intents:
            raise UndefinedSymbolError(intent, r.line)
        concept = r.feature("concept")
        if concept is not None and concept not in space.concepts:
            raise UndefinedSymbolError(concept, r.line)
    for c in space.concepts:
        space.ancestors(c)

    # productive nonterminals: those with a finite derivation
    productive = set()
    changed = True
    while changed:
        changed = False
        for r in rules:
            if r.lhs not in productive and all(isinstance(i, Terminal) or i in productive for i in r.rhs):
                productive.add(r.lhs)
                changed = True
    stuck = sorted(defined - productive)
    if stuck:
        line = min(r.line for r in rules if r.lhs == stuck[0])
        raise GrammarError(f"cycle without terminal escape through {', '.join(stuck)}", line)

    # a concept subtree must not contain another concept (slots never nest)
    by_lhs = defaultdict(list)
    for r in rules:
        by_lhs[r.lhs].append(r)
    for r in rules:
        if r.feature("concept") is None:
            continue
        stack = [i for i in r.rhs if isinstance(i, str)]
        seen = set()
        while stack:
            nt = stack.pop()
            if nt in seen:
                continue
            seen.add(nt)
            for sub in by_lhs[nt]:
                if sub.feature("concept") is not None:
                    raise GrammarError(f"concept {sub.feature('concept')!r} nested inside {r.feature('concept')!r}", r.line)
                stack.extend(i for i in sub.rhs if isinstance(i, str))
