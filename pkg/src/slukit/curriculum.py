"""Staged training sets for concept-then-intent transfer learning.

Only data partitioning happens here; no model is trained.
"""

from __future__ import annotations

import json
import logging
import statistics
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .codec import SymbolTable, encode, mask_outside_slots
from .corpus import Utterance, dumps

log = logging.getLogger(__name__)

STAGES = ("Data2", "Data3", "Data4", "Data4_star")

# epochs used for each transfer step; recorded for provenance only
STAGE_EPOCHS = {"Data1": 16, "Data2": 12, "Data3": 9, "Data4": 11}


def concept_histogram(corpus: Iterable[Utterance]) -> Counter:
    return Counter(s.label for u in corpus for s in u.slots)


def default_threshold(corpus) -> float:
    hist = concept_histogram(corpus)
    if not hist:
        return 0.0
    return statistics.median(hist.values()) / 10


def select_underrepresented(corpus, threshold) -> list[Utterance]:
    """Utterances carrying at least one concept seen fewer than ``threshold`` times."""
    corpus = list(corpus)
    hist = concept_histogram(corpus)
    rare = {c for c, n in hist.items() if n < threshold}
    return [u for u in corpus if any(s.label in rare for s in u.slots)]


def duplicate_balance(slice_, factor: int) -> list[Utterance]:
    if factor < 1:
        raise ValueError("duplication factor must be >= 1")
    out = []
    for u in slice_:
        out.append(u)
        out.extend(u.with_id(f"{u.id}~dup{k}") for k in range(1, factor))
    return out


@dataclass
class StagePlan:
    concept_frequency_threshold: float | None = None
    duplication_factor: int = 3
    source_key: str = "source"
    real_source: str | None = None

    def __post_init__(self):
        if self.duplication_factor < 1:
            raise ValueError("duplication_factor must be >= 1")

    @classmethod
    def from_dict(cls, d) -> "StagePlan":
        return cls(**d)


def _record(u: Utterance, enriched: str) -> dict:
    d = u.to_dict()
    d["enriched"] = enriched
    return d


def stage_emit(corpus, plan: StagePlan, st: SymbolTable) -> dict:
    """Build the four stage slices as lists of JSON-ready records."""
    corpus = sorted(corpus, key=lambda u: u.id)
    threshold = plan.concept_frequency_threshold
    if threshold is None:
        threshold = default_threshold(corpus)

    annotated = [u for u in corpus if u.slots]
    if plan.real_source is not None:
        data2_src = [u for u in annotated if u.meta.get(plan.source_key) == plan.real_source]
    else:
        data2_src = annotated
    data3_src = duplicate_balance(select_underrepresented(corpus, threshold), plan.duplication_factor)

    stages = {
        "Data2": [_record(u, encode(u, st, intents=False)) for u in data2_src],
        "Data3": [_record(u, encode(u, st, intents=False)) for u in data3_src],
        "Data4": [_record(u, encode(u, st)) for u in corpus],
    }
    stages["Data4_star"] = [dict(r, enriched=mask_outside_slots(r["enriched"], st)) for r in stages["Data4"]]
    for name in STAGES:
        if not stages[name]:
            log.warning("stage %s is empty", name)
    return stages


def manifest(stages: dict, plan: StagePlan, threshold: float, config_hash: str = "") -> dict:
    out = {
        "plan": {
            "concept_frequency_threshold": threshold,
            "duplication_factor": plan.duplication_factor,
            "real_source": plan.real_source,
        },
        "epochs": STAGE_EPOCHS,
        "stages": [],
    }
    if config_hash:
        out["config_hash"] = config_hash
    for name in STAGES:
        hist = Counter(s["label"] for r in stages[name] for s in r["slots"])
        out["stages"].append({"name": name, "utterances": len(stages[name]),
                              "concepts": dict(sorted(hist.items()))})
    return out


def write_stages(out_dir, stages: dict, plan: StagePlan, threshold: float, config_hash="") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in STAGES:
        with open(out_dir / f"{name}.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for rec in stages[name]:
                f.write(dumps(rec) + "\n")
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest(stages, plan, threshold, config_hash), ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8")
    return path


def effective_threshold(corpus, plan: StagePlan) -> float:
    t = plan.concept_frequency_threshold
    return default_threshold(corpus) if t is None else t

