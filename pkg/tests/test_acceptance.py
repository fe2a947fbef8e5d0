"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import contextlib
import json
import random
import time
from collections import Counter
from functools import lru_cache

from scipy import stats as sps

from conftest import ACCEPTANCE
from slukit.channel import NoiseProfile, corrupt, utterance_scores, wer_cer_study
from slukit.cli import main
from slukit.codec import decode, default_symbols, encode
from slukit.grammar import load_grammar
from slukit.lm import NGramModel, perplexity, train
from slukit.metrics import align, cer, corpus_report
from slukit.perturb import SubstitutionStats, SyntaxPlan, apply_oov, apply_syntax, oov_schedule, SubstitutionPlan
from slukit.stats import correlate, p_value, spearman, spearman_shortcut


@contextlib.contextmanager
def criterion(n, title, budget=None):
    t0 = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - t0
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    except BaseException as e:
        ACCEPTANCE.append(f"AC{n:<2} FAIL  {title}  ({type(e).__name__}: {e})")
        print(ACCEPTANCE[-1])
        raise
    ACCEPTANCE.append(f"AC{n:<2} PASS  {title}  ({elapsed:.2f}s)")
    print(ACCEPTANCE[-1])


def test_ac01_deleted_concept_cer():
    with criterion(1, "deleted device pair scores CER 50.0", budget=1):
        st = default_symbols()
        ref, _ = decode("@ vocadom ^allume^ }la lumière} @", st)
        hyp, _ = decode("@ vocadom ^allume ^ la lumière @", st)
        assert cer(ref.labels(), hyp.labels()).cer == 50.0


def test_ac02_round_trip_full_enumeration():
    with criterion(2, "full demo enumeration round-trips; self-score WER 0 CER 0 F1 100", budget=60):
        st = default_symbols()
        corpus = list(load_grammar("demo").enumerate())
        assert len(corpus) >= 50_000
        hyps = []
        for u in corpus:
            v, diag = decode(encode(u, st), st, id=u.id, meta=u.meta)
            assert v == u and not diag, u.id
            hyps.append(v)
        row = corpus_report(corpus, hyps).row()
        assert (row.wer, row.cer, row.f1) == (0, 0, 100)


def _brute(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        return min(go(i + 1, j + 1) + (a[i] != b[j]), go(i + 1, j) + 1, go(i, j + 1) + 1)
    return go(0, 0)


def test_ac03_edit_distance_oracle():
    with criterion(3, "align() equals brute-force edit distance on 10,000 pairs", budget=30):
        rng = random.Random(2024)
        mismatches = 0
        for _ in range(10_000):
            a = tuple(rng.choice("xyz") for _ in range(rng.randint(0, 8)))
            b = tuple(rng.choice("xyz") for _ in range(rng.randint(0, 8)))
            mismatches += align(a, b).errors != _brute(a, b)
        assert mismatches == 0


def test_ac04_statistics_oracle():
    with criterion(4, "Pearson/Spearman/t/p match reference within 1e-9 on 100 datasets"):
        rng = random.Random(7)
        for _ in range(100):
            n = rng.randint(5, 200)
            x = [rng.randint(0, 15) for _ in range(n)]
            y = [0.5 * v + rng.randint(-6, 6) for v in x]
            rep = correlate(x, y)
            r, p = sps.pearsonr(x, y)
            rs, ps = sps.spearmanr(x, y)
            assert abs(rep.r - r) < 1e-9 and abs(rep.p_r - p) < 1e-9
            assert abs(rep.r_s - rs) < 1e-9 and abs(rep.p_rs - ps) < 1e-9
            t_ref = r * ((n - 2) / (1 - r * r)) ** 0.5
            assert abs(rep.t_r - t_ref) < 1e-9
            assert abs(p_value(r, n)[1] - 2 * sps.t.sf(abs(t_ref), n - 2)) < 1e-9
            # tie-free data: shortcut formula agrees with rank-Pearson
            u = rng.sample(range(10 * n), n)
            w = rng.sample(range(10 * n), n)
            assert abs(spearman(u, w) - spearman_shortcut(u, w)) < 1e-9


def test_ac05_correlation_study():
    with criterion(5, "mixed noise gives r > 0 (**); symbol-only noise gives CER > 0 with WER = 0"):
        st = default_symbols()
        refs = [(u.id, encode(u, st)) for u in load_grammar("demo").sample(1200, seed=2612)]
        mixed = NoiseProfile(p_sub=0.1, p_del=0.1, p_ins=0.05, symbol_del=0.05, seed=1, name="mixed")
        [res] = wer_cer_study(refs, [mixed], st)
        assert res.n >= 1000
        assert res.report.r > 0 and res.report.p_r < 0.01 and res.report.stars_r == "**"
        sym = corrupt(refs, NoiseProfile(symbol_del=0.3, seed=1), st)
        scores = [utterance_scores(r, h["enriched"], st) for (_, r), h in zip(refs, sym)]
        assert all(w == 0 for w, _ in scores)
        assert sum(c for _, c in scores) / len(scores) > 0


def test_ac06_oov_schedule(demo_corpus):
    with criterion(6, "OOV steps 1-4 give strictly increasing token substitution, four-row report"):
        results = oov_schedule(demo_corpus)
        pcts = [stats.pct_words for _, _, stats in results]
        assert len(results) == 4
        assert all(a < b for a, b in zip(pcts, pcts[1:]))
        rows = [stats.row().split("\t") for _, _, stats in results]
        assert SubstitutionStats.HEADER.split("\t") == ["Substitutions", "#Word Type", "#Words",
                                                        "(%) Word Type", "(%) Total Words"]
        assert [r[0] for r in rows] == ["Step 1", "Step 2", "Step 3", "Step 4"]
        assert all(len(r) == 5 for r in rows)


def test_ac07_syntactic_variation(demo_corpus):
    with criterion(7, "syntax worked example exact; label multisets invariant on full corpus"):
        st = default_symbols()
        u, _ = decode("@ vocadom euh ^allume^ }la bouilloire} @", st)
        out = apply_syntax([u], SyntaxPlan.load(step=2))[0]
        assert encode(out, st) == "@ vocadom euh pourrais-tu ^allumer^ la la }bouilloire} @"
        before = [(v.intent, Counter(v.labels())) for v in demo_corpus]
        for corpus in (apply_syntax(demo_corpus, SyntaxPlan.load(step=2)),
                       apply_oov(demo_corpus, SubstitutionPlan.for_step(4))[0]):
            assert [(v.intent, Counter(v.labels())) for v in corpus] == before


def test_ac08_perplexity_sanity():
    with criterion(8, "uniform V=20 unigram perplexity 20; trigram toy matches hand value"):
        vocab = [f"w{i}" for i in range(18)]
        model = NGramModel.uniform(vocab)
        assert len(model.outcomes) == 20
        assert abs(perplexity(model, [vocab[:6], vocab[4:17], ["w3"]]) - 20.0) < 1e-6
        tri = train([["a", "b"], ["a", "c"]], order=3, k=1)
        assert abs(perplexity(tri, [["a", "b"]]) - (3 / 7 * 2 / 7 * 1 / 3) ** (-1 / 3)) < 1e-6


def test_ac09_determinism(tmp_path, monkeypatch):
    with criterion(9, "generate, corrupt and perturb are byte-identical across runs"):
        monkeypatch.chdir(tmp_path)
        runs = [
            ["generate", "--sample", "500", "--seed", "9", "--out", "{d}/c.jsonl"],
            ["corrupt", "--in", "{d}/c.jsonl", "--out", "{d}/h.jsonl", "--p-sub", "0.1", "--p-del", "0.05",
             "--p-ins", "0.05", "--symbol-del", "0.1", "--seed", "4"],
            ["perturb", "oov", "--in", "{d}/c.jsonl", "--step", "3", "--out", "{d}/o.jsonl"],
            ["perturb", "syntax", "--in", "{d}/c.jsonl", "--step", "2", "--out", "{d}/s.jsonl"],
        ]
        for d in ("a", "b"):
            for argv in runs:
                assert main([x.format(d=d) for x in argv] + ["--quiet"]) == 0
        for name in ("c.jsonl", "h.jsonl", "o.jsonl", "s.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_ac10_report_schemas(tmp_path, monkeypatch, capsys):
    with criterion(10, "neural-result tables out of scope; score/correlate reproduce their schemas"):
        monkeypatch.chdir(tmp_path)
        st = default_symbols()
        refs = load_grammar("demo").sample(400, seed=13)
        with open("r.jsonl", "w", encoding="utf-8") as f:
            for i, u in enumerate(refs):
                d = u.to_dict()
                d["meta"]["noise"] = ["V", "RT", "F", "A"][i % 4]
                f.write(json.dumps(d, ensure_ascii=False) + "\n")
        assert main(["corrupt", "--in", "r.jsonl", "--out", "h.jsonl", "--p-sub", "0.1", "--symbol-del", "0.1",
                     "--seed", "1", "--quiet"]) == 0
        capsys.readouterr()
        assert main(["score", "--ref", "r.jsonl", "--hyp", "h.jsonl", "--group-by", "meta.noise",
                     "--per-utt", "s.jsonl", "--quiet"]) == 0
        table = capsys.readouterr().out.splitlines()
        assert table[0].split("\t") == ["Model", "Group", "WER", "CER", "F1", "N"]
        assert [r.split("\t")[1] for r in table[1:]] == ["All", "A", "F", "RT", "V"]
        assert main(["correlate", "--x", "wer", "--y", "cer", "--scores", "s.jsonl", "--quiet"]) == 0
        block = capsys.readouterr().out.splitlines()
        assert block[1].startswith("Pearson (r)\t") and block[2].startswith("Spearman (r_s)\t")
        assert block[3] == "* p<0.05 ; ** p<0.01"
