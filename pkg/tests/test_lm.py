import math

import pytest
from hypothesis import given, strategies as hst

from slukit.lm import EOS, UNK, NGramModel, corpus_stats, oov_count, perplexity, train

words = hst.lists(hst.lists(hst.sampled_from("abcdef"), min_size=1, max_size=6), min_size=1, max_size=8)


def test_uniform_unigram():
    vocab = [f"w{i}" for i in range(18)]
    model = NGramModel.uniform(vocab)
    assert len(model.outcomes) == 20
    test = [vocab[:5], vocab[7:16], vocab[3:4]]
    assert perplexity(model, test) == pytest.approx(20.0, abs=1e-9)


def test_trigram_toy_by_hand():
    model = train([["a", "b"], ["a", "c"]], order=3, k=1)
    # five outcomes: a, b, c, </s>, <unk>
    assert model.prob("a", []) == pytest.approx(3 / 7)
    assert model.prob("b", ["a"]) == pytest.approx(2 / 7)
    assert model.prob(EOS, ["a", "b"]) == pytest.approx(2 / 6)
    assert model.prob("c", ["a", "b"]) == pytest.approx(1 / 6)
    assert perplexity(model, [["a", "b"]]) == pytest.approx((3 / 7 * 2 / 7 * 1 / 3) ** (-1 / 3), abs=1e-9)


def test_trigram_counts_by_hand():
    model = train([["a", "b", "a"], ["b", "a"]], order=3)
    assert model.counts[("<s>", "<s>")] == {"a": 1, "b": 1}
    assert model.counts[("<s>", "a")] == {"b": 1}
    assert model.counts[("a", "b")] == {"a": 1}
    assert model.counts[("b", "a")] == {EOS: 2}
    assert model.counts[("<s>", "b")] == {"a": 1}


def test_unigram_symmetry():
    model = train([["a", "b"]], order=1)
    assert model.prob("a") == model.prob("b")


def test_mle_limit_entropy():
    corpus = [["a", "a", "b"], ["c"]]
    model = train(corpus, order=1, k=1e-12)
    # six predictions: a a b </s> c </s>
    probs = [2 / 6, 1 / 6, 1 / 6, 2 / 6]
    entropy = -sum(p * math.log(p) for p in probs)
    assert perplexity(model, corpus) == pytest.approx(math.exp(entropy), abs=1e-6)


def test_all_oov_closed_form():
    model = train([["a", "b"]], order=1, k=1)
    # P(<unk>) = 1/7 and P(</s>) = 2/7
    assert perplexity(model, [["x", "y"]]) == pytest.approx((1 / 7 * 1 / 7 * 2 / 7) ** (-1 / 3), abs=1e-9)
    assert model.prob("x") == model.prob(UNK)


@pytest.mark.parametrize("order", [0, -1])
def test_bad_order(order):
    with pytest.raises(ValueError):
        train([["a"]], order=order)


def test_bad_inputs():
    with pytest.raises(ValueError):
        train([], order=2)
    with pytest.raises(ValueError):
        train([["a"]], k=0)
    with pytest.raises(ValueError):
        perplexity(train([["a"]]), [])


@given(words, hst.integers(1, 4), hst.sampled_from([0.01, 0.5, 1.0]))
def test_normalized(corpus, order, k):
    model = train(corpus, order, k)
    for history in ([], ["a"], ["b", "c"], ["zz", "a", "b"]):
        assert sum(model.prob(w, history) for w in model.outcomes) == pytest.approx(1.0, abs=1e-9)


@given(words, hst.integers(1, 3))
def test_seen_data_beats_unseen(corpus, order):
    model = train(corpus, order, k=1)
    unseen = [["X" + w for w in s] for s in corpus]
    assert perplexity(model, corpus) <= perplexity(model, unseen)


def test_oov_counts():
    assert oov_count({"a", "b"}, [["a", "b", "a"]]) == (0, 0)
    assert oov_count({"a"}, [["x", "y", "x"]]) == (2, 3)
    assert oov_count({"a", "b"}, [["a", "c"], ["c", "d", "b"]]) == (2, 3)


@given(hst.sets(hst.sampled_from("abcdef")), words)
def test_oov_types_le_tokens(vocab, test):
    types, toks = oov_count(vocab, test)
    assert types <= toks


def test_corpus_stats_row():
    s = corpus_stats([["a", "b"], ["a", "c"]], [["a", "d"]], order=3)
    assert (s.utterances, s.words, s.oov_types, s.oov_tokens) == (2, 3, 1, 1)
    assert s.row().split("\t")[:2] == ["2", "3"]
