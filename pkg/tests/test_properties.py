"""Property-based checks of the invariants each module promises."""

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from textguard import autodiff as ad
from textguard import contextual as cx
from textguard import encoder, features, metrics, svm
from textguard import tokenizer as tk
from textguard.autodiff import Tensor
from textguard.corpus import TASK_A, TASK_B, LabeledPost, load_tsv, normalize_text, stratified_split, write_tsv
from textguard.tokenizer import CLS, PAD, SEP

from . import oracles

LETTERS = "abcdeé"
word = st.text(alphabet=LETTERS, min_size=1, max_size=6)
sentence = st.lists(word, min_size=1, max_size=6).map(" ".join)
corpus = st.lists(sentence, min_size=1, max_size=8)
floats = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
quick = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@quick
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40))
def test_normalize_is_idempotent(raw):
    once = normalize_text(raw)
    assert normalize_text(once) == once
    assert once == once.strip() and "  " not in once


@quick
@given(corpus, st.integers(0, 40), st.integers(2, 20), sentence)
def test_encode_invariants(texts, extra, max_len, probe):
    vocab = tk.train_bpe(texts, len(set("".join(texts).replace(" ", ""))) + 5 + extra)
    seq = tk.encode(vocab, probe + " zz", max_len)
    n = int(seq.mask.sum())
    assert seq.ids[0] == CLS and seq.ids[n - 1] == SEP
    assert np.array_equal(seq.mask, (np.arange(max_len) < n).astype(int))
    assert np.all(seq.ids[n:] == PAD) and np.all((seq.ids >= 0) & (seq.ids < len(vocab)))


@quick
@given(corpus, st.integers(0, 40))
def test_decode_inverts_encode_in_vocabulary(texts, extra):
    vocab = tk.train_bpe(texts, len(set("".join(texts).replace(" ", ""))) + 5 + extra)
    for text in texts:
        seq = tk.encode(vocab, text, 4 * len(text) + 2)
        assert tk.decode(vocab, seq.ids) == " ".join(text.split())


@quick
@given(st.lists(st.text(alphabet="ab", min_size=1, max_size=4), min_size=1, max_size=12), st.integers(0, 12))
def test_bpe_matches_pair_counting(words, extra):
    texts = [" ".join(words)]
    target = len(set("".join(words))) + 5 + extra
    vocab = tk.train_bpe(texts, target)
    tokens, merges = oracles.bpe_merges(texts, target)
    assert vocab.merges == merges and vocab.tokens == tokens


docs = st.lists(st.lists(st.integers(4, 15), max_size=8), min_size=1, max_size=6)


@quick
@given(docs, st.lists(st.integers(4, 15), max_size=8), st.integers(1, 4))
def test_tfidf_norm_and_repetition(train, doc, k):
    model = features.fit_tfidf(train, dim=16)
    vec = features.transform(model, doc)
    assert vec.norm == 0.0 or abs(vec.norm - 1.0) < 1e-12
    assert np.all(vec.values >= 0)
    assert np.allclose(features.transform(model, doc * k).to_dense(), vec.to_dense(), atol=1e-12)


@quick
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 9)), elements=floats))
def test_softmax_rows_are_distributions(x):
    p = ad.softmax_rows(Tensor(x, dtype=np.float64)).data
    assert np.all(p >= 0) and np.allclose(p.sum(axis=-1), 1.0, atol=1e-12)


@quick
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 10_000))
def test_attention_rows_sum_to_one(batch, length, seed):
    rng = np.random.default_rng(seed)
    cfg = encoder.TransformerConfig(num_layers=1, hidden_size=8, num_heads=2, ff_size=8, max_len=6, vocab_size=10)
    model = encoder.init_model(cfg, seed)
    mask = (rng.random((batch, length)) < 0.7).astype(np.int64)
    mask[:, 0] = 1
    x = Tensor(rng.normal(size=(batch, length, 8)))
    _, probs = encoder.self_attention(x, model, 0, mask, return_probs=True)
    assert np.allclose(probs.data.sum(axis=-1), 1.0, atol=1e-5)
    assert np.all(probs.data[..., mask[:, None, None, :].repeat(length, 2).repeat(2, 1) == 0] < 1e-7)


@quick
@given(st.sampled_from([2, 4]), st.data())
def test_metrics_match_oracle(k, data):
    counts = np.array(data.draw(st.lists(st.integers(0, 30), min_size=k * k, max_size=k * k))).reshape(k, k)
    assume(counts.sum() > 0)
    report = metrics.evaluate(metrics.ConfusionMatrix(TASK_A if k == 2 else TASK_B, counts))
    _, _, f1, acc, macro = oracles.prf(counts.tolist())
    assert np.allclose(report.f1, f1, atol=1e-12, rtol=0)
    assert abs(report.accuracy - acc) < 1e-12 and abs(report.macro_f1 - macro) < 1e-12
    assert 0.0 <= report.macro_f1 <= 1.0


@quick
@given(st.data())
def test_metrics_commute_with_class_relabelling(data):
    counts = np.array(data.draw(st.lists(st.integers(0, 20), min_size=16, max_size=16))).reshape(4, 4)
    assume(counts.sum() > 0)
    perm = np.array(data.draw(st.permutations(range(4))))
    a = metrics.evaluate(metrics.ConfusionMatrix(TASK_B, counts))
    b = metrics.evaluate(metrics.ConfusionMatrix(TASK_B, counts[np.ix_(perm, perm)]))
    assert np.allclose(a.f1[perm], b.f1, atol=1e-12)
    assert abs(a.macro_f1 - b.macro_f1) < 1e-12


@quick
@given(st.integers(0, 1000), st.floats(0.01, 100))
def test_svm_argmax_ignores_positive_scale(seed, c):
    rng = np.random.default_rng(seed)
    model = svm.LinearModel(TASK_B, rng.normal(size=(4, 5)), rng.normal(size=4))
    X = rng.normal(size=(7, 5))
    scaled = svm.LinearModel(TASK_B, model.weights * c, model.bias * c)
    scores = X @ model.weights.T + model.bias
    assume(np.all(np.sort(scores, axis=1)[:, -1] - np.sort(scores, axis=1)[:, -2] > 1e-9))
    assert np.array_equal(svm.predict_indices(model, X), svm.predict_indices(scaled, X))


labelled = st.lists(st.sampled_from([("NOT", "NONE"), ("HOF", "HATE"), ("HOF", "OFFN"), ("HOF", "PRFN")]), min_size=0, max_size=40)


def _posts(labels):
    return [LabeledPost(f"p{i}", f"text {i}", a, b) for i, (a, b) in enumerate(labels)]


@quick
@given(labelled, st.floats(0.05, 0.95), st.integers(0, 100), st.sampled_from([TASK_A, TASK_B]))
def test_stratified_split_partitions(labels, fraction, seed, schema):
    posts = _posts(labels)
    sizes = {c: sum(schema.label_of(p) == c for p in posts) for c in schema.classes}
    assume(all(n != 1 for n in sizes.values()))
    part1, part2 = stratified_split(posts, fraction, schema, seed)
    assert sorted(p.id for p in part1 + part2) == sorted(p.id for p in posts)
    assert not {p.id for p in part1} & {p.id for p in part2}
    for c, n in sizes.items():
        assert sum(schema.label_of(p) == c for p in part1) == int(np.floor(fraction * n))


@quick
@given(labelled, st.lists(sentence, min_size=40, max_size=40))
def test_tsv_round_trip(tmp_path_factory, labels, texts):
    posts = [LabeledPost(f"p{i}", texts[i], a, b) for i, (a, b) in enumerate(labels)]
    path = tmp_path_factory.mktemp("tsv") / "posts.tsv"
    write_tsv(posts, path)
    assert load_tsv(path) == posts


@quick
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 3)), elements=floats), st.data())
def test_mean_pool_ignores_order(vectors, data):
    n = len(vectors)
    mask = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    assume(mask.any())
    perm = np.array(data.draw(st.permutations(range(n))))
    assert np.allclose(cx.mean_pool(vectors, mask), cx.mean_pool(vectors[perm], mask[perm]), atol=1e-9)
