import numpy as np
import pytest

from textguard import autodiff as ad
from textguard import encoder
from textguard.checkpoint import MAGIC, CheckpointError
from textguard.corpus import TASK_A
from textguard.encoder import TransformerConfig
from textguard.metrics import score


def tiny_config(**overrides):
    values = dict(num_layers=2, hidden_size=16, num_heads=4, ff_size=32, max_len=12, vocab_size=20, num_classes=2, dropout=0.1)
    values.update(overrides)
    return TransformerConfig(**values)


def batch(rng, B=3, T=8, vocab=20, lengths=None):
    ids = rng.integers(4, vocab, size=(B, T))
    mask = np.ones((B, T), dtype=np.int64)
    for b, n in enumerate(lengths or []):
        mask[b, n:] = 0
        ids[b, n:] = 0
    ids[:, 0] = 2
    return ids, mask


def closed_form_count(L, H, F, V, P, K):
    per_layer = 4 * (H * H + H) + 2 * H + (H * F + F) + (F * H + H) + 2 * H
    return V * H + P * H + 2 * H + 2 * H + L * per_layer + H * K + K


def test_presets():
    base = TransformerConfig.preset("base")
    large = TransformerConfig.preset("large")
    mini = TransformerConfig.preset("mini")
    assert (base.num_layers, base.hidden_size, base.num_heads) == (12, 768, 12)
    assert (large.num_layers, large.hidden_size, large.num_heads) == (24, 1024, 16)
    assert (mini.num_layers, mini.hidden_size, mini.num_heads, mini.ff_size, mini.max_len) == (4, 128, 4, 512, 128)
    with pytest.raises(encoder.ConfigError):
        TransformerConfig.preset("huge")


def test_config_invariants():
    with pytest.raises(encoder.ConfigError, match="divisible"):
        TransformerConfig(hidden_size=130, num_heads=4)
    with pytest.raises(encoder.ConfigError):
        TransformerConfig(max_len=1)


def test_training_defaults():
    cfg = encoder.TrainingConfig()
    assert (cfg.batch_size, cfg.learning_rate, cfg.dropout) == (64, 2e-5, 0.1)


def test_parameter_count_matches_closed_form():
    cfg = TransformerConfig.preset("mini", vocab_size=300)
    model = encoder.init_model(cfg, seed=0)
    assert model.num_parameters() == closed_form_count(4, 128, 512, 300, 128, 2)


def test_init_is_seeded_and_scaled():
    cfg = tiny_config()
    a, b = encoder.init_model(cfg, 5), encoder.init_model(cfg, 5)
    for name in a.params:
        assert np.array_equal(a[name].data, b[name].data)
    w = a["layer.0.ffn.in.weight"].data
    assert abs(w.std() - 0.02) < 0.004
    assert np.all(a["layer.1.attn.ln.gamma"].data == 1) and not a["classifier.bias"].data.any()


def test_single_key_attention_is_one(rng):
    model = encoder.init_model(tiny_config(), 0, np.float64)
    x = ad.Tensor(rng.normal(size=(2, 1, 16)), dtype=np.float64)
    _, probs = encoder.self_attention(x, model, 0, np.ones((2, 1)), return_probs=True)
    assert np.all(probs.data == 1.0)


def test_identical_tokens_attend_uniformly(rng):
    model = encoder.init_model(tiny_config(), 0, np.float64)
    for name in ("query", "key"):
        model[f"layer.0.attn.{name}.weight"].data[:] = np.eye(16)
    x = ad.Tensor(np.tile(rng.normal(size=(1, 1, 16)), (1, 2, 1)), dtype=np.float64)
    _, probs = encoder.self_attention(x, model, 0, np.ones((1, 2)), return_probs=True)
    assert np.allclose(probs.data, 0.5)


def test_attention_matches_formula(rng):
    cfg = tiny_config()
    model = encoder.init_model(cfg, 1, np.float64)
    for p in model.parameters():
        p.data[:] = rng.normal(scale=0.3, size=p.shape)
    x = rng.normal(size=(1, 2, 16))
    out = encoder.self_attention(ad.Tensor(x, dtype=np.float64), model, 0, np.ones((1, 2))).data
    P = {k: v.data for k, v in model.params.items()}
    heads = []
    for h in range(4):
        sl = slice(4 * h, 4 * h + 4)
        q = x[0] @ P["layer.0.attn.query.weight"][:, sl] + P["layer.0.attn.query.bias"][sl]
        k = x[0] @ P["layer.0.attn.key.weight"][:, sl] + P["layer.0.attn.key.bias"][sl]
        v = x[0] @ P["layer.0.attn.value.weight"][:, sl] + P["layer.0.attn.value.bias"][sl]
        s = q @ k.T / 2.0
        a = np.exp(s) / np.exp(s).sum(axis=1, keepdims=True)
        heads.append(a @ v)
    expected = np.concatenate(heads, axis=1) @ P["layer.0.attn.output.weight"] + P["layer.0.attn.output.bias"]
    assert np.allclose(out[0], expected, atol=1e-12)


def test_masked_keys_get_no_weight(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng, lengths=[8, 5, 2])
    x = ad.Tensor(rng.normal(size=(3, 8, 16)).astype(np.float32))
    _, probs = encoder.self_attention(x, model, 1, mask, return_probs=True)
    p = probs.data
    assert np.allclose(p.sum(axis=-1), 1.0, atol=1e-5)
    keys_masked = np.broadcast_to(mask[:, None, None, :] == 0, p.shape)
    assert np.all(p[keys_masked] < 1e-7)
    with pytest.raises(ValueError):
        encoder.self_attention(x, model, 0, np.zeros((3, 8)))


def test_forward_shapes_and_determinism(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng)
    logits, cls = encoder.forward(model, (ids, mask))
    assert logits.shape == (3, 2) and cls.shape == (3, 16)
    again, _ = encoder.forward(model, (ids, mask))
    assert np.array_equal(logits.data, again.data)
    perm = np.array([2, 0, 1])
    permuted, _ = encoder.forward(model, (ids[perm], mask[perm]))
    assert np.allclose(permuted.data, logits.data[perm], atol=1e-6)


def test_forward_rejects_mismatched_inputs(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng, T=13)
    with pytest.raises(ValueError, match="max_len"):
        encoder.forward(model, (ids, mask))
    ids, mask = batch(rng)
    ids[0, 1] = 20
    with pytest.raises(ValueError, match="vocabulary"):
        encoder.forward(model, (ids, mask))


def test_padding_invariance(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng, lengths=[8, 4, 3])
    logits, _ = encoder.forward(model, (ids, mask))
    noisy = ids.copy()
    noisy[mask == 0] = rng.integers(4, 20, size=int((mask == 0).sum()))
    again, _ = encoder.forward(model, (noisy, mask))
    assert np.allclose(logits.data, again.data, atol=1e-6)


def test_training_mode_uses_dropout(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng)
    a, _ = encoder.forward(model, (ids, mask), training=True, rng=np.random.default_rng(1))
    b, _ = encoder.forward(model, (ids, mask), training=False)
    assert not np.allclose(a.data, b.data)


def test_end_to_end_gradient(rng):
    model = encoder.init_model(tiny_config(num_layers=1, hidden_size=8, num_heads=2, ff_size=16), 0, np.float64)
    for p in model.parameters():
        p.data += rng.normal(scale=0.1, size=p.shape)
    ids, mask = batch(rng, B=2, T=6, lengths=[6, 4])
    gold = np.array([0, 1])

    def loss():
        logits, _ = encoder.forward(model, (ids, mask))
        return ad.cross_entropy(logits, gold)

    assert ad.grad_check(loss, model.parameters(), max_coords=6) < 1e-4


def test_fine_tune_zero_epochs_returns_copy(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng, B=4)
    train = encoder.EncodedSet(ids, mask, np.array([0, 1, 0, 1]))
    out, history = encoder.fine_tune(model, train, None, TASK_A, encoder.TrainingConfig(epochs=0))
    assert history == [] and out is not model
    for name in model.params:
        assert np.array_equal(out[name].data, model[name].data)


def test_fine_tune_learns_and_selects_epoch(rng):
    model = encoder.init_model(tiny_config(), 0)
    ids, mask = batch(rng, B=16)
    labels = (ids[:, 1] < 12).astype(np.int64)
    train = encoder.EncodedSet(ids, mask, labels)
    cfg = encoder.TrainingConfig(batch_size=8, epochs=6, min_epoch=2, learning_rate=3e-3, seed=0)
    before = {k: v.data.copy() for k, v in model.params.items()}
    best, history = encoder.fine_tune(model, train, train, TASK_A, cfg)
    assert [h.epoch for h in history] == list(range(1, 7))
    assert all(h.val_macro_f1 is not None for h in history)
    assert all(np.array_equal(model[k].data, v) for k, v in before.items())
    chosen = max(h.val_macro_f1 for h in history[1:])
    preds = encoder.predict_indices(best, ids, mask)
    assert score(labels, preds, TASK_A).macro_f1 == pytest.approx(chosen)
    again, history2 = encoder.fine_tune(model, train, train, TASK_A, cfg)
    assert [h.loss for h in history] == [h.loss for h in history2]


def test_fine_tune_rejects_empty_and_wrong_head(rng):
    model = encoder.init_model(tiny_config(), 0)
    empty = encoder.EncodedSet(np.zeros((0, 4), np.int64), np.zeros((0, 4), np.int64), np.zeros(0, np.int64))
    with pytest.raises(ValueError):
        encoder.fine_tune(model, empty, None, TASK_A)
    ids, mask = batch(rng)
    four = encoder.init_model(tiny_config(num_classes=4), 0)
    with pytest.raises(ValueError):
        encoder.fine_tune(four, encoder.EncodedSet(ids, mask, np.zeros(3, np.int64)), None, TASK_A)


def test_checkpoint_round_trip(tmp_path, rng):
    model = encoder.init_model(tiny_config(), 3)
    encoder.save_checkpoint(model, tmp_path / "m.ckpt", {"task": "A"})
    again = encoder.load_checkpoint(tmp_path / "m.ckpt")
    assert again.config == model.config
    for name in model.params:
        assert np.array_equal(again[name].data, model[name].data)
    ids, mask = batch(rng)
    assert np.array_equal(encoder.forward(model, (ids, mask))[0].data, encoder.forward(again, (ids, mask))[0].data)
    assert encoder.checkpoint_extras(tmp_path / "m.ckpt") == {"task": "A"}
    assert (tmp_path / "m.ckpt").read_bytes().startswith(MAGIC)


def test_base_layout_reloads_with_twelve_layers(tmp_path):
    # base depth and head count; widths shrunk so the test stays small
    cfg = TransformerConfig.preset("base", hidden_size=24, ff_size=48, max_len=16, vocab_size=30)
    encoder.save_checkpoint(encoder.init_model(cfg, 0), tmp_path / "base.ckpt")
    again = encoder.load_checkpoint(tmp_path / "base.ckpt")
    assert again.config.num_layers == 12 and again.config.num_heads == 12
    assert "layer.11.ffn.ln.beta" in again.params


def test_corrupt_checkpoints(tmp_path):
    model = encoder.init_model(tiny_config(), 0)
    path = tmp_path / "m.ckpt"
    encoder.save_checkpoint(model, path)
    blob = path.read_bytes()
    (tmp_path / "magic.ckpt").write_bytes(b"XX" + blob[2:])
    with pytest.raises(CheckpointError, match="magic"):
        encoder.load_checkpoint(tmp_path / "magic.ckpt")
    (tmp_path / "short.ckpt").write_bytes(blob[:-10])
    with pytest.raises(CheckpointError, match="truncated"):
        encoder.load_checkpoint(tmp_path / "short.ckpt")
    (tmp_path / "long.ckpt").write_bytes(blob + b"\0\0\0\0")
    with pytest.raises(CheckpointError, match="trailing"):
        encoder.load_checkpoint(tmp_path / "long.ckpt")
    text = blob.replace(b"num_layers=2", b"num_layers=3")
    (tmp_path / "shape.ckpt").write_bytes(text)
    with pytest.raises(CheckpointError):
        encoder.load_checkpoint(tmp_path / "shape.ckpt")
