"""Bidirectional LSTM language model used as a contextual embedder.

A forward LSTM predicts token t+1 and a backward LSTM predicts token t-1;
the concatenated hidden states, mean-pooled over a sentence, feed the SVM.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import CheckpointError, check_shapes, read_container, write_container
from .tokenizer import CLS, SEP

GATES = ("input", "forget", "cell", "output")


@dataclass(frozen=True)
class BiLstmConfig:
    vocab_size: int
    embed_size: int = 64
    hidden_size: int = 128
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 32

    def __post_init__(self):
        if self.embed_size < 1 or self.hidden_size < 1 or self.vocab_size < 1:
            raise ValueError("vocab, embedding and hidden sizes must be >= 1")
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("invalid training settings")


def parameter_shapes(config: BiLstmConfig) -> dict[str, tuple[int, ...]]:
    """Gate weights are fused column-wise in the order input, forget, cell, output."""
    E, Hc, V = config.embed_size, config.hidden_size, config.vocab_size
    shapes = {"embedding": (V, E)}
    for d in ("fwd", "bwd"):
        shapes[f"{d}.cell.weight"] = (E + Hc, 4 * Hc)
        shapes[f"{d}.cell.bias"] = (4 * Hc,)
        shapes[f"{d}.lm.weight"] = (Hc, V)
        shapes[f"{d}.lm.bias"] = (V,)
    return shapes


class BiLM:
    def __init__(self, config: BiLstmConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def copy(self, dtype=None) -> "BiLM":
        return BiLM(
            self.config,
            {k: Tensor(v.data.astype(dtype or v.dtype, copy=True), requires_grad=True, name=k) for k, v in self.params.items()},
        )

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}


def init_bilm(config: BiLstmConfig, seed: int = 13, dtype=np.float32) -> BiLM:
    rng = np.random.default_rng(seed)
    Hc = config.hidden_size
    params = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith("cell.bias"):
            data = np.zeros(shape)
            data[Hc : 2 * Hc] = 1.0  # forget gate
        elif name.endswith("bias"):
            data = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0]) if name != "embedding" else 0.1
            data = rng.uniform(-bound, bound, size=shape)
        params[name] = Tensor(data.astype(dtype), requires_grad=True, name=name)
    return BiLM(config, params)


def lstm_step(weight: Tensor, bias: Tensor, h: Tensor, c: Tensor, x: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM update; works on single vectors or on [B, *] batches."""
    single = x.ndim == 1
    if single:
        x, h, c = x.reshape(1, -1), h.reshape(1, -1), c.reshape(1, -1)
    Hc = h.shape[-1]
    z = ad.linear(ad.concat([x, h], axis=-1), weight, bias)
    i = ad.sigmoid(z[:, 0:Hc])
    f = ad.sigmoid(z[:, Hc : 2 * Hc])
    g = ad.tanh(z[:, 2 * Hc : 3 * Hc])
    o = ad.sigmoid(z[:, 3 * Hc : 4 * Hc])
    c_new = f * c + i * g
    h_new = o * ad.tanh(c_new)
    if single:
        return h_new.reshape(-1), c_new.reshape(-1)
    return h_new, c_new


def reverse_valid(ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per row, reverse the unmasked prefix and leave padding in place.

    Returns the gather index ``rev`` with ``x[b, rev[b, t]]`` reversed; it is
    its own inverse.
    """
    B, T = ids.shape
    lengths = mask.sum(axis=1)
    pos = np.tile(np.arange(T), (B, 1))
    rev = lengths[:, None] - 1 - pos
    return np.where(pos < lengths[:, None], rev, pos)


def _run(model: BiLM, direction: str, emb: Tensor, mask: np.ndarray) -> Tensor:
    B, T, _ = emb.shape
    Hc = model.config.hidden_size
    dtype = emb.dtype
    h = Tensor(np.zeros((B, Hc), dtype=dtype))
    c = Tensor(np.zeros((B, Hc), dtype=dtype))
    weight, bias = model[f"{direction}.cell.weight"], model[f"{direction}.cell.bias"]
    outs = []
    for t in range(T):
        h_new, c_new = lstm_step(weight, bias, h, c, emb[:, t, :])
        keep = Tensor(mask[:, t : t + 1].astype(dtype))
        # padded steps carry the previous state through unchanged
        h = h_new * keep + h * (1.0 - keep.data)
        c = c_new * keep + c * (1.0 - keep.data)
        outs.append(h)
    return ad.stack(outs, axis=1)


def _states(model: BiLM, ids: np.ndarray, mask: np.ndarray) -> tuple[Tensor, Tensor, np.ndarray]:
    """Forward states [B, T, Hc], backward states in reversed order, and the reversal index."""
    rev = reverse_valid(ids, mask)
    rows = np.arange(ids.shape[0])[:, None]
    emb = ad.embedding(model["embedding"], ids)
    fwd = _run(model, "fwd", emb, mask)
    bwd_rev = _run(model, "bwd", emb[rows, rev], mask)
    return fwd, bwd_rev, rev


def lm_loss(model: BiLM, ids: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean of the forward (next-token) and backward (previous-token) cross-entropies."""
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64)
    if ids.shape[1] < 2 or not np.all(mask.sum(axis=1) >= 2):
        raise ValueError("lm_loss needs sequences with at least two real tokens")
    fwd, bwd_rev, rev = _states(model, ids, mask)
    rows = np.arange(ids.shape[0])[:, None]
    targets_w = mask[:, 1:]
    fwd_logits = ad.linear(fwd[:, :-1, :], model["fwd.lm.weight"], model["fwd.lm.bias"])
    fwd_loss = ad.cross_entropy(fwd_logits, ids[:, 1:], targets_w)
    rev_ids = ids[rows, rev]
    bwd_logits = ad.linear(bwd_rev[:, :-1, :], model["bwd.lm.weight"], model["bwd.lm.bias"])
    bwd_loss = ad.cross_entropy(bwd_logits, rev_ids[:, 1:], targets_w)
    return ad.scale(fwd_loss + bwd_loss, 0.5)


def perplexity(model: BiLM, ids: np.ndarray, mask: np.ndarray) -> float:
    with ad.no_grad():
        return float(np.exp(lm_loss(model, ids, mask).data))


def train_bilm(ids: np.ndarray, mask: np.ndarray, config: BiLstmConfig, seed: int = 13) -> BiLM:
    """Fit the two directional language models jointly with Adam."""
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64)
    if len(ids) == 0:
        raise ValueError("train_bilm needs a non-empty corpus")
    model = init_bilm(config, seed)
    if config.epochs == 0:
        return model
    usable = np.flatnonzero(mask.sum(axis=1) >= 2)
    rng = np.random.default_rng(seed)
    opt = ad.Adam(model.parameters(), lr=config.learning_rate)
    for _ in range(config.epochs):
        order = usable[rng.permutation(len(usable))]
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            width = int(mask[idx].sum(axis=1).max())
            opt.zero_grad()
            loss = lm_loss(model, ids[idx, :width], mask[idx, :width])
            loss.backward()
            opt.step()
    return model


def embed_batch(model: BiLM, ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-token ``[h_fwd ; h_bwd]`` vectors, shape [B, T, 2*Hc]; padded rows are zero."""
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64)
    with ad.no_grad():
        fwd, bwd_rev, rev = _states(model, ids, mask)
    rows = np.arange(ids.shape[0])[:, None]
    out = np.concatenate([fwd.data, bwd_rev.data[rows, rev]], axis=-1)
    return out * mask[..., None]


def embed_sequence(model: BiLM, seq) -> np.ndarray:
    """Contextual vectors for the unmasked positions of one sequence, [n, 2*Hc]."""
    out = embed_batch(model, seq.ids[None, :], seq.mask[None, :])[0]
    return out[seq.mask.astype(bool)]


def mean_pool(vectors: np.ndarray, mask: np.ndarray) -> np.ndarray:
    keep = np.asarray(mask).astype(bool)
    if not keep.any():
        raise ValueError("mean_pool: every position is masked")
    return np.asarray(vectors)[keep].mean(axis=0)


def content_mask(ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Mask without [CLS]/[SEP]; sequences with no content keep their specials."""
    content = (np.asarray(mask) == 1) & (ids != CLS) & (ids != SEP)
    empty = ~content.any(axis=1)
    content[empty] = np.asarray(mask)[empty] == 1
    return content.astype(np.int64)


def sentence_vectors(model: BiLM, ids: np.ndarray, mask: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Mean of the contextual vectors over each sentence's content tokens, [N, 2*Hc]."""
    out = []
    for start in range(0, len(ids), batch_size):
        b_ids, b_mask = ids[start : start + batch_size], mask[start : start + batch_size]
        width = max(int(b_mask.sum(axis=1).max()), 1)
        b_ids, b_mask = b_ids[:, :width], b_mask[:, :width]
        vecs = embed_batch(model, b_ids, b_mask)
        keep = content_mask(b_ids, b_mask)
        out.append((vecs * keep[..., None]).sum(axis=1) / keep.sum(axis=1, keepdims=True))
    if not out:
        return np.zeros((0, 2 * model.config.hidden_size))
    return np.concatenate(out).astype(np.float64)


def save_bilm(model: BiLM, path: str | os.PathLike, extra: dict | None = None) -> None:
    write_container(path, {"kind": "bilstm", **asdict(model.config), **(extra or {})}, model.state_dict())


def load_bilm(path: str | os.PathLike) -> BiLM:
    header, tensors = read_container(path)
    if header.get("kind") != "bilstm":
        raise CheckpointError(f"{os.fspath(path)}: not a bilstm checkpoint (kind={header.get('kind')!r})")
    try:
        values = {}
        for f in fields(BiLstmConfig):
            raw = header[f.name]
            values[f.name] = float(raw) if f.type in ("float", float) else int(raw)
        config = BiLstmConfig(**values)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{os.fspath(path)}: bad config header ({exc})") from None
    check_shapes(path, tensors, parameter_shapes(config))
    return BiLM(config, {k: Tensor(v, requires_grad=True, name=k) for k, v in tensors.items()})
