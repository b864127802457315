"""BERT-style transformer encoder with a [CLS] classification head."""

from __future__ import annotations

import copy
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import CheckpointError, check_shapes, read_container, write_container
from .corpus import LabelSchema
from .metrics import score
from .tokenizer import TokenSequence


class ConfigError(ValueError):
    pass


PRESETS = {
    "base": dict(num_layers=12, hidden_size=768, num_heads=12, ff_size=3072, max_len=512),
    "large": dict(num_layers=24, hidden_size=1024, num_heads=16, ff_size=4096, max_len=512),
    "mini": dict(num_layers=4, hidden_size=128, num_heads=4, ff_size=512, max_len=128),
}


@dataclass(frozen=True)
class TransformerConfig:
    num_layers: int = 4
    hidden_size: int = 128
    num_heads: int = 4
    ff_size: int = 512
    max_len: int = 128
    vocab_size: int = 8000
    num_classes: int = 2
    dropout: float = 0.1
    layer_norm_eps: float = 1e-12

    def __post_init__(self):
        if self.hidden_size % self.num_heads:
            raise ConfigError(f"hidden size {self.hidden_size} is not divisible by {self.num_heads} heads")
        if self.max_len < 2:
            raise ConfigError("max_len must be at least 2")
        for name in ("num_layers", "hidden_size", "num_heads", "ff_size", "vocab_size", "num_classes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    @classmethod
    def preset(cls, name: str, **overrides) -> "TransformerConfig":
        try:
            values = dict(PRESETS[name])
        except KeyError:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        values.update(overrides)
        return cls(**values)

    @property
    def head_size(self) -> int:
        return self.hidden_size // self.num_heads


@dataclass
class TrainingConfig:
    batch_size: int = 64
    epochs: int = 10
    min_epoch: int = 5
    learning_rate: float = 2e-5
    dropout: float = 0.1
    seed: int = 13

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be > 0")


def parameter_shapes(config: TransformerConfig) -> dict[str, tuple[int, ...]]:
    """Every tensor of the model, in canonical (checkpoint) order."""
    H, F = config.hidden_size, config.ff_size
    shapes: dict[str, tuple[int, ...]] = {
        "embeddings.token": (config.vocab_size, H),
        "embeddings.position": (config.max_len, H),
        "embeddings.segment": (2, H),
        "embeddings.ln.gamma": (H,),
        "embeddings.ln.beta": (H,),
    }
    for i in range(config.num_layers):
        p = f"layer.{i}."
        for proj in ("query", "key", "value", "output"):
            shapes[p + f"attn.{proj}.weight"] = (H, H)
            shapes[p + f"attn.{proj}.bias"] = (H,)
        shapes[p + "attn.ln.gamma"] = (H,)
        shapes[p + "attn.ln.beta"] = (H,)
        shapes[p + "ffn.in.weight"] = (H, F)
        shapes[p + "ffn.in.bias"] = (F,)
        shapes[p + "ffn.out.weight"] = (F, H)
        shapes[p + "ffn.out.bias"] = (H,)
        shapes[p + "ffn.ln.gamma"] = (H,)
        shapes[p + "ffn.ln.beta"] = (H,)
    shapes["classifier.weight"] = (H, config.num_classes)
    shapes["classifier.bias"] = (config.num_classes,)
    return shapes


class EncoderModel:
    def __init__(self, config: TransformerConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def copy(self) -> "EncoderModel":
        return EncoderModel(
            self.config,
            {k: Tensor(v.data.copy(), requires_grad=True, name=k) for k, v in self.params.items()},
        )

    def astype(self, dtype) -> "EncoderModel":
        return EncoderModel(
            self.config,
            {k: Tensor(v.data.astype(dtype), requires_grad=True, name=k) for k, v in self.params.items()},
        )

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}


def init_model(config: TransformerConfig, seed: int = 13, dtype=np.float32) -> EncoderModel:
    """Weights ~ N(0, 0.02^2); biases and layer-norm betas 0, gammas 1."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith("gamma"):
            data = np.ones(shape)
        elif name.endswith(("beta", "bias")):
            data = np.zeros(shape)
        else:
            data = rng.normal(0.0, 0.02, size=shape)
        params[name] = Tensor(data.astype(dtype), requires_grad=True, name=name)
    return EncoderModel(config, params)


def _batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, tuple) and len(batch) == 2 and isinstance(batch[0], np.ndarray):
        return np.asarray(batch[0], dtype=np.int64), np.asarray(batch[1], dtype=np.int64)
    seqs: Sequence[TokenSequence] = batch
    return np.stack([s.ids for s in seqs]), np.stack([s.mask for s in seqs])


def self_attention(
    x: Tensor,
    model: EncoderModel,
    layer: int,
    mask: np.ndarray,
    return_probs: bool = False,
):
    """Multi-head scaled dot-product attention over unmasked keys.

    Returns the output-projected context ``[B, T, H]`` (residual and layer
    norm are applied by the caller), plus the probabilities ``[B, A, T, T]``
    when ``return_probs`` is set.
    """
    cfg = model.config
    B, T, H = x.shape
    A, d = cfg.num_heads, cfg.head_size
    mask = np.asarray(mask)
    if not np.all(mask.sum(axis=-1) > 0):
        raise ValueError("self_attention: a sequence has no unmasked positions")
    p = f"layer.{layer}.attn."

    def heads(name):
        y = ad.linear(x, model[p + name + ".weight"], model[p + name + ".bias"])
        return y.reshape(B, T, A, d).transpose(0, 2, 1, 3)

    q, k, v = heads("query"), heads("key"), heads("value")
    scores = ad.scale(q @ k.transpose(0, 1, 3, 2), 1.0 / math.sqrt(d))
    probs = ad.softmax_rows(scores, mask.astype(bool)[:, None, None, :])
    ctx = (probs @ v).transpose(0, 2, 1, 3).reshape(B, T, H)
    out = ad.linear(ctx, model[p + "output.weight"], model[p + "output.bias"])
    return (out, probs) if return_probs else out


def forward(
    model: EncoderModel,
    batch,
    training: bool = False,
    rng: np.random.Generator | None = None,
    dropout: float | None = None,
) -> tuple[Tensor, Tensor]:
    """Return ``(logits [B, K], cls_vectors [B, H])``.

    ``batch`` is a list of :class:`TokenSequence` or an ``(ids, mask)`` pair.
    """
    cfg = model.config
    ids, mask = _batch_arrays(batch)
    B, T = ids.shape
    if T > cfg.max_len:
        raise ValueError(f"sequence length {T} exceeds model max_len {cfg.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        raise ValueError(f"token id outside model vocabulary of size {cfg.vocab_size}")
    p_drop = cfg.dropout if dropout is None else dropout
    if training and rng is None:
        rng = np.random.default_rng()
    eps = cfg.layer_norm_eps

    def drop(t):
        return ad.dropout(t, p_drop, training, rng)

    x = ad.embedding(model["embeddings.token"], ids)
    x = x + model["embeddings.position"][:T]
    x = x + model["embeddings.segment"][0]
    x = drop(ad.layer_norm(x, model["embeddings.ln.gamma"], model["embeddings.ln.beta"], eps))
    for i in range(cfg.num_layers):
        p = f"layer.{i}."
        attn = self_attention(x, model, i, mask)
        x = ad.layer_norm(x + drop(attn), model[p + "attn.ln.gamma"], model[p + "attn.ln.beta"], eps)
        hidden = ad.gelu(ad.linear(x, model[p + "ffn.in.weight"], model[p + "ffn.in.bias"]))
        ffn = ad.linear(hidden, model[p + "ffn.out.weight"], model[p + "ffn.out.bias"])
        x = ad.layer_norm(x + drop(ffn), model[p + "ffn.ln.gamma"], model[p + "ffn.ln.beta"], eps)
    cls = x[:, 0, :]
    logits = ad.linear(cls, model["classifier.weight"], model["classifier.bias"])
    return logits, cls


def predict_indices(model: EncoderModel, ids: np.ndarray, mask: np.ndarray, batch_size: int = 64) -> np.ndarray:
    out = []
    with ad.no_grad():
        for start in range(0, len(ids), batch_size):
            logits, _ = forward(model, (ids[start : start + batch_size], mask[start : start + batch_size]))
            out.append(np.argmax(logits.data, axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


class EncodedSet(NamedTuple):
    ids: np.ndarray
    mask: np.ndarray
    labels: np.ndarray  # class indices

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_accuracy: float
    val_macro_f1: float | None = None
    val_accuracy: float | None = None


def _batches(n: int, size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, size):
        yield order[start : start + size]


def fine_tune(
    model: EncoderModel,
    train: EncodedSet,
    valid: EncodedSet | None,
    schema: LabelSchema,
    config: TrainingConfig = TrainingConfig(),
) -> tuple[EncoderModel, list[EpochRecord]]:
    """Train every parameter with Adam on cross-entropy over the [CLS] logits.

    After each epoch the model is scored on ``valid`` (macro F1). The returned
    weights are those of the best-scoring epoch among ``min_epoch..epochs``
    (latest epoch wins ties); with no validation set, the final epoch is
    returned. The input model is never modified.
    """
    if len(train) == 0:
        raise ValueError("fine_tune needs a non-empty training set")
    if model.config.num_classes != len(schema):
        raise ValueError(f"model has {model.config.num_classes} outputs but task {schema.task_id} has {len(schema)} classes")
    work = model.copy()
    best = model.copy()
    if config.epochs == 0:
        return best, []
    rng = np.random.default_rng(config.seed)
    optimizer = ad.Adam(work.parameters(), lr=config.learning_rate)
    history: list[EpochRecord] = []
    best_f1 = -1.0
    first_eligible = min(config.min_epoch, config.epochs)
    for epoch in range(1, config.epochs + 1):
        total_loss, correct = 0.0, 0
        for idx in _batches(len(train), config.batch_size, rng):
            optimizer.zero_grad()
            logits, _ = forward(work, (train.ids[idx], train.mask[idx]), training=True, rng=rng, dropout=config.dropout)
            loss = ad.cross_entropy(logits, train.labels[idx])
            loss.backward()
            optimizer.step()
            total_loss += float(loss.data) * len(idx)
            correct += int((np.argmax(logits.data, axis=1) == train.labels[idx]).sum())
        record = EpochRecord(epoch, total_loss / len(train), correct / len(train))
        if valid is not None and len(valid):
            report = score(valid.labels, predict_indices(work, valid.ids, valid.mask), schema)
            record.val_macro_f1, record.val_accuracy = report.macro_f1, report.accuracy
            if epoch >= first_eligible and report.macro_f1 >= best_f1:
                best_f1 = report.macro_f1
                best = work.copy()
        history.append(record)
    if valid is None or not len(valid):
        best = work
    return best, history


# ---------------------------------------------------------------- checkpoints

_CONFIG_FIELDS = [f.name for f in fields(TransformerConfig)]


def save_checkpoint(model: EncoderModel, path: str | os.PathLike, extra: dict | None = None) -> None:
    header = {"kind": "transformer", **asdict(model.config), **(extra or {})}
    write_container(path, header, model.state_dict())


def load_checkpoint(path: str | os.PathLike) -> EncoderModel:
    header, tensors = read_container(path)
    if header.get("kind") != "transformer":
        raise CheckpointError(f"{os.fspath(path)}: not a transformer checkpoint (kind={header.get('kind')!r})")
    try:
        values = {}
        for f in fields(TransformerConfig):
            raw = header[f.name]
            values[f.name] = float(raw) if f.type in ("float", float) else int(raw)
        config = TransformerConfig(**values)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{os.fspath(path)}: bad config header ({exc})") from None
    check_shapes(path, tensors, parameter_shapes(config))
    return EncoderModel(config, {k: Tensor(v, requires_grad=True, name=k) for k, v in tensors.items()})


def checkpoint_extras(path: str | os.PathLike) -> dict[str, str]:
    header, _ = read_container(path)
    return {k: v for k, v in header.items() if k not in _CONFIG_FIELDS and k != "kind"}
