"""Experiment configuration and the three end-to-end model kinds.

Config files are flat ``key = value`` text; ``#`` starts a comment. Values
are resolved in this order, later winning: built-in defaults, the config
file, command-line flags.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import contextual, encoder, features, svm
from . import tokenizer as tk
from .corpus import (
    CorpusError,
    LabeledPost,
    LabelSchema,
    Language,
    NormalizeOptions,
    Split,
    load_tsv,
    normalize_text,
    schema_for,
    stratified_split,
)
from .metrics import EvalReport, render, render_confusion, score

logger = logging.getLogger(__name__)

MODEL_KINDS = ("svm-tfidf", "bilstm-svm", "transformer")
MODEL_TITLES = {"svm-tfidf": "SVM", "bilstm-svm": "biLSTM+SVM", "transformer": "Transformer"}
DATA_ENV = "TEXTGUARD_DATA"


class ConfigError(ValueError):
    """Invalid configuration or missing input path (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "svm-tfidf"
    task: str = "A"
    seed: int = 13
    out: str = "runs/experiment"
    data: str = ""
    train: str = "train.tsv"
    test: str = "test.tsv"
    valid: str = ""
    language: str = "English"
    valid_fraction: float = 0.1
    # tokenizer
    vocab_size: int = 8000
    max_len: int = 128
    lowercase: bool = False
    # svm baseline
    svm_lambda: float = 1e-4
    svm_epochs: int = 20
    sublinear_tf: bool = False
    # bilstm embedder
    bilstm_embed: int = 64
    bilstm_hidden: int = 128
    bilstm_epochs: int = 10
    bilstm_lr: float = 1e-3
    bilstm_batch_size: int = 32
    # transformer
    preset: str = "mini"
    batch_size: int = 64
    epochs: int = 10
    min_epoch: int = 5
    lr: float = 2e-5
    dropout: float = 0.1

    def validate(self) -> "ExperimentConfig":
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r}; choose from {', '.join(MODEL_KINDS)}")
        if self.task.upper() not in ("A", "B"):
            raise ConfigError(f"unknown task {self.task!r}; expected A or B")
        if self.preset not in encoder.PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.max_len < 2 or self.vocab_size < 6:
            raise ConfigError("max_len must be >= 2 and vocab_size >= 6")
        if not 0.0 <= self.valid_fraction < 1.0:
            raise ConfigError("valid_fraction must be in [0, 1)")
        if self.svm_lambda <= 0 or self.lr <= 0 or self.bilstm_lr <= 0:
            raise ConfigError("learning rates and svm_lambda must be positive")
        if min(self.svm_epochs, self.bilstm_epochs, self.epochs) < 0:
            raise ConfigError("epoch counts must be non-negative")
        if self.batch_size < 1 or self.bilstm_batch_size < 1:
            raise ConfigError("batch sizes must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        try:
            Language.parse(self.language)
        except CorpusError as exc:
            raise ConfigError(str(exc)) from None
        return replace(self, task=self.task.upper())

    @property
    def schema(self) -> LabelSchema:
        return schema_for(self.task)

    @property
    def normalize_options(self) -> NormalizeOptions:
        return NormalizeOptions(lowercase=self.lowercase)

    def dump(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    kind = kinds[name]
    raw = raw.strip()
    try:
        if kind in ("bool", bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {name}: cannot parse {raw!r} as {kind}") from None
    return raw


def _key(name: str) -> str:
    return name.strip().replace(".", "_").replace("-", "_")


def parse_config_text(text: str) -> dict[str, object]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        values[_key(key)] = _coerce(_key(key), value)
    return values


def load_config(path: str | os.PathLike | None = None, **overrides) -> ExperimentConfig:
    values: dict[str, object] = {}
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {os.fspath(path)}")
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    for key, value in overrides.items():
        if value is None:
            continue
        key = _key(key)
        values[key] = _coerce(key, value) if isinstance(value, str) else value
    if not values.get("data"):
        values["data"] = os.environ.get(DATA_ENV, "")
    return ExperimentConfig(**values).validate()


# ---------------------------------------------------------------- data


def _file_specs(spec: str, config: ExperimentConfig) -> list[tuple[Language, str]]:
    """``path`` or ``Lang:path, Lang:path`` -> [(language, resolved path)]."""
    out = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        lang, sep, path = item.partition(":")
        if sep and len(lang) > 1:
            try:
                language = Language.parse(lang)
            except CorpusError:
                language, path = Language.parse(config.language), item
        else:
            language, path = Language.parse(config.language), item
        if config.data and not os.path.isabs(path):
            path = os.path.join(config.data, path)
        out.append((language, path))
    return out


def check_paths(config: ExperimentConfig, *which: str) -> None:
    for attr in which:
        for _, path in _file_specs(getattr(config, attr), config):
            if not os.path.isfile(path):
                raise ConfigError(f"missing dataset path: {path}")


def load_split(config: ExperimentConfig, attr: str, split: Split) -> list[LabeledPost]:
    posts: list[LabeledPost] = []
    for language, path in _file_specs(getattr(config, attr), config):
        posts.extend(load_tsv(path, language, split))
    return posts


# ---------------------------------------------------------------- models


@dataclass
class Classifier:
    """A trained model of one kind plus everything needed to apply it."""

    kind: str
    schema: LabelSchema
    vocab: tk.SubwordVocab
    max_len: int
    normalize: NormalizeOptions
    linear: svm.LinearModel | None = None
    tfidf: features.TfIdfModel | None = None
    bilm: contextual.BiLM | None = None
    transformer: encoder.EncoderModel | None = None

    def encode(self, texts: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        return tk.encode_batch(self.vocab, [normalize_text(t, self.normalize) for t in texts], self.max_len)

    def predict(self, texts: Sequence[str]) -> list[str]:
        ids, mask = self.encode(texts)
        if self.kind == "svm-tfidf":
            X = features.transform_many(self.tfidf, [tk.TokenSequence(i, m) for i, m in zip(ids, mask)])
            idx = svm.predict_indices(self.linear, X)
        elif self.kind == "bilstm-svm":
            idx = svm.predict_indices(self.linear, contextual.sentence_vectors(self.bilm, ids, mask))
        else:
            idx = encoder.predict_indices(self.transformer, ids, mask)
        return [self.schema.classes[i] for i in idx]

    def save(self, out: Path) -> None:
        tk.save_vocab(self.vocab, out / "vocab")
        meta = f"kind = {self.kind}\ntask = {self.schema.task_id}\nmax_len = {self.max_len}\nlowercase = {_format(self.normalize.lowercase)}\n"
        (out / "model.txt").write_text(meta, encoding="utf-8")
        if self.kind == "svm-tfidf":
            features.save_tfidf(self.tfidf, out / "tfidf.tsv")
        if self.kind == "bilstm-svm":
            contextual.save_bilm(self.bilm, out / "bilm.ckpt")
        if self.kind in ("svm-tfidf", "bilstm-svm"):
            svm.save_svm(self.linear, out / "svm.tsv")
        if self.kind == "transformer":
            encoder.save_checkpoint(self.transformer, out / "model.ckpt", {"task": self.schema.task_id})


def load_classifier(run_dir: str | os.PathLike) -> Classifier:
    out = Path(run_dir)
    meta_path = out / "model.txt"
    if not meta_path.is_file():
        raise ConfigError(f"no trained model in {out} (missing model.txt)")
    meta = dict(
        (k.strip(), v.strip()) for k, _, v in (line.partition("=") for line in meta_path.read_text().splitlines() if line)
    )
    kind, schema = meta["kind"], schema_for(meta["task"])
    clf = Classifier(
        kind=kind,
        schema=schema,
        vocab=tk.load_vocab(out / "vocab"),
        max_len=int(meta["max_len"]),
        normalize=NormalizeOptions(lowercase=meta.get("lowercase") == "true"),
    )
    if kind == "svm-tfidf":
        clf.tfidf = features.load_tfidf(out / "tfidf.tsv")
    if kind == "bilstm-svm":
        clf.bilm = contextual.load_bilm(out / "bilm.ckpt")
    if kind in ("svm-tfidf", "bilstm-svm"):
        clf.linear = svm.load_svm(out / "svm.tsv")
        if clf.linear.schema != schema:
            raise ConfigError(f"{out}: svm.tsv task does not match model.txt")
    if kind == "transformer":
        clf.transformer = encoder.load_checkpoint(out / "model.ckpt")
        if clf.transformer.config.num_classes != len(schema):
            raise ConfigError(f"{out}: checkpoint class count does not match task {schema.task_id}")
    if clf.transformer is not None and clf.transformer.config.vocab_size != len(clf.vocab):
        raise ConfigError(f"{out}: vocabulary does not match the checkpoint")
    if clf.bilm is not None and clf.bilm.config.vocab_size != len(clf.vocab):
        raise ConfigError(f"{out}: vocabulary does not match the checkpoint")
    return clf


def train_vocab(posts: Sequence[LabeledPost], config: ExperimentConfig) -> tk.SubwordVocab:
    texts = [normalize_text(p.text, config.normalize_options) for p in posts]
    words = {ch for t in texts for ch in t if not ch.isspace()}
    # never ask for fewer tokens than the character inventory needs
    return tk.train_bpe(texts, max(config.vocab_size, len(words) + 5))


def _validation_split(posts, config: ExperimentConfig):
    if config.valid:
        return posts, load_split(config, "valid", Split.TRAIN)
    if config.valid_fraction <= 0:
        return posts, []
    try:
        valid, train = stratified_split(posts, config.valid_fraction, config.schema, config.seed)
    except CorpusError as exc:
        logger.warning("no validation split (%s); training on everything", exc)
        return posts, []
    if not valid:
        return posts, []
    return train, valid


def fit_classifier(posts: Sequence[LabeledPost], config: ExperimentConfig) -> tuple[Classifier, list]:
    """Train the configured model kind; returns the classifier and its history."""
    schema = config.schema
    vocab = train_vocab(posts, config)
    clf = Classifier(config.model, schema, vocab, config.max_len, config.normalize_options)
    history: list = []
    if config.model == "transformer":
        train_posts, valid_posts = _validation_split(list(posts), config)
    else:
        train_posts, valid_posts = list(posts), []
    ids, mask = clf.encode([p.text for p in train_posts])
    labels = np.array([schema.index(schema.label_of(p)) for p in train_posts], dtype=np.int64)

    if config.model == "svm-tfidf":
        seqs = [tk.TokenSequence(i, m) for i, m in zip(ids, mask)]
        clf.tfidf = features.fit_tfidf(seqs, dim=len(vocab), sublinear_tf=config.sublinear_tf)
        X = features.transform_many(clf.tfidf, seqs)
        clf.linear = svm.train_svm(X, labels, schema, config.svm_lambda, config.svm_epochs, config.seed)
    elif config.model == "bilstm-svm":
        bicfg = contextual.BiLstmConfig(
            vocab_size=len(vocab),
            embed_size=config.bilstm_embed,
            hidden_size=config.bilstm_hidden,
            epochs=config.bilstm_epochs,
            learning_rate=config.bilstm_lr,
            batch_size=config.bilstm_batch_size,
        )
        clf.bilm = contextual.train_bilm(ids, mask, bicfg, config.seed)
        X = contextual.sentence_vectors(clf.bilm, ids, mask)
        clf.linear = svm.train_standardized(X, labels, schema, config.svm_lambda, config.svm_epochs, config.seed)
    else:
        tcfg = encoder.TransformerConfig.preset(
            config.preset,
            vocab_size=len(vocab),
            num_classes=len(schema),
            max_len=config.max_len,
            dropout=config.dropout,
        )
        model = encoder.init_model(tcfg, config.seed)
        valid = None
        if valid_posts:
            v_ids, v_mask = clf.encode([p.text for p in valid_posts])
            v_labels = np.array([schema.index(schema.label_of(p)) for p in valid_posts], dtype=np.int64)
            valid = encoder.EncodedSet(v_ids, v_mask, v_labels)
        training = encoder.TrainingConfig(
            batch_size=config.batch_size,
            epochs=config.epochs,
            min_epoch=config.min_epoch,
            learning_rate=config.lr,
            dropout=config.dropout,
            seed=config.seed,
        )
        clf.transformer, history = encoder.fine_tune(model, encoder.EncodedSet(ids, mask, labels), valid, schema, training)
    return clf, history


def evaluate_classifier(clf: Classifier, posts: Sequence[LabeledPost]) -> EvalReport:
    gold = [clf.schema.label_of(p) for p in posts]
    return score(gold, clf.predict([p.text for p in posts]), clf.schema)


def write_report(report: EvalReport, out: Path, prefix: str = "") -> None:
    (out / f"{prefix}report.csv").write_text(render(report, "csv"), encoding="utf-8")
    (out / f"{prefix}confusion.csv").write_text(render_confusion(report.confusion, "csv"), encoding="utf-8")


def write_history(history: list, path: Path) -> None:
    lines = ["epoch\tloss\ttrain_accuracy\tval_macro_f1\tval_accuracy"]
    for r in history:
        val = ["" if v is None else f"{v:.6f}" for v in (r.val_macro_f1, r.val_accuracy)]
        lines.append(f"{r.epoch}\t{r.loss:.6f}\t{r.train_accuracy:.6f}\t{val[0]}\t{val[1]}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_history(path: str | os.PathLike) -> list[dict[str, float | None]]:
    rows = Path(path).read_text(encoding="utf-8").splitlines()
    keys = rows[0].split("\t")
    return [{k: (float(v) if v else None) for k, v in zip(keys, r.split("\t"))} for r in rows[1:]]


@dataclass
class TrainResult:
    classifier: Classifier
    report: EvalReport
    out: Path
    history: list


def run_train(config: ExperimentConfig) -> TrainResult:
    """Train one model and write its artifacts plus ``report.csv`` to ``config.out``.

    The report is computed on the test split when one is configured and
    present, otherwise on the training data.
    """
    config = config.validate()
    check_paths(config, "train")
    has_test = bool(config.test)
    if has_test:
        check_paths(config, "test")
    if config.valid:
        check_paths(config, "valid")
    train_posts = load_split(config, "train", Split.TRAIN)
    test_posts = load_split(config, "test", Split.TEST) if has_test else train_posts
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.dump(), encoding="utf-8")
    clf, history = fit_classifier(train_posts, config)
    clf.save(out)
    if history:
        write_history(history, out / "history.tsv")
    report = evaluate_classifier(clf, test_posts)
    write_report(report, out)
    return TrainResult(clf, report, out, history)


def run_tokenizer_train(config: ExperimentConfig) -> tk.SubwordVocab:
    config = config.validate()
    check_paths(config, "train")
    posts = load_split(config, "train", Split.TRAIN)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    vocab = train_vocab(posts, config)
    tk.save_vocab(vocab, out / "vocab")
    return vocab


def run_eval(run_dir: str | os.PathLike, test_path: str, task: str | None = None, out: str | os.PathLike | None = None) -> EvalReport:
    if not os.path.isfile(test_path):
        raise ConfigError(f"missing dataset path: {test_path}")
    clf = load_classifier(run_dir)
    if task is not None and schema_for(task) != clf.schema:
        raise ConfigError(f"model in {run_dir} was trained for task {clf.schema.task_id}, not task {task.upper()}")
    report = evaluate_classifier(clf, load_tsv(test_path, split=Split.TEST))
    target = Path(out or run_dir)
    target.mkdir(parents=True, exist_ok=True)
    write_report(report, target, prefix="eval_")
    return report


def read_texts(path: str | os.PathLike) -> list[tuple[str, str]]:
    """``(id, text)`` pairs from a TSV whose first two columns are text_id, text."""
    if not os.path.isfile(path):
        raise ConfigError(f"missing input path: {os.fspath(path)}")
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    head = [c.strip().lower() for c in lines[0].split("\t")]
    if head[:2] != ["text_id", "text"]:
        raise CorpusError(f"{os.fspath(path)}: header must start with text_id<TAB>text")
    rows = []
    for row, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise CorpusError(f"{os.fspath(path)}: row {row}: expected at least 2 columns")
        rows.append((cols[0], cols[1]))
    return rows


def run_predict(run_dir: str | os.PathLike, input_path: str, output: str | os.PathLike) -> list[tuple[str, str]]:
    clf = load_classifier(run_dir)
    rows = read_texts(input_path)
    labels = clf.predict([t for _, t in rows])
    result = [(i, lab) for (i, _), lab in zip(rows, labels)]
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(f"text_id\ttask_{'1' if clf.schema.task_id == 'A' else '2'}\n")
        for i, lab in result:
            fh.write(f"{i}\t{lab}\n")
    return result


def run_compare(config: ExperimentConfig, tasks: Sequence[str] = ("A", "B")) -> dict[str, dict[str, EvalReport]]:
    """Train and score all three model kinds on shared data.

    Each sub-run lands in ``<out>/<kind>-<task>``; the table goes to
    ``comparison.csv`` and ``comparison.txt`` in ``<out>``.
    """
    from .metrics import render_comparison

    config = config.validate()
    for kind in MODEL_KINDS:
        replace(config, model=kind).validate()
    check_paths(config, "train", *(["test"] if config.test else []))
    out = Path(config.out)
    results: dict[str, dict[str, EvalReport]] = {}
    for kind in MODEL_KINDS:
        row = results.setdefault(MODEL_TITLES[kind], {})
        for task in tasks:
            sub = replace(config, model=kind, task=task, out=str(out / f"{kind}-{task.upper()}"))
            try:
                row[task.upper()] = run_train(sub).report
            except Exception as exc:
                raise RuntimeError(f"compare: {kind} on task {task} failed: {exc}") from exc
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(render_comparison(results, "csv"), encoding="utf-8")
    (out / "comparison.txt").write_text(render_comparison(results, "text"), encoding="utf-8")
    return results
