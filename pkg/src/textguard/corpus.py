"""HASOC-style dataset ingestion, label schemas, splits and statistics."""

from __future__ import annotations

import enum
import os
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HEADER = ("text_id", "text", "task_1", "task_2")


class CorpusError(ValueError):
    """Raised for malformed or inconsistent dataset files."""


class Language(str, enum.Enum):
    ENGLISH = "English"
    GERMAN = "German"
    HINDI = "Hindi"

    @classmethod
    def parse(cls, value: "str | Language") -> "Language":
        if isinstance(value, Language):
            return value
        key = value.strip().lower()
        aliases = {"en": "english", "de": "german", "hi": "hindi"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value.lower() == key:
                return member
        raise CorpusError(f"unknown language {value!r}")


class Split(str, enum.Enum):
    TRAIN = "Train"
    TEST = "Test"

    @classmethod
    def parse(cls, value: "str | Split") -> "Split":
        if isinstance(value, Split):
            return value
        for member in cls:
            if member.value.lower() == value.strip().lower():
                return member
        raise CorpusError(f"unknown split {value!r}")


@dataclass(frozen=True)
class LabelSchema:
    task_id: str
    classes: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class names must be unique")
        for name in self.classes:
            if not name or not name.isascii() or name != name.upper():
                raise ValueError(f"class names must be uppercase ASCII, got {name!r}")

    def __len__(self) -> int:
        return len(self.classes)

    def index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise CorpusError(
                f"label {label!r} not in task {self.task_id} classes {list(self.classes)}"
            ) from None

    def label_of(self, post: "LabeledPost") -> str:
        return post.task_a if self.task_id == "A" else post.task_b


TASK_A = LabelSchema("A", ("NOT", "HOF"))
TASK_B = LabelSchema("B", ("NONE", "HATE", "OFFN", "PRFN"))

# PROF is the spelling used in some HASOC releases.
_TASK_B_ALIASES = {"PROF": "PRFN"}


def schema_for(task: str) -> LabelSchema:
    key = task.strip().upper()
    if key in ("A", "TASKA", "TASK_A"):
        return TASK_A
    if key in ("B", "TASKB", "TASK_B"):
        return TASK_B
    raise CorpusError(f"unknown task {task!r}; expected A or B")


@dataclass(frozen=True)
class LabeledPost:
    id: str
    text: str
    task_a: str
    task_b: str
    language: Language = Language.ENGLISH
    split: Split = Split.TRAIN

    def __post_init__(self):
        if self.task_a not in TASK_A.classes:
            raise CorpusError(f"post {self.id}: bad task A label {self.task_a!r}")
        if self.task_b not in TASK_B.classes:
            raise CorpusError(f"post {self.id}: bad task B label {self.task_b!r}")
        if (self.task_a == "NOT") != (self.task_b == "NONE"):
            raise CorpusError(f"post {self.id}: inconsistent labels {self.task_a}/{self.task_b}")
        if not normalize_text(self.text):
            raise CorpusError(f"post {self.id}: empty text")


# ---------------------------------------------------------------- normalization

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#(\w+)")
_SPACE_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizeOptions:
    urls: bool = True
    mentions: bool = True
    hashtags: bool = True
    lowercase: bool = False


def normalize_text(raw: str, options: NormalizeOptions = NormalizeOptions()) -> str:
    """Minimal Twitter cleanup.

    URLs become ``<url>``, @-mentions become ``<user>``, the ``#`` of a hashtag
    is dropped and whitespace runs collapse to one space. Case is kept unless
    ``options.lowercase`` is set.
    """
    text = unicodedata.normalize("NFC", raw)
    if options.urls:
        text = _URL_RE.sub("<url>", text)
    if options.mentions:
        text = _MENTION_RE.sub("<user>", text)
    if options.hashtags:
        text = _HASHTAG_RE.sub(r"\1", text)
    if options.lowercase:
        text = text.lower()
    return _SPACE_RE.sub(" ", text).strip()


# ---------------------------------------------------------------- TSV I/O


def _canonical_label(raw: str, schema: LabelSchema) -> str | None:
    label = raw.strip().upper()
    if schema is TASK_B:
        label = _TASK_B_ALIASES.get(label, label)
    return label if label in schema.classes else None


def load_tsv(
    path: str | os.PathLike,
    language: str | Language = Language.ENGLISH,
    split: str | Split = Split.TRAIN,
) -> list[LabeledPost]:
    """Read a HASOC TSV file into posts.

    Every bad row is reported in a single :class:`CorpusError`, using 1-based
    line numbers of the file (the header is line 1).
    """
    language = Language.parse(language)
    split = Split.parse(split)
    if not os.path.isfile(path):
        raise CorpusError(f"missing dataset file: {os.fspath(path)}")
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    lines = [line[:-1] if line.endswith("\r") else line for line in lines]
    if not lines or tuple(c.strip().lower() for c in lines[0].split("\t")) != HEADER:
        raise CorpusError(f"{os.fspath(path)}: header must be {'<TAB>'.join(HEADER)}")

    posts: list[LabeledPost] = []
    errors: list[str] = []
    seen: dict[str, int] = {}
    for row, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            errors.append(f"row {row}: expected 4 columns, got {len(cols)}")
            continue
        post_id, text, raw_a, raw_b = cols
        task_a = _canonical_label(raw_a, TASK_A)
        task_b = _canonical_label(raw_b, TASK_B)
        if task_a is None:
            errors.append(f"row {row}: unknown task_1 label {raw_a!r}")
            continue
        if task_b is None:
            errors.append(f"row {row}: unknown task_2 label {raw_b!r}")
            continue
        if (task_a == "NOT") != (task_b == "NONE"):
            errors.append(f"inconsistent labels at row {row}: {task_a}/{task_b}")
            continue
        if post_id in seen:
            errors.append(f"row {row}: duplicate id {post_id!r} (first at row {seen[post_id]})")
            continue
        if not normalize_text(text):
            errors.append(f"row {row}: empty text")
            continue
        seen[post_id] = row
        posts.append(LabeledPost(post_id, text, task_a, task_b, language, split))
    if errors:
        raise CorpusError(f"{os.fspath(path)}: " + "; ".join(errors))
    return posts


def write_tsv(posts: Iterable[LabeledPost], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(HEADER) + "\n")
        for post in posts:
            if any(ch in post.text for ch in "\t\n\r") or "\t" in post.id:
                raise CorpusError(f"post {post.id}: tabs/newlines are not representable in TSV")
            fh.write(f"{post.id}\t{post.text}\t{post.task_a}\t{post.task_b}\n")


# ---------------------------------------------------------------- splits & stats


def stratified_split(
    dataset: Sequence[LabeledPost],
    fraction: float,
    task: LabelSchema,
    seed: int,
) -> tuple[list[LabeledPost], list[LabeledPost]]:
    """Split per class: ``floor(fraction * n_c)`` posts of each class go to part 1.

    Both parts keep the input order. Classes absent from the data are ignored;
    a class with exactly one member cannot be split and is an error.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    by_class: dict[str, list[int]] = {c: [] for c in task.classes}
    for i, post in enumerate(dataset):
        by_class[task.label_of(post)].append(i)
    rng = np.random.default_rng(seed)
    first: set[int] = set()
    for name in task.classes:
        members = by_class[name]
        if not members:
            continue
        if len(members) < 2:
            raise CorpusError(f"class {name} has {len(members)} member(s); need at least 2 to split")
        take = int(np.floor(fraction * len(members)))
        order = rng.permutation(len(members))
        first.update(members[j] for j in order[:take])
    part1 = [p for i, p in enumerate(dataset) if i in first]
    part2 = [p for i, p in enumerate(dataset) if i not in first]
    return part1, part2


@dataclass
class CorpusStats:
    sentences: dict[tuple[str, str], int] = field(default_factory=dict)
    task_a: dict[str, int] = field(default_factory=lambda: {c: 0 for c in TASK_A.classes})
    task_b: dict[str, int] = field(default_factory=lambda: {c: 0 for c in TASK_B.classes})
    total: int = 0

    def count(self, language: str | Language, split: str | Split) -> int:
        return self.sentences.get((Language.parse(language).value, Split.parse(split).value), 0)


def corpus_stats(dataset: Iterable[LabeledPost]) -> CorpusStats:
    stats = CorpusStats()
    sentences: Counter = Counter()
    for post in dataset:
        sentences[(post.language.value, post.split.value)] += 1
        stats.task_a[post.task_a] += 1
        stats.task_b[post.task_b] += 1
        stats.total += 1
    stats.sentences = dict(sorted(sentences.items()))
    return stats
