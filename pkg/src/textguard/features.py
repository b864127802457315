"""TF-IDF vectors over subword ids."""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .tokenizer import SPECIALS, TokenSequence

_FIRST_TERM = len(SPECIALS)


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass
class TfIdfModel:
    """Smoothed idf per observed term: ``ln((1 + N) / (1 + df)) + 1``."""

    dim: int
    n_docs: int
    df: dict[int, int]
    idf: dict[int, float]
    sublinear_tf: bool = False

    def idf_vector(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for term, value in self.idf.items():
            out[term] = value
        return out


def _terms(doc: TokenSequence | Sequence[int]) -> list[int]:
    if isinstance(doc, TokenSequence):
        ids = doc.ids[doc.mask.astype(bool)]
    else:
        ids = doc
    return [int(t) for t in ids if int(t) >= _FIRST_TERM]


def fit_tfidf(
    docs: Sequence[TokenSequence | Sequence[int]],
    dim: int | None = None,
    sublinear_tf: bool = False,
) -> TfIdfModel:
    if len(docs) == 0:
        raise ValueError("fit_tfidf needs at least one document")
    df: Counter = Counter()
    for doc in docs:
        df.update(set(_terms(doc)))
    if dim is None:
        dim = max(df, default=_FIRST_TERM - 1) + 1
    n = len(docs)
    idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in sorted(df.items())}
    return TfIdfModel(dim=dim, n_docs=n, df=dict(sorted(df.items())), idf=idf, sublinear_tf=sublinear_tf)


def transform(model: TfIdfModel, doc: TokenSequence | Sequence[int]) -> SparseVector:
    counts = Counter(t for t in _terms(doc) if t in model.idf)
    if not counts:
        return SparseVector(np.zeros(0, dtype=np.int64), np.zeros(0), model.dim)
    idx = np.array(sorted(counts), dtype=np.int64)
    tf = np.array([counts[t] for t in idx], dtype=np.float64)
    if model.sublinear_tf:
        tf = 1.0 + np.log(tf)
    values = tf * np.array([model.idf[t] for t in idx])
    values /= math.sqrt(float(np.dot(values, values)))
    return SparseVector(idx, values, model.dim)


def transform_many(model: TfIdfModel, docs: Iterable[TokenSequence | Sequence[int]]) -> sparse.csr_matrix:
    """Stack transformed documents into a CSR matrix [n_docs, dim]."""
    indptr = [0]
    indices: list[np.ndarray] = []
    values: list[np.ndarray] = []
    for doc in docs:
        vec = transform(model, doc)
        indices.append(vec.indices)
        values.append(vec.values)
        indptr.append(indptr[-1] + len(vec.indices))
    n = len(indptr) - 1
    data = np.concatenate(values) if values else np.zeros(0)
    cols = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
    return sparse.csr_matrix((data, cols, np.array(indptr)), shape=(n, model.dim))


def save_tfidf(model: TfIdfModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dim={model.dim}\tn_docs={model.n_docs}\tsublinear_tf={int(model.sublinear_tf)}\n")
        for term, value in model.idf.items():
            fh.write(f"{term}\t{value!r}\n")


def load_tfidf(path: str | os.PathLike) -> TfIdfModel:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline()
        if not head.startswith("# "):
            raise ValueError(f"{os.fspath(path)}: missing tfidf header")
        meta = dict(item.split("=", 1) for item in head[2:].strip().split("\t"))
        idf: dict[int, float] = {}
        for line in fh:
            term, value = line.rstrip("\n").split("\t")
            idf[int(term)] = float(value)
    n_docs = int(meta["n_docs"])
    # df is not stored; invert the idf formula.
    df = {t: int(round((1 + n_docs) / math.exp(v - 1.0) - 1)) for t, v in idf.items()}
    return TfIdfModel(
        dim=int(meta["dim"]),
        n_docs=n_docs,
        df=df,
        idf=idf,
        sublinear_tf=bool(int(meta["sublinear_tf"])),
    )
