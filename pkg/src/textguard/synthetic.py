"""Seeded synthetic corpora for overfit, separability and ordering checks."""

from __future__ import annotations

import numpy as np

from .corpus import LabeledPost, Language, Split

FILLER = (
    "today really the this that so just well again here there now maybe honestly "
    "people everyone somebody friend game match city weather music movie"
).split()
PRAISE = "kind smart brave honest lovely clever polite gentle".split()
INSULT = "stupid ugly lazy pathetic useless worthless dumb rude".split()
NEGATORS = ("not", "never")
SLURS = ("vermin", "parasites", "subhumans", "scum")
PROFANE = ("damn", "hell", "crap", "bloody")


def _post(i: int, words: list[str], task_a: str, task_b: str, prefix: str, split: Split) -> LabeledPost:
    return LabeledPost(f"{prefix}{i:04d}", " ".join(words), task_a, task_b, Language.ENGLISH, split)


def separable_corpus(n: int, seed: int, split: Split = Split.TRAIN, prefix: str = "sep") -> list[LabeledPost]:
    """Half NOT, half HOF; the two classes draw from disjoint word lists."""
    rng = np.random.default_rng(seed)
    clean = [f"calm{i}" for i in range(12)] + list(PRAISE)
    dirty = [f"rage{i}" for i in range(12)] + list(INSULT)
    posts = []
    for i in range(n):
        hof = i % 2 == 1
        pool = dirty if hof else clean
        words = list(rng.choice(pool, size=rng.integers(3, 8)))
        posts.append(_post(i, words, "HOF" if hof else "NOT", "OFFN" if hof else "NONE", prefix, split))
    return posts


def overfit_fixture(n: int = 32, seed: int = 0) -> list[LabeledPost]:
    """Small, noisy-looking but separable set: insults vs praise among filler."""
    rng = np.random.default_rng(seed)
    posts = []
    for i in range(n):
        hof = i % 2 == 0
        words = list(rng.choice(FILLER, size=rng.integers(2, 6)))
        cue = rng.choice(INSULT if hof else PRAISE)
        words.insert(int(rng.integers(0, len(words) + 1)), str(cue))
        posts.append(_post(i, words, "HOF" if hof else "NOT", "OFFN" if hof else "NONE", "fit", Split.TRAIN))
    return posts


def context_corpus(n: int, seed: int, split: Split = Split.TRAIN, prefix: str = "ctx") -> list[LabeledPost]:
    """Posts whose offensiveness partly depends on negation context.

    * ~1/3 carry a lexical cue: a slur (HOF/HATE) or a profanity (HOF/PRFN),
      or only filler (NOT/NONE).
    * ~2/3 read ``you are [not] ADJ1 and [not] ADJ2`` with two adjectives of
      the same polarity, negated either both times or never. Insults are
      offensive unless negated; praise is offensive only when negated
      (HOF/OFFN). Both classes use the same words here, so a bag-of-words
      model is capped at the XOR ceiling, while word order and co-occurrence
      carry the answer.
    """
    rng = np.random.default_rng(seed)
    posts = []
    for i in range(n):
        kind = rng.random()
        filler = list(rng.choice(FILLER, size=rng.integers(1, 4)))
        if kind < 1 / 3:
            which = rng.integers(0, 3)
            if which == 0:
                words = filler + ["those", str(rng.choice(SLURS))]
                a, b = "HOF", "HATE"
            elif which == 1:
                words = filler + [str(rng.choice(PROFANE)), "this"]
                a, b = "HOF", "PRFN"
            else:
                words = filler + list(rng.choice(FILLER, size=2))
                a, b = "NOT", "NONE"
        else:
            negated = bool(rng.integers(0, 2))
            insult = bool(rng.integers(0, 2))
            first, second = (str(w) for w in rng.choice(INSULT if insult else PRAISE, size=2, replace=False))
            neg = [str(rng.choice(NEGATORS))] if negated else []
            core = ["you", "are", *neg, first, "and", *neg, second]
            cut = int(rng.integers(0, len(filler) + 1))
            words = filler[:cut] + core + filler[cut:]
            offensive = insult != negated
            a, b = ("HOF", "OFFN") if offensive else ("NOT", "NONE")
        posts.append(_post(i, words, a, b, prefix, split))
    return posts
