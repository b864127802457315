import numpy as np
import pytest

from textguard import autodiff as ad
from textguard.corpus import LabeledPost, Language, Split, write_tsv


@pytest.fixture(autouse=True)
def _debug_checks():
    ad.set_debug(True)
    yield
    ad.set_debug(False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def post(i, text, a="NOT", b="NONE", language=Language.ENGLISH, split=Split.TRAIN):
    return LabeledPost(f"t{i}", text, a, b, language, split)


@pytest.fixture
def tiny_posts():
    return [
        post(0, "you are lovely"),
        post(1, "you are vermin", "HOF", "HATE"),
        post(2, "damn this game", "HOF", "PRFN"),
        post(3, "what a nice day"),
        post(4, "you are pathetic", "HOF", "OFFN"),
        post(5, "those scum again", "HOF", "HATE"),
        post(6, "bloody hell now", "HOF", "PRFN"),
        post(7, "so stupid and rude", "HOF", "OFFN"),
        post(8, "kind people here"),
        post(9, "the music is great"),
    ]


@pytest.fixture
def tsv_dir(tmp_path, tiny_posts):
    write_tsv(tiny_posts, tmp_path / "train.tsv")
    write_tsv([LabeledPost(p.id, p.text, p.task_a, p.task_b, p.language, Split.TEST) for p in tiny_posts], tmp_path / "test.tsv")
    return tmp_path


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
