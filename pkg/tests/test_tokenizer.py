import numpy as np
import pytest

from textguard import tokenizer as tk
from textguard.tokenizer import CLS, PAD, SEP, UNK

from . import oracles


def test_first_merge_is_most_frequent_pair():
    vocab = tk.train_bpe(["aa ab aa"], 10)
    assert vocab.merges[0] == ("a", "a")
    assert vocab.tokens[:5] == ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "</w>"]


def test_single_char_corpus_has_no_merges():
    vocab = tk.train_bpe(["x"], 50)
    assert vocab.tokens == ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "</w>", "x"]
    assert vocab.merges == []


def test_ties_go_to_smaller_pair():
    # (a,b), (b,</w>), (c,d), (d,</w>) all occur twice
    vocab = tk.train_bpe(["ab ab cd cd"], 10)
    assert vocab.merges == [("a", "b")]


def test_target_too_small_and_empty_corpus():
    with pytest.raises(tk.TokenizerError, match="below the base size"):
        tk.train_bpe(["abc"], 6)
    with pytest.raises(tk.TokenizerError):
        tk.train_bpe([], 10)
    with pytest.raises(tk.TokenizerError):
        tk.train_bpe(["   "], 10)


@pytest.mark.parametrize("seed", range(20))
def test_matches_brute_force_oracle(seed):
    rng = np.random.default_rng(seed)
    alphabet = list("abcde")
    words = ["".join(rng.choice(alphabet, size=rng.integers(1, 5))) for _ in range(rng.integers(3, 31))]
    corpus = [" ".join(words)]
    target = int(rng.integers(12, 40))
    vocab = tk.train_bpe(corpus, target)
    tokens, merges = oracles.bpe_merges(corpus, target)
    assert vocab.merges == merges
    assert vocab.tokens == tokens
    assert len(vocab) <= target


def test_encode_empty_text():
    vocab = tk.train_bpe(["aa ab aa"], 10)
    seq = tk.encode(vocab, "", 8)
    assert seq.ids.tolist() == [CLS, SEP, PAD, PAD, PAD, PAD, PAD, PAD]
    assert seq.mask.tolist() == [1, 1, 0, 0, 0, 0, 0, 0]


def test_encode_truncates_with_sep_last():
    vocab = tk.train_bpe(["a b c d e f"], 12)
    seq = tk.encode(vocab, "a b c d e f a b c", 6)
    assert len(seq.ids) == 6 and seq.ids[-1] == SEP and seq.mask.all()


def test_encode_applies_merges_in_order():
    vocab = tk.train_bpe(["aa ab aa"], 10)
    # manual application: a a </w> -> aa </w> -> aa</w> if merged
    symbols = ["a", "a", "</w>"]
    for pair in vocab.merges:
        i = 0
        while i < len(symbols) - 1:
            if (symbols[i], symbols[i + 1]) == pair:
                symbols[i : i + 2] = [pair[0] + pair[1]]
            else:
                i += 1
    seq = tk.encode(vocab, "aa", 8)
    assert seq.ids[1 : 1 + len(symbols)].tolist() == [vocab.tokens.index(s) for s in symbols]


def test_unknown_character_maps_to_unk():
    vocab = tk.train_bpe(["ab ab"], 10)
    seq = tk.encode(vocab, "z", 5)
    assert UNK in seq.ids.tolist()


def test_decode():
    vocab = tk.train_bpe(["hello world hello"], 30)
    assert tk.decode(vocab, [CLS, SEP]) == ""
    with pytest.raises(tk.TokenizerError):
        tk.decode(vocab, [len(vocab)])
    seq = tk.encode(vocab, "hello world", 32)
    assert tk.decode(vocab, seq.ids) == "hello world"


def test_vocab_invariants():
    with pytest.raises(tk.TokenizerError):
        tk.SubwordVocab(["a", "[PAD]", "[UNK]", "[CLS]"], [])
    with pytest.raises(tk.TokenizerError):
        tk.SubwordVocab(list(tk.SPECIALS) + ["a"], [("a", "a")])


def test_encode_batch_shapes():
    vocab = tk.train_bpe(["ab cd"], 12)
    ids, mask = tk.encode_batch(vocab, ["ab", "cd ab"], 7)
    assert ids.shape == mask.shape == (2, 7)
    empty_ids, _ = tk.encode_batch(vocab, [], 7)
    assert empty_ids.shape == (0, 7)


def test_vocab_file_round_trip(tmp_path):
    vocab = tk.train_bpe(["the cat sat on the mat the end"], 30)
    tk.save_vocab(vocab, tmp_path / "vocab")
    text = (tmp_path / "vocab").read_text(encoding="utf-8").split("\n")
    assert text[0] == "BPEV1" and "#MERGES" in text
    again = tk.load_vocab(tmp_path / "vocab")
    assert again.tokens == vocab.tokens and again.merges == vocab.merges


def test_load_vocab_rejects_garbage(tmp_path):
    (tmp_path / "v").write_text("NOPE\n", encoding="utf-8")
    with pytest.raises(tk.TokenizerError):
        tk.load_vocab(tmp_path / "v")
