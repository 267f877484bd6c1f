import pytest
from hypothesis import given, settings, strategies as st

from structsyn.bpe import (
    EOW,
    bpe_encode,
    decode_pieces,
    load_bpe,
    save_bpe,
    train_bpe,
)
from structsyn.vocab import MASK, PAD, RESERVED, UNK, Vocab, build_word_vocab


# ------------------------------------------------------------------- vocab

def test_vocab_reserved_required():
    with pytest.raises(ValueError):
        Vocab(["a", "b"])
    v = Vocab(list(RESERVED) + ["a"])
    assert v.id("a") == 3
    assert v.id("zzz") == v.unk_id
    assert v.token(3) == "a"
    assert "a" in v and "zzz" not in v
    assert len(v) == 4


def test_vocab_duplicate_rejected():
    with pytest.raises(ValueError):
        Vocab(list(RESERVED) + ["a", "a"])


def test_vocab_encode():
    v = Vocab(list(RESERVED) + ["a", "b"])
    assert v.encode(["a", "b", "c"]) == [3, 4, v.unk_id]


def test_vocab_save_load(tmp_path):
    v = Vocab(list(RESERVED) + ["a", "b"])
    path = str(tmp_path / "vocab.txt")
    v.save(path)
    w = Vocab.load(path)
    assert len(w) == len(v)
    assert all(w.token(i) == v.token(i) for i in range(len(v)))


def test_build_word_vocab_frequency_order():
    corpus = [["b", "a", "a"], ["b", "b", "c"]]
    v = build_word_vocab(corpus, size=5)  # room for 2 real tokens
    assert v.token(0) == UNK and v.token(1) == PAD and v.token(2) == MASK
    assert v.token(3) == "b" and v.token(4) == "a"  # b:3 > a:2 > c:1


def test_build_word_vocab_tie_lexicographic():
    corpus = [["z", "a"]]
    v = build_word_vocab(corpus, size=4)
    assert v.token(3) == "a"  # tie at count 1 -> lexicographically smaller


def test_build_word_vocab_reserved_excluded():
    v = build_word_vocab([["<unk>", "<unk>", "a"]], size=4)
    assert v.token(3) == "a"


def test_build_word_vocab_errors():
    with pytest.raises(ValueError):
        build_word_vocab([["a"]], size=3)
    with pytest.raises(ValueError):
        build_word_vocab([], size=10)


# --------------------------------------------------------------------- bpe

def test_train_bpe_spec_example():
    # "aa aa aa": base inventory {a}; the first (only) merge is ("a","a")
    model = train_bpe([["aa", "aa", "aa"]], target_size=2)
    assert model.base_size == 1
    assert model.merges == (("a", "a"),)
    assert bpe_encode(model, "aa") == ["aa" + EOW]


def test_train_bpe_tie_break():
    # "ab" and "cd" both occur twice; ("a","b") < ("c","d")
    model = train_bpe([["ab", "cd", "ab", "cd"]], target_size=5)
    assert model.merges[0] == ("a", "b")


def test_train_bpe_stops_on_singletons():
    model = train_bpe([["abc"]], target_size=100)
    assert model.merges == ()  # every pair occurs once


def test_bpe_encode_decode(rng):
    words = ["the", "cat", "catalog", "chatter", "that", "hat", "matter"]
    model = train_bpe([words * 3], target_size=40)
    for w in words + ["unseen", "xyzzy"]:
        pieces = bpe_encode(model, w)
        assert pieces[-1].endswith(EOW)
        assert all(not p.endswith(EOW) for p in pieces[:-1])
        assert decode_pieces(pieces) == w


def test_bpe_encode_empty():
    model = train_bpe([["ab"]], target_size=2)
    assert bpe_encode(model, "") == []


def test_bpe_greedy_rank_order():
    model = train_bpe([["aaab"] * 5], target_size=10)
    # first merge is the most frequent pair; re-encoding any training word
    # reproduces its final training segmentation
    pieces = bpe_encode(model, "aaab")
    assert decode_pieces(pieces) == "aaab"
    assert len(pieces) <= 2


def test_bpe_save_load(tmp_path):
    model = train_bpe([["the", "then", "they", "them"] * 2], target_size=12)
    path = str(tmp_path / "bpe.model")
    save_bpe(model, path)
    back = load_bpe(path)
    assert back.merges == model.merges
    assert back.base_size == model.base_size
    for w in ["the", "theory"]:
        assert bpe_encode(back, w) == bpe_encode(model, w)


@given(st.lists(st.text(alphabet="abcde", min_size=1, max_size=6),
                min_size=1, max_size=10))
@settings(max_examples=150, deadline=None)
def test_bpe_round_trip_property(words):
    model = train_bpe([words], target_size=len(set("".join(words))) + 5)
    for w in words:
        assert decode_pieces(bpe_encode(model, w)) == w


def test_bpe_determinism():
    corpus = [["banana", "bandana", "cabana"] * 2]
    a = train_bpe(corpus, target_size=15)
    b = train_bpe(corpus, target_size=15)
    assert a.merges == b.merges
