import math
import random

import pytest

from structsyn.trees import (
    ROOT,
    ConstNode,
    ConstTree,
    DepTree,
    Span,
    SyntaxProfile,
    TokenSeq,
    leaf,
    node,
    node_height,
    tree_depth,
    trees_equal,
    validate_const_tree,
    validate_dep_tree,
)

from conftest import random_dep_heads, random_nary_shape, shape_to_tree


def test_token_seq_basic():
    s = TokenSeq(("a", "b"))
    assert len(s) == 2
    with pytest.raises(ValueError):
        TokenSeq(())
    with pytest.raises(ValueError):
        TokenSeq(("a", ""))


def test_token_seq_word_ids():
    TokenSeq(("a", "b", "c"), (0, 0, 1))
    with pytest.raises(ValueError):
        TokenSeq(("a", "b"), (1, 2))  # must start at 0
    with pytest.raises(ValueError):
        TokenSeq(("a", "b"), (0, 2))  # step of 2
    with pytest.raises(ValueError):
        TokenSeq(("a", "b"), (0,))


def test_span():
    s = Span(1, 3)
    assert s.width == 3
    assert Span(2, 2).width == 1
    with pytest.raises(ValueError):
        Span(3, 1)
    with pytest.raises(ValueError):
        Span(-1, 0)


def test_const_node_leaf_xor_internal():
    with pytest.raises(ValueError):
        ConstNode("X", children=[leaf("X", "a")], token="b")


def test_const_tree_spans():
    t = ConstTree(node("S", node("NP", leaf("D", "the"), leaf("N", "cat")),
                       leaf("V", "ran")))
    assert t.root.span == Span(0, 2)
    assert t.root.children[0].span == Span(0, 1)
    assert t.root.children[1].span == Span(2, 2)
    assert [lf.token for lf in t.leaves()] == ["the", "cat", "ran"]
    assert len(t.internal_nodes()) == 2


def test_validate_const_tree_ok(rng):
    for _ in range(50):
        n = rng.randint(1, 10)
        t = shape_to_tree(random_nary_shape(rng, 0, n - 1), [f"t{i}" for i in range(n)])
        assert validate_const_tree(t, n) is None


def test_validate_const_tree_rejects():
    t = ConstTree(node("S", leaf("X", "a"), leaf("X", "b")))
    assert validate_const_tree(t, 3) is not None  # wrong leaf count
    bare = node("S", leaf("X", "a"))
    assert validate_const_tree(ConstTree(bare), 1) is None
    # unbuilt node (no spans)
    loose = ConstTree(node("S", leaf("X", "a"), leaf("X", "b")))
    loose.root.children[0].span = Span(1, 1)  # overlap with sibling
    assert validate_const_tree(loose, 2) is not None


def test_dep_tree_root():
    t = DepTree((1, ROOT, 1))
    assert t.root == 1
    assert len(t) == 3


def test_validate_dep_tree(rng):
    assert validate_dep_tree(DepTree((ROOT,))) is None
    assert validate_dep_tree(DepTree((1, ROOT))) is None
    assert validate_dep_tree(DepTree((ROOT, ROOT))) is not None  # two roots
    assert validate_dep_tree(DepTree((1, 0))) is not None        # cycle, no root
    assert validate_dep_tree(DepTree((ROOT, 5))) is not None     # out of range
    assert validate_dep_tree(DepTree((ROOT, 2, 1))) is not None  # 1<->2 cycle
    for _ in range(100):
        n = rng.randint(1, 12)
        assert validate_dep_tree(DepTree(random_dep_heads(rng, n))) is None


def test_syntax_profile():
    SyntaxProfile((1.0,), (0.0, 2.0))
    with pytest.raises(ValueError):
        SyntaxProfile((1.0,), (0.0,))
    with pytest.raises(ValueError):
        SyntaxProfile((math.nan,), (0.0, 1.0))


def test_depth_and_height():
    t = ConstTree(node("S", node("NP", leaf("D", "a"), leaf("N", "b")),
                       leaf("V", "c")))
    assert tree_depth(t) == 2
    assert node_height(t.root) == 2
    assert node_height(t.root.children[1]) == 0


def test_trees_equal():
    a = node("S", leaf("X", "a"), leaf("X", "b"))
    b = node("S", leaf("X", "a"), leaf("X", "b"))
    c = node("T", leaf("X", "a"), leaf("X", "b"))
    assert trees_equal(a, b)
    assert not trees_equal(a, c)
    assert trees_equal(a, c, labels=False)
    assert not trees_equal(a, node("S", leaf("X", "a"), leaf("X", "z")), labels=False)
