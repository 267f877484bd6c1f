import math
import random
from itertools import permutations

import pytest

from structsyn.induction import (
    dep_tree_to_heights,
    distances_to_tree,
    heights_and_tree_to_dep,
    tree_to_distances,
)
from structsyn.trees import DepTree, TokenSeq, trees_equal, validate_dep_tree

from conftest import (
    naive_distance_split,
    naive_orient,
    random_binary_shape,
    random_dep_heads,
    shape_to_tree,
    tree_to_shape,
)


def toks(n: int) -> TokenSeq:
    return TokenSeq(tuple(f"w{i}" for i in range(n)))


# ------------------------------------------------------- distances -> tree

def test_distances_to_tree_derived_example():
    t = distances_to_tree(TokenSeq(("a", "b", "c", "d")), (1.0, 3.0, 2.0))
    assert tree_to_shape(t) == ((0, 1), (2, 3))


def test_distances_to_tree_single_token():
    t = distances_to_tree(TokenSeq(("a",)), ())
    assert t.root.is_leaf and t.root.token == "a"


def test_distances_to_tree_ties_leftmost():
    t = distances_to_tree(toks(3), (1.0, 1.0))
    assert tree_to_shape(t) == (0, (1, 2))


def test_distances_to_tree_rejects_nan():
    with pytest.raises(ValueError):
        distances_to_tree(toks(2), (math.nan,))
    with pytest.raises(ValueError):
        distances_to_tree(toks(3), (1.0,))  # wrong length


def test_distances_exhaustive_vs_naive():
    for n in range(2, 7):
        for perm in permutations(range(n - 1)):
            dists = [float(p) for p in perm]
            got = tree_to_shape(distances_to_tree(toks(n), dists))
            want = naive_distance_split(list(range(n)), dists)
            assert got == want


def test_distances_random_vs_naive():
    rng = random.Random(17)
    for _ in range(1000):
        n = rng.randint(2, 12)
        dists = [rng.uniform(-5, 5) for _ in range(n - 1)]
        if rng.random() < 0.3:  # force ties sometimes
            dists[rng.randrange(n - 1)] = dists[rng.randrange(n - 1)]
        got = tree_to_shape(distances_to_tree(toks(n), dists))
        assert got == naive_distance_split(list(range(n)), dists)


def test_round_trip_tree_distances_tree():
    rng = random.Random(23)
    for _ in range(1000):
        n = rng.randint(1, 12)
        tree = shape_to_tree(random_binary_shape(rng, 0, n - 1),
                             [f"w{i}" for i in range(n)])
        back = distances_to_tree(tree.tokens, tree_to_distances(tree))
        assert trees_equal(tree.root, back.root)


# --------------------------------------------------- heights + tree -> dep

def test_orient_simple():
    tree = shape_to_tree((0, 1), ["a", "b"])
    assert heights_and_tree_to_dep((2.0, 1.0), tree).heads == (-1, 0)
    assert heights_and_tree_to_dep((1.0, 2.0), tree).heads == (1, -1)
    # equality -> right parent wins
    assert heights_and_tree_to_dep((1.0, 1.0), tree).heads == (1, -1)


def test_orient_requires_binary():
    tree = shape_to_tree((0, 1, 2), ["a", "b", "c"])
    with pytest.raises(ValueError):
        heights_and_tree_to_dep((1.0, 2.0, 3.0), tree)


def test_orient_random_vs_naive():
    rng = random.Random(31)
    for _ in range(1000):
        n = rng.randint(1, 12)
        shape = random_binary_shape(rng, 0, n - 1)
        heights = [rng.uniform(0, 3) for _ in range(n)]
        if rng.random() < 0.3 and n > 1:
            heights[rng.randrange(n)] = heights[rng.randrange(n)]
        tree = shape_to_tree(shape, [f"w{i}" for i in range(n)])
        got = heights_and_tree_to_dep(heights, tree)
        assert list(got.heads) == naive_orient(shape, heights)
        assert validate_dep_tree(got) is None


# ----------------------------------------------------------- inverse maps

def test_tree_to_distances_reads_lca_heights():
    tree = shape_to_tree(((0, 1), (2, 3)), list("abcd"))
    assert tree_to_distances(tree) == [1.0, 2.0, 1.0]


def test_tree_to_distances_nary():
    tree = shape_to_tree((0, 1, 2), list("abc"))
    assert tree_to_distances(tree) == [1.0, 1.0]


def test_dep_tree_to_heights():
    # 1 <- 0, 1 <- 2, root 1
    t = DepTree((1, -1, 1))
    assert dep_tree_to_heights(t) == [0.0, 1.0, 0.0]
    chain = DepTree((-1, 0, 1))
    assert dep_tree_to_heights(chain) == [2.0, 1.0, 0.0]


def test_dep_tree_to_heights_rejects_invalid():
    with pytest.raises(ValueError):
        dep_tree_to_heights(DepTree((0, -1, -1)))


def test_height_rank_consistency():
    # heights from a dependency tree re-orient the matching binary tree to
    # the same heads whenever each merge has a strict height winner
    rng = random.Random(41)
    for _ in range(200):
        n = rng.randint(1, 10)
        heads = random_dep_heads(rng, n)
        heights = dep_tree_to_heights(DepTree(heads))
        # a head always has strictly larger height than its dependents
        for i, h in enumerate(heads):
            if h != -1:
                assert heights[h] > heights[i]
