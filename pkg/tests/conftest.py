"""Shared generators and independent naive oracles.

The oracles deliberately avoid the library's data structures: trees are
nested tuples of leaf indices, so agreement with the library is evidence,
not circularity.
"""
from __future__ import annotations

import random

import numpy as np
import pytest

from structsyn.trees import ConstNode, ConstTree, TokenSeq

# ---------------------------------------------------------------- generators


def random_binary_shape(rng: random.Random, lo: int, hi: int):
    """Nested-tuple binary tree over leaf indices lo..hi inclusive."""
    if lo == hi:
        return lo
    split = rng.randrange(lo, hi)
    return (random_binary_shape(rng, lo, split),
            random_binary_shape(rng, split + 1, hi))


def random_nary_shape(rng: random.Random, lo: int, hi: int, max_arity: int = 4):
    if lo == hi:
        return lo
    n = hi - lo + 1
    arity = rng.randint(2, min(max_arity, n))
    cuts = sorted(rng.sample(range(lo + 1, hi + 1), arity - 1))
    bounds = [lo] + cuts + [hi + 1]
    return tuple(random_nary_shape(rng, bounds[k], bounds[k + 1] - 1, max_arity)
                 for k in range(arity))


def shape_to_tree(shape, tokens: list[str], label: str = "X") -> ConstTree:
    def build(s) -> ConstNode:
        if isinstance(s, int):
            return ConstNode(label, token=tokens[s])
        return ConstNode(label, children=[build(c) for c in s])

    return ConstTree(build(shape), TokenSeq(tuple(tokens)))


def tree_to_shape(tree: ConstTree):
    def walk(n: ConstNode):
        if n.is_leaf:
            return n.span.start
        return tuple(walk(c) for c in n.children)

    return walk(tree.root)


def random_tokens(rng: random.Random, n: int) -> list[str]:
    return [f"w{rng.randrange(50)}" for _ in range(n)]


def random_dep_heads(rng: random.Random, n: int) -> tuple[int, ...]:
    """Uniform-ish random rooted tree via random attachment order."""
    order = list(range(n))
    rng.shuffle(order)
    heads = [None] * n
    heads[order[0]] = -1
    for k, i in enumerate(order[1:], 1):
        heads[i] = order[rng.randrange(k)]
    return tuple(heads)


# -------------------------------------------------------------- naive oracles


def naive_distance_split(indices: list[int], dists: list[float]):
    """Recursive argmax-split (leftmost tie), independent of the library."""
    if len(indices) == 1:
        return indices[0]
    k = dists.index(max(dists))
    return (naive_distance_split(indices[: k + 1], dists[:k]),
            naive_distance_split(indices[k + 1:], dists[k + 1:]))


def naive_orient(shape, heights: list[float]) -> list[int]:
    """Head per token from a binary shape: larger parent height wins,
    equality goes to the right parent; subtree parent propagates up."""
    heads: dict[int, int] = {}

    def rec(s) -> int:
        if isinstance(s, int):
            return s
        pl, pr = rec(s[0]), rec(s[1])
        if heights[pl] > heights[pr]:
            heads[pr] = pl
            return pl
        heads[pl] = pr
        return pr

    root = rec(shape)
    heads[root] = -1
    n = len(heights)
    return [heads[i] for i in range(n)]


def brute_dependency_matrix(D, H, mu1: float, mu2: float) -> np.ndarray:
    """O(n^4) span enumeration built on the scalar formulas."""
    from structsyn.depfn import parent_prob, span_prob

    n = len(H)
    P = np.zeros((n, n))
    for i in range(n):
        for l in range(0, i + 1):
            for r in range(i, n):
                ps = span_prob(l, r, i, D, H, mu1)
                if ps == 0.0:
                    continue
                for j in range(l, r + 1):
                    if j != i:
                        P[i, j] += ps * parent_prob(j, l, r, H, mu2)
    return P


# ------------------------------------------------------------------ fixtures


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture
def nprng():
    return np.random.default_rng(0xC0FFEE)
