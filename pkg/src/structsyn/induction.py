"""Deterministic tree construction from syntactic scalars and the inverse
maps used as oracles.

A distance vector builds a binary constituency tree by recursively
splitting at the largest distance; heights then orient each merge of that
tree into a dependency tree.  The inverse directions read distances off
LCA heights and heights off dependency-tree node heights.
"""
from __future__ import annotations

import math
from typing import Sequence

from .trees import (
    ROOT,
    ConstNode,
    ConstTree,
    DepTree,
    TokenSeq,
    node_height,
    validate_dep_tree,
)


def _check_finite(values: Sequence[float], name: str) -> None:
    if any(math.isnan(v) for v in values):
        raise ValueError(f"NaN in {name}")


def distances_to_tree(tokens: TokenSeq, distances: Sequence[float],
                      label: str = "X") -> ConstTree:
    """Build the strictly binary unlabeled tree induced by the distances.

    Recursive split at the argmax distance; ties break leftmost.  Exact
    IEEE comparison, no tolerance.
    """
    n = len(tokens)
    if len(distances) != n - 1:
        raise ValueError(f"expected {n - 1} distances, got {len(distances)}")
    _check_finite(distances, "distances")

    def build(lo: int, hi: int) -> ConstNode:
        # tokens lo..hi inclusive; split points lo..hi-1
        if lo == hi:
            return ConstNode(label, token=tokens.tokens[lo])
        split = lo
        for k in range(lo, hi):
            if distances[k] > distances[split]:
                split = k
        return ConstNode(label, children=[build(lo, split), build(split + 1, hi)])

    return ConstTree(build(0, n - 1), tokens)


def heights_and_tree_to_dep(heights: Sequence[float], tree: ConstTree) -> DepTree:
    """Orient a binary constituency tree into a dependency tree.

    Within each merge the subtree whose parent token has the strictly
    larger height becomes the head; on equality the right parent wins
    (the published pseudocode sends equality to its Else branch).
    """
    n = len(tree)
    if len(heights) != n:
        raise ValueError(f"expected {n} heights, got {len(heights)}")
    _check_finite(heights, "heights")
    heads = [ROOT] * n

    def attach(nd: ConstNode) -> int:
        if nd.is_leaf:
            return nd.span.start
        if len(nd.children) != 2:
            raise ValueError("heights_and_tree_to_dep requires a binary tree")
        left, right = nd.children
        parent_l = attach(left)
        parent_r = attach(right)
        if heights[parent_l] > heights[parent_r]:
            heads[parent_r] = parent_l
            return parent_l
        heads[parent_l] = parent_r
        return parent_r

    attach(tree.root)
    return DepTree(tuple(heads))


def tree_to_distances(tree: ConstTree) -> list[float]:
    """Distances read off a reference tree: d_i is the height of the LCA of
    leaves i and i+1 (longest-path-to-leaf edge count).  Works for n-ary
    trees; rank ties among equal LCA heights are reported as-is.
    """
    heights: dict[int, list[int]] = {}

    def walk(nd: ConstNode) -> tuple[int, int, int]:
        """Return (height, first_leaf, last_leaf)."""
        if nd.is_leaf:
            return 0, nd.span.start, nd.span.start
        h = node_height(nd)
        prev_last = None
        for c in nd.children:
            _, first, last = walk(c)
            if prev_last is not None:
                # adjacent leaves from consecutive children meet at this node
                heights[prev_last] = h
            prev_last = last
        return h, nd.children[0].span.start, prev_last

    walk(tree.root)
    n = len(tree)
    return [float(heights[i]) for i in range(n - 1)]


def dep_tree_to_heights(tree: DepTree) -> list[float]:
    """Heights read off a dependency tree: h_i is the longest downward path
    (edge count) from token i."""
    err = validate_dep_tree(tree)
    if err:
        raise ValueError(f"invalid dependency tree: {err}")
    n = len(tree)
    children: list[list[int]] = [[] for _ in range(n)]
    root = None
    for i, h in enumerate(tree.heads):
        if h == ROOT:
            root = i
        else:
            children[h].append(i)
    if root is None:
        raise ValueError("dependency tree has no root")

    memo: dict[int, int] = {}

    def height(i: int) -> int:
        if i not in memo:
            memo[i] = 1 + max((height(c) for c in children[i]), default=-1)
        return memo[i]

    return [float(height(i)) for i in range(n)]
