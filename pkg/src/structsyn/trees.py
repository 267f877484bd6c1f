"""Core tree data types: token sequences, constituency trees, dependency trees.

All types are immutable by convention after construction and safe to share
between threads.  Token indices are 0-based everywhere inside the library;
the CoNLL reader/writer converts to and from the 1-based external format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

#: Head value marking the root token of a dependency tree.  A distinct
#: sentinel, never a fake token index.
ROOT = -1


@dataclass(frozen=True)
class TokenSeq:
    """A tokenized sentence, optionally aligned to source words."""

    tokens: tuple[str, ...]
    word_ids: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise ValueError("TokenSeq must contain at least one token")
        if any(t == "" for t in self.tokens):
            raise ValueError("empty token string")
        if self.word_ids is not None:
            w = self.word_ids
            if len(w) != len(self.tokens):
                raise ValueError("word_ids length mismatch")
            if w[0] != 0 or any(b - a not in (0, 1) for a, b in zip(w, w[1:])):
                raise ValueError("word_ids must start at 0 and be non-decreasing with steps of 0 or 1")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token interval [start, end], 0-based."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ValueError(f"bad span [{self.start},{self.end}]")

    @property
    def width(self) -> int:
        return self.end - self.start + 1


class ConstNode:
    """A node of a constituency tree.

    A leaf carries a token (and its position once the tree is built); an
    internal node carries an ordered tuple of children.  Spans are assigned
    by ConstTree at construction time.
    """

    __slots__ = ("label", "children", "token", "span")

    def __init__(self, label: str, children: Sequence["ConstNode"] = (),
                 token: Optional[str] = None):
        if token is not None and children:
            raise ValueError("a node is either a leaf or has children, not both")
        self.label = label
        self.children: tuple[ConstNode, ...] = tuple(children)
        self.token = token
        self.span: Optional[Span] = None

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def __repr__(self):
        if self.is_leaf:
            return f"ConstNode({self.label!r}, token={self.token!r})"
        return f"ConstNode({self.label!r}, {len(self.children)} children)"


def leaf(label: str, token: str) -> ConstNode:
    return ConstNode(label, token=token)


def node(label: str, *children: ConstNode) -> ConstNode:
    return ConstNode(label, children=children)


class ConstTree:
    """A constituency tree over a TokenSeq with spans computed on build."""

    __slots__ = ("root", "tokens")

    def __init__(self, root: ConstNode, tokens: Optional[TokenSeq] = None):
        self.root = root
        yielded = tuple(n.token for n in iter_leaves(root))
        if tokens is None:
            tokens = TokenSeq(yielded)
        self.tokens = tokens
        self._assign_spans(root, 0)

    def _assign_spans(self, n: ConstNode, start: int) -> int:
        if n.is_leaf:
            n.span = Span(start, start)
            return start + 1
        pos = start
        for c in n.children:
            pos = self._assign_spans(c, pos)
        n.span = Span(start, pos - 1)
        return pos

    def __len__(self) -> int:
        return len(self.tokens)

    def leaves(self) -> list[ConstNode]:
        return list(iter_leaves(self.root))

    def internal_nodes(self) -> list[ConstNode]:
        return [n for n in iter_nodes(self.root) if not n.is_leaf]


def iter_leaves(n: ConstNode) -> Iterator[ConstNode]:
    if n.is_leaf:
        yield n
    else:
        for c in n.children:
            yield from iter_leaves(c)


def iter_nodes(n: ConstNode) -> Iterator[ConstNode]:
    yield n
    for c in n.children:
        yield from iter_nodes(c)


@dataclass(frozen=True)
class DepTree:
    """Head assignment per token; exactly one entry is ROOT."""

    heads: tuple[int, ...]
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.heads):
            raise ValueError("labels length mismatch")

    def __len__(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return self.heads.index(ROOT)


@dataclass(frozen=True)
class SyntaxProfile:
    """Per-sentence syntactic scalars: n-1 split distances and n token heights."""

    distances: tuple[float, ...]
    heights: tuple[float, ...]

    def __post_init__(self):
        if len(self.distances) != len(self.heights) - 1:
            raise ValueError("|distances| must equal |heights| - 1")
        if any(not math.isfinite(v) for v in self.distances + self.heights):
            raise ValueError("non-finite value in syntax profile")


def validate_const_tree(tree: ConstTree, n: int) -> Optional[str]:
    """Check all ConstTree invariants; return a violation description or None.

    Violations are data, not faults: malformed trees come from external
    files and from a model whose outputs are not guaranteed valid.
    """
    leaves_seen = []

    def walk(nd: ConstNode) -> Optional[str]:
        if nd.span is None:
            return "node without span (tree not built via ConstTree)"
        if nd.is_leaf:
            leaves_seen.append(nd.span.start)
            if nd.span.start != nd.span.end:
                return "leaf with non-unit span"
            return None
        if not nd.children:
            return "internal node with no children"
        pos = nd.span.start
        for c in nd.children:
            if c.span is None:
                return "node without span (tree not built via ConstTree)"
            if c.span.start != pos:
                return "crossing/overlapping spans"
            pos = c.span.end + 1
            err = walk(c)
            if err:
                return err
        if pos != nd.span.end + 1:
            return "children do not cover parent span"
        return None

    err = walk(tree.root)
    if err:
        return err
    if len(leaves_seen) != n:
        return f"leaf count {len(leaves_seen)} != n={n}"
    if leaves_seen != list(range(n)):
        return "leaf token indices are not 0..n-1 in order"
    return None


def validate_dep_tree(tree: DepTree) -> Optional[str]:
    """Check DepTree invariants: one ROOT, acyclic, fully connected."""
    heads = tree.heads
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h == ROOT]
    if len(roots) != 1:
        return f"expected exactly one root, found {len(roots)}"
    for i, h in enumerate(heads):
        if h != ROOT and not (0 <= h < n):
            return f"head index {h} out of range at token {i}"
    # Every token must reach ROOT within n steps (no cycles, connected).
    for i in range(n):
        cur, steps = i, 0
        while heads[cur] != ROOT:
            cur = heads[cur]
            steps += 1
            if steps > n:
                return f"no root / cycle reachable from token {i}"
    return None


def tree_depth(tree: ConstTree) -> int:
    """Longest root-to-leaf path in edges."""

    def depth(nd: ConstNode) -> int:
        if nd.is_leaf:
            return 0
        return 1 + max(depth(c) for c in nd.children)

    return depth(tree.root)


def node_height(nd: ConstNode) -> int:
    """Longest path from this node down to a leaf, in edges."""
    if nd.is_leaf:
        return 0
    return 1 + max(node_height(c) for c in nd.children)


def trees_equal(a: ConstNode, b: ConstNode, labels: bool = True) -> bool:
    """Structural equality; set labels=False to compare shape and tokens only."""
    if a.is_leaf != b.is_leaf:
        return False
    if labels and a.label != b.label:
        return False
    if a.is_leaf:
        return a.token == b.token
    if len(a.children) != len(b.children):
        return False
    return all(trees_equal(x, y, labels) for x, y in zip(a.children, b.children))
