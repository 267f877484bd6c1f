"""Aligning subword-tokenized trees with word-level reference trees:
re-merging pre-split leaves, injecting subword-constituent (SWC) nodes,
and corpus statistics over them.

The subword path keeps case and digits intact; only punctuation removal
and label stripping carry over from the word-level preprocessing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from .bpe import BpeModel, bpe_encode, strip_marker
from .metrics import SpanConvention
from .trees import ConstNode, ConstTree, TokenSeq, iter_leaves


@dataclass(frozen=True)
class MergeRule:
    match: str
    direction: Literal["merge-left", "merge-right"]


#: Default rules for the pre-split PTB phenomena: contractions and
#: possessives merge onto the word to their left; "%" merges onto a
#: numeric left neighbor; "$" merges with its numeric neighbor on the
#: side it is adjacent to (resolved at application time).
DEFAULT_MERGE_RULES: tuple[MergeRule, ...] = (
    MergeRule("n't", "merge-left"),
    MergeRule("'s", "merge-left"),
    MergeRule("'re", "merge-left"),
    MergeRule("'ve", "merge-left"),
    MergeRule("'ll", "merge-left"),
    MergeRule("'d", "merge-left"),
    MergeRule("'m", "merge-left"),
    MergeRule("'", "merge-left"),
    MergeRule("%", "merge-left"),
)


def _is_numeric(token: str) -> bool:
    return any(c.isdigit() for c in token) and not any(c.isalpha() for c in token)


class MergeError(ValueError):
    pass


def load_merge_rules(path: str) -> tuple[MergeRule, ...]:
    """Rule file: one rule per line "PATTERN DIRECTION"."""
    rules = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("merge-left", "merge-right"):
                raise ValueError(f"{path}:{lineno}: bad merge rule {line!r}")
            rules.append(MergeRule(parts[0], parts[1]))
    return tuple(rules)


# Mutable working representation for tree surgery.
class _MNode:
    __slots__ = ("label", "children", "token", "parent")

    def __init__(self, label, children=None, token=None):
        self.label = label
        self.children = children if children is not None else []
        self.token = token
        self.parent = None

    @property
    def is_leaf(self):
        return self.token is not None


def _to_mutable(n: ConstNode) -> _MNode:
    if n.is_leaf:
        return _MNode(n.label, token=n.token)
    m = _MNode(n.label, children=[_to_mutable(c) for c in n.children])
    for c in m.children:
        c.parent = m
    return m


def _to_const(m: _MNode) -> ConstNode:
    if m.is_leaf:
        return ConstNode(m.label, token=m.token)
    return ConstNode(m.label, children=[_to_const(c) for c in m.children])


def _leaves(m: _MNode) -> list[_MNode]:
    if m.is_leaf:
        return [m]
    out = []
    for c in m.children:
        out.extend(_leaves(c))
    return out


def _path_to_root(m: _MNode) -> list[_MNode]:
    path = [m]
    while path[-1].parent is not None:
        path.append(path[-1].parent)
    return path


def _fuse(left: _MNode, right: _MNode) -> None:
    """Replace two adjacent leaves with one leaf carrying the concatenated
    word, attached at their lowest common ancestor; ancestors emptied by
    the removal are pruned and ancestors whose yield becomes a single leaf
    collapse to that leaf."""
    merged = _MNode(left.label, token=left.token + right.token)
    lpath, rpath = _path_to_root(left), _path_to_root(right)
    lca = next(a for a in lpath if a in rpath)
    # children of the LCA holding each leaf (the leaves themselves if direct)
    l_top = lpath[lpath.index(lca) - 1]
    r_top = rpath[rpath.index(lca) - 1]

    def remove_leaf(leaf: _MNode):
        nd = leaf
        while nd.parent is not None:
            parent = nd.parent
            parent.children.remove(nd)
            nd.parent = None
            if parent.children or parent is lca:
                return
            nd = parent

    orig_order = {id(c): k for k, c in enumerate(lca.children)}
    k_left = orig_order[id(l_top)]
    remove_leaf(left)
    remove_leaf(right)
    # surface position: after surviving children that preceded l_top, and
    # after l_top itself if it survived (its remaining leaves precede `left`)
    insert_at = sum(1 for c in lca.children if orig_order[id(c)] < k_left)
    if l_top in lca.children:
        insert_at += 1
    lca.children.insert(insert_at, merged)
    merged.parent = lca

    # collapse ancestors whose whole yield is now the single merged leaf
    nd = lca
    while nd is not None and len(nd.children) == 1 and _leaves(nd) == [merged]:
        parent = nd.parent
        if parent is None:
            nd.label = merged.label
            nd.token = merged.token
            nd.children = []
            break
        idx = parent.children.index(nd)
        parent.children[idx] = merged
        merged.parent = parent
        nd = parent


def merge_presplit(tree: ConstTree,
                   rules: Sequence[MergeRule] = DEFAULT_MERGE_RULES) -> ConstTree:
    """Fuse pre-split leaves (contractions, possessives, number symbols)
    into whole words, restoring the original surface text."""
    root = _to_mutable(tree.root)
    changed = True
    while changed:
        changed = False
        leaves = _leaves(root)
        for i, lf in enumerate(leaves):
            direction = _match_rule(lf.token, leaves, i, rules)
            if direction is None:
                continue
            if direction == "merge-left":
                if i == 0:
                    raise MergeError(f"token {lf.token!r} has no left neighbor")
                _fuse(leaves[i - 1], lf)
            else:
                if i == len(leaves) - 1:
                    raise MergeError(f"token {lf.token!r} has no right neighbor")
                _fuse(lf, leaves[i + 1])
            changed = True
            break
    return ConstTree(_to_const(root))


def _match_rule(token: str, leaves: list[_MNode], i: int,
                rules: Sequence[MergeRule]) -> str | None:
    if token == "$":
        # side resolved by the adjacent numeric token
        if i + 1 < len(leaves) and _is_numeric(leaves[i + 1].token):
            return "merge-right"
        if i > 0 and _is_numeric(leaves[i - 1].token):
            return "merge-left"
        return None
    for rule in rules:
        if rule.match == token:
            if token == "%" and not (i > 0 and _is_numeric(leaves[i - 1].token)):
                return None
            return rule.direction
    return None


def inject_swc(tree: ConstTree, model: BpeModel) -> ConstTree:
    """Split every multi-piece leaf into an SWC node with one leaf per
    subword piece (markers stripped); single-piece leaves are unchanged.
    SWC leaves are atomic, so the operation is idempotent."""

    def rebuild(n: ConstNode) -> ConstNode:
        if n.is_leaf:
            pieces = [strip_marker(p) for p in bpe_encode(model, n.token)]
            if len(pieces) <= 1:
                return ConstNode(n.label, token=n.token)
            return ConstNode("SWC", children=[ConstNode("X", token=p) for p in pieces])
        if n.label == "SWC":
            # already injected; children are atomic pieces
            return ConstNode("SWC", children=[ConstNode(c.label, token=c.token)
                                              for c in n.children])
        return ConstNode(n.label, children=[rebuild(c) for c in n.children])

    root = rebuild(tree.root)
    leaves = [lf.token for lf in iter_leaves(root)]
    # re-base alignment: consecutive pieces of one word share a word id
    word_ids = []
    for widx, count in enumerate(_word_piece_counts(root)):
        word_ids.extend([widx] * count)
    return ConstTree(root, TokenSeq(tuple(leaves), tuple(word_ids)))


def _word_piece_counts(n: ConstNode):
    """Yield piece counts per original word: an SWC node is one word."""
    if n.is_leaf:
        yield 1
    elif n.label == "SWC":
        yield len(n.children)
    else:
        for c in n.children:
            yield from _word_piece_counts(c)


def subword_stats(trees: Iterable[ConstTree],
                  conv: SpanConvention = SpanConvention()) -> dict[str, float]:
    """Fraction of SWC nodes among all counted constituents."""
    swc = total = 0
    n_trees = 0
    for t in trees:
        n_trees += 1
        n = len(t)
        for node in t.internal_nodes():
            if node.span.width == n and not conv.include_root:
                continue
            if node.span.width == 1 and not conv.include_single:
                continue
            total += 1
            if node.label == "SWC":
                swc += 1
    if n_trees == 0:
        raise ValueError("empty input")
    return {"swc_fraction": swc / total if total else 0.0}
