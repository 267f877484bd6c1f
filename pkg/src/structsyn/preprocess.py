"""PTB-style text preprocessing: punctuation removal, lowercasing, digit
replacement, OOV substitution, and label stripping for reference trees."""
from __future__ import annotations

import string

from .trees import ConstNode, ConstTree
from .vocab import UNK, Vocab

#: Tokens removed as punctuation.  The preprocessing convention only says
#: "remove all punctuation"; reproducibility requires an explicit list, so
#: a token is punctuation iff every character is in this set, plus the PTB
#: multi-character punctuation symbols below.
PUNCT_CHARS = frozenset(string.punctuation)
PUNCT_TOKENS = frozenset({
    "``", "''", "`", "'", "-LRB-", "-RRB-", "-LCB-", "-RCB-",
    "-lrb-", "-rrb-", "-lcb-", "-rcb-", "...", "--",
})

#: Digit characters are replaced with this marker.
DIGIT_MARKER = "N"


class EmptyAfterPreprocessing(Exception):
    """Sentence had only punctuation tokens; callers skip such sentences."""


def is_punctuation(token: str) -> bool:
    return token in PUNCT_TOKENS or all(c in PUNCT_CHARS for c in token)


def _normalize_token(token: str) -> str:
    # Per character: digits -> N, literal 'N' preserved (it is
    # indistinguishable from the digit marker on re-application), everything
    # else lowercased.  This makes the whole map idempotent; the cost is
    # that a capital N inside an ordinary word survives lowercasing.
    return "".join(
        DIGIT_MARKER if c.isdigit() else (c if c == DIGIT_MARKER else c.lower())
        for c in token)


def preprocess_tokens(tokens) -> list[str]:
    """Punctuation removal + lowercasing + digit replacement, no vocab."""
    return [_normalize_token(t) for t in tokens if not is_punctuation(t)]


def preprocess_ptb(tokens, vocab: Vocab) -> list[str]:
    """Full word-level preprocessing: normalize then replace OOV with <unk>.

    Raises EmptyAfterPreprocessing if nothing but punctuation remains.
    """
    kept = preprocess_tokens(tokens)
    if not kept:
        raise EmptyAfterPreprocessing()
    return [t if t in vocab else UNK for t in kept]


def strip_labels(tree: ConstTree, placeholder: str = "X") -> ConstTree:
    """Replace every node label with the placeholder, preserving SWC labels."""

    def strip(n: ConstNode) -> ConstNode:
        label = n.label if n.label == "SWC" else placeholder
        if n.is_leaf:
            return ConstNode(label, token=n.token)
        return ConstNode(label, children=[strip(c) for c in n.children])

    return ConstTree(strip(tree.root), tree.tokens)


def preprocess_tree(tree: ConstTree, vocab: Vocab | None = None,
                    lowercase: bool = True) -> ConstTree:
    """Apply the word-level preprocessing to a reference tree: drop
    punctuation leaves (pruning emptied nodes), normalize the remaining
    tokens, replace OOV with <unk> when a vocab is given, and strip labels.

    With lowercase=False only punctuation removal and label stripping are
    applied (the subword pipeline keeps case and digits).
    """

    def rebuild(n: ConstNode) -> ConstNode | None:
        if n.is_leaf:
            if is_punctuation(n.token):
                return None
            tok = _normalize_token(n.token) if lowercase else n.token
            if vocab is not None and tok not in vocab:
                tok = UNK
            return ConstNode(n.label, token=tok)
        kept = [c for c in (rebuild(c) for c in n.children) if c is not None]
        if not kept:
            return None
        # A phrase reduced to a single child keeps its own node, so explicit
        # single-token constituents survive (e.g. an NP over <unk>).
        return ConstNode(n.label, children=kept)

    root = rebuild(tree.root)
    if root is None:
        raise EmptyAfterPreprocessing()
    if root.is_leaf:
        root = ConstNode(tree.root.label, children=[root])
    return strip_labels(ConstTree(root))
