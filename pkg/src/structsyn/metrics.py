"""Unsupervised parsing metrics: unlabeled bracket P/R/F1, attachment
score, cross-run self-consistency, and subword-constituent recall.

Counts are exact integers and each reported number is a single final
float division, so no intermediate rounding can leak into the results.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Literal, Sequence

from .trees import ConstTree, DepTree, Span


@dataclass(frozen=True)
class SpanConvention:
    """Which node spans count as constituents.

    include_root: keep the whole-sentence span.
    include_single: keep width-1 spans where the tree has an explicit
    internal node over the token (bare leaves never count).
    """
    include_root: bool = False
    include_single: bool = True


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    n_pred: int
    n_gold: int
    n_match: int

    @classmethod
    def from_counts(cls, n_pred: int, n_gold: int, n_match: int) -> "EvalReport":
        p = n_match / n_pred if n_pred else 0.0
        r = n_match / n_gold if n_gold else 0.0
        f1 = 2 * n_match / (n_pred + n_gold) if (p + r) > 0 else 0.0
        return cls(p, r, f1, n_pred, n_gold, n_match)


def extract_const_spans(tree: ConstTree, conv: SpanConvention = SpanConvention()) -> set[Span]:
    """Spans of internal nodes, filtered by the convention."""
    n = len(tree)
    spans = set()
    for node in tree.internal_nodes():
        s = node.span
        if s.width == n and not conv.include_root:
            continue
        if s.width == 1 and not conv.include_single:
            continue
        spans.add(s)
    return spans


def const_prf(pred_spans: set[Span], gold_spans: set[Span]) -> EvalReport:
    return EvalReport.from_counts(
        len(pred_spans), len(gold_spans), len(pred_spans & gold_spans))


def uas(pred: DepTree, gold: DepTree) -> float:
    """Fraction of tokens with the same head (ROOT matches ROOT)."""
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gold)}")
    correct = sum(p == g for p, g in zip(pred.heads, gold.heads))
    return correct / len(pred)


def uas_counts(pred: DepTree, gold: DepTree) -> tuple[int, int]:
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gold)}")
    return sum(p == g for p, g in zip(pred.heads, gold.heads)), len(pred)


def corpus_aggregate(per_sentence: Sequence[EvalReport],
                     mode: Literal["micro", "macro"] = "micro") -> EvalReport:
    """micro pools the counts; macro averages per-sentence P, R, F1."""
    if not per_sentence:
        raise ValueError("empty report list")
    if mode == "micro":
        return EvalReport.from_counts(
            sum(r.n_pred for r in per_sentence),
            sum(r.n_gold for r in per_sentence),
            sum(r.n_match for r in per_sentence))
    if mode != "macro":
        raise ValueError("mode must be micro or macro")
    k = len(per_sentence)
    return EvalReport(
        sum(r.precision for r in per_sentence) / k,
        sum(r.recall for r in per_sentence) / k,
        sum(r.f1 for r in per_sentence) / k,
        sum(r.n_pred for r in per_sentence),
        sum(r.n_gold for r in per_sentence),
        sum(r.n_match for r in per_sentence))


def corpus_const_f1(pred: Sequence[ConstTree], gold: Sequence[ConstTree],
                    conv: SpanConvention = SpanConvention(),
                    mode: Literal["micro", "macro"] = "micro") -> EvalReport:
    if len(pred) != len(gold):
        raise ValueError("sentence-count mismatch")
    reports = [const_prf(extract_const_spans(p, conv), extract_const_spans(g, conv))
               for p, g in zip(pred, gold)]
    return corpus_aggregate(reports, mode)


def corpus_uas(pred: Sequence[DepTree], gold: Sequence[DepTree]) -> float:
    if len(pred) != len(gold):
        raise ValueError("sentence-count mismatch")
    correct = total = 0
    for p, g in zip(pred, gold):
        c, t = uas_counts(p, g)
        correct += c
        total += t
    return correct / total


@dataclass(frozen=True)
class ConsistencyReport:
    mean: float
    pairwise: tuple[tuple[int, int, float], ...]


def self_consistency_const(runs: Sequence[Sequence[ConstTree]],
                           conv: SpanConvention = SpanConvention()) -> ConsistencyReport:
    """Mean corpus UF1 over all unordered run pairs, one run as reference.

    F1 is symmetric in precision/recall, so the pair order does not matter.
    """
    _check_runs(runs)
    pairs = []
    for a, b in combinations(range(len(runs)), 2):
        pairs.append((a, b, corpus_const_f1(runs[a], runs[b], conv).f1))
    return ConsistencyReport(sum(p[2] for p in pairs) / len(pairs), tuple(pairs))


def self_consistency_dep(runs: Sequence[Sequence[DepTree]]) -> ConsistencyReport:
    """Mean corpus UAS over all unordered run pairs."""
    _check_runs(runs)
    pairs = []
    for a, b in combinations(range(len(runs)), 2):
        pairs.append((a, b, corpus_uas(runs[a], runs[b])))
    return ConsistencyReport(sum(p[2] for p in pairs) / len(pairs), tuple(pairs))


def _check_runs(runs) -> None:
    if len(runs) < 2:
        raise ValueError("need at least 2 runs")
    counts = {len(r) for r in runs}
    if len(counts) != 1:
        raise ValueError(f"mismatched sentence counts across runs: {sorted(counts)}")


class UndefinedSwcRecall(Exception):
    """The gold tree contains no SWC node."""


def swc_recall(pred: ConstTree, gold_with_swc: ConstTree) -> float:
    """Fraction of gold SWC node spans present as spans in pred, any label."""
    gold_swc = {n.span for n in gold_with_swc.internal_nodes() if n.label == "SWC"}
    if not gold_swc:
        raise UndefinedSwcRecall()
    pred_spans = {n.span for n in pred.internal_nodes()}
    return len(gold_swc & pred_spans) / len(gold_swc)


def corpus_swc_recall(pred: Sequence[ConstTree], gold: Sequence[ConstTree]) -> float:
    """Pooled SWC recall; sentences without SWC nodes contribute nothing."""
    if len(pred) != len(gold):
        raise ValueError("sentence-count mismatch")
    match = total = 0
    for p, g in zip(pred, gold):
        gold_swc = {n.span for n in g.internal_nodes() if n.label == "SWC"}
        if not gold_swc:
            continue
        pred_spans = {n.span for n in p.internal_nodes()}
        match += len(gold_swc & pred_spans)
        total += len(gold_swc)
    if total == 0:
        raise UndefinedSwcRecall()
    return match / total
