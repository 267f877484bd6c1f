"""Command-line interface.

Subcommands: preprocess | train | induce | eval-const | eval-dep |
self-consistency | swc-recall.

Configuration precedence is CLI flags > JSON config file (--config) >
built-in defaults.  Commands that produce artifacts write a run manifest
(config snapshot, seed, input hashes, artifact paths, tool version)
atomically before any output, so every output file is reproducible from
its manifest.  All commands exit 0 on success and nonzero with a
single-line error on stderr otherwise.  The STRUCTSYN_LOG environment
variable controls log verbosity only.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bpe import bpe_encode, load_bpe, save_bpe, train_bpe
from .bracket import emit_bracket, read_bracket_file, write_bracket_file
from .conll import dep_to_conll_sentence, read_conll_file, write_conll_file
from .induction import distances_to_tree, heights_and_tree_to_dep
from .metrics import (
    SpanConvention,
    corpus_const_f1,
    corpus_swc_recall,
    corpus_uas,
    self_consistency_const,
    self_consistency_dep,
)
from .model import ModelConfig, ModelState, encoder_forward, init_params
from .preprocess import EmptyAfterPreprocessing, preprocess_tokens, preprocess_tree
from .subword import DEFAULT_MERGE_RULES, inject_swc, load_merge_rules, merge_presplit
from .training import TrainConfig, train
from .trees import ROOT, TokenSeq
from .vocab import UNK, Vocab, build_word_vocab

log = logging.getLogger("structsyn")

#: Full-scale defaults ("full") and the tiny desk profile used by tests.
MODEL_PROFILES = {
    "full": dict(d_model=512, n_layers=8, n_heads=8, d_ff=2048,
                 parser_layers=3, conv_kernel=5, max_seq_len=256, dropout=0.1),
    "desk": dict(d_model=64, n_layers=2, n_heads=2, d_ff=128,
                 parser_layers=1, conv_kernel=3, max_seq_len=64, dropout=0.0),
}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _write_manifest(path: str, command: str, config: dict,
                    inputs: Sequence[str], artifacts: Sequence[str]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "inputs": {p: _sha256(p) for p in inputs},
        "artifacts": list(artifacts),
    }
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > JSON config file > defaults.  Flags left at None defer."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            file_cfg = json.load(f)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _read_token_lines(path: str) -> list[list[str]]:
    sentences = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            toks = line.split()
            if toks:
                sentences.append(toks)
    return sentences


def _write_token_lines(path: str, sentences) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(" ".join(s) + "\n")


# ---------------------------------------------------------------- preprocess

PREPROCESS_DEFAULTS = dict(mode="word", vocab_size=10000, bpe_size=512, seed=0)


def cmd_preprocess(args) -> int:
    cfg = _merge_config(args, PREPROCESS_DEFAULTS)
    if not args.input and not args.bracket:
        raise ValueError("preprocess needs --input and/or --bracket")
    os.makedirs(args.output_dir, exist_ok=True)
    out = lambda name: os.path.join(args.output_dir, name)
    inputs = [p for p in (args.input, args.bracket, args.merge_rules) if p]

    if cfg["mode"] == "word":
        trees = read_bracket_file(args.bracket) if args.bracket else []
        if args.input:
            raw = _read_token_lines(args.input)
        else:
            raw = [list(t.tokens.tokens) for t in trees]
        normalized = []
        for s in raw:
            toks = preprocess_tokens(s)
            if toks:
                normalized.append(toks)
            else:
                log.warning("dropping sentence with only punctuation: %r", s)
        if not normalized:
            raise ValueError("no sentences left after preprocessing")
        vocab = build_word_vocab(normalized, cfg["vocab_size"])
        corpus = [[t if t in vocab else UNK for t in s] for s in normalized]
        artifacts = [out("corpus.txt"), out("vocab.txt")]
        if trees:
            artifacts.append(out("trees.txt"))
        _write_manifest(out("manifest.json"), "preprocess", cfg, inputs, artifacts)
        _write_token_lines(out("corpus.txt"), corpus)
        vocab.save(out("vocab.txt"))
        if trees:
            kept = []
            for t in trees:
                try:
                    kept.append(preprocess_tree(t, vocab))
                except EmptyAfterPreprocessing:
                    log.warning("dropping punctuation-only reference tree")
            write_bracket_file(out("trees.txt"), kept)
        return 0

    if cfg["mode"] != "subword":
        raise ValueError(f"unknown mode {cfg['mode']!r}")
    if not args.bracket:
        raise ValueError("subword mode needs --bracket reference trees")
    rules = (load_merge_rules(args.merge_rules) if args.merge_rules
             else DEFAULT_MERGE_RULES)
    trees = read_bracket_file(args.bracket)
    merged_trees = []
    for t in trees:
        t = merge_presplit(t, rules)
        try:
            merged_trees.append(preprocess_tree(t, lowercase=False))
        except EmptyAfterPreprocessing:
            log.warning("dropping punctuation-only reference tree")
    if not merged_trees:
        raise ValueError("no trees left after preprocessing")
    words = [[lf.token for lf in t.leaves()] for t in merged_trees]
    bpe = train_bpe(words, cfg["bpe_size"])
    swc_trees = [inject_swc(t, bpe) for t in merged_trees]
    corpus = [list(t.tokens.tokens) for t in swc_trees]
    artifacts = [out("corpus.txt"), out("bpe.model"), out("trees_swc.txt")]
    _write_manifest(out("manifest.json"), "preprocess", cfg, inputs, artifacts)
    _write_token_lines(out("corpus.txt"), corpus)
    save_bpe(bpe, out("bpe.model"))
    write_bracket_file(out("trees_swc.txt"), swc_trees)
    return 0


# --------------------------------------------------------------------- train

TRAIN_DEFAULTS = dict(
    profile="full", arch="structformer", parser_pos=0,
    d_model=None, n_layers=None, n_heads=None, d_ff=None,
    parser_layers=None, conv_kernel=None, max_seq_len=None, dropout=None,
    mask_rate=0.3, batch_tokens=4096, epochs=100, lr=5e-4, warmup_steps=200,
    max_steps=None, seed=0,
)


def cmd_train(args) -> int:
    cfg = _merge_config(args, TRAIN_DEFAULTS)
    vocab = Vocab.load(args.vocab)
    corpus = [vocab.encode(s) for s in _read_token_lines(args.corpus)]
    valid_path = args.valid or args.corpus
    valid = [vocab.encode(s) for s in _read_token_lines(valid_path)]
    dims = dict(MODEL_PROFILES[cfg["profile"]])
    for key in dims:
        if cfg[key] is not None:
            dims[key] = cfg[key]
    model_cfg = ModelConfig(vocab_size=len(vocab), parser_pos=cfg["parser_pos"],
                            seed=cfg["seed"], **dims)
    os.makedirs(args.output_dir, exist_ok=True)
    out = lambda name: os.path.join(args.output_dir, name)
    artifacts = [out("checkpoint.npz"), out("metrics.jsonl")]
    inputs = [args.corpus, args.vocab] + ([args.valid] if args.valid else [])
    _write_manifest(out("manifest.json"), "train",
                    {**cfg, "model": dims}, inputs, artifacts)
    state = init_params(model_cfg)
    train_cfg = TrainConfig(
        mask_rate=cfg["mask_rate"], batch_tokens=cfg["batch_tokens"],
        epochs=cfg["epochs"], lr=cfg["lr"], warmup_steps=cfg["warmup_steps"],
        seed=cfg["seed"], arch=cfg["arch"],
        checkpoint_path=out("checkpoint.npz"), metrics_path=out("metrics.jsonl"))
    result = train(state, corpus, valid, train_cfg, vocab,
                   max_steps=cfg["max_steps"])
    log.info("best validation loss: %s", result.best_valid_loss)
    return 0


# -------------------------------------------------------------------- induce

INDUCE_DEFAULTS = dict(dump_numeric=False, seed=0)


def cmd_induce(args) -> int:
    cfg = _merge_config(args, INDUCE_DEFAULTS)
    state = ModelState.load(args.checkpoint)
    vocab = Vocab.load(args.vocab)
    if len(vocab) != state.config.vocab_size:
        raise ValueError(
            f"vocab size {len(vocab)} does not match checkpoint "
            f"vocab_size {state.config.vocab_size}")
    sentences = _read_token_lines(args.input)
    os.makedirs(args.output_dir, exist_ok=True)
    out = lambda name: os.path.join(args.output_dir, name)
    artifacts = [out("induced.brackets"), out("induced.conll")]
    dump_dir = out("numeric")
    if cfg["dump_numeric"]:
        artifacts.append(dump_dir)
    _write_manifest(out("manifest.json"), "induce", cfg,
                    [args.checkpoint, args.vocab, args.input], artifacts)
    if cfg["dump_numeric"]:
        os.makedirs(dump_dir, exist_ok=True)
    const_trees, conll = [], []
    for idx, toks in enumerate(sentences):
        ids = vocab.encode(toks)
        _, profile, pd = encoder_forward(ids, state)
        seq = TokenSeq(tuple(toks))
        ctree = distances_to_tree(seq, profile.distances)
        dtree = heights_and_tree_to_dep(profile.heights, ctree)
        const_trees.append(ctree)
        conll.append(dep_to_conll_sentence(seq, dtree))
        if cfg["dump_numeric"]:
            base = os.path.join(dump_dir, f"{idx:05d}")
            np.savetxt(base + ".d.txt", np.asarray(profile.distances))
            np.savetxt(base + ".h.txt", np.asarray(profile.heights))
            np.savetxt(base + ".pd.txt", pd)
    write_bracket_file(out("induced.brackets"), const_trees)
    write_conll_file(out("induced.conll"), conll)
    return 0


# ---------------------------------------------------------------- evaluation

def _emit_report(report: dict, out_path: Optional[str], command: str,
                 config: dict, inputs: Sequence[str]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path:
        _write_manifest(out_path + ".manifest.json", command, config,
                        inputs, [out_path])
        _atomic_write_text(out_path, text)
    sys.stdout.write(text)


EVAL_CONST_DEFAULTS = dict(include_root=False, include_single=True,
                           aggregate="micro")


def cmd_eval_const(args) -> int:
    cfg = _merge_config(args, EVAL_CONST_DEFAULTS)
    pred = read_bracket_file(args.pred)
    gold = read_bracket_file(args.gold)
    conv = SpanConvention(cfg["include_root"], cfg["include_single"])
    rep = corpus_const_f1(pred, gold, conv, cfg["aggregate"])
    _emit_report(
        {"precision": rep.precision, "recall": rep.recall, "f1": rep.f1,
         "n_pred": rep.n_pred, "n_gold": rep.n_gold, "n_match": rep.n_match,
         "aggregate": cfg["aggregate"]},
        args.out, "eval-const", cfg, [args.pred, args.gold])
    return 0


def cmd_eval_dep(args) -> int:
    cfg = _merge_config(args, {})
    pred = [s.tree for s in read_conll_file(args.pred)]
    gold = [s.tree for s in read_conll_file(args.gold)]
    _emit_report({"uas": corpus_uas(pred, gold)},
                 args.out, "eval-dep", cfg, [args.pred, args.gold])
    return 0


SELF_CONSISTENCY_DEFAULTS = dict(kind="const")


def cmd_self_consistency(args) -> int:
    cfg = _merge_config(args, SELF_CONSISTENCY_DEFAULTS)
    if cfg["kind"] == "const":
        runs = [read_bracket_file(p) for p in args.runs]
        rep = self_consistency_const(runs)
    elif cfg["kind"] == "dep":
        runs = [[s.tree for s in read_conll_file(p)] for p in args.runs]
        rep = self_consistency_dep(runs)
    else:
        raise ValueError(f"unknown kind {cfg['kind']!r}")
    _emit_report(
        {"mean": rep.mean,
         "pairwise": [{"run_a": a, "run_b": b, "score": s}
                      for a, b, s in rep.pairwise]},
        args.out, "self-consistency", cfg, list(args.runs))
    return 0


def cmd_swc_recall(args) -> int:
    cfg = _merge_config(args, {})
    pred = read_bracket_file(args.pred)
    gold = read_bracket_file(args.gold)
    _emit_report({"swc_recall": corpus_swc_recall(pred, gold)},
                 args.out, "swc-recall", cfg, [args.pred, args.gold])
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="structsyn", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="JSON config file (flags win)")
        return p

    p = add("preprocess", cmd_preprocess, help="tokenize corpus, build vocab/BPE")
    p.add_argument("--input", help="raw text, one sentence per line")
    p.add_argument("--bracket", help="reference constituency trees")
    p.add_argument("--merge-rules", dest="merge_rules",
                   help="pre-split merge rule file (subword mode)")
    p.add_argument("--mode", choices=["word", "subword"])
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--bpe-size", dest="bpe_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir", required=True)

    p = add("train", cmd_train, help="MLM pretraining")
    p.add_argument("--corpus", required=True)
    p.add_argument("--valid")
    p.add_argument("--vocab", required=True)
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--profile", choices=["full", "desk"])
    p.add_argument("--arch", choices=["structformer", "vanilla"])
    p.add_argument("--parser-pos", dest="parser_pos", type=int)
    for dim in ("d-model", "n-layers", "n-heads", "d-ff", "parser-layers",
                "conv-kernel", "max-seq-len"):
        p.add_argument(f"--{dim}", dest=dim.replace("-", "_"), type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--mask-rate", dest="mask_rate", type=float)
    p.add_argument("--batch-tokens", dest="batch_tokens", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--warmup-steps", dest="warmup_steps", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--seed", type=int)

    p = add("induce", cmd_induce, help="induce trees from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--dump-numeric", dest="dump_numeric", action="store_const",
                   const=True, help="dump D, H, P_D text sidecars")
    p.add_argument("--seed", type=int)

    p = add("eval-const", cmd_eval_const, help="unlabeled bracket P/R/F1")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--include-root", dest="include_root", action="store_const", const=True)
    p.add_argument("--exclude-single", dest="include_single", action="store_const", const=False)
    p.add_argument("--aggregate", choices=["micro", "macro"])
    p.add_argument("--out")

    p = add("eval-dep", cmd_eval_dep, help="unlabeled attachment score")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")

    p = add("self-consistency", cmd_self_consistency,
            help="mean pairwise agreement across runs")
    p.add_argument("--kind", choices=["const", "dep"])
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out")

    p = add("swc-recall", cmd_swc_recall, help="subword-constituent recall")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("STRUCTSYN_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        raise
    except Exception as e:  # noqa: BLE001 - CLI boundary
        msg = str(e).replace("\n", " ")
        print(f"error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
