"""Unsupervised syntactic structure induction.

A masked-language-model transformer is retrofitted with a convolutional
parser network that predicts per-sentence syntactic distances and heights;
those scalars both constrain the attention of the upper transformer blocks
during training and deterministically induce unlabeled constituency and
dependency trees at inference time.
"""
from .bpe import BpeModel, bpe_encode, load_bpe, save_bpe, train_bpe
from .bracket import (
    BracketParseError,
    emit_bracket,
    parse_bracket,
    read_bracket_file,
    write_bracket_file,
)
from .conll import (
    ConllParseError,
    ConllSentence,
    dep_to_conll_sentence,
    emit_conll,
    parse_conll,
    read_conll_file,
    write_conll_file,
)
from .depfn import (
    dependency_matrix,
    dependency_matrix_grad,
    parent_prob,
    prob_in_constituent,
    span_prob,
)
from .estimator import StructureInducer
from .induction import (
    dep_tree_to_heights,
    distances_to_tree,
    heights_and_tree_to_dep,
    tree_to_distances,
)
from .metrics import (
    ConsistencyReport,
    EvalReport,
    SpanConvention,
    const_prf,
    corpus_const_f1,
    corpus_swc_recall,
    corpus_uas,
    extract_const_spans,
    self_consistency_const,
    self_consistency_dep,
    swc_recall,
    uas,
)
from .model import (
    ModelConfig,
    ModelState,
    encoder_forward,
    init_params,
    parser_forward,
    vanilla_forward,
)
from .preprocess import (
    EmptyAfterPreprocessing,
    is_punctuation,
    preprocess_ptb,
    preprocess_tokens,
    preprocess_tree,
    strip_labels,
)
from .subword import (
    DEFAULT_MERGE_RULES,
    MergeRule,
    inject_swc,
    load_merge_rules,
    merge_presplit,
    subword_stats,
)
from .training import TrainConfig, TrainResult, mlm_perplexity, train
from .trees import (
    ROOT,
    ConstNode,
    ConstTree,
    DepTree,
    Span,
    SyntaxProfile,
    TokenSeq,
    validate_const_tree,
    validate_dep_tree,
)
from .vocab import MASK, PAD, UNK, Vocab, build_word_vocab

__version__ = "0.1.0"

__all__ = [
    "BpeModel", "bpe_encode", "load_bpe", "save_bpe", "train_bpe",
    "BracketParseError", "emit_bracket", "parse_bracket",
    "read_bracket_file", "write_bracket_file",
    "ConllParseError", "ConllSentence", "dep_to_conll_sentence",
    "emit_conll", "parse_conll", "read_conll_file", "write_conll_file",
    "dependency_matrix", "dependency_matrix_grad", "parent_prob",
    "prob_in_constituent", "span_prob",
    "StructureInducer",
    "dep_tree_to_heights", "distances_to_tree", "heights_and_tree_to_dep",
    "tree_to_distances",
    "ConsistencyReport", "EvalReport", "SpanConvention", "const_prf",
    "corpus_const_f1", "corpus_swc_recall", "corpus_uas",
    "extract_const_spans", "self_consistency_const", "self_consistency_dep",
    "swc_recall", "uas",
    "ModelConfig", "ModelState", "encoder_forward", "init_params",
    "parser_forward", "vanilla_forward",
    "EmptyAfterPreprocessing", "is_punctuation", "preprocess_ptb",
    "preprocess_tokens", "preprocess_tree", "strip_labels",
    "DEFAULT_MERGE_RULES", "MergeRule", "inject_swc", "load_merge_rules",
    "merge_presplit", "subword_stats",
    "TrainConfig", "TrainResult", "mlm_perplexity", "train",
    "ROOT", "ConstNode", "ConstTree", "DepTree", "Span", "SyntaxProfile",
    "TokenSeq", "validate_const_tree", "validate_dep_tree",
    "MASK", "PAD", "UNK", "Vocab", "build_word_vocab",
    "__version__",
]
