"""Complexity-impacted reasoning scores (CIRS) for code rationales.

Typical use::

    from cirs import score_corpus, stratify
    result = score_corpus(records)
    model, strata = stratify([(r["id"], s.score) for r, s in result.scored], k=3)
"""
__version__ = "0.1.0"

from .frontend import (
    AstSummary,
    ParseError,
    SourceUnit,
    SyntaxTree,
    Token,
    TokenKind,
    ValidityReport,
    parse_source,
    summarize_ast,
    tokenize,
    validate_syntax,
)
from .logical import (
    HalsteadCounts,
    LogicalMetrics,
    cyclomatic,
    difficulty,
    halstead_counts,
    logical_score,
    sigmoid,
)
from .scorer import (
    CirsScore,
    CorpusStats,
    accumulate_stats,
    cirs,
    score_corpus,
    score_source,
    structural_score,
)
from .stratify import (
    ClusterModel,
    StratumAssignment,
    ThresholdSet,
    filter_dataset,
    kmeans_1d,
    label_strata,
    prune_clusters,
    stratify,
)
