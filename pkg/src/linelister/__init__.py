"""Automated epidemiological line listing from parsed outbreak bulletins.

The pipeline ingests CoNLL-U parses of bulletin text, trains skip-gram word
embeddings over the corpus, grows user seed indicators into indicator sets,
extracts one tabular row per patient via dependency-graph queries, and can
score the result against a human-annotated gold line list.
"""

from .corpus import (
    Bulletin,
    DatePhrase,
    Sentence,
    Token,
    Vocabulary,
    build_vocabulary,
    load_bulletin,
    parse_bulletin,
)
from .depgraph import DepGraph, build_graph, dependency_distance, neighbors, predecessors
from .embeddings import (
    EmbeddingModel,
    IndicatorSet,
    TrainingParams,
    cosine,
    grow_seed,
    train,
)
from .evaluation import EvalReport, GoldCase, evaluate_corpus, match_bulletin, quality_score
from .extract import (
    DEFAULT_FEATURE_SPECS,
    FeatureSpec,
    LineListCase,
    LineListExtractor,
    extract_line_list,
)
from .infer import Histogram, demographic_distribution, interval_distribution

__version__ = "0.1.0"

__all__ = [
    "Bulletin",
    "DatePhrase",
    "DepGraph",
    "DEFAULT_FEATURE_SPECS",
    "EmbeddingModel",
    "EvalReport",
    "FeatureSpec",
    "GoldCase",
    "Histogram",
    "IndicatorSet",
    "LineListCase",
    "LineListExtractor",
    "Sentence",
    "Token",
    "TrainingParams",
    "Vocabulary",
    "build_graph",
    "build_vocabulary",
    "cosine",
    "demographic_distribution",
    "dependency_distance",
    "evaluate_corpus",
    "extract_line_list",
    "grow_seed",
    "interval_distribution",
    "load_bulletin",
    "match_bulletin",
    "neighbors",
    "parse_bulletin",
    "predecessors",
    "quality_score",
    "train",
]
