"""Propaganda detection pipeline: span identification and 14-way technique
classification, with pluggable embeddings and character-overlap scoring."""

from .corpus import (
    Article,
    CharSpan,
    Fragment,
    SILabelSequence,
    TechniqueInstance,
    Token,
    TECHNIQUES,
    TECHNIQUE_NAMES,
    labels_to_spans,
    load_articles,
    load_si_spans,
    load_tc_instances,
    project_labels,
    split_fragments,
    tokenize,
)
from .scorer import SIScore, TCScore, score_si, score_tc
from .si_post import majority_vote, merge_spans

__version__ = "0.1.0"

__all__ = [
    "Article", "CharSpan", "Fragment", "SILabelSequence", "TechniqueInstance",
    "Token", "TECHNIQUES", "TECHNIQUE_NAMES", "labels_to_spans", "load_articles",
    "load_si_spans", "load_tc_instances", "project_labels", "split_fragments",
    "tokenize", "SIScore", "TCScore", "score_si", "score_tc", "majority_vote",
    "merge_spans", "__version__",
]
