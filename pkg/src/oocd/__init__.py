"""Out-of-context caption-pair detection pipeline."""

__version__ = "0.1.0"

from .dataset import Dataset, SplitSpec, TripletRecord, load_dataset, make_cv_folds, split_train_test
from .features import FEATURE_ORDER, FeatureRow, assemble_features
from .gate import GateConfig, GateDecision, gate_by_iou
from .prompting import GptFeatureVector, parse_feature_vector, render_prompt
from .similarity import SimilarityVector, fetch_similarity, lexical_similarity_fallback

__all__ = [
    "Dataset",
    "FEATURE_ORDER",
    "FeatureRow",
    "GateConfig",
    "GateDecision",
    "GptFeatureVector",
    "SimilarityVector",
    "SplitSpec",
    "TripletRecord",
    "assemble_features",
    "fetch_similarity",
    "gate_by_iou",
    "lexical_similarity_fallback",
    "load_dataset",
    "make_cv_folds",
    "parse_feature_vector",
    "render_prompt",
    "split_train_test",
]
