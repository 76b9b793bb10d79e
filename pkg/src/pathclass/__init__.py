"""Path cost-sensitive naive Bayes and EM for hierarchical text classification."""

from .corpus import (Dataset, Document, GoldLabels, Vocabulary, WeakSimilarities,
                     load_corpus, split_by_label_rate, weak_label_nodes)
from .model import (EmConfig, EmTrace, PathModel, estimate, objective, posterior,
                    predict, train_pcem, train_pcnb)
from .scoring import (PathScores, node_scores_from_gold, path_scores,
                      scores_from_weak, soft_scores_from_posterior)
from .taxonomy import (PathTable, Taxonomy, TaxonomyNode, build_taxonomy,
                       enumerate_paths, load_hierarchy, normalize_depth)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "Document", "GoldLabels", "Vocabulary", "WeakSimilarities",
    "EmConfig", "EmTrace", "PathModel", "PathScores", "PathTable",
    "Taxonomy", "TaxonomyNode",
    "build_taxonomy", "enumerate_paths", "estimate", "load_corpus",
    "load_hierarchy", "node_scores_from_gold", "normalize_depth", "objective",
    "path_scores", "posterior", "predict", "scores_from_weak",
    "soft_scores_from_posterior", "split_by_label_rate", "train_pcem",
    "train_pcnb", "weak_label_nodes",
    "__version__",
]
