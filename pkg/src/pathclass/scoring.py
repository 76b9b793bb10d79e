"""Node and path scores: the graded event counts that drive estimation.

A labeled document scores 1 on each of its labeled nodes; a path's score is
the sum of its member nodes' scores, so paths sharing labeled ancestors with
the true path earn partial credit. Posteriors of unlabeled documents slot in
as soft scores that sum to 1, which keeps any single unlabeled document
lighter than a labeled one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import Document, GoldLabels, WeakSimilarities, weak_label_nodes
from .taxonomy import PathTable, Taxonomy

SOFT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PathScores:
    """Per-path scores for one document. Hard scores are integers in [0, d];
    soft scores are probabilities summing to 1."""

    values: np.ndarray
    soft: bool = False


def node_scores_from_gold(labels: GoldLabels | Mapping[int, int], t: Taxonomy) -> np.ndarray:
    """0/1 indicator per node id for the given per-depth labels.

    Pure indicator: ancestors score 0 unless explicitly listed (label
    expansion happens when labels are constructed, not here).
    """
    by_depth = labels.by_depth if isinstance(labels, GoldLabels) else dict(labels)
    scores = np.zeros(t.num_nodes, dtype=np.float64)
    for depth, nid in by_depth.items():
        if not 1 <= depth <= t.depth:
            raise ValueError(f"label at depth {depth} outside 1..{t.depth}")
        node = t.nodes[nid]
        if node.depth != depth:
            raise ValueError(f"node {node.name!r} has depth {node.depth}, keyed as {depth}")
        scores[nid] = 1.0
    return scores


def path_scores(node_scores: np.ndarray, paths: PathTable) -> PathScores:
    """Sum member-node scores along every path (the root never contributes)."""
    if node_scores.shape[0] <= paths.matrix.max():
        raise ValueError("node score vector does not cover all path nodes")
    return PathScores(node_scores[paths.matrix].sum(axis=1))


def scores_from_weak(sims: WeakSimilarities, t: Taxonomy, paths: PathTable) -> PathScores:
    """Path scores from per-depth similarity argmaxes (binarized weak labels)."""
    return path_scores(node_scores_from_gold(weak_label_nodes(sims, t), t), paths)


def soft_scores_from_posterior(posterior: np.ndarray) -> PathScores:
    """Wrap a per-path posterior as a soft score vector."""
    values = np.asarray(posterior, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("posterior must be one-dimensional")
    if (values < 0).any():
        raise ValueError("posterior has negative entries")
    total = values.sum()
    if abs(total - 1.0) > SOFT_SUM_TOL:
        raise ValueError(f"posterior sums to {total!r}, expected 1")
    return PathScores(values, soft=True)


def hard_scores_for(doc: Document, t: Taxonomy, paths: PathTable) -> PathScores:
    """Hard path scores of a labeled document (gold labels win over weak ones)."""
    if doc.gold is not None:
        return path_scores(node_scores_from_gold(doc.gold, t), paths)
    if doc.weak is not None:
        return scores_from_weak(doc.weak, t, paths)
    raise ValueError(f"document {doc.id!r} carries no labels")


def hard_score_matrix(docs, t: Taxonomy, paths: PathTable) -> np.ndarray:
    """(n_docs, num_paths) matrix of hard scores for labeled documents."""
    out = np.zeros((len(docs), paths.num_paths), dtype=np.float64)
    for i, doc in enumerate(docs):
        out[i] = hard_scores_for(doc, t, paths).values
    return out


def dump_scores_csv(docs, matrix: np.ndarray, path: str) -> None:
    """Debug dump of a score matrix as ``doc_id,path_index,score`` rows
    (zero entries omitted)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("doc_id,path_index,score\n")
        for doc, row in zip(docs, matrix):
            for j in np.flatnonzero(row):
                fh.write(f"{doc.id},{j},{float(row[j])!r}\n")
