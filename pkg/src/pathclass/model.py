"""Path-generated multinomial mixture: MAP estimation, inference, and the EM loop.

Parameters are a prior over root-to-leaf paths plus one multinomial over
words per path, both add-one smoothed and kept in natural-log space. Hard
path scores act as fractional event counts; the EM variant folds unlabeled
documents in through their posterior soft scores.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .corpus import Dataset, Document, docs_to_csr
from .scoring import PathScores, hard_score_matrix
from .taxonomy import PathTable, Taxonomy

NORMALIZATION_TOL = 1e-9


@dataclass(eq=False)
class PathModel:
    """Log-space parameters of the path mixture."""

    log_prior: np.ndarray   # (num_paths,)
    log_word: np.ndarray    # (num_paths, vocab_size)
    vocab_size: int
    num_paths: int

    def validate(self) -> None:
        if self.log_prior.shape != (self.num_paths,):
            raise ValueError("log_prior shape mismatch")
        if self.log_word.shape != (self.num_paths, self.vocab_size):
            raise ValueError("log_word shape mismatch")
        if not np.isfinite(self.log_prior).all() or not np.isfinite(self.log_word).all():
            raise ValueError("parameters must be finite (strictly positive probabilities)")
        if abs(np.exp(self.log_prior).sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("path prior does not normalize")
        rows = np.exp(self.log_word).sum(axis=1)
        if np.abs(rows - 1.0).max() > NORMALIZATION_TOL:
            raise ValueError("word distributions do not normalize")


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 50
    rel_tol: float = 1e-4
    min_iters: int = 2

    def __post_init__(self):
        if self.min_iters < 1 or self.max_iters < self.min_iters:
            raise ValueError("need max_iters >= min_iters >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class EmTrace:
    """Objective and timing per iteration; index 0 is the initial model.

    ``soft_sum_min``/``soft_sum_max`` record the extreme row sums of the
    soft score matrix produced by each E-step (diagnostics: both should be 1).
    """

    objectives: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    soft_sum_min: list[float] = field(default_factory=list)
    soft_sum_max: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return max(len(self.objectives) - 1, 0)

    def is_monotone(self, rel_slack: float = 1e-6) -> bool:
        return all(curr >= prev - rel_slack * abs(prev)
                   for prev, curr in zip(self.objectives, self.objectives[1:]))


def _estimate_from_counts(X: sparse.csr_matrix, S: np.ndarray,
                          num_paths: int, vocab_size: int) -> PathModel:
    """MAP estimates with add-one smoothing from a score matrix and count matrix."""
    if S.size:
        prior_num = 1.0 + S.sum(axis=0)
        word_num = 1.0 + (X.T @ S).T
    else:
        prior_num = np.ones(num_paths)
        word_num = np.ones((num_paths, vocab_size))
    log_prior = np.log(prior_num) - np.log(prior_num.sum())
    log_word = np.log(word_num) - np.log(word_num.sum(axis=1, keepdims=True))
    return PathModel(log_prior, log_word, vocab_size, num_paths)


def estimate(score_rows, *, num_paths: int, vocab_size: int) -> PathModel:
    """Estimate a PathModel from (Document, path scores) pairs.

    The prior numerator for path j is 1 plus the total score mass on j; the
    word numerators add each document's counts weighted by its score on j.
    An empty input yields the smoothing-only (uniform) model.
    """
    docs = []
    rows = []
    for doc, scores in score_rows:
        values = scores.values if isinstance(scores, PathScores) else np.asarray(scores, float)
        if values.shape != (num_paths,):
            raise ValueError(f"doc {doc.id!r}: score vector has shape {values.shape}, "
                             f"expected ({num_paths},)")
        docs.append(doc)
        rows.append(values)
    X = docs_to_csr(docs, vocab_size)
    S = np.asarray(rows, dtype=np.float64).reshape(len(docs), num_paths)
    return _estimate_from_counts(X, S, num_paths, vocab_size)


def _log_joint(X: sparse.csr_matrix, m: PathModel) -> np.ndarray:
    """(n_docs, num_paths) matrix of log(prior_j * P(x|j))."""
    return X @ m.log_word.T + m.log_prior


def posteriors(X: sparse.csr_matrix, m: PathModel) -> np.ndarray:
    """Row-normalized path posteriors, computed with a max shift per row."""
    L = _log_joint(X, m)
    L -= L.max(axis=1, keepdims=True)
    np.exp(L, out=L)
    L /= L.sum(axis=1, keepdims=True)
    return L


def posterior(doc: Document, m: PathModel) -> np.ndarray:
    """Per-path posterior for one document."""
    return posteriors(docs_to_csr([doc], m.vocab_size), m)[0]


def predict(doc: Document, m: PathModel, paths: PathTable) -> tuple[int, tuple[int, ...]]:
    """Most probable path and its non-dummy node ids (ties: lowest path index)."""
    j = int(np.argmax(posterior(doc, m)))
    return j, paths.non_dummy_nodes(j)


def predict_all(docs, m: PathModel, paths: PathTable) -> list[tuple[int, tuple[int, ...]]]:
    Q = posteriors(docs_to_csr(docs, m.vocab_size), m)
    best = np.argmax(Q, axis=1)
    return [(int(j), paths.non_dummy_nodes(int(j))) for j in best]


def dirichlet_log_prior(m: PathModel) -> float:
    """Log density (up to constants) of a Dirichlet(2) prior on every distribution.

    This is the prior whose MAP M-step is exactly the add-one smoothed update,
    which is what makes the monitored objective non-decreasing under EM.
    """
    return float(m.log_prior.sum() + m.log_word.sum())


def _objective_from_matrices(m: PathModel, X_l: sparse.csr_matrix, S_l: np.ndarray,
                             X_u: sparse.csr_matrix) -> float:
    total = dirichlet_log_prior(m)
    if X_l.shape[0]:
        total += float((S_l * _log_joint(X_l, m)).sum())
    if X_u.shape[0]:
        total += float(logsumexp(_log_joint(X_u, m), axis=1).sum())
    return total


def objective(m: PathModel, labeled, labeled_scores: np.ndarray, unlabeled=()) -> float:
    """Monitored log objective: Dirichlet(2) prior term, labeled per-path joint
    log-likelihoods weighted by the documents' path scores, and the unlabeled
    marginal likelihood.

    The score weighting matches the counts the M-step maximizes, which is what
    makes the EM trace provably non-decreasing; it reduces to the plain joint
    log-likelihood whenever a labeled document credits a single path. The
    document-length and multinomial-coefficient factors are constant in the
    parameters and omitted.
    """
    labeled = list(labeled)
    unlabeled = list(unlabeled)
    S_l = np.asarray(labeled_scores, dtype=np.float64).reshape(len(labeled), m.num_paths)
    return _objective_from_matrices(m, docs_to_csr(labeled, m.vocab_size), S_l,
                                    docs_to_csr(unlabeled, m.vocab_size))


def train_pcnb(data: Dataset, t: Taxonomy, paths: PathTable) -> PathModel:
    """Path cost-sensitive naive Bayes: MAP estimation from labeled hard scores."""
    if not data.labeled:
        raise ValueError("no labeled documents")
    S = hard_score_matrix(data.labeled, t, paths)
    X = docs_to_csr(data.labeled, len(data.vocabulary))
    return _estimate_from_counts(X, S, paths.num_paths, len(data.vocabulary))


def em_loop(X_l: sparse.csr_matrix, S_l: np.ndarray, X_u: sparse.csr_matrix,
            num_paths: int, vocab_size: int, cfg: EmConfig) -> tuple[PathModel, EmTrace]:
    """Shared EM engine over fixed hard scores and an unlabeled count matrix."""
    n_l, n_u = X_l.shape[0], X_u.shape[0]
    X_all = sparse.vstack([X_l, X_u], format="csr") if n_u else X_l
    S_all = np.zeros((n_l + n_u, num_paths))
    S_all[:n_l] = S_l

    started = time.perf_counter()
    model = _estimate_from_counts(X_l, S_l, num_paths, vocab_size)
    trace = EmTrace()
    trace.objectives.append(_objective_from_matrices(model, X_l, S_l, X_u))
    trace.seconds.append(time.perf_counter() - started)

    for iteration in range(1, cfg.max_iters + 1):
        tick = time.perf_counter()
        if n_u:
            Q = posteriors(X_u, model)
            sums = Q.sum(axis=1)
            trace.soft_sum_min.append(float(sums.min()))
            trace.soft_sum_max.append(float(sums.max()))
            S_all[n_l:] = Q
        model = _estimate_from_counts(X_all, S_all, num_paths, vocab_size)
        trace.objectives.append(_objective_from_matrices(model, X_l, S_l, X_u))
        trace.seconds.append(time.perf_counter() - tick)
        prev, curr = trace.objectives[-2], trace.objectives[-1]
        if iteration >= cfg.min_iters and abs(curr - prev) <= cfg.rel_tol * abs(prev):
            break
    return model, trace


def train_pcem(data: Dataset, t: Taxonomy, paths: PathTable,
               cfg: EmConfig = EmConfig()) -> tuple[PathModel, EmTrace]:
    """EM from the naive Bayes initializer: E-steps turn unlabeled posteriors
    into soft scores, M-steps re-estimate from labeled + soft counts.

    Stops once the relative objective change drops below ``cfg.rel_tol``
    (after ``cfg.min_iters`` iterations) or at ``cfg.max_iters``.
    """
    if not data.labeled:
        raise ValueError("no labeled documents")
    vocab_size = len(data.vocabulary)
    S_l = hard_score_matrix(data.labeled, t, paths)
    X_l = docs_to_csr(data.labeled, vocab_size)
    X_u = docs_to_csr(data.unlabeled, vocab_size)
    return em_loop(X_l, S_l, X_u, paths.num_paths, vocab_size, cfg)
