"""Generative comparison systems: flat naive Bayes / EM over leaf classes and
top-down cascades of per-node local classifiers.

Flat models reuse the path machinery with one-hot scores at the labeled
leaf's path, so a correct ancestor earns no partial credit. Top-down models
keep one multinomial classifier per internal node over its children and
classify by greedy descent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .corpus import Dataset, Document, docs_to_csr, weak_label_nodes
from .model import EmConfig, EmTrace, PathModel, _estimate_from_counts, em_loop
from .taxonomy import PathTable, Taxonomy


@dataclass(eq=False)
class FlatModel(PathModel):
    """A PathModel trained with one-hot leaf-path scores."""


@dataclass(eq=False)
class LocalClassifier:
    """Multinomial classifier of one internal node over its children."""

    children: tuple[int, ...]   # node ids, name-sorted
    log_prior: np.ndarray       # (num_children,)
    log_word: np.ndarray        # (num_children, vocab_size)


@dataclass(eq=False)
class TopDownModel:
    taxonomy: Taxonomy
    locals: dict[int, LocalClassifier]   # internal node id -> classifier
    vocab_size: int


def _flat_path_index(doc: Document, t: Taxonomy, paths: PathTable) -> int | None:
    """Leaf path of a labeled doc, or None when no depth-d label is available."""
    if doc.gold is not None:
        leaf = doc.gold.by_depth.get(t.depth)
    elif doc.weak is not None:
        leaf = weak_label_nodes(doc.weak, t)[t.depth]
    else:
        raise ValueError(f"document {doc.id!r} carries no labels")
    return None if leaf is None else paths.leaf_to_path[leaf]


def flat_score_matrix(docs, t: Taxonomy, paths: PathTable) -> tuple[np.ndarray, list[Document]]:
    """One-hot score rows for the docs that determine a leaf path (others are dropped)."""
    usable = []
    hits = []
    for doc in docs:
        j = _flat_path_index(doc, t, paths)
        if j is not None:
            usable.append(doc)
            hits.append(j)
    S = np.zeros((len(usable), paths.num_paths))
    S[np.arange(len(usable)), hits] = 1.0
    return S, usable


def _as_flat(m: PathModel) -> FlatModel:
    return FlatModel(m.log_prior, m.log_word, m.vocab_size, m.num_paths)


def train_flat_nb(data: Dataset, t: Taxonomy, paths: PathTable) -> FlatModel:
    if not data.labeled:
        raise ValueError("no labeled documents")
    S, usable = flat_score_matrix(data.labeled, t, paths)
    if not usable:
        raise ValueError("no labeled document determines a leaf path")
    X = docs_to_csr(usable, len(data.vocabulary))
    return _as_flat(_estimate_from_counts(X, S, paths.num_paths, len(data.vocabulary)))


def train_flat_em(data: Dataset, t: Taxonomy, paths: PathTable,
                  cfg: EmConfig = EmConfig()) -> tuple[FlatModel, EmTrace]:
    if not data.labeled:
        raise ValueError("no labeled documents")
    S, usable = flat_score_matrix(data.labeled, t, paths)
    if not usable:
        raise ValueError("no labeled document determines a leaf path")
    X_l = docs_to_csr(usable, len(data.vocabulary))
    X_u = docs_to_csr(data.unlabeled, len(data.vocabulary))
    model, trace = em_loop(X_l, S, X_u, paths.num_paths, len(data.vocabulary), cfg)
    return _as_flat(model), trace


def _internal_nodes(t: Taxonomy) -> list[int]:
    """Internal node ids (root included), shallow first."""
    return [n.id for n in sorted(t.nodes, key=lambda n: (n.depth, n.name)) if t.children[n.id]]


def _labeled_assignment(docs, t: Taxonomy) -> np.ndarray:
    """(n_docs, num_nodes) matrix: 1 where a doc is labeled with that node.

    Each labeled node routes its document into the local classifier of the
    node's tree parent, for gold and weak labels alike.
    """
    A = np.zeros((len(docs), t.num_nodes))
    for i, doc in enumerate(docs):
        if doc.gold is not None:
            chosen = doc.gold.by_depth.values()
        elif doc.weak is not None:
            chosen = weak_label_nodes(doc.weak, t).values()
        else:
            raise ValueError(f"document {doc.id!r} carries no labels")
        for nid in chosen:
            A[i, nid] = 1.0
    return A


def _fit_locals(X: sparse.csr_matrix, A: np.ndarray, t: Taxonomy,
                vocab_size: int) -> dict[int, LocalClassifier]:
    locals_: dict[int, LocalClassifier] = {}
    for v in _internal_nodes(t):
        kids = t.children[v]
        m = _estimate_from_counts(X, A[:, kids], len(kids), vocab_size)
        locals_[v] = LocalClassifier(kids, m.log_prior, m.log_word)
    return locals_


def train_topdown_nb(data: Dataset, t: Taxonomy) -> TopDownModel:
    if not data.labeled:
        raise ValueError("no labeled documents")
    vocab_size = len(data.vocabulary)
    X = docs_to_csr(data.labeled, vocab_size)
    A = _labeled_assignment(data.labeled, t)
    return TopDownModel(t, _fit_locals(X, A, t, vocab_size), vocab_size)


def routing_weights(X: sparse.csr_matrix, m: TopDownModel, *, soft: bool = True) -> np.ndarray:
    """(n_docs, num_nodes) probability of each document reaching each node.

    The root column is 1; a child's weight is its parent's weight times the
    parent-local posterior of the child (or an argmax indicator when hard).
    """
    t = m.taxonomy
    W = np.zeros((X.shape[0], t.num_nodes))
    W[:, t.root] = 1.0
    for v in _internal_nodes(t):
        local = m.locals[v]
        L = X @ local.log_word.T + local.log_prior
        L -= L.max(axis=1, keepdims=True)
        np.exp(L, out=L)
        L /= L.sum(axis=1, keepdims=True)
        if not soft:
            hard = np.zeros_like(L)
            hard[np.arange(L.shape[0]), np.argmax(L, axis=1)] = 1.0
            L = hard
        W[:, local.children] = W[:, [v]] * L
    return W


def _topdown_pseudo_objective(m: TopDownModel, X_l: sparse.csr_matrix, A_l: np.ndarray,
                              X_u: sparse.csr_matrix) -> float:
    """Convergence heuristic: Dirichlet(2) prior plus labeled local joints plus
    the unlabeled marginal of the cascade (log-sum over leaf chains)."""
    t = m.taxonomy
    total = sum(float(lc.log_prior.sum() + lc.log_word.sum()) for lc in m.locals.values())
    lj_u = np.zeros((X_u.shape[0], t.num_nodes))
    for v in _internal_nodes(t):
        local = m.locals[v]
        if X_l.shape[0]:
            picked_l = X_l @ local.log_word.T + local.log_prior
            total += float((A_l[:, local.children] * picked_l).sum())
        if X_u.shape[0]:
            picked_u = X_u @ local.log_word.T + local.log_prior
            lj_u[:, local.children] = lj_u[:, [v]] + picked_u
    if X_u.shape[0]:
        leaves = list(t.leaves())
        total += float(logsumexp(lj_u[:, leaves], axis=1).sum())
    return total


def train_topdown_em(data: Dataset, t: Taxonomy, cfg: EmConfig = EmConfig(), *,
                     soft_routing: bool = True) -> tuple[TopDownModel, EmTrace]:
    """Top-down EM: local classifiers re-estimated with unlabeled documents
    weighted by their routing probability under the current model."""
    if not data.labeled:
        raise ValueError("no labeled documents")
    vocab_size = len(data.vocabulary)
    X_l = docs_to_csr(data.labeled, vocab_size)
    X_u = docs_to_csr(data.unlabeled, vocab_size)
    A_l = _labeled_assignment(data.labeled, t)
    n_u = X_u.shape[0]
    X_all = sparse.vstack([X_l, X_u], format="csr") if n_u else X_l

    started = time.perf_counter()
    model = TopDownModel(t, _fit_locals(X_l, A_l, t, vocab_size), vocab_size)
    trace = EmTrace()
    trace.objectives.append(_topdown_pseudo_objective(model, X_l, A_l, X_u))
    trace.seconds.append(time.perf_counter() - started)

    for iteration in range(1, cfg.max_iters + 1):
        tick = time.perf_counter()
        if n_u:
            W = routing_weights(X_u, model, soft=soft_routing)
            A_all = np.vstack([A_l, W])
        else:
            A_all = A_l
        model = TopDownModel(t, _fit_locals(X_all, A_all, t, vocab_size), vocab_size)
        trace.objectives.append(_topdown_pseudo_objective(model, X_l, A_l, X_u))
        trace.seconds.append(time.perf_counter() - tick)
        prev, curr = trace.objectives[-2], trace.objectives[-1]
        if iteration >= cfg.min_iters and abs(curr - prev) <= cfg.rel_tol * abs(prev):
            break
    return model, trace


def _greedy_descent(docs, m: TopDownModel) -> list[list[int]]:
    t = m.taxonomy
    X = docs_to_csr(docs, m.vocab_size)
    current = np.full(X.shape[0], t.root)
    chains: list[list[int]] = [[] for _ in range(X.shape[0])]
    for _ in range(t.depth):
        for v in np.unique(current):
            local = m.locals[int(v)]
            rows = np.flatnonzero(current == v)
            L = X[rows] @ local.log_word.T + local.log_prior
            picked = np.argmax(L, axis=1)
            for r, p in zip(rows, picked):
                nid = local.children[int(p)]
                chains[r].append(nid)
                current[r] = nid
    return chains


def predict_topdown(doc: Document, m: TopDownModel) -> tuple[int, ...]:
    """Greedy descent: argmax child per level; returns non-dummy node ids."""
    return predict_topdown_all([doc], m)[0]


def predict_topdown_all(docs, m: TopDownModel) -> list[tuple[int, ...]]:
    t = m.taxonomy
    return [tuple(nid for nid in chain if not t.nodes[nid].is_dummy)
            for chain in _greedy_descent(docs, m)]


def predict_topdown_with_paths(docs, m: TopDownModel,
                               paths: PathTable) -> list[tuple[int, tuple[int, ...]]]:
    """(path index, non-dummy node ids) per document, like model.predict_all."""
    t = m.taxonomy
    return [(paths.leaf_to_path[chain[-1]],
             tuple(nid for nid in chain if not t.nodes[nid].is_dummy))
            for chain in _greedy_descent(docs, m)]
