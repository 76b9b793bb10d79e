"""F1 evaluation over the hierarchy, the experiment runner, and the synthetic
corpus generator used as a ground-truth oracle.

Micro-F1 pools true/false positives over all non-root, non-dummy classes;
macro-F1 is the unweighted mean of per-class F1, where a class with no gold
and no predicted instances contributes 0 (fixed convention so runs stay
comparable).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import baselines
from .corpus import Dataset, Document, GoldLabels, Vocabulary, load_corpus, split_by_label_rate
from .model import EmConfig, PathModel, predict_all, train_pcem, train_pcnb
from .taxonomy import PathTable, Taxonomy, enumerate_paths, load_hierarchy

ALGORITHMS = ("pcnb", "pcem", "flat-nb", "flat-em", "td-nb", "td-em")


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class true/false positives and false negatives over eval classes."""

    classes: tuple[int, ...]    # node ids, root and dummies excluded
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    @classmethod
    def from_predictions(cls, pairs: Iterable[tuple[set[int], set[int]]],
                         classes: Sequence[int]) -> "ConfusionCounts":
        classes = tuple(classes)
        if not classes:
            raise ValueError("empty class set")
        pos = {c: i for i, c in enumerate(classes)}
        tp = np.zeros(len(classes), dtype=np.int64)
        fp = np.zeros(len(classes), dtype=np.int64)
        fn = np.zeros(len(classes), dtype=np.int64)
        for gold, pred in pairs:
            gold = {g for g in gold if g in pos}
            pred = {p for p in pred if p in pos}
            for c in gold & pred:
                tp[pos[c]] += 1
            for c in pred - gold:
                fp[pos[c]] += 1
            for c in gold - pred:
                fn[pos[c]] += 1
        return cls(classes, tp, fp, fn)


def micro_f1(c: ConfusionCounts) -> float:
    """Pooled-precision/recall F1: 2PR/(P+R), 0 when P+R is 0."""
    if not c.classes:
        raise ValueError("empty class set")
    tp, fp, fn = int(c.tp.sum()), int(c.fp.sum()), int(c.fn.sum())
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def _per_class_prf(c: ConfusionCounts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(c.tp + c.fp > 0, c.tp / np.maximum(c.tp + c.fp, 1), 0.0)
        r = np.where(c.tp + c.fn > 0, c.tp / np.maximum(c.tp + c.fn, 1), 0.0)
        f = np.where(p + r > 0, 2 * p * r / np.maximum(p + r, 1e-300), 0.0)
    return p, r, f


def macro_f1(c: ConfusionCounts) -> float:
    """Unweighted mean of per-class F1 over all eval classes."""
    if not c.classes:
        raise ValueError("empty class set")
    return float(_per_class_prf(c)[2].mean())


@dataclass(frozen=True)
class EvalReport:
    micro_f1: float
    macro_f1: float
    per_class: dict[str, tuple[float, float, float]]   # name -> (P, R, F1)


def evaluate_predictions(t: Taxonomy, pairs: Sequence[tuple[set[int], set[int]]]) -> EvalReport:
    counts = ConfusionCounts.from_predictions(pairs, t.eval_classes())
    p, r, f = _per_class_prf(counts)
    per_class = {t.nodes[c].name: (float(p[i]), float(r[i]), float(f[i]))
                 for i, c in enumerate(counts.classes)}
    return EvalReport(micro_f1(counts), macro_f1(counts), per_class)


def gold_node_set(doc: Document, t: Taxonomy) -> set[int]:
    if doc.gold is None:
        raise ValueError(f"document {doc.id!r} has no gold labels to evaluate against")
    return {nid for nid in doc.gold.by_depth.values() if not t.nodes[nid].is_dummy}


# ---------------------------------------------------------------------------
# Training/prediction dispatch shared by the runner and the service layer.

def train_model(algo: str, data: Dataset, t: Taxonomy, paths: PathTable, cfg: EmConfig):
    """Train ``algo``; returns (model, EmTrace or None for the NB variants)."""
    if algo == "pcnb":
        return train_pcnb(data, t, paths), None
    if algo == "pcem":
        return train_pcem(data, t, paths, cfg)
    if algo == "flat-nb":
        return baselines.train_flat_nb(data, t, paths), None
    if algo == "flat-em":
        return baselines.train_flat_em(data, t, paths, cfg)
    if algo == "td-nb":
        return baselines.train_topdown_nb(data, t), None
    if algo == "td-em":
        return baselines.train_topdown_em(data, t, cfg)
    raise ValueError(f"unknown algorithm {algo!r}; choose one of {', '.join(ALGORITHMS)}")


def make_predictor(model, paths: PathTable) -> Callable[[Sequence[Document]], list[tuple[int, ...]]]:
    """Per-document node-id predictions for any trained model kind."""
    if isinstance(model, baselines.TopDownModel):
        return lambda docs: baselines.predict_topdown_all(docs, model)
    return lambda docs: [nodes for _, nodes in predict_all(docs, model, paths)]


# ---------------------------------------------------------------------------
# Experiment runner.

@dataclass(frozen=True)
class ExperimentConfig:
    algos: tuple[str, ...]
    rates: tuple[float, ...]
    seeds: tuple[int, ...]
    hierarchy_file: str
    train_file: str
    test_file: str
    sims_file: str | None = None
    em: EmConfig = EmConfig()
    out_dir: str = "runs"

    def __post_init__(self):
        for algo in self.algos:
            if algo not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {algo!r}")
        if any(not 0.0 < r <= 1.0 for r in self.rates):
            raise ValueError("label rates must lie in (0, 1]")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if not self.rates or not self.seeds or not self.algos:
            raise ValueError("need at least one algorithm, rate, and seed")


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    rate: float
    seed: int
    micro_f1: float
    macro_f1: float
    iters: int
    seconds: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    aggregates: tuple[tuple[str, float, float, float], ...]   # (algo, rate, micro, macro)
    runs_csv: str
    aggregate_csv: str
    metadata_json: str

    def mean(self, algo: str, rate: float) -> tuple[float, float]:
        for a, r, micro, macro in self.aggregates:
            if a == algo and r == rate:
                return micro, macro
        raise KeyError((algo, rate))


def run_cell(algo: str, data: Dataset, t: Taxonomy, paths: PathTable, rate: float,
             seed: int, cfg: EmConfig) -> SweepRow:
    """One (algorithm, rate, seed) experiment: split, train, score the test set."""
    split = split_by_label_rate(data, rate, seed)
    tick = time.perf_counter()
    model, trace = train_model(algo, split, t, paths, cfg)
    seconds = time.perf_counter() - tick
    predict_nodes = make_predictor(model, paths)
    pairs = [(gold_node_set(doc, t), set(nodes))
             for doc, nodes in zip(split.test, predict_nodes(split.test))]
    report = evaluate_predictions(t, pairs)
    iters = trace.iterations if trace is not None else 0
    return SweepRow(algo, rate, seed, float(report.micro_f1), float(report.macro_f1),
                    iters, seconds)


def run_experiment(cfg: ExperimentConfig) -> SweepResult:
    """Sweep algorithms over (rate, seed) cells and write CSV/metadata artifacts.

    The aggregate CSV holds seed-averaged F1 per (algorithm, rate) and is
    byte-identical across invocations with the same config; wall-clock
    seconds appear only in the per-run CSV.
    """
    t = load_hierarchy(cfg.hierarchy_file)
    paths = enumerate_paths(t)
    data = load_corpus(cfg.train_file, t, test_file=cfg.test_file, sims_file=cfg.sims_file)
    if not data.test:
        raise ValueError("experiment needs a non-empty test set")

    rows: list[SweepRow] = []
    for algo in cfg.algos:
        for rate in cfg.rates:
            for seed in cfg.seeds:
                try:
                    rows.append(run_cell(algo, data, t, paths, rate, seed, cfg.em))
                except Exception as exc:
                    raise RuntimeError(
                        f"run failed (algo={algo}, rate={rate}, seed={seed}): {exc}") from exc

    aggregates = []
    for algo in cfg.algos:
        for rate in cfg.rates:
            cell = [r for r in rows if r.algorithm == algo and r.rate == rate]
            aggregates.append((algo, rate,
                               sum(r.micro_f1 for r in cell) / len(cell),
                               sum(r.macro_f1 for r in cell) / len(cell)))

    os.makedirs(cfg.out_dir, exist_ok=True)
    runs_csv = os.path.join(cfg.out_dir, "runs.csv")
    aggregate_csv = os.path.join(cfg.out_dir, "aggregate.csv")
    metadata_json = os.path.join(cfg.out_dir, "metadata.json")
    with open(runs_csv, "w", encoding="utf-8") as fh:
        fh.write("algorithm,rate,seed,micro_f1,macro_f1,iters,seconds\n")
        for r in rows:
            fh.write(f"{r.algorithm},{r.rate!r},{r.seed},{r.micro_f1!r},"
                     f"{r.macro_f1!r},{r.iters},{r.seconds:.3f}\n")
    with open(aggregate_csv, "w", encoding="utf-8") as fh:
        fh.write("algorithm,rate,micro_f1,macro_f1\n")
        for algo, rate, micro, macro in aggregates:
            fh.write(f"{algo},{rate!r},{micro!r},{macro!r}\n")
    with open(metadata_json, "w", encoding="utf-8") as fh:
        json.dump({"config": {**asdict(cfg), "em": asdict(cfg.em)},
                   "num_paths": paths.num_paths,
                   "vocab_size": len(data.vocabulary),
                   "train_docs": data.num_train,
                   "test_docs": len(data.test)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return SweepResult(tuple(rows), tuple(aggregates), runs_csv, aggregate_csv, metadata_json)


# ---------------------------------------------------------------------------
# Synthetic corpora with known generating parameters.

def random_model(num_paths: int, vocab_size: int, seed: int, *,
                 prior_concentration: float = 1.0,
                 word_concentration: float = 1.0) -> PathModel:
    """Dirichlet-sampled generator parameters (a ground-truth model for tests)."""
    rs = np.random.RandomState(seed)
    prior = rs.dirichlet([prior_concentration] * num_paths)
    words = rs.dirichlet([word_concentration] * vocab_size, size=num_paths)
    return PathModel(np.log(prior), np.log(words), vocab_size, num_paths)


def hierarchical_random_model(t: Taxonomy, paths: PathTable, vocab_size: int, seed: int, *,
                              ancestor_share: float = 0.6,
                              word_concentration: float = 0.08) -> PathModel:
    """Generator whose sibling paths share word mass through their ancestors.

    Each node draws a topic over words; a path's word distribution mixes the
    topics along the path with weights decaying by ``ancestor_share`` per
    level away from the leaf, so siblings look alike but remain separable.
    """
    rs = np.random.RandomState(seed)
    topics = rs.dirichlet([word_concentration] * vocab_size, size=t.num_nodes)
    d = paths.depth
    weights = np.array([ancestor_share ** (d - k) for k in range(1, d + 1)])
    weights /= weights.sum()
    rows = np.zeros((paths.num_paths, vocab_size))
    for j, chain in enumerate(paths.paths):
        for w, nid in zip(weights, chain):
            rows[j] += w * topics[nid]
    rows /= rows.sum(axis=1, keepdims=True)
    prior = rs.dirichlet([5.0] * paths.num_paths)
    return PathModel(np.log(prior), np.log(rows), vocab_size, paths.num_paths)


def generate_synthetic(t: Taxonomy, true_model: PathModel, n_docs: int,
                       doc_len_law: tuple[int, int], seed: int, *,
                       id_prefix: str = "synth") -> Dataset:
    """Sample documents from the path mixture: path, then length, then words i.i.d.

    Every document carries the gold labels of its generating path. Word draws
    use inverse-CDF sampling per path, equivalent to multinomial sampling.
    """
    if n_docs <= 0:
        raise ValueError("n_docs must be positive")
    lo, hi = doc_len_law
    if not 0 <= lo <= hi:
        raise ValueError("doc_len_law must satisfy 0 <= min <= max")
    rs = np.random.RandomState(seed)
    prior = np.exp(true_model.log_prior)
    prior /= prior.sum()
    chosen = rs.choice(true_model.num_paths, size=n_docs, p=prior)
    lengths = rs.randint(lo, hi + 1, size=n_docs)
    cdfs = np.cumsum(np.exp(true_model.log_word), axis=1)
    cdfs[:, -1] = 1.0

    vocab = Vocabulary(tuple(f"w{i:05d}" for i in range(true_model.vocab_size)))
    table = enumerate_paths(t)
    if table.num_paths != true_model.num_paths:
        raise ValueError("model path count does not match the taxonomy")
    labels_for_path = [GoldLabels({t.nodes[nid].depth: nid for nid in chain})
                       for chain in table.paths]
    docs = []
    width = len(str(n_docs))
    for i in range(n_docs):
        j = int(chosen[i])
        draws = np.searchsorted(cdfs[j], rs.random_sample(int(lengths[i])), side="right")
        idx, cnt = np.unique(draws, return_counts=True)
        counts = {int(w): int(c) for w, c in zip(idx, cnt)}
        docs.append(Document(f"{id_prefix}-{i:0{width}d}", counts, gold=labels_for_path[j]))
    return Dataset(vocab, tuple(docs))
