"""Corpus loading: sparse bag-of-words documents, gold/weak labels, label-rate splits.

Document file format (UTF-8, one document per line):

    doc_id<TAB>label_spec<TAB>word:count word:count ...

where ``label_spec`` is one of
    ``-``            unlabeled
    ``name``         a single node name; its ancestor chain is implied
    ``a,b,c``        explicit per-depth node names (may skip depths)
    ``@`` / ``@file``  weak labels from a similarity file

Similarity file format: ``doc_id<TAB>depth<TAB>v1,v2,...,v_Mk`` with one value
per node at that depth, ordered like ``Taxonomy.levels`` (name-sorted).
A ``#vocab<TAB>w1 w2 ...`` header line pins the vocabulary order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy import sparse

from .taxonomy import Taxonomy, TaxonomyError


class CorpusError(ValueError):
    """Raised for malformed corpus or similarity files."""


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self._index and self.words:
            object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})
        if len(self._index) != len(self.words):
            raise CorpusError("vocabulary words must be unique")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> int:
        return self._index[word]


@dataclass(frozen=True)
class GoldLabels:
    """Per-depth gold node ids, depth -> node id. Depths may be partial."""

    by_depth: dict[int, int]

    @classmethod
    def from_nodes(cls, node_ids: Iterable[int], t: Taxonomy) -> "GoldLabels":
        """Validate node ids against the taxonomy and key them by depth."""
        by_depth: dict[int, int] = {}
        for nid in node_ids:
            node = t.nodes[nid]
            if node.depth == 0:
                raise CorpusError("the root cannot be a label")
            if node.depth in by_depth and by_depth[node.depth] != nid:
                raise CorpusError(
                    f"two labels at depth {node.depth}: "
                    f"{t.nodes[by_depth[node.depth]].name!r} and {node.name!r}")
            by_depth[node.depth] = nid
        for k, nid in by_depth.items():
            above = by_depth.get(k - 1)
            if above is not None and t.nodes[nid].parent != above:
                raise CorpusError(
                    f"label {t.nodes[nid].name!r} is not a child of {t.nodes[above].name!r}")
        if not by_depth:
            raise CorpusError("empty label set")
        return cls(by_depth)

    @property
    def max_depth(self) -> int:
        return max(self.by_depth)

    def node_ids(self) -> tuple[int, ...]:
        return tuple(self.by_depth[k] for k in sorted(self.by_depth))


@dataclass(frozen=True)
class WeakSimilarities:
    """Per-depth dense similarity vectors, depth -> (M_k,) float array."""

    by_depth: dict[int, np.ndarray]


@dataclass(frozen=True)
class Document:
    id: str
    counts: dict[int, int]            # word index -> frequency, strictly positive
    gold: GoldLabels | None = None
    weak: WeakSimilarities | None = None

    def __post_init__(self):
        for idx, cnt in self.counts.items():
            if cnt <= 0:
                raise CorpusError(f"doc {self.id!r}: non-positive count for word index {idx}")

    @property
    def length(self) -> int:
        return sum(self.counts.values())

    @property
    def is_labeled(self) -> bool:
        return self.gold is not None or self.weak is not None


@dataclass(frozen=True)
class Dataset:
    vocabulary: Vocabulary
    labeled: tuple[Document, ...]
    unlabeled: tuple[Document, ...] = ()
    test: tuple[Document, ...] = ()

    @property
    def num_train(self) -> int:
        return len(self.labeled) + len(self.unlabeled)


def docs_to_csr(docs: Iterable[Document], vocab_size: int) -> sparse.csr_matrix:
    """Stack documents into an (n_docs, vocab_size) CSR count matrix."""
    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for doc in docs:
        for idx in sorted(doc.counts):
            if idx >= vocab_size or idx < 0:
                raise CorpusError(f"doc {doc.id!r}: word index {idx} outside vocabulary "
                                  f"of size {vocab_size}")
            indices.append(idx)
            data.append(doc.counts[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64),
         np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(indptr) - 1, vocab_size))


def expand_gold(node_ids: Iterable[int], t: Taxonomy, *, implied_ancestors: bool) -> GoldLabels:
    """Expand explicit gold nodes into per-depth labels.

    Ancestors are implied when requested (single-name labels: a node pins its
    whole chain from the root). Whenever the deepest labeled node is an
    original leaf, its dummy extension is labeled too, so full-path scores
    stay at depth d after normalization.
    """
    ids = list(node_ids)
    if implied_ancestors:
        chains = {i for nid in ids for i in t.chain_from_root(nid)}
        ids = sorted(chains, key=lambda i: t.nodes[i].depth)
    labels = GoldLabels.from_nodes(ids, t)
    deepest = labels.by_depth[labels.max_depth]
    if t.is_original_leaf(deepest):
        extended = dict(labels.by_depth)
        for dummy in t.dummy_extension(deepest):
            extended[t.nodes[dummy].depth] = dummy
        labels = GoldLabels(extended)
    return labels


def parse_sims_file(path: str, t: Taxonomy) -> dict[str, WeakSimilarities]:
    """Parse a similarity file into per-document WeakSimilarities."""
    rows: dict[str, dict[int, np.ndarray]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CorpusError(f"{path}:{lineno}: expected 'doc<TAB>depth<TAB>values'")
            doc_id, depth_s, values_s = parts
            try:
                depth = int(depth_s)
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: bad depth {depth_s!r}") from None
            if not 1 <= depth <= t.depth:
                raise CorpusError(f"{path}:{lineno}: depth {depth} outside 1..{t.depth}")
            try:
                vec = np.array([float(v) for v in values_s.split(",")], dtype=np.float64)
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: bad similarity value") from None
            expected = len(t.levels[depth - 1])
            if vec.size != expected:
                raise CorpusError(f"{path}:{lineno}: depth {depth} needs {expected} values, "
                                  f"got {vec.size}")
            per_doc = rows.setdefault(doc_id, {})
            if depth in per_doc:
                raise CorpusError(f"{path}:{lineno}: duplicate depth {depth} for doc {doc_id!r}")
            per_doc[depth] = vec
    return {doc_id: WeakSimilarities(by_depth) for doc_id, by_depth in rows.items()}


def _parse_label_spec(spec: str, t: Taxonomy, where: str) -> GoldLabels | None:
    if spec == "-":
        return None
    try:
        if "," in spec:
            ids = [t.id_of(name.strip()) for name in spec.split(",")]
            return expand_gold(ids, t, implied_ancestors=False)
        return expand_gold([t.id_of(spec)], t, implied_ancestors=True)
    except TaxonomyError as exc:
        raise CorpusError(f"{where}: unknown label name ({exc})") from None
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def _parse_doc_lines(path: str):
    """Yield (lineno, doc_id, label_spec, [(word, count), ...]) plus a header vocab."""
    header_vocab: list[str] | None = None
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if line.startswith("#vocab\t"):
                    header_vocab = line.split("\t", 1)[1].split()
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                parts.append("")
            if len(parts) != 3 or not parts[0]:
                raise CorpusError(f"{path}:{lineno}: expected 'doc<TAB>labels<TAB>words'")
            doc_id, spec, words_s = parts
            pairs = []
            for tok in words_s.split():
                word, sep, cnt_s = tok.rpartition(":")
                if not sep or not word:
                    raise CorpusError(f"{path}:{lineno}: malformed word token {tok!r}")
                try:
                    cnt = int(cnt_s)
                except ValueError:
                    raise CorpusError(f"{path}:{lineno}: bad count in {tok!r}") from None
                if cnt <= 0:
                    raise CorpusError(f"{path}:{lineno}: non-positive count in {tok!r}")
                pairs.append((word, cnt))
            records.append((lineno, doc_id, spec, pairs))
    return header_vocab, records


def load_corpus(doc_file: str, hierarchy: Taxonomy, *,
                test_file: str | None = None,
                sims_file: str | None = None) -> Dataset:
    """Load a training (and optional test) corpus against a normalized taxonomy.

    The vocabulary comes from the ``#vocab`` header when present, otherwise
    from the union of words observed in the training and test files, in order
    of first appearance. Word occurrences in the test file never influence
    model counts; they only reserve vocabulary slots.
    """
    header_vocab, train_records = _parse_doc_lines(doc_file)
    test_records = []
    if test_file is not None:
        test_header, test_records = _parse_doc_lines(test_file)
        if header_vocab is None:
            header_vocab = test_header

    if header_vocab is not None:
        vocab = Vocabulary(tuple(header_vocab))
    else:
        seen: dict[str, None] = {}
        for _, _, _, pairs in (*train_records, *test_records):
            for word, _ in pairs:
                seen.setdefault(word)
        vocab = Vocabulary(tuple(seen))

    sims_cache: dict[str, dict[str, WeakSimilarities]] = {}

    def sims_for(spec: str, base_file: str, where: str) -> dict[str, WeakSimilarities]:
        name = spec[1:]
        if not name:
            if sims_file is None:
                raise CorpusError(f"{where}: '@' label but no similarity file given")
            resolved = sims_file
        else:
            resolved = name if os.path.isabs(name) else os.path.join(
                os.path.dirname(os.path.abspath(base_file)), name)
        if resolved not in sims_cache:
            sims_cache[resolved] = parse_sims_file(resolved, hierarchy)
        return sims_cache[resolved]

    def build(records, base_file: str) -> list[Document]:
        docs = []
        ids = set()
        for lineno, doc_id, spec, pairs in records:
            where = f"{base_file}:{lineno}"
            if doc_id in ids:
                raise CorpusError(f"{where}: duplicate doc id {doc_id!r}")
            ids.add(doc_id)
            counts: dict[int, int] = {}
            for word, cnt in pairs:
                try:
                    idx = vocab.index(word)
                except KeyError:
                    raise CorpusError(f"{where}: word {word!r} missing from vocabulary "
                                      "header") from None
                counts[idx] = counts.get(idx, 0) + cnt
            gold = None
            weak = None
            if spec.startswith("@"):
                table = sims_for(spec, base_file, where)
                weak = table.get(doc_id)
                if weak is None:
                    raise CorpusError(f"{where}: no similarity rows for doc {doc_id!r}")
            else:
                gold = _parse_label_spec(spec, hierarchy, where)
            docs.append(Document(doc_id, counts, gold=gold, weak=weak))
        return docs

    train_docs = build(train_records, doc_file)
    test_docs = build(test_records, test_file) if test_file is not None else []
    return Dataset(
        vocabulary=vocab,
        labeled=tuple(d for d in train_docs if d.is_labeled),
        unlabeled=tuple(d for d in train_docs if not d.is_labeled),
        test=tuple(test_docs),
    )


def load_docs(path: str, hierarchy: Taxonomy, vocab: Vocabulary, *,
              sims_file: str | None = None,
              on_unknown_word: str = "error") -> tuple[list[Document], int]:
    """Parse a document file against a fixed vocabulary (e.g. a saved model's).

    Returns the documents plus the number of word tokens dropped because they
    fall outside the vocabulary (only with ``on_unknown_word="drop"``).
    """
    if on_unknown_word not in ("error", "drop"):
        raise ValueError("on_unknown_word must be 'error' or 'drop'")
    _, records = _parse_doc_lines(path)
    sims_cache: dict[str, dict[str, WeakSimilarities]] = {}
    docs = []
    dropped = 0
    ids: set[str] = set()
    for lineno, doc_id, spec, pairs in records:
        where = f"{path}:{lineno}"
        if doc_id in ids:
            raise CorpusError(f"{where}: duplicate doc id {doc_id!r}")
        ids.add(doc_id)
        counts: dict[int, int] = {}
        for word, cnt in pairs:
            if word in vocab:
                idx = vocab.index(word)
                counts[idx] = counts.get(idx, 0) + cnt
            elif on_unknown_word == "drop":
                dropped += cnt
            else:
                raise CorpusError(f"{where}: word {word!r} not in the model vocabulary")
        gold = None
        weak = None
        if spec.startswith("@"):
            name = spec[1:]
            resolved = (sims_file if not name else
                        name if os.path.isabs(name) else
                        os.path.join(os.path.dirname(os.path.abspath(path)), name))
            if resolved is None:
                raise CorpusError(f"{where}: '@' label but no similarity file given")
            if resolved not in sims_cache:
                sims_cache[resolved] = parse_sims_file(resolved, hierarchy)
            weak = sims_cache[resolved].get(doc_id)
            if weak is None:
                raise CorpusError(f"{where}: no similarity rows for doc {doc_id!r}")
        else:
            gold = _parse_label_spec(spec, hierarchy, where)
        docs.append(Document(doc_id, counts, gold=gold, weak=weak))
    return docs, dropped


def split_by_label_rate(data: Dataset, rate: float, seed: int) -> Dataset:
    """Keep labels on round(rate * N) training docs; strip the rest into the unlabeled pool.

    Deterministic for a given seed; original document order is preserved on
    both sides of the split.
    """
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"label rate must be in (0, 1], got {rate}")
    if data.unlabeled:
        raise ValueError("split expects a fully labeled training set")
    n = len(data.labeled)
    n_keep = int(np.floor(rate * n + 0.5))   # round half up
    if n_keep == 0:
        raise ValueError(f"label rate {rate} leaves no labeled documents (N={n})")
    if n_keep >= n:
        return data
    perm = np.random.RandomState(seed).permutation(n)
    keep = np.zeros(n, dtype=bool)
    keep[perm[:n_keep]] = True
    kept = tuple(doc for doc, k in zip(data.labeled, keep) if k)
    stripped = tuple(replace(doc, gold=None, weak=None)
                     for doc, k in zip(data.labeled, keep) if not k)
    return Dataset(data.vocabulary, kept, stripped, data.test)


def weak_label_nodes(sims: WeakSimilarities, t: Taxonomy) -> dict[int, int]:
    """Per-depth argmax node ids; ties go to the lowest index in the level order."""
    choices: dict[int, int] = {}
    for k in range(1, t.depth + 1):
        vec = sims.by_depth.get(k)
        if vec is None:
            raise ValueError(f"missing similarity vector for depth {k}")
        level = t.levels[k - 1]
        if len(vec) != len(level):
            raise ValueError(f"depth {k} similarity vector has {len(vec)} values, "
                             f"expected {len(level)}")
        if np.isnan(vec).any():
            raise ValueError(f"NaN similarity at depth {k}")
        choices[k] = level[int(np.argmax(vec))]
    return choices


def format_label_spec(doc: Document, t: Taxonomy) -> str:
    if doc.gold is not None:
        return ",".join(t.nodes[nid].name for nid in doc.gold.node_ids())
    if doc.weak is not None:
        return "@"
    return "-"


def write_docs(docs: Iterable[Document], vocab: Vocabulary, path: str, *,
               taxonomy: Taxonomy, sims_path: str | None = None) -> None:
    """Serialize documents back to the corpus format (with a ``#vocab`` header).

    Weak-labeled documents get an ``@`` label spec and their similarity rows
    are written to ``sims_path`` (defaults to ``<path>.sims``).
    """
    docs = list(docs)
    sims_rows = []
    for doc in docs:
        if doc.weak is not None:
            for depth in sorted(doc.weak.by_depth):
                values = ",".join(repr(float(v)) for v in doc.weak.by_depth[depth])
                sims_rows.append(f"{doc.id}\t{depth}\t{values}\n")
    if sims_rows and sims_path is None:
        sims_path = path + ".sims"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#vocab\t" + " ".join(vocab.words) + "\n")
        for doc in docs:
            words = " ".join(f"{vocab.words[i]}:{doc.counts[i]}" for i in sorted(doc.counts))
            spec = format_label_spec(doc, taxonomy)
            if spec == "@" and sims_path is not None:
                spec = "@" + os.path.basename(sims_path)
            fh.write(f"{doc.id}\t{spec}\t{words}\n".rstrip() + "\n")
    if sims_rows:
        with open(sims_path, "w", encoding="utf-8") as fh:
            fh.writelines(sims_rows)
