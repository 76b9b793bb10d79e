"""Versioned text serialization of trained models.

The JSON format stores full-precision floats (shortest round-tripping
decimal repr), the vocabulary, the taxonomy rows, and the canonical path
order, so a saved model is self-contained for prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .baselines import FlatModel, LocalClassifier, TopDownModel
from .corpus import Vocabulary
from .model import PathModel
from .taxonomy import Taxonomy, _assemble, enumerate_paths

FORMAT_NAME = "pathclass-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be parsed."""


@dataclass
class ModelBundle:
    algo: str
    model: PathModel | TopDownModel
    vocabulary: Vocabulary
    taxonomy: Taxonomy

    @property
    def kind(self) -> str:
        if isinstance(self.model, TopDownModel):
            return "topdown"
        return "flat" if isinstance(self.model, FlatModel) else "path"


def _tree_rows(t: Taxonomy) -> list[list]:
    return [[n.name, None if n.parent is None else t.nodes[n.parent].name, n.is_dummy]
            for n in t.nodes]


def save_model(bundle: ModelBundle, path: str) -> None:
    t = bundle.taxonomy
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "algo": bundle.algo,
        "kind": bundle.kind,
        "vocab": list(bundle.vocabulary.words),
        "tree": _tree_rows(t),
        "paths": [list(names) for names in enumerate_paths(t).names],
    }
    if isinstance(bundle.model, TopDownModel):
        doc["locals"] = {
            t.nodes[v].name: {
                "children": [t.nodes[c].name for c in lc.children],
                "log_prior": lc.log_prior.tolist(),
                "log_word": lc.log_word.tolist(),
            }
            for v, lc in bundle.model.locals.items()
        }
    else:
        doc["log_prior"] = bundle.model.log_prior.tolist()
        doc["log_word"] = bundle.model.log_word.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str) -> ModelBundle:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    if doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {doc.get('version')!r}")

    t = _assemble([(name, parent, dummy) for name, parent, dummy in doc["tree"]])
    vocab = Vocabulary(tuple(doc["vocab"]))
    saved_paths = [tuple(names) for names in doc["paths"]]
    if list(enumerate_paths(t).names) != saved_paths:
        raise ModelFormatError(f"{path}: stored path order disagrees with the taxonomy")

    kind = doc.get("kind", "path")
    if kind == "topdown":
        locals_ = {}
        for name, entry in doc["locals"].items():
            children = tuple(t.id_of(c) for c in entry["children"])
            locals_[t.id_of(name)] = LocalClassifier(
                children,
                np.asarray(entry["log_prior"], dtype=np.float64),
                np.asarray(entry["log_word"], dtype=np.float64))
        model: PathModel | TopDownModel = TopDownModel(t, locals_, len(vocab))
    else:
        log_prior = np.asarray(doc["log_prior"], dtype=np.float64)
        log_word = np.asarray(doc["log_word"], dtype=np.float64)
        cls = FlatModel if kind == "flat" else PathModel
        model = cls(log_prior, log_word, log_word.shape[1], log_word.shape[0])
        model.validate()
    return ModelBundle(doc["algo"], model, vocab, t)
