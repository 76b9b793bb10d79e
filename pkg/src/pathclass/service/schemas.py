"""Pydantic request/response models for the classification service.

File paths in requests are resolved on the service host; the default
deployment is localhost (or the in-process client used by the CLI), where
they are simply local paths.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

ALGO_PATTERN = "^(pcnb|pcem|flat-nb|flat-em|td-nb|td-em)$"


class HealthResponse(BaseModel):
    status: str
    version: str


class EmSettings(BaseModel):
    max_iters: int = 50
    rel_tol: float = 1e-4
    min_iters: int = 2


class InspectRequest(BaseModel):
    hierarchy_file: str


class InspectResponse(BaseModel):
    num_nodes: int
    depth: int
    num_leaves: int
    num_dummies: int
    level_sizes: list[int]
    paths: list[list[str]]


class TrainRequest(BaseModel):
    hierarchy_file: str
    train_file: str
    test_file: str | None = None
    sims_file: str | None = None
    algo: str = Field(pattern=ALGO_PATTERN)
    label_rate: float | None = Field(default=None, gt=0.0, le=1.0)
    split_seed: int = 0
    em: EmSettings = EmSettings()
    model_out: str


class TrainResponse(BaseModel):
    model_path: str
    algo: str
    num_paths: int
    vocab_size: int
    labeled_docs: int
    unlabeled_docs: int
    iterations: int
    seconds: float
    objective_initial: float | None = None
    objective_final: float | None = None
    em: EmSettings


class PredictRequest(BaseModel):
    model_file: str
    docs_file: str
    out_file: str | None = None


class Prediction(BaseModel):
    doc_id: str
    path_index: int | None = None
    nodes: list[str]


class PredictResponse(BaseModel):
    predictions: list[Prediction]
    count: int
    dropped_tokens: int
    out_file: str | None = None


class EvalRequest(BaseModel):
    model_file: str
    test_file: str


class ClassScores(BaseModel):
    precision: float
    recall: float
    f1: float


class EvalResponse(BaseModel):
    micro_f1: float
    macro_f1: float
    num_docs: int
    per_class: dict[str, ClassScores]


class SweepRequest(BaseModel):
    hierarchy_file: str
    train_file: str
    test_file: str
    sims_file: str | None = None
    algos: list[str]
    rates: list[float]
    seeds: list[int] = [0, 1, 2, 3, 4]
    em: EmSettings = EmSettings()
    out_dir: str = "runs"


class SweepRowOut(BaseModel):
    algorithm: str
    rate: float
    seed: int
    micro_f1: float
    macro_f1: float
    iters: int
    seconds: float


class SweepAggregateOut(BaseModel):
    algorithm: str
    rate: float
    micro_f1: float
    macro_f1: float


class SweepResponse(BaseModel):
    rows: list[SweepRowOut]
    aggregates: list[SweepAggregateOut]
    runs_csv: str
    aggregate_csv: str
    metadata_json: str


class SynthRequest(BaseModel):
    hierarchy_file: str
    n_docs: int = Field(gt=0)
    n_test: int = Field(default=0, ge=0)
    vocab_size: int = Field(default=1000, gt=0)
    seed: int = 0
    doc_len_min: int = 20
    doc_len_max: int = 60
    generator: str = Field(default="hierarchical", pattern="^(hierarchical|dirichlet)$")
    ancestor_share: float = 0.6
    train_out: str
    test_out: str | None = None
    model_out: str | None = None


class SynthResponse(BaseModel):
    train_file: str
    test_file: str | None
    model_file: str | None
    num_paths: int
    vocab_size: int
    train_docs: int
    test_docs: int
