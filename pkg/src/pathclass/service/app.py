"""FastAPI service exposing training, prediction, evaluation, sweeps, and
synthetic corpus generation over the core package."""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, evaluation
from ..baselines import predict_topdown_with_paths
from ..corpus import load_corpus, load_docs, split_by_label_rate, write_docs
from ..model import EmConfig, predict_all
from ..persist import ModelBundle, load_model, save_model
from ..taxonomy import enumerate_paths, load_hierarchy
from . import schemas

app = FastAPI(
    title="pathclass",
    description="Path cost-sensitive hierarchical text classification service",
    version=__version__,
)


@app.exception_handler(ValueError)
def _value_error(_: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(OSError)
def _os_error(_: Request, exc: OSError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


def _em_config(em: schemas.EmSettings) -> EmConfig:
    return EmConfig(max_iters=em.max_iters, rel_tol=em.rel_tol, min_iters=em.min_iters)


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/taxonomy/inspect", response_model=schemas.InspectResponse)
def inspect(req: schemas.InspectRequest) -> schemas.InspectResponse:
    t = load_hierarchy(req.hierarchy_file)
    paths = enumerate_paths(t)
    return schemas.InspectResponse(
        num_nodes=t.num_nodes,
        depth=t.depth,
        num_leaves=len(t.leaves()),
        num_dummies=sum(1 for n in t.nodes if n.is_dummy),
        level_sizes=list(t.level_sizes),
        paths=[list(names) for names in paths.names],
    )


@app.post("/train", response_model=schemas.TrainResponse)
def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    t = load_hierarchy(req.hierarchy_file)
    paths = enumerate_paths(t)
    data = load_corpus(req.train_file, t, test_file=req.test_file, sims_file=req.sims_file)
    if req.label_rate is not None:
        data = split_by_label_rate(data, req.label_rate, req.split_seed)
    cfg = _em_config(req.em)
    tick = time.perf_counter()
    model, trace = evaluation.train_model(req.algo, data, t, paths, cfg)
    seconds = time.perf_counter() - tick
    save_model(ModelBundle(req.algo, model, data.vocabulary, t), req.model_out)
    return schemas.TrainResponse(
        model_path=req.model_out,
        algo=req.algo,
        num_paths=paths.num_paths,
        vocab_size=len(data.vocabulary),
        labeled_docs=len(data.labeled),
        unlabeled_docs=len(data.unlabeled),
        iterations=trace.iterations if trace else 0,
        seconds=seconds,
        objective_initial=trace.objectives[0] if trace else None,
        objective_final=trace.objectives[-1] if trace else None,
        em=req.em,
    )


@app.post("/predict", response_model=schemas.PredictResponse)
def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
    bundle = load_model(req.model_file)
    t = bundle.taxonomy
    paths = enumerate_paths(t)
    docs, dropped = load_docs(req.docs_file, t, bundle.vocabulary, on_unknown_word="drop")
    if bundle.kind == "topdown":
        results = predict_topdown_with_paths(docs, bundle.model, paths)
    else:
        results = predict_all(docs, bundle.model, paths)
    predictions = [
        schemas.Prediction(doc_id=doc.id, path_index=j,
                           nodes=[t.nodes[n].name for n in nodes])
        for doc, (j, nodes) in zip(docs, results)
    ]
    if req.out_file:
        with open(req.out_file, "w", encoding="utf-8") as fh:
            fh.write("doc_id\tpath_index\tnodes\n")
            for p in predictions:
                fh.write(f"{p.doc_id}\t{p.path_index}\t{','.join(p.nodes)}\n")
    return schemas.PredictResponse(predictions=predictions, count=len(predictions),
                                   dropped_tokens=dropped, out_file=req.out_file)


@app.post("/evaluate", response_model=schemas.EvalResponse)
def evaluate(req: schemas.EvalRequest) -> schemas.EvalResponse:
    bundle = load_model(req.model_file)
    t = bundle.taxonomy
    paths = enumerate_paths(t)
    docs, _ = load_docs(req.test_file, t, bundle.vocabulary, on_unknown_word="drop")
    predict_nodes = evaluation.make_predictor(bundle.model, paths)
    pairs = [(evaluation.gold_node_set(doc, t), set(nodes))
             for doc, nodes in zip(docs, predict_nodes(docs))]
    report = evaluation.evaluate_predictions(t, pairs)
    return schemas.EvalResponse(
        micro_f1=report.micro_f1,
        macro_f1=report.macro_f1,
        num_docs=len(docs),
        per_class={name: schemas.ClassScores(precision=p, recall=r, f1=f)
                   for name, (p, r, f) in report.per_class.items()},
    )


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    cfg = evaluation.ExperimentConfig(
        algos=tuple(req.algos),
        rates=tuple(req.rates),
        seeds=tuple(req.seeds),
        hierarchy_file=req.hierarchy_file,
        train_file=req.train_file,
        test_file=req.test_file,
        sims_file=req.sims_file,
        em=_em_config(req.em),
        out_dir=req.out_dir,
    )
    try:
        result = evaluation.run_experiment(cfg)
    except RuntimeError as exc:
        raise ValueError(str(exc)) from exc
    return schemas.SweepResponse(
        rows=[schemas.SweepRowOut(algorithm=r.algorithm, rate=r.rate, seed=r.seed,
                                  micro_f1=r.micro_f1, macro_f1=r.macro_f1,
                                  iters=r.iters, seconds=r.seconds)
              for r in result.rows],
        aggregates=[schemas.SweepAggregateOut(algorithm=a, rate=r, micro_f1=mi, macro_f1=ma)
                    for a, r, mi, ma in result.aggregates],
        runs_csv=result.runs_csv,
        aggregate_csv=result.aggregate_csv,
        metadata_json=result.metadata_json,
    )


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    if req.doc_len_min < 0 or req.doc_len_max < req.doc_len_min:
        raise ValueError("need 0 <= doc_len_min <= doc_len_max")
    t = load_hierarchy(req.hierarchy_file)
    paths = enumerate_paths(t)
    if req.generator == "hierarchical":
        true_model = evaluation.hierarchical_random_model(
            t, paths, req.vocab_size, req.seed, ancestor_share=req.ancestor_share)
    else:
        true_model = evaluation.random_model(paths.num_paths, req.vocab_size, req.seed)
    law = (req.doc_len_min, req.doc_len_max)
    train_data = evaluation.generate_synthetic(t, true_model, req.n_docs, law, req.seed,
                                               id_prefix="train")
    write_docs(train_data.labeled, train_data.vocabulary, req.train_out, taxonomy=t)
    test_file = None
    test_docs = 0
    if req.n_test:
        if not req.test_out:
            raise ValueError("test_out is required when n_test > 0")
        test_data = evaluation.generate_synthetic(t, true_model, req.n_test, law,
                                                  req.seed + 1, id_prefix="test")
        write_docs(test_data.labeled, test_data.vocabulary, req.test_out, taxonomy=t)
        test_file = req.test_out
        test_docs = req.n_test
    model_file = None
    if req.model_out:
        save_model(ModelBundle("generator", true_model, train_data.vocabulary, t),
                   req.model_out)
        model_file = req.model_out
    return schemas.SynthResponse(
        train_file=req.train_out, test_file=test_file, model_file=model_file,
        num_paths=paths.num_paths, vocab_size=req.vocab_size,
        train_docs=req.n_docs, test_docs=test_docs,
    )
