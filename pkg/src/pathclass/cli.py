"""Command-line client for the classification service.

Every subcommand goes through the HTTP API. By default the service runs
in-process (no server needed); pass ``--server URL`` to talk to a remote
instance instead.
"""

from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx

ALGO_CHOICES = ("pcnb", "pcem", "flat-nb", "flat-em", "td-nb", "td-em")


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    from .service.app import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://pathclass.internal") as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _post(ctx: click.Context, path: str, payload: dict) -> dict:
    try:
        resp = _request(ctx.obj["server"], path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service ({exc})", err=True)
        sys.exit(2)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    return resp.json()


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL (default: run the service in-process).")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Hierarchical text classification by path prediction."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--hierarchy", required=True, help="Hierarchy file (parent<TAB>child per line).")
@click.pass_context
def inspect(ctx, hierarchy):
    """Show the normalized taxonomy and its path table."""
    out = _post(ctx, "/taxonomy/inspect", {"hierarchy_file": hierarchy})
    click.echo(f"nodes={out['num_nodes']} depth={out['depth']} leaves={out['num_leaves']} "
               f"dummies={out['num_dummies']} levels={out['level_sizes']}")
    for j, names in enumerate(out["paths"]):
        click.echo(f"p{j + 1}: {' > '.join(names)}")


@main.command()
@click.option("--hierarchy", required=True)
@click.option("--train", "train_file", required=True, help="Training corpus file.")
@click.option("--test", "test_file", default=None,
              help="Test corpus (reserves vocabulary slots; never counted).")
@click.option("--sims", default=None, help="Similarity file for '@' weak labels.")
@click.option("--algo", type=click.Choice(ALGO_CHOICES), default="pcem", show_default=True)
@click.option("--rate", type=float, default=None,
              help="Label rate: keep labels on this fraction of training docs.")
@click.option("--seed", type=int, default=0, show_default=True, help="Split seed.")
@click.option("--max-iters", type=int, default=50, show_default=True)
@click.option("--tol", type=float, default=1e-4, show_default=True,
              help="Relative objective-change convergence threshold.")
@click.option("--min-iters", type=int, default=2, show_default=True)
@click.option("--out", "model_out", required=True, help="Where to write the model JSON.")
@click.pass_context
def train(ctx, hierarchy, train_file, test_file, sims, algo, rate, seed,
          max_iters, tol, min_iters, model_out):
    """Train a classifier and save it."""
    out = _post(ctx, "/train", {
        "hierarchy_file": hierarchy, "train_file": train_file, "test_file": test_file,
        "sims_file": sims, "algo": algo, "label_rate": rate, "split_seed": seed,
        "em": {"max_iters": max_iters, "rel_tol": tol, "min_iters": min_iters},
        "model_out": model_out,
    })
    click.echo(f"trained {out['algo']}: {out['labeled_docs']} labeled + "
               f"{out['unlabeled_docs']} unlabeled docs, {out['num_paths']} paths, "
               f"vocab {out['vocab_size']}")
    if out["objective_final"] is not None:
        click.echo(f"em: {out['iterations']} iterations, objective "
                   f"{out['objective_initial']:.4f} -> {out['objective_final']:.4f}")
    click.echo(f"model written to {out['model_path']} ({out['seconds']:.2f}s)")


@main.command()
@click.option("--model", "model_file", required=True, help="Saved model JSON.")
@click.option("--docs", "docs_file", required=True, help="Documents to classify.")
@click.option("--out", "out_file", default=None, help="Optional TSV output path.")
@click.pass_context
def predict(ctx, model_file, docs_file, out_file):
    """Classify documents into hierarchy paths."""
    out = _post(ctx, "/predict", {"model_file": model_file, "docs_file": docs_file,
                                  "out_file": out_file})
    if out["dropped_tokens"]:
        click.echo(f"note: dropped {out['dropped_tokens']} tokens outside the "
                   "model vocabulary", err=True)
    if out_file:
        click.echo(f"{out['count']} predictions written to {out['out_file']}")
    else:
        for p in out["predictions"]:
            click.echo(f"{p['doc_id']}\t{p['path_index']}\t{','.join(p['nodes'])}")


@main.command("eval")
@click.option("--model", "model_file", required=True)
@click.option("--test", "test_file", required=True, help="Gold-labeled test corpus.")
@click.option("--per-class", is_flag=True, help="Also print per-class precision/recall/F1.")
@click.pass_context
def eval_cmd(ctx, model_file, test_file, per_class):
    """Score a saved model on a labeled test set."""
    out = _post(ctx, "/evaluate", {"model_file": model_file, "test_file": test_file})
    click.echo(f"micro_f1={out['micro_f1']:.4f} macro_f1={out['macro_f1']:.4f} "
               f"docs={out['num_docs']}")
    if per_class:
        for name, s in sorted(out["per_class"].items()):
            click.echo(f"{name}\tP={s['precision']:.4f}\tR={s['recall']:.4f}\t"
                       f"F1={s['f1']:.4f}")


@main.command()
@click.option("--hierarchy", required=True)
@click.option("--train", "train_file", required=True)
@click.option("--test", "test_file", required=True)
@click.option("--sims", default=None)
@click.option("--algo", "algos", type=click.Choice(ALGO_CHOICES), multiple=True,
              default=("pcnb", "pcem"), show_default=True)
@click.option("--rates", default="0.01", show_default=True,
              help="Comma/space separated label rates.")
@click.option("--seeds", default="0,1,2,3,4", show_default=True)
@click.option("--max-iters", type=int, default=50, show_default=True)
@click.option("--tol", type=float, default=1e-4, show_default=True)
@click.option("--out", "out_dir", default="runs", show_default=True,
              help="Directory for runs.csv / aggregate.csv / metadata.json.")
@click.pass_context
def sweep(ctx, hierarchy, train_file, test_file, sims, algos, rates, seeds,
          max_iters, tol, out_dir):
    """Label-rate x seed experiment sweep with CSV artifacts."""
    out = _post(ctx, "/sweep", {
        "hierarchy_file": hierarchy, "train_file": train_file, "test_file": test_file,
        "sims_file": sims, "algos": list(algos), "rates": _parse_floats(rates),
        "seeds": _parse_ints(seeds),
        "em": {"max_iters": max_iters, "rel_tol": tol, "min_iters": 2},
        "out_dir": out_dir,
    })
    click.echo("algorithm\trate\tmean_micro_f1\tmean_macro_f1")
    for a in out["aggregates"]:
        click.echo(f"{a['algorithm']}\t{a['rate']}\t{a['micro_f1']:.4f}\t{a['macro_f1']:.4f}")
    click.echo(f"per-run CSV: {out['runs_csv']}")
    click.echo(f"aggregate CSV: {out['aggregate_csv']}")


@main.command()
@click.option("--hierarchy", required=True)
@click.option("--n-docs", type=int, default=1000, show_default=True)
@click.option("--n-test", type=int, default=0, show_default=True)
@click.option("--vocab-size", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--len-min", type=int, default=20, show_default=True)
@click.option("--len-max", type=int, default=60, show_default=True)
@click.option("--generator", type=click.Choice(("hierarchical", "dirichlet")),
              default="hierarchical", show_default=True)
@click.option("--out", "train_out", required=True, help="Training corpus output path.")
@click.option("--test-out", default=None)
@click.option("--model-out", default=None, help="Optionally save the generating model.")
@click.pass_context
def synth(ctx, hierarchy, n_docs, n_test, vocab_size, seed, len_min, len_max,
          generator, train_out, test_out, model_out):
    """Generate a synthetic corpus from a known path mixture."""
    out = _post(ctx, "/synth", {
        "hierarchy_file": hierarchy, "n_docs": n_docs, "n_test": n_test,
        "vocab_size": vocab_size, "seed": seed, "doc_len_min": len_min,
        "doc_len_max": len_max, "generator": generator, "train_out": train_out,
        "test_out": test_out, "model_out": model_out,
    })
    click.echo(json.dumps(out, indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("pathclass.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
