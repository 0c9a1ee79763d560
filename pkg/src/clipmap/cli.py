"""Command line interface.

Subcommands: ingest, serve, search, concept (create/update/delete/list/
move/visibility), layout, eval-ann. Configuration comes from flags or the
DATA_DIR, PROVIDER_URL, PORT, and SEED environment variables. Failures
exit nonzero with a single machine-parsable "error: <reason>" line on
stderr.
"""

from __future__ import annotations

import json
import sys
from functools import wraps

import click

from .embedding import provider_from_spec
from .errors import ClipmapError
from .index import evaluate_recall
from .workspace import Workspace


def _fail(reason: str) -> None:
    click.echo(f"error: {reason}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ClipmapError as exc:
            _fail(str(exc))
        except (OSError, ValueError) as exc:
            _fail(str(exc))

    return wrapper


@click.group()
@click.option("--data", "-d", "data_dir", envvar="DATA_DIR", default=None, help="Data directory for the store.")
@click.option("--provider", "-p", envvar="PROVIDER_URL", default="test", show_default=True, help='Embedding provider: "test" or a base URL.')
@click.option("--seed", envvar="SEED", default=0, show_default=True, type=int, help="Seed for layout and placement randomness.")
@click.pass_context
def main(ctx, data_dir, provider, seed):
    """Semantic clip map: ingest browsing history, teach concepts, re-find."""
    ctx.ensure_object(dict)
    ctx.obj.update(data_dir=data_dir, provider=provider, seed=seed)


def _workspace(ctx, need_data: bool = True) -> Workspace:
    cfg = ctx.obj
    if need_data and not cfg["data_dir"]:
        _fail("data directory required (use --data or DATA_DIR)")
    provider = provider_from_spec(cfg["provider"])
    return Workspace(provider, data_dir=cfg["data_dir"], seed=cfg["seed"])


@main.command()
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@handle_errors
def ingest(ctx, corpus):
    """Ingest a JSONL corpus of visited pages."""
    ws = _workspace(ctx)
    report = ws.ingest_corpus(corpus)
    click.echo(json.dumps(report))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="PORT", default=8000, show_default=True, type=int)
@click.pass_context
@handle_errors
def serve(ctx, host, port):
    """Serve the REST API."""
    import uvicorn

    from .api import create_app

    ws = _workspace(ctx)
    uvicorn.run(create_app(ws), host=host, port=port, log_level="warning")


@main.command()
@click.argument("query")
@click.pass_context
@handle_errors
def search(ctx, query):
    """Substring search over stored clips, grouped by page."""
    ws = _workspace(ctx)
    click.echo(json.dumps(ws.search_clips(query)))


@main.group()
def concept():
    """Create and manage concepts."""


def _parse_member(spec: str) -> dict:
    if ":" in spec:
        clip_id, stars = spec.rsplit(":", 1)
        try:
            return {"clip_id": clip_id, "stars": int(stars)}
        except ValueError:
            _fail(f"bad member spec {spec!r}, expected CLIP_ID or CLIP_ID:STARS")
    return {"clip_id": spec, "stars": 1}


@concept.command("create")
@click.option("--name", required=True)
@click.option("--member", "-m", "member_specs", multiple=True, help="CLIP_ID or CLIP_ID:STARS")
@click.option("--example", "-e", "examples", multiple=True, help="Free text example (stars 1).")
@click.option("--members-json", default=None, help="Full member list as JSON.")
@click.pass_context
@handle_errors
def concept_create(ctx, name, member_specs, examples, members_json):
    ws = _workspace(ctx)
    if members_json:
        members = json.loads(members_json)
    else:
        members = [_parse_member(s) for s in member_specs]
        members += [{"text": t, "stars": 1} for t in examples]
    made = ws.create_concept(name, members)
    click.echo(json.dumps({"id": made.id, "name": made.name, "layout_version": ws.store.layout_version}))


@concept.command("update")
@click.argument("concept_id")
@click.option("--name", default=None)
@click.option("--add", "adds", multiple=True, help="CLIP_ID or CLIP_ID:STARS")
@click.option("--add-text", "add_texts", multiple=True)
@click.option("--remove", "removes", multiple=True)
@click.option("--restar", "restars", multiple=True, help="CLIP_ID:STARS")
@click.pass_context
@handle_errors
def concept_update(ctx, concept_id, name, adds, add_texts, removes, restars):
    ws = _workspace(ctx)
    add = [_parse_member(s) for s in adds] + [{"text": t, "stars": 1} for t in add_texts]
    restar = {}
    for spec in restars:
        clip_id, _, stars = spec.rpartition(":")
        if not clip_id:
            _fail(f"bad restar spec {spec!r}, expected CLIP_ID:STARS")
        restar[clip_id] = int(stars)
    made = ws.update_concept(
        concept_id,
        name=name,
        add=add or None,
        remove=list(removes) or None,
        restar=restar or None,
    )
    click.echo(json.dumps({"id": made.id, "revision": made.revision, "layout_version": ws.store.layout_version}))


@concept.command("delete")
@click.argument("concept_id")
@click.pass_context
@handle_errors
def concept_delete(ctx, concept_id):
    ws = _workspace(ctx)
    ws.delete_concept(concept_id)
    click.echo(json.dumps({"deleted": concept_id, "layout_version": ws.store.layout_version}))


@concept.command("list")
@click.pass_context
@handle_errors
def concept_list(ctx):
    ws = _workspace(ctx)
    out = [
        {
            "id": c.id,
            "name": c.name,
            "members": [{"clip_id": m.clip_id, "stars": m.stars} for m in c.members],
            "visible": c.visible,
            "position": list(c.position) if c.position else None,
        }
        for c in sorted(ws.store.concepts.values(), key=lambda c: c.id)
    ]
    click.echo(json.dumps(out))


@concept.command("move")
@click.argument("concept_id")
@click.argument("x", type=float)
@click.argument("y", type=float)
@click.pass_context
@handle_errors
def concept_move(ctx, concept_id, x, y):
    ws = _workspace(ctx)
    version = ws.set_concept_position(concept_id, x, y)
    click.echo(json.dumps({"id": concept_id, "layout_version": version}))


@concept.command("visibility")
@click.argument("concept_id")
@click.argument("state", type=click.Choice(["show", "hide"]))
@click.pass_context
@handle_errors
def concept_visibility(ctx, concept_id, state):
    ws = _workspace(ctx)
    version = ws.set_concept_visibility(concept_id, state == "show")
    click.echo(json.dumps({"id": concept_id, "visible": state == "show", "layout_version": version}))


@main.command()
@click.option("--iterations", default=None, type=int, help="Full-run iteration count.")
@click.option("--layout-seed", default=None, type=int, help="Override the layout seed.")
@click.option("--export", "export_path", default=None, type=click.Path(dir_okay=False), help="Write the layout document to a file.")
@click.pass_context
@handle_errors
def layout(ctx, iterations, layout_seed, export_path):
    """Recompute the full layout and print or export it."""
    ws = _workspace(ctx)
    doc = ws.relayout(iterations=iterations, seed=layout_seed)
    payload = json.dumps(doc)
    if export_path:
        with open(export_path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        click.echo(json.dumps({"exported": export_path, "version": doc["version"], "nodes": len(doc["nodes"])}))
    else:
        click.echo(payload)


@main.command("eval-ann")
@click.option("--n", default=5000, show_default=True, type=int)
@click.option("--k", default=20, show_default=True, type=int)
@click.option("--queries", default=100, show_default=True, type=int)
@click.option("--dim", default=256, show_default=True, type=int)
@click.option("--eval-seed", default=0, show_default=True, type=int)
@handle_errors
def eval_ann(n, k, queries, dim, eval_seed):
    """Measure approximate-search recall against the exact route."""
    result = evaluate_recall(n=n, k=k, n_queries=queries, dim=dim, seed=eval_seed)
    click.echo(json.dumps(result))


if __name__ == "__main__":
    main()
