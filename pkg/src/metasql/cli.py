"""Command-line surface.

Exit codes: 0 success, 1 operational failure, 2 unsupported dialect
construct (so batch jobs can tell "cannot translate" from "broke").
"""
from __future__ import annotations

import json
import sys

import click

from .catalog import SchemaCatalog
from .config import load_config
from .demos import DemoStore, ingest_demos as _ingest_demos, load_demo_file
from .engine import Database
from .errors import MetasqlError, UnsupportedConstructError
from .evaluation import (load_dataset_file, preprocess_dataset,
                         render_report_table, run_eval, split_dataset)
from .gateway import LlmGateway
from .pipeline import Pipeline, PipelineFlags
from .sqlkit.transpile import transpile as _transpile


@click.group()
def main() -> None:
    """Schema-grounded question answering over embedded analytical
    databases."""


def _load_state(config_path: str, database: str):
    config = load_config(config_path)
    if database not in config.databases:
        raise MetasqlError(f"unknown database {database!r} in {config_path}")
    db = Database(config.databases[database])
    catalog = SchemaCatalog.from_database(db)
    store = DemoStore()
    if config.demo_file:
        _ingest_demos(store, config.demo_file)
    gateway = LlmGateway(config.model(), backend=config.backend,
                         audit_log_path=config.audit_log_path,
                         cassette_path=config.cassette_path)
    return config, db, catalog, store, gateway


def _flags(config, k_demos, include_schema, include_cot, max_attempts):
    base = config.flags
    return PipelineFlags(
        k_demos=k_demos if k_demos is not None else base.k_demos,
        include_schema=include_schema if include_schema is not None
        else base.include_schema,
        include_cot=include_cot if include_cot is not None
        else base.include_cot,
        max_attempts=max_attempts if max_attempts is not None
        else base.max_attempts,
        allow_star=base.allow_star,
        repair_source_dialect=base.repair_source_dialect)


@main.command()
@click.argument("question")
@click.option("--config", "config_path", default="metasql.json",
              show_default=True, help="Config file path.")
@click.option("--database", required=True, help="Database id from the config.")
@click.option("--k-demos", type=int, default=None,
              help="Few-shot demos to retrieve (default from config).")
@click.option("--include-schema/--no-schema", default=None,
              help="Include the schema section in the prompt.")
@click.option("--include-cot/--no-cot", default=None,
              help="End the prompt with the step-by-step cue.")
@click.option("--max-attempts", type=int, default=None,
              help="Total generation attempts including retries.")
def query(question, config_path, database, k_demos, include_schema,
          include_cot, max_attempts):
    """Answer one natural-language question against a database."""
    try:
        config, db, catalog, store, gateway = _load_state(config_path, database)
        flags = _flags(config, k_demos, include_schema, include_cot,
                       max_attempts)
        outcome = Pipeline(db, catalog, store, gateway, flags).run(question)
    except MetasqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"status: {outcome.status}")
    if outcome.status == "ok":
        click.echo(f"sql: {outcome.sql}")
        click.echo(" | ".join(outcome.result.column_names))
        for row in outcome.result.rows[:50]:
            click.echo(" | ".join("NULL" if v is None else str(v) for v in row))
        if outcome.result.n_rows > 50:
            click.echo(f"... {outcome.result.n_rows} rows total")
    else:
        click.echo(f"reason: {outcome.abstain_reason}")
        sys.exit(1)


@main.command()
@click.argument("sql", required=False)
@click.option("--file", "sql_file", type=click.Path(exists=True),
              help="Read the statement from a file instead.")
def transpile(sql, sql_file):
    """Translate a source-dialect SELECT into the target dialect."""
    if sql is None and sql_file is None:
        click.echo("error: provide SQL text or --file", err=True)
        sys.exit(1)
    if sql_file is not None:
        with open(sql_file, encoding="utf-8") as handle:
            sql = handle.read()
    try:
        result = _transpile(sql)
    except UnsupportedConstructError as exc:
        click.echo(f"unsupported construct: {exc}", err=True)
        sys.exit(2)
    except MetasqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(result.sql)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="Line-delimited dataset file.")
@click.option("--config", "config_path", default="metasql.json",
              show_default=True)
@click.option("--database", required=True, help="Reference database id.")
@click.option("--out", "out_path", type=click.Path(),
              help="Write kept records here (line-delimited).")
@click.option("--report", "report_path", type=click.Path(),
              help="Write the drop report here (JSON).")
def preprocess(dataset, config_path, database, out_path, report_path):
    """Filter a dataset against a reference database."""
    try:
        config = load_config(config_path)
        if database not in config.databases:
            raise MetasqlError(f"unknown database {database!r}")
        db = Database(config.databases[database])
        items = load_dataset_file(dataset)
        report = preprocess_dataset(items, db)
    except MetasqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"kept {len(report.kept)} of {len(items)}")
    for reason, count in sorted(report.drop_counts.items()):
        click.echo(f"dropped ({reason}): {count}")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            for item in report.kept:
                handle.write(json.dumps({
                    "id": item.id, "question": item.question, "sql": item.sql,
                    "answerable": item.answerable,
                    "relevant_tables": list(item.relevant_tables),
                    "source": item.source}) + "\n")
    if report_path:
        with open(report_path, "w", encoding="utf-8") as handle:
            json.dump({"kept": [i.id for i in report.kept],
                       "dropped": [{"id": i, "reason": r}
                                   for i, r in report.dropped]},
                      handle, indent=2)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--fractions", default="validation=0.1,test=0.9",
              show_default=True, help="name=fraction pairs, comma separated.")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def split(dataset, fractions, seed, out_dir):
    """Deterministically split a dataset into named parts."""
    import os
    try:
        spec = {}
        for part in fractions.split(","):
            name, _, value = part.partition("=")
            spec[name.strip()] = float(value)
        items = load_dataset_file(dataset)
        splits = split_dataset(items, spec, seed)
    except (MetasqlError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    os.makedirs(out_dir, exist_ok=True)
    for name, part in splits.items():
        path = os.path.join(out_dir, f"{name}.jsonl")
        with open(path, "w", encoding="utf-8") as handle:
            for item in part:
                handle.write(json.dumps({
                    "id": item.id, "question": item.question, "sql": item.sql,
                    "answerable": item.answerable,
                    "relevant_tables": list(item.relevant_tables),
                    "source": item.source}) + "\n")
        click.echo(f"{name}: {len(part)} -> {path}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", default="metasql.json",
              show_default=True)
@click.option("--database", required=True)
@click.option("--out", "out_path", type=click.Path(),
              help="Write the full report here (JSON).")
@click.option("--k-demos", type=int, default=None)
@click.option("--include-schema/--no-schema", default=None)
@click.option("--include-cot/--no-cot", default=None)
@click.option("--max-attempts", type=int, default=None)
def eval(dataset, config_path, database, out_path, k_demos, include_schema,
         include_cot, max_attempts):
    """Score the pipeline on a dataset and print the summary table."""
    try:
        config, db, catalog, store, gateway = _load_state(config_path, database)
        flags = _flags(config, k_demos, include_schema, include_cot,
                       max_attempts)
        items = load_dataset_file(dataset)
        pipeline = Pipeline(db, catalog, store, gateway, flags)
        report = run_eval(items, pipeline, db, config={
            "model": config.model().model_name,
            "include_schema": flags.include_schema,
            "k_demos": flags.k_demos,
            "max_attempts": flags.max_attempts,
        })
    except MetasqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(render_report_table(report))
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, indent=2)
        click.echo(f"report written to {out_path}")


@main.command(name="ingest-demos")
@click.option("--demos", "demo_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(),
              help="Write a validated, id-sorted copy here.")
def ingest_demos(demo_path, out_path):
    """Validate a demo file (and optionally normalize it)."""
    try:
        demos = load_demo_file(demo_path)
        store = DemoStore()
        store.extend(demos)  # also catches duplicate ids
    except MetasqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{len(demos)} demos ok "
               f"(embedding dim {store.provider.dim})")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            for demo in store.demos:
                handle.write(json.dumps({
                    "id": demo.id, "question": demo.question,
                    "relevant_tables": list(demo.relevant_tables),
                    "sql": demo.sql, "source": demo.source}) + "\n")
        click.echo(f"normalized copy written to {out_path}")


@main.command()
@click.option("--config", "config_path", default="metasql.json",
              show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import build_app
    try:
        config = load_config(config_path)
        app = build_app(config)
    except MetasqlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
