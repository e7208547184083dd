"""HTTP surface: query, visualize, schema, session history, cohort flow.

Sessions are in-memory. Each session keeps its turn history, a bounded
LRU of result sets for later visualization, and session-local
demonstrations distilled from successful turns so follow-up questions
see their own context. Sessions never see each other's state.
"""
from __future__ import annotations

import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .catalog import SchemaCatalog
from .config import AppConfig
from .demos import DemoStore, Demonstration, ingest_demos
from .engine import Database, QueryResult
from .errors import AuditLogError, MetasqlError
from .gateway import LlmGateway
from .pipeline import Pipeline, PipelineFlags, SESSION_DEMO_CAP
from .postprocess import collect_identifiers
from .prompts import (PromptBundle, build_viz_prompt, render_prompt_schema,
                      token_estimate)
from .sqlkit import nodes as n
from .sqlkit.parser import parse_sql
from .sqlkit.render import render_select
from .viz import VizError, build_chart, parse_viz_response

RESULT_CACHE_CAP = 20


@dataclass
class Turn:
    question: str
    status: str
    sql: Optional[str] = None
    result_id: Optional[str] = None
    database: str = ""
    n_attempts: int = 0
    error: Optional[str] = None


@dataclass
class Session:
    id: str
    turns: list[Turn] = field(default_factory=list)
    demos: list[Demonstration] = field(default_factory=list)
    # result_id -> (database_id, QueryResult); bounded, oldest evicted
    results: "OrderedDict[str, tuple[str, QueryResult]]" = \
        field(default_factory=OrderedDict)

    def store_result(self, database: str, result: QueryResult) -> str:
        result_id = uuid.uuid4().hex
        self.results[result_id] = (database, result)
        while len(self.results) > RESULT_CACHE_CAP:
            self.results.popitem(last=False)
        return result_id

    def add_demo(self, question: str, sql: str) -> None:
        try:
            tables = tuple(collect_identifiers(sql).tables)
        except Exception:
            tables = ()
        self.demos.append(Demonstration(
            id=f"{self.id}-turn{len(self.turns)}", question=question,
            relevant_tables=tables, sql=sql, source="session"))
        del self.demos[:-SESSION_DEMO_CAP]


class AppState:
    def __init__(self, config: AppConfig, *,
                 gateway: LlmGateway | None = None,
                 databases: dict[str, Database] | None = None,
                 store: DemoStore | None = None):
        self.config = config
        self.databases = databases if databases is not None else {
            name: Database(path) for name, path in config.databases.items()}
        self.catalogs = {name: SchemaCatalog.from_database(db)
                         for name, db in self.databases.items()}
        self.store = store if store is not None else DemoStore()
        if store is None and config.demo_file:
            ingest_demos(self.store, config.demo_file)
        if gateway is not None:
            self.gateway = gateway
        else:
            self.gateway = LlmGateway(
                config.model(), backend=config.backend,
                audit_log_path=config.audit_log_path,
                cassette_path=config.cassette_path)
        self.sessions: dict[str, Session] = {}

    def session(self, session_id: str | None) -> Session:
        if session_id is None:
            session = Session(id=uuid.uuid4().hex)
            self.sessions[session.id] = session
            return session
        if session_id not in self.sessions:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return self.sessions[session_id]

    def database(self, name: str) -> tuple[Database, SchemaCatalog]:
        if name not in self.databases:
            raise HTTPException(status_code=404,
                                detail=f"unknown database {name}")
        return self.databases[name], self.catalogs[name]


class QueryRequest(BaseModel):
    question: str
    database: str
    session_id: Optional[str] = None
    k_demos: Optional[int] = Field(default=None, ge=0)
    include_schema: Optional[bool] = None
    include_cot: Optional[bool] = None
    max_attempts: Optional[int] = Field(default=None, ge=1)


class VisualizeRequest(BaseModel):
    session_id: str
    result_id: str
    question: str


class CohortFlowRequest(BaseModel):
    session_id: str
    result_id: str


def _result_payload(result: QueryResult, result_id: str,
                    preview_rows: int) -> dict:
    return {
        "result_id": result_id,
        "columns": [{"name": name, "type": type_}
                    for name, type_ in result.columns],
        "rows": [list(r) for r in result.rows[:preview_rows]],
        "n_rows": result.n_rows,
        "truncated": result.n_rows > preview_rows,
    }


def _merge_flags(base: PipelineFlags, req: QueryRequest) -> PipelineFlags:
    return PipelineFlags(
        k_demos=req.k_demos if req.k_demos is not None else base.k_demos,
        include_schema=(req.include_schema if req.include_schema is not None
                        else base.include_schema),
        include_cot=(req.include_cot if req.include_cot is not None
                     else base.include_cot),
        max_attempts=(req.max_attempts if req.max_attempts is not None
                      else base.max_attempts),
        allow_star=base.allow_star,
        repair_source_dialect=base.repair_source_dialect)


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="metasql")
    app.state.components = state

    @app.post("/api/query")
    def query(req: QueryRequest) -> dict:
        db, catalog = state.database(req.database)
        session = state.session(req.session_id)
        flags = _merge_flags(state.config.flags, req)
        pipeline = Pipeline(db, catalog, state.store, state.gateway, flags)
        try:
            outcome = pipeline.run(req.question, session_demos=session.demos)
        except AuditLogError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        except MetasqlError as exc:
            turn = Turn(question=req.question, status="error",
                        database=req.database, error=str(exc))
            session.turns.append(turn)
            return {"session_id": session.id, "status": "error",
                    "error": str(exc), "attempts": []}
        payload: dict = {
            "session_id": session.id,
            "status": outcome.status,
            "sql": outcome.sql,
            "latency_s": outcome.latency_s,
            "attempts": [{
                "index": a.index, "sql": a.sql, "error": a.error,
                "latency_s": a.latency_s, "repaired": a.repaired,
            } for a in outcome.attempts],
        }
        turn = Turn(question=req.question, status=outcome.status,
                    sql=outcome.sql, database=req.database,
                    n_attempts=len(outcome.attempts))
        if outcome.status == "ok":
            result_id = session.store_result(req.database, outcome.result)
            payload["result"] = _result_payload(outcome.result, result_id,
                                                state.config.preview_rows)
            turn.result_id = result_id
            session.add_demo(req.question, outcome.sql)
        else:
            payload["abstain_reason"] = outcome.abstain_reason
            turn.error = outcome.abstain_reason
        session.turns.append(turn)
        return payload

    @app.post("/api/visualize")
    def visualize(req: VisualizeRequest) -> dict:
        session = state.session(req.session_id)
        if req.result_id not in session.results:
            raise HTTPException(status_code=404,
                                detail=f"unknown result {req.result_id}")
        _, result = session.results[req.result_id]
        columns = result.column_names
        bundle = build_viz_prompt(req.question, columns)
        last_error = ""
        for _ in range(2):  # one retry with error feedback
            record = state.gateway.complete(bundle)
            try:
                spec = parse_viz_response(record.completion)
                chart = build_chart(spec, result, title=req.question)
            except VizError as exc:
                last_error = str(exc)
                retry_text = (bundle.text
                              + "\n\n### Your previous answer was invalid.\n"
                              + f"Error: {last_error}\n"
                              + "Answer again using exactly the format "
                                "described above.\n### Answer:")
                bundle = PromptBundle(text=retry_text, question=req.question,
                                      kind="viz",
                                      token_estimate=token_estimate(retry_text))
                continue
            return {"status": "ok", "chart": chart.to_dict(),
                    "spec": {"viz_type": spec.viz_type, "x_axis": spec.x_axis,
                             "y_axis": spec.y_axis}}
        return {"status": "viz_unavailable", "error": last_error}

    @app.get("/api/schema/{database}")
    def schema(database: str) -> dict:
        _, catalog = state.database(database)
        return {
            "database": database,
            "text": render_prompt_schema(catalog),
            "tables": [{
                "name": t.name,
                "columns": [{"name": c.name, "type": c.type,
                             "notnull": c.notnull, "pk": c.pk}
                            for c in t.columns],
            } for t in catalog.tables],
        }

    @app.get("/api/session/{session_id}/history")
    def history(session_id: str) -> dict:
        session = state.session(session_id)
        return {
            "session_id": session.id,
            "turns": [{
                "question": t.question, "status": t.status, "sql": t.sql,
                "result_id": t.result_id, "database": t.database,
                "n_attempts": t.n_attempts, "error": t.error,
            } for t in session.turns],
        }

    @app.post("/api/cohort-flow")
    def cohort_flow(req: CohortFlowRequest) -> dict:
        session = state.session(req.session_id)
        if req.result_id not in session.results:
            raise HTTPException(status_code=404,
                                detail=f"unknown result {req.result_id}")
        database, result = session.results[req.result_id]
        sql = next((t.sql for t in session.turns
                    if t.result_id == req.result_id), None)
        db, _ = state.database(database)
        steps = _cohort_steps(sql, db) if sql else []
        return {"steps": steps, "total_rows": result.n_rows}

    return app


def _cohort_steps(sql: str, db: Database) -> list[dict]:
    """Innermost-first chain of IN-subquery filters with row counts.

    Each nested IN (SELECT ...) is one cohort narrowing step; counting
    its rows shows how the population shrinks along the chain.
    """
    try:
        tree = parse_sql(sql, dialect="target")
    except Exception:
        return []
    chain: list[n.Select] = []
    current = tree
    while current is not None:
        nested = _first_in_subquery(current.where)
        if nested is None:
            break
        chain.append(nested)
        current = nested
    steps = []
    for depth, select in enumerate(reversed(chain)):
        text = render_select(select)
        try:
            count = db.execute(
                f"SELECT COUNT(*) FROM ({text}) AS cohort_step").rows[0][0]
        except MetasqlError:
            count = None
        steps.append({"index": depth + 1, "sql": text, "rows": count})
    return steps


def _first_in_subquery(expr) -> n.Select | None:
    if expr is None:
        return None
    if isinstance(expr, n.InExpr) and expr.subquery is not None:
        return expr.subquery
    if isinstance(expr, n.BinaryOp) and expr.op in ("AND", "OR"):
        return (_first_in_subquery(expr.left)
                or _first_in_subquery(expr.right))
    return None


def build_app(config: AppConfig) -> FastAPI:
    """Construct the service from a parsed config file."""
    return create_app(AppState(config))
