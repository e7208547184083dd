"""Question-to-result pipeline: prompt, generate, guard, execute, retry.

Every attempt is recorded whether it succeeded or not; the attempt list
is part of the public outcome because evaluation and the UI both need
to show what the system tried. Exhausting the attempt budget is an
abstention, not an error: declining to answer is the designed behavior
when nothing executable comes back.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .catalog import SchemaCatalog
from .demos import Demonstration, DemoStore
from .engine import Database, QueryResult
from .errors import ExecutionError, ExtractionError
from .gateway import LlmGateway
from .postprocess import extract_sql, guardrail_check
from .prompts import build_retry_prompt, build_sql_prompt
from .sqlkit import nodes as n
from .sqlkit.parser import parse_sql
from .sqlkit.transpile import transpile

DEFAULT_K_DEMOS = 2
DEFAULT_MAX_ATTEMPTS = 2
SESSION_DEMO_CAP = 3


@dataclass
class PipelineFlags:
    k_demos: int = DEFAULT_K_DEMOS
    include_schema: bool = True
    include_cot: bool = True
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    allow_star: bool = False
    repair_source_dialect: bool = False


@dataclass
class AttemptRecord:
    index: int  # 1-based; len(attempts) is the total attempt count
    prompt_hash: str
    sql: Optional[str] = None
    error: Optional[str] = None
    latency_s: float = 0.0
    repaired: bool = False


@dataclass
class PipelineOutcome:
    status: str  # ok | abstained
    sql: Optional[str] = None
    result: Optional[QueryResult] = None
    attempts: list[AttemptRecord] = field(default_factory=list)
    abstain_reason: Optional[str] = None
    latency_s: float = 0.0
    demo_ids: list[str] = field(default_factory=list)


def _has_source_constructs(sql: str) -> bool:
    try:
        tree = parse_sql(sql, dialect="source")
    except Exception:
        return False
    for node in n.walk(tree):
        if isinstance(node, n.FuncCall) and node.name == "DATETIME":
            return True
        if isinstance(node, n.Keyword) and node.name == "CURRENT_TIME":
            return True
        if isinstance(node, n.FuncCall) and node.name == "STRFTIME" \
                and len(node.args) > 2:
            return True
    return False


class Pipeline:
    """Single-question driver over a fixed database, demo store, and
    gateway."""

    def __init__(self, db: Database, catalog: SchemaCatalog, store: DemoStore,
                 gateway: LlmGateway, flags: PipelineFlags | None = None):
        self.db = db
        self.catalog = catalog
        self.store = store
        self.gateway = gateway
        self.flags = flags or PipelineFlags()

    def run(self, question: str,
            session_demos: Sequence[Demonstration] = ()) -> PipelineOutcome:
        """Answer one question; session demos go ahead of retrieved ones."""
        flags = self.flags
        started = time.monotonic()
        demos = list(session_demos)[-SESSION_DEMO_CAP:]
        if flags.k_demos > 0:
            demos += self.store.retrieve(question, flags.k_demos)
        bundle = build_sql_prompt(question, self.catalog, demos,
                                  include_schema=flags.include_schema,
                                  include_cot=flags.include_cot)
        outcome = PipelineOutcome(status="abstained",
                                  demo_ids=[d.id for d in demos])
        for index in range(1, flags.max_attempts + 1):
            record = self.gateway.complete(bundle)
            attempt = AttemptRecord(index=index, prompt_hash=record.prompt_hash,
                                    latency_s=record.latency_s)
            outcome.attempts.append(attempt)
            try:
                sql = extract_sql(record.completion)
            except ExtractionError as exc:
                attempt.error = str(exc)
                bundle = build_retry_prompt(bundle, "(none)", attempt.error)
                continue
            attempt.sql = sql
            guard = guardrail_check(sql, self.catalog,
                                    allow_star=flags.allow_star)
            if not guard.ok:
                attempt.error = guard.first_message()
                bundle = build_retry_prompt(bundle, sql, attempt.error)
                continue
            try:
                result = self.db.execute(sql)
            except ExecutionError as exc:
                repaired = self._try_repair(sql)
                if repaired is not None:
                    attempt.sql, result = repaired
                    attempt.repaired = True
                else:
                    attempt.error = str(exc)
                    bundle = build_retry_prompt(bundle, sql, attempt.error)
                    continue
            outcome.status = "ok"
            outcome.sql = attempt.sql
            outcome.result = result
            break
        else:
            last_error = outcome.attempts[-1].error if outcome.attempts else None
            outcome.abstain_reason = last_error or "no executable query produced"
        outcome.latency_s = time.monotonic() - started
        return outcome

    def _try_repair(self, sql: str) -> tuple[str, QueryResult] | None:
        """Opt-in second chance: a query that failed execution but parses
        as source dialect with translatable constructs gets transpiled
        and re-run inside the same attempt."""
        if not self.flags.repair_source_dialect:
            return None
        if not _has_source_constructs(sql):
            return None
        try:
            translated = transpile(sql).sql
            return translated, self.db.execute(translated)
        except Exception:
            return None
