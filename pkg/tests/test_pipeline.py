"""End-to-end pipeline behavior against a scripted model."""
import json

import pytest

from metasql.demos import Demonstration
from metasql.pipeline import (
    DEFAULT_K_DEMOS,
    DEFAULT_MAX_ATTEMPTS,
    SESSION_DEMO_CAP,
    Pipeline,
    PipelineFlags,
)

from conftest import NO_SQL_COMPLETION, completion_for


BAD_TABLE_SQL = "SELECT COUNT(*) FROM treatments"
GOOD_COUNT_SQL = "SELECT COUNT(*) FROM patients"
# passes the guardrail (all identifiers exist) but fails at execution
RUNTIME_ERROR_SQL = ("SELECT (SELECT subject_id, hadm_id FROM admissions) "
                     "FROM patients")


@pytest.fixture()
def make_pipeline(clinic_db, clinic_catalog, demo_store, scripted_gateway):
    def factory(completions, flags=None, **gateway_kwargs):
        gateway = scripted_gateway(completions, **gateway_kwargs)
        pipe = Pipeline(clinic_db, clinic_catalog, demo_store, gateway, flags)
        return pipe, gateway
    return factory


def read_audit(gateway):
    with open(gateway.audit_log_path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


class TestHappyPath:
    def test_single_attempt(self, make_pipeline):
        pipe, _ = make_pipeline([completion_for(GOOD_COUNT_SQL)])
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "ok"
        assert outcome.sql == GOOD_COUNT_SQL
        assert outcome.result.rows == [(6,)]
        assert len(outcome.attempts) == 1
        assert outcome.attempts[0].index == 1
        assert outcome.attempts[0].sql == GOOD_COUNT_SQL
        assert outcome.attempts[0].error is None
        assert outcome.attempts[0].prompt_hash
        assert outcome.latency_s >= 0

    def test_defaults(self):
        flags = PipelineFlags()
        assert flags.k_demos == DEFAULT_K_DEMOS == 2
        assert flags.max_attempts == DEFAULT_MAX_ATTEMPTS == 2
        assert flags.include_schema and flags.include_cot
        assert not flags.allow_star and not flags.repair_source_dialect

    def test_retrieved_demo_ids_recorded(self, make_pipeline):
        pipe, _ = make_pipeline([completion_for(GOOD_COUNT_SQL)])
        outcome = pipe.run("how many patients are there")
        assert len(outcome.demo_ids) == 2
        # token overlap with the question pulls the count demo first
        assert outcome.demo_ids[0] == "demo-count-patients"

    def test_no_demos_when_k_zero(self, make_pipeline):
        pipe, _ = make_pipeline([completion_for(GOOD_COUNT_SQL)],
                                flags=PipelineFlags(k_demos=0))
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "ok"
        assert outcome.demo_ids == []

    def test_schema_and_cot_toggles_run_end_to_end(self, make_pipeline):
        flags = PipelineFlags(include_schema=False, include_cot=False)
        pipe, _ = make_pipeline([completion_for(GOOD_COUNT_SQL)], flags=flags)
        assert pipe.run("how many patients are there").status == "ok"


class TestRetries:
    def test_guardrail_failure_retries(self, make_pipeline):
        pipe, gateway = make_pipeline([
            completion_for(BAD_TABLE_SQL),
            completion_for(GOOD_COUNT_SQL),
        ])
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "ok"
        assert outcome.result.rows == [(6,)]
        assert len(outcome.attempts) == 2
        first, second = outcome.attempts
        assert first.sql == BAD_TABLE_SQL
        assert "treatments" in first.error
        assert second.error is None
        assert first.prompt_hash != second.prompt_hash
        # the retry prompt carries the failed query and the message
        entries = read_audit(gateway)
        assert len(entries) == 2
        assert "### Your previous query failed." in entries[1]["prompt"]
        assert BAD_TABLE_SQL in entries[1]["prompt"]
        assert first.error in entries[1]["prompt"]

    def test_execution_failure_retries(self, make_pipeline):
        pipe, gateway = make_pipeline([
            completion_for(RUNTIME_ERROR_SQL),
            completion_for(GOOD_COUNT_SQL),
        ])
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "ok"
        assert len(outcome.attempts) == 2
        assert "sub-select" in outcome.attempts[0].error
        assert RUNTIME_ERROR_SQL in read_audit(gateway)[1]["prompt"]

    def test_extraction_failure_retries_with_none_marker(self, make_pipeline):
        pipe, gateway = make_pipeline([
            NO_SQL_COMPLETION,
            completion_for(GOOD_COUNT_SQL),
        ])
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "ok"
        assert outcome.attempts[0].sql is None
        assert outcome.attempts[0].error
        assert "Query: (none)" in read_audit(gateway)[1]["prompt"]

    def test_star_rejected_then_allowed(self, make_pipeline):
        pipe, _ = make_pipeline([
            completion_for("SELECT * FROM patients"),
            completion_for(GOOD_COUNT_SQL),
        ])
        outcome = pipe.run("how many patients are there")
        assert len(outcome.attempts) == 2
        assert "star" in outcome.attempts[0].error

        pipe, _ = make_pipeline([completion_for("SELECT * FROM patients")],
                                flags=PipelineFlags(allow_star=True))
        outcome = pipe.run("show everything")
        assert outcome.status == "ok"
        assert outcome.result.n_rows == 6


class TestAbstention:
    def test_budget_exhaustion_abstains(self, make_pipeline):
        pipe, _ = make_pipeline([
            completion_for(BAD_TABLE_SQL),
            completion_for("SELECT nope FROM patients"),
        ])
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "abstained"
        assert outcome.sql is None
        assert outcome.result is None
        assert len(outcome.attempts) == 2
        assert outcome.abstain_reason == outcome.attempts[-1].error
        assert "nope" in outcome.abstain_reason

    def test_all_extraction_failures(self, make_pipeline):
        pipe, _ = make_pipeline([NO_SQL_COMPLETION, NO_SQL_COMPLETION])
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "abstained"
        assert outcome.abstain_reason

    def test_single_attempt_budget(self, make_pipeline):
        pipe, gateway = make_pipeline(
            [completion_for(BAD_TABLE_SQL), completion_for(GOOD_COUNT_SQL)],
            flags=PipelineFlags(max_attempts=1))
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "abstained"
        assert len(outcome.attempts) == 1
        assert len(read_audit(gateway)) == 1

    def test_zero_attempt_budget(self, make_pipeline):
        pipe, _ = make_pipeline([], flags=PipelineFlags(max_attempts=0))
        outcome = pipe.run("anything")
        assert outcome.status == "abstained"
        assert outcome.attempts == []
        assert outcome.abstain_reason == "no executable query produced"


class TestSessionDemos:
    def demo(self, ident):
        return Demonstration(id=ident, question=f"q {ident}",
                             sql="SELECT 1", relevant_tables=("patients",))

    def test_session_demos_lead(self, make_pipeline):
        pipe, _ = make_pipeline([completion_for(GOOD_COUNT_SQL)])
        outcome = pipe.run("how many patients are there",
                           session_demos=[self.demo("s1"), self.demo("s2")])
        assert outcome.demo_ids[:2] == ["s1", "s2"]
        assert outcome.demo_ids[2] == "demo-count-patients"
        assert len(outcome.demo_ids) == 4

    def test_session_demo_cap_keeps_newest(self, make_pipeline):
        pipe, _ = make_pipeline([completion_for(GOOD_COUNT_SQL)],
                                flags=PipelineFlags(k_demos=0))
        session = [self.demo(f"s{i}") for i in range(1, 6)]
        outcome = pipe.run("how many patients are there",
                           session_demos=session)
        assert SESSION_DEMO_CAP == 3
        assert outcome.demo_ids == ["s3", "s4", "s5"]


class TestRepair:
    SOURCE_SQL = ("SELECT COUNT(*) FROM admissions "
                  "WHERE DATETIME(admittime, 'start of month') "
                  "= '2100-03-01 00:00:00'")

    def test_repair_off_by_default(self, make_pipeline):
        pipe, _ = make_pipeline([completion_for(self.SOURCE_SQL),
                                 NO_SQL_COMPLETION])
        outcome = pipe.run("march admissions")
        assert outcome.status == "abstained"
        assert not any(a.repaired for a in outcome.attempts)

    def test_repair_translates_in_place(self, make_pipeline):
        pipe, _ = make_pipeline(
            [completion_for(self.SOURCE_SQL)],
            flags=PipelineFlags(repair_source_dialect=True))
        outcome = pipe.run("march admissions")
        assert outcome.status == "ok"
        assert outcome.result.rows == [(2,)]
        assert len(outcome.attempts) == 1
        assert outcome.attempts[0].repaired
        assert "DATE_TRUNC('month', admittime)" in outcome.sql
        assert "DATETIME" not in outcome.sql

    def test_repair_skips_native_failures(self, make_pipeline):
        # runtime failure without source constructs still retries normally
        pipe, _ = make_pipeline(
            [completion_for(RUNTIME_ERROR_SQL),
             completion_for(GOOD_COUNT_SQL)],
            flags=PipelineFlags(repair_source_dialect=True))
        outcome = pipe.run("how many patients are there")
        assert outcome.status == "ok"
        assert len(outcome.attempts) == 2
        assert not outcome.attempts[0].repaired
