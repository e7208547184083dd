"""Shared fixtures: a desk-scale clinical database, a demo corpus, a
ten-question dataset with authored completions, and cassette helpers."""
from __future__ import annotations

import json

import pytest

from metasql.catalog import SchemaCatalog
from metasql.demos import DemoStore, Demonstration
from metasql.engine import Database
from metasql.evaluation import DatasetItem
from metasql.gateway import LlmGateway, ModelConfig
from metasql.pipeline import Pipeline, PipelineFlags

# admissions is declared exactly as the schema-browser fixture expects:
# BIGINT/TIMESTAMP/VARCHAR declared types, no constraints.
CLINIC_DDL = """
CREATE TABLE admissions (
  row_id BIGINT, subject_id BIGINT, hadm_id BIGINT,
  admittime TIMESTAMP, dischtime TIMESTAMP,
  admission_type VARCHAR, admission_location VARCHAR,
  discharge_location VARCHAR, insurance VARCHAR, language VARCHAR,
  marital_status VARCHAR, age BIGINT
);
CREATE TABLE patients (
  row_id BIGINT, subject_id BIGINT, gender VARCHAR,
  dob TIMESTAMP, dod TIMESTAMP
);
CREATE TABLE prescriptions (
  row_id BIGINT, subject_id BIGINT, hadm_id BIGINT,
  startdate TIMESTAMP, drug VARCHAR, dose_val_rx VARCHAR, route VARCHAR
);
CREATE TABLE cost (
  row_id BIGINT, subject_id BIGINT, hadm_id BIGINT,
  event_type VARCHAR, chargetime TIMESTAMP, cost REAL
);
CREATE TABLE d_icd_procedures (
  row_id BIGINT, icd9_code VARCHAR, short_title VARCHAR, long_title VARCHAR
);
CREATE TABLE procedures_icd (
  row_id BIGINT, subject_id BIGINT, hadm_id BIGINT,
  icd9_code VARCHAR, charttime TIMESTAMP
);

INSERT INTO patients VALUES
 (1, 101, 'F', '2041-03-12 00:00:00', NULL),
 (2, 102, 'M', '2038-07-01 00:00:00', NULL),
 (3, 103, 'F', '2055-11-23 00:00:00', '2100-04-02 13:00:00'),
 (4, 104, 'M', '2047-01-30 00:00:00', NULL),
 (5, 105, 'F', '2060-09-14 00:00:00', NULL),
 (6, 106, 'M', '2033-05-05 00:00:00', NULL);

INSERT INTO admissions VALUES
 (1, 101, 9001, '2100-01-05 09:10:00', '2100-01-12 15:00:00',
  'EMERGENCY', 'EMERGENCY ROOM ADMIT', 'HOME', 'Medicare', 'ENGL',
  'MARRIED', 59),
 (2, 102, 9002, '2100-02-17 20:40:00', '2100-02-20 11:30:00',
  'ELECTIVE', 'PHYS REFERRAL', 'HOME', 'Private', 'SPAN', 'SINGLE', 61),
 (3, 103, 9003, '2100-03-02 04:22:00', '2100-03-19 09:45:00',
  'EMERGENCY', 'TRANSFER FROM HOSP', 'SNF', 'Medicaid', 'ENGL',
  'WIDOWED', 44),
 (4, 104, 9004, '2100-03-28 13:05:00', '2100-04-03 10:00:00',
  'URGENT', 'EMERGENCY ROOM ADMIT', 'HOME', 'Private', 'FREN',
  'MARRIED', 53),
 (5, 105, 9005, '2100-04-11 07:55:00', '2100-04-15 16:20:00',
  'EMERGENCY', 'PHYS REFERRAL', 'REHAB', 'Medicare', 'ENGL', 'SINGLE', 39),
 (6, 101, 9006, '2100-05-03 18:30:00', '2100-05-09 12:00:00',
  'ELECTIVE', 'PHYS REFERRAL', 'HOME', 'Medicare', 'ENGL', 'MARRIED', 59),
 (7, 106, 9007, '2100-05-21 23:15:00', '2100-06-01 08:40:00',
  'EMERGENCY', 'EMERGENCY ROOM ADMIT', 'HOME', 'RUSS', 'RUSS',
  'DIVORCED', 66),
 (8, 102, 9008, '2100-06-14 10:05:00', '2100-06-18 17:25:00',
  'URGENT', 'TRANSFER FROM HOSP', 'SNF', 'Private', 'SPAN', 'SINGLE', 61);

INSERT INTO prescriptions VALUES
 (1, 101, 9001, '2100-01-05 10:00:00', 'aspirin', '81', 'PO'),
 (2, 101, 9001, '2100-01-06 10:00:00', 'aspirin', '81', 'PO'),
 (3, 102, 9002, '2100-02-17 21:00:00', 'aspirin', '325', 'PO'),
 (4, 103, 9003, '2100-03-02 05:00:00', 'aspirin', '81', 'PO'),
 (5, 104, 9004, '2100-03-28 14:00:00', 'aspirin', '81', 'PO'),
 (6, 105, 9005, '2100-04-11 08:30:00', 'heparin', '5000', 'SC'),
 (7, 106, 9007, '2100-05-22 00:10:00', 'heparin', '5000', 'SC'),
 (8, 101, 9006, '2100-05-03 19:00:00', 'heparin', '5000', 'SC'),
 (9, 102, 9008, '2100-06-14 11:00:00', 'heparin', '7500', 'SC'),
 (10, 103, 9003, '2100-03-03 06:00:00', 'insulin', '10', 'SC'),
 (11, 104, 9004, '2100-03-29 09:00:00', 'insulin', '8', 'SC'),
 (12, 105, 9005, '2100-04-12 07:45:00', 'insulin', '6', 'SC'),
 (13, 106, 9007, '2100-05-23 07:00:00', 'morphine', '2', 'IV'),
 (14, 101, 9001, '2100-01-07 12:00:00', 'morphine', '4', 'IV'),
 (15, 102, 9002, '2100-02-18 09:00:00', 'warfarin', '5', 'PO');

INSERT INTO cost VALUES
 (1, 101, 9001, 'prescription', '2100-01-05 10:00:00', 12.50),
 (2, 101, 9001, 'procedure', '2100-01-08 11:00:00', 940.00),
 (3, 102, 9002, 'prescription', '2100-02-17 21:00:00', 8.75),
 (4, 103, 9003, 'procedure', '2100-03-04 10:30:00', 1220.40),
 (5, 104, 9004, 'lab', '2100-03-28 15:00:00', 64.00),
 (6, 105, 9005, 'prescription', '2100-04-11 08:30:00', 31.20),
 (7, 106, 9007, 'procedure', '2100-05-24 09:00:00', 2105.00),
 (8, 102, 9008, 'lab', '2100-06-15 08:00:00', 47.60);

INSERT INTO d_icd_procedures VALUES
 (1, '3961', 'Extracorporeal circulat', 'Extracorporeal circulation auxiliary to open heart surgery'),
 (2, '9904', 'Packed cell transfusion', 'Transfusion of packed cells'),
 (3, '8856', 'Coronar arteriogr-2 cath', 'Coronary arteriography using two catheters'),
 (4, '9671', 'Cont inv mec ven <96 hrs', 'Continuous invasive mechanical ventilation for less than 96 consecutive hours');

INSERT INTO procedures_icd VALUES
 (1, 101, 9001, '3961', '2100-01-08 11:00:00'),
 (2, 103, 9003, '9904', '2100-03-04 10:30:00'),
 (3, 103, 9003, '8856', '2100-03-05 09:00:00'),
 (4, 106, 9007, '9671', '2100-05-24 09:00:00'),
 (5, 101, 9006, '9904', '2100-05-04 10:00:00'),
 (6, 104, 9004, '8856', '2100-03-29 12:00:00');
"""

DEMO_CORPUS = [
    Demonstration(
        id="demo-count-patients",
        question="how many patients are in the hospital records",
        relevant_tables=("patients",),
        sql="SELECT COUNT(*) FROM patients", source="seed"),
    Demonstration(
        id="demo-top-drugs",
        question="what are the most commonly ordered medications",
        relevant_tables=("prescriptions",),
        sql=("SELECT drug FROM prescriptions GROUP BY drug "
             "ORDER BY COUNT(*) DESC LIMIT 5"), source="seed"),
    Demonstration(
        id="demo-avg-age",
        question="average age of admitted patients",
        relevant_tables=("admissions",),
        sql="SELECT AVG(age) FROM admissions", source="seed"),
    Demonstration(
        id="demo-insurance",
        question="which insurance plans appear in admissions",
        relevant_tables=("admissions",),
        sql="SELECT DISTINCT insurance FROM admissions", source="seed"),
    Demonstration(
        id="demo-cost-sum",
        question="total charges by event type",
        relevant_tables=("cost",),
        sql="SELECT event_type, SUM(cost) FROM cost GROUP BY event_type",
        source="seed"),
    Demonstration(
        id="demo-procedure-names",
        question="long titles of procedures performed on a patient",
        relevant_tables=("d_icd_procedures", "procedures_icd"),
        sql=("SELECT d.long_title FROM procedures_icd p "
             "JOIN d_icd_procedures d ON p.icd9_code = d.icd9_code "
             "WHERE p.subject_id = 101"), source="seed"),
]

# (id, question, gold sql in the source dialect, predicted target sql)
TEN_QUESTIONS = [
    ("q01", "how many patients are there",
     "SELECT COUNT(*) FROM patients",
     "SELECT COUNT(*) FROM patients"),
    ("q02", "what is the maximum age among admissions",
     "SELECT MAX(age) FROM admissions",
     "SELECT MAX(age) FROM admissions"),
    ("q03", "list the distinct insurance providers",
     "SELECT DISTINCT insurance FROM admissions",
     "SELECT DISTINCT insurance FROM admissions"),
    ("q04", "how many admissions were emergencies",
     "SELECT COUNT(*) FROM admissions WHERE admission_type = 'EMERGENCY'",
     "SELECT COUNT(*) FROM admissions WHERE admission_type = 'EMERGENCY'"),
    ("q05", "what are the five most frequently prescribed drugs",
     ("SELECT drug FROM prescriptions GROUP BY drug "
      "ORDER BY COUNT(*) DESC LIMIT 5"),
     ("SELECT drug FROM prescriptions GROUP BY drug "
      "ORDER BY COUNT(*) DESC LIMIT 5")),
    ("q06", "what is the average recorded cost",
     "SELECT AVG(cost) FROM cost",
     "SELECT AVG(cost) FROM cost"),
    ("q07", "how many admissions started in march 2100",
     ("SELECT COUNT(*) FROM admissions "
      "WHERE datetime(admittime, 'start of month') = '2100-03-01 00:00:00'"),
     ("SELECT COUNT(*) FROM admissions "
      "WHERE DATE_TRUNC('month', admittime) = '2100-03-01 00:00:00'")),
    ("q08", "which language codes appear in admissions",
     "SELECT DISTINCT language FROM admissions",
     "SELECT DISTINCT language FROM admissions"),
    ("q09", "how many distinct procedure codes have been recorded",
     "SELECT COUNT(DISTINCT icd9_code) FROM procedures_icd",
     "SELECT COUNT(DISTINCT icd9_code) FROM procedures_icd"),
    ("q10", "total cost charged per event type",
     "SELECT event_type, SUM(cost) FROM cost GROUP BY event_type",
     "SELECT event_type, SUM(cost) FROM cost GROUP BY event_type"),
]

MODEL = ModelConfig(model_name="cassette-model", endpoint="",
                    credential_env="METASQL_API_KEY", timeout_s=30.0)


def make_clinic_db() -> Database:
    db = Database.memory()
    db.run_script(CLINIC_DDL)
    return db


def make_demo_store() -> DemoStore:
    store = DemoStore()
    store.extend(DEMO_CORPUS)
    return store


def completion_for(sql: str, tables: str = "") -> str:
    lines = ["1. Identify the relevant tables:", tables or "(see query)",
             "2. Final SQL query:", "```sql", sql, "```", ""]
    return "\n".join(lines)


NO_SQL_COMPLETION = ("The schema has no matching column, so this question "
                     "cannot be answered with a query.\n")


def dataset_items() -> list[DatasetItem]:
    return [DatasetItem(id=item_id, question=question, sql=gold,
                        answerable=True, relevant_tables=(), source="fixture")
            for item_id, question, gold, _ in TEN_QUESTIONS]


def author_cassette(cassette_path, audit_path, db, catalog, store,
                    scripts: dict[str, list[str]],
                    flags: PipelineFlags | None = None) -> None:
    """Record one cassette entry per scripted attempt, keyed by prompt.

    ``scripts`` maps question text to the completion sequence the model
    is supposed to produce for it.
    """
    for question, completions in scripts.items():
        gateway = LlmGateway(MODEL, backend="scripted",
                             audit_log_path=str(audit_path),
                             cassette_path=str(cassette_path),
                             script=list(completions))
        Pipeline(db, catalog, store, gateway, flags).run(question)


def happy_scripts() -> dict[str, list[str]]:
    return {question: [completion_for(predicted)]
            for _, question, _, predicted in TEN_QUESTIONS}


@pytest.fixture(scope="session")
def clinic_db() -> Database:
    return make_clinic_db()


@pytest.fixture(scope="session")
def clinic_catalog(clinic_db) -> SchemaCatalog:
    return SchemaCatalog.from_database(clinic_db)


@pytest.fixture(scope="session")
def demo_store() -> DemoStore:
    return make_demo_store()


@pytest.fixture()
def scripted_gateway(tmp_path):
    def factory(completions: list[str], **kwargs) -> LlmGateway:
        return LlmGateway(MODEL, backend="scripted",
                          audit_log_path=str(tmp_path / "audit.jsonl"),
                          script=completions, **kwargs)
    return factory


def write_jsonl(path, records) -> str:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")
    return str(path)
