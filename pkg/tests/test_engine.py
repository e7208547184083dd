"""Embedded engine: timestamp arithmetic, dialect enforcement, limits.

Expected timestamp values were frozen from sqlite's own datetime()
output (the reference implementation for calendar overflow), so these
assertions are independent of the code under test.
"""
import pytest

from metasql.engine import (DEFAULT_MAX_ROWS, Database, QueryResult,
                            parse_timestamp)
from metasql.errors import ExecutionError


@pytest.fixture(scope="module")
def db():
    handle = Database.memory()
    handle.run_script("""
    CREATE TABLE ev (id INTEGER, name TEXT, ts TEXT, amount REAL);
    INSERT INTO ev VALUES
      (1, 'alpha', '2100-01-31 10:30:00', 10.5),
      (2, 'beta',  '2100-03-17 15:45:12', 20.0),
      (3, 'gamma', '2100-06-15 10:00:00', NULL),
      (4, 'delta', '2096-02-29 12:00:00', 7.25);
    """)
    return handle


def one(db, sql):
    return db.execute(sql).rows[0][0]


class TestTimestampOffsets:
    # sqlite: datetime('2100-01-31 10:30:00', '+1 month') = 2100-03-03
    def test_month_overflow_forward(self, db):
        assert one(db, "SELECT CAST(ts AS TIMESTAMP) + INTERVAL '1 month' "
                       "FROM ev WHERE id = 1") == "2100-03-03 10:30:00"

    def test_month_overflow_13(self, db):
        assert one(db, "SELECT CAST(ts AS TIMESTAMP) + INTERVAL '13 months' "
                       "FROM ev WHERE id = 1") == "2101-03-03 10:30:00"

    def test_month_backward(self, db):
        assert one(db, "SELECT CAST('2100-03-31 00:00:00' AS TIMESTAMP) "
                       "- INTERVAL '1 month'") == "2100-03-03 00:00:00"

    def test_months_backward_13(self, db):
        assert one(db, "SELECT CAST('2100-03-03 08:00:00' AS TIMESTAMP) "
                       "- INTERVAL '13 months'") == "2099-02-03 08:00:00"

    def test_leap_day_plus_year(self, db):
        assert one(db, "SELECT CAST(ts AS TIMESTAMP) + INTERVAL '1 year' "
                       "FROM ev WHERE id = 4") == "2097-03-01 12:00:00"

    def test_leap_day_plus_four_years(self, db):
        # 2100 is not a leap year
        assert one(db, "SELECT CAST(ts AS TIMESTAMP) + INTERVAL '4 years' "
                       "FROM ev WHERE id = 4") == "2100-03-01 12:00:00"

    def test_year_rollover(self, db):
        assert one(db, "SELECT CAST('2100-12-15 23:59:59' AS TIMESTAMP) "
                       "+ INTERVAL '1 month'") == "2101-01-15 23:59:59"

    @pytest.mark.parametrize("interval,expected", [
        ("- INTERVAL '1 day'", "2099-12-31 00:00:00"),
        ("+ INTERVAL '2 hours'", "2100-01-01 02:00:00"),
        ("- INTERVAL '90 minutes'", "2099-12-31 22:30:00"),
        ("+ INTERVAL '3600 seconds'", "2100-01-01 01:00:00"),
    ])
    def test_sub_day_units(self, db, interval, expected):
        assert one(db, "SELECT CAST('2100-01-01 00:00:00' AS TIMESTAMP) "
                       f"{interval}") == expected

    def test_90_days(self, db):
        assert one(db, "SELECT CAST('2100-06-30 11:22:33' AS TIMESTAMP) "
                       "+ INTERVAL '90 days'") == "2100-09-28 11:22:33"


class TestDateTrunc:
    @pytest.mark.parametrize("part,expected", [
        ("month", "2100-03-01 00:00:00"),
        ("year", "2100-01-01 00:00:00"),
        ("day", "2100-03-17 00:00:00"),
    ])
    def test_parts(self, db, part, expected):
        assert one(db, f"SELECT DATE_TRUNC('{part}', ts) FROM ev "
                       "WHERE id = 2") == expected

    def test_bad_part_rejected(self, db):
        with pytest.raises(ExecutionError):
            db.execute("SELECT DATE_TRUNC('week', ts) FROM ev")


class TestStrftime:
    @pytest.mark.parametrize("fmt,expected", [
        ("%Y-%m", "2100-03"),
        ("%d/%m/%Y", "17/03/2100"),
        ("%H:%M:%S", "15:45:12"),
        ("%Y-%m-%d %H:%M:%S", "2100-03-17 15:45:12"),
    ])
    def test_formats(self, db, fmt, expected):
        assert one(db, f"SELECT STRFTIME(ts, '{fmt}') FROM ev "
                       "WHERE id = 2") == expected

    def test_day_of_year_and_weekday(self, db):
        # sqlite gives %j='066', %w='0' for 2100-03-07 (a Sunday)
        assert one(db, "SELECT STRFTIME(CAST('2100-03-07 04:05:06' AS "
                       "TIMESTAMP), '%j')") == "066"
        assert one(db, "SELECT STRFTIME(CAST('2100-03-07 04:05:06' AS "
                       "TIMESTAMP), '%w')") == "0"

    def test_argument_order_flexible(self, db):
        # format-first calls survive lowering too
        assert one(db, "SELECT STRFTIME('%Y', ts) FROM ev WHERE id = 2") \
            == "2100"


class TestDialectEnforcement:
    def test_datetime_function_rejected(self, db):
        with pytest.raises(ExecutionError, match="unknown function"):
            db.execute("SELECT DATETIME(ts) FROM ev")

    def test_current_time_rejected(self, db):
        with pytest.raises(ExecutionError, match="CURRENT_TIMESTAMP"):
            db.execute("SELECT CURRENT_TIME")

    def test_modifier_strftime_rejected(self, db):
        with pytest.raises(ExecutionError):
            db.execute("SELECT STRFTIME('%Y', ts, 'start of month') FROM ev")

    def test_unknown_function_rejected(self, db):
        with pytest.raises(ExecutionError, match="unknown function: FOO"):
            db.execute("SELECT FOO(1)")

    def test_source_route_accepts_sqlite_functions(self, db):
        result = db.execute_source(
            "SELECT datetime(ts, '+1 month') FROM ev WHERE id = 1")
        assert result.rows[0][0] == "2100-03-03 10:30:00"

    def test_current_timestamp_allowed(self, db):
        value = one(db, "SELECT CURRENT_TIMESTAMP")
        assert parse_timestamp(value) is not None


class TestLimitsAndSafety:
    def test_row_cap(self, db):
        with pytest.raises(ExecutionError, match="row cap"):
            db.execute("SELECT e1.id FROM ev e1, ev e2, ev e3",
                       max_rows=10)

    def test_timeout(self):
        handle = Database.memory()
        handle.run_script("CREATE TABLE n (v INTEGER);"
                          + "".join(f"INSERT INTO n VALUES ({i});"
                                    for i in range(200)))
        with pytest.raises(ExecutionError, match="timeout"):
            handle.execute(
                "SELECT COUNT(*) FROM n a, n b, n c, n d",
                timeout_s=0.05)

    def test_writes_rejected(self, db):
        with pytest.raises(ExecutionError):
            db.execute("DELETE FROM ev")

    def test_mutation_via_function_rejected(self, db):
        # query_only should hold even on the writable fixture handle
        with pytest.raises(ExecutionError):
            db.execute_source("INSERT INTO ev VALUES (9, 'x', 'y', 0)")

    def test_default_row_cap_value(self):
        assert DEFAULT_MAX_ROWS == 100_000

    def test_missing_file(self, tmp_path):
        with pytest.raises(ExecutionError):
            Database(str(tmp_path / "absent.db"))


class TestResults:
    def test_column_types_inferred(self, db):
        result = db.execute("SELECT id, name, amount FROM ev")
        assert result.columns[0] == ("id", "INTEGER")
        assert result.columns[1] == ("name", "TEXT")
        assert result.columns[2] == ("amount", "REAL")

    def test_all_null_column_unknown(self, db):
        result = db.execute("SELECT NULL")
        assert result.columns[0][1] == "UNKNOWN"

    def test_n_rows(self, db):
        assert db.execute("SELECT id FROM ev").n_rows == 4

    def test_queryresult_shape(self, db):
        result = db.execute("SELECT id, name FROM ev WHERE id = 1")
        assert isinstance(result, QueryResult)
        assert result.column_names == ["id", "name"]
        assert result.rows == [(1, "alpha")]

    def test_aggregates_over_null(self, db):
        assert one(db, "SELECT SUM(amount) FROM ev") == pytest.approx(37.75)

    def test_datediff_counts_boundaries(self, db):
        # end minus start, whole-day boundaries crossed
        assert one(db, "SELECT DATEDIFF('day', "
                       "CAST('2100-03-01 00:01:00' AS TIMESTAMP), "
                       "CAST('2100-03-02 23:59:00' AS TIMESTAMP))") == 1
        assert one(db, "SELECT DATEDIFF('day', "
                       "CAST('2100-02-28 23:59:59' AS TIMESTAMP), "
                       "CAST('2100-03-01 00:00:00' AS TIMESTAMP))") == 1
