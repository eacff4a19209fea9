"""
Tests for result tables and run metadata.
"""

import json
import math
from enum import Enum

import pytest

from rdphase.core.exceptions import OutputError, UsageError
from rdphase.utils.audit import (
    ResultTable,
    config_digest,
    format_value,
    read_csv_rows,
    write_meta,
)


class Colour(str, Enum):
    RED = "red"


class TestFormatValue:
    """Test suite for format_value."""

    def test_floats_keep_full_precision(self):
        assert float(format_value(0.1)) == 0.1
        assert format_value(1.0 / 3.0) == "0.33333333333333331"

    def test_special_values(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(math.nan) == "nan"
        assert format_value(-math.inf) == "-inf"
        assert format_value(Colour.RED) == "red"


class TestResultTable:
    """Test suite for ResultTable."""

    def test_csv_round_trip(self, tmp_path):
        table = ResultTable(["lambda", "slope", "verdict"], "phase")
        table.record({"lambda": 0.05, "slope": -0.25, "verdict": "persistent"})
        table.record({"lambda": 3.0, "verdict": "extinct"})
        path = tmp_path / "phase.csv"
        table.to_csv(path)
        rows = read_csv_rows(path)
        assert rows[0] == {"lambda": "0.050000000000000003", "slope": "-0.25", "verdict": "persistent"}
        assert rows[1]["slope"] == ""
        assert table.summary() == {"name": "phase", "rows": 2, "columns": ["lambda", "slope", "verdict"]}

    def test_empty_table_writes_header(self, tmp_path):
        path = tmp_path / "empty.csv"
        ResultTable(["a", "b"]).to_csv(path)
        assert path.read_text() == "a,b\n"

    def test_unknown_column(self):
        table = ResultTable(["a"])
        with pytest.raises(UsageError, match="unknown columns"):
            table.record({"b": 1})

    def test_needs_columns(self):
        with pytest.raises(UsageError):
            ResultTable([])

    def test_unwritable_path(self, tmp_path):
        table = ResultTable(["a"])
        with pytest.raises(OutputError):
            table.to_csv(tmp_path / "missing" / "file.csv")

    def test_json(self, tmp_path):
        table = ResultTable(["a"])
        table.extend([{"a": 1}, {"a": 2}])
        path = tmp_path / "rows.json"
        table.to_json(path)
        assert json.loads(path.read_text()) == [{"a": 1}, {"a": 2}]
        assert table.column("a") == [1, 2]


class TestMeta:
    """Test suite for config_digest and write_meta."""

    def test_digest_is_stable(self):
        assert config_digest("seed = 1\n") == config_digest("seed = 1\n")
        assert config_digest("seed = 1\n") != config_digest("seed = 2\n")
        assert len(config_digest("")) == 64

    def test_write_meta(self, tmp_path):
        path = tmp_path / "meta.json"
        meta = write_meta(
            path,
            digest="abc",
            seed=7,
            replicas=3,
            rng={"algorithm": "philox"},
            wall_time=1.5,
            extra={"subcommand": "simulate"},
        )
        on_disk = json.loads(path.read_text())
        assert on_disk["seed"] == 7
        assert on_disk["subcommand"] == "simulate"
        assert on_disk["version"] == meta["version"]
        assert "physical_cores" in on_disk["host"]
