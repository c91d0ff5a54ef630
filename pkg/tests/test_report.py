import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from regdecomp.report import SCHEMA_VERSION, document, dumps, format_float, g6


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    s = format_float(x)
    assert float(s) == x
    assert math.copysign(1.0, float(s)) == math.copysign(1.0, x)
    assert json.loads(s) == x


def test_integral_floats_stay_floats():
    assert format_float(3.0) == "3.0"
    assert format_float(-0.0) == "-0.0"
    assert format_float(1e300) == "1.0000000000000001e+300"
    assert isinstance(json.loads(format_float(2.0)), float)


def test_non_finite_written_as_null():
    assert format_float(float("nan")) == "null"
    assert json.loads(dumps({"a": [1.0, float("inf")]})) == {"a": [1.0, None]}


def test_dumps_handles_numpy_and_nesting():
    obj = {"v": np.array([0.1, 2.0]), "n": np.int64(3), "flag": True, "rows": [{"x": np.float64(0.5)}], "e": []}
    text = dumps(obj)
    assert text.endswith("\n")
    assert json.loads(text) == {"v": [0.1, 2.0], "n": 3, "flag": True, "rows": [{"x": 0.5}], "e": []}
    assert "[0.10000000000000001, 2.0]" in text


def test_document_envelope():
    doc = document("verify", [], {"seed": 1}, {"passed": True})
    assert doc["schema_version"] == SCHEMA_VERSION
    assert list(doc) == ["schema_version", "tool", "tool_version", "command", "inputs", "options", "result"]


def test_table_number_format():
    assert g6(-0.0) == "0"
    assert g6(None) == "-"
    assert g6(float("nan")) == "nan"
    assert g6(1234567.891) == "1.23457e+06"
