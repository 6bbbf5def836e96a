import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from medgeom.dataset import (
    SUMMARY_COLUMNS,
    Dataset,
    VariableSpec,
    complete_cases,
    describe,
    load_csv,
    percentize,
    read_csv_text,
    survey_specs,
    synthetic_survey_path,
)
from medgeom.errors import DomainError, ParseError, SchemaError

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_blank_cell_becomes_missing(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("Y,M,X\n1,2,3\n4,,6\n7,8,9\n")
    ds = load_csv(f, [VariableSpec("Y"), VariableSpec("M"), VariableSpec("X")])
    assert ds.n_raw == 3
    assert np.isnan(ds["M"][1])
    assert ds.missing_mask("M").sum() == 1


def test_na_tokens_are_missing():
    ds = read_csv_text("A,B\nNA,1\nnan,2\n", None)
    assert np.isnan(ds["A"]).all()


def test_missing_declared_column_is_schema_error(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("Y,M,X\n1,2,3\n")
    with pytest.raises(SchemaError, match="PD"):
        load_csv(f, [VariableSpec("Y"), VariableSpec("PD")])


def test_non_numeric_cell_reports_location():
    with pytest.raises(ParseError) as exc:
        read_csv_text("Y,M\n1,2\n3,abc\n", [VariableSpec("Y"), VariableSpec("M")])
    assert exc.value.row == 3
    assert exc.value.column == "M"


def test_utf8_bom_header(tmp_path):
    f = tmp_path / "d.csv"
    f.write_bytes("﻿Y,X\n1,2\n".encode("utf-8"))
    assert load_csv(f)["Y"][0] == 1.0


def test_dataset_is_read_only():
    ds = Dataset.from_arrays(a=[1.0, 2.0])
    with pytest.raises(ValueError):
        ds["a"][0] = 5.0


def test_unequal_columns_rejected():
    with pytest.raises(DomainError):
        Dataset.from_arrays(a=[1.0], b=[1.0, 2.0])


def test_variable_spec_validation_and_parse():
    with pytest.raises(DomainError):
        VariableSpec("x", "control", 1.0, 1.0)
    with pytest.raises(DomainError):
        VariableSpec("x", "moderator")
    s = VariableSpec.parse("PD:mediator:0:4")
    assert (s.name, s.role, s.conceptual_min, s.conceptual_max) == ("PD", "mediator", 0.0, 4.0)


def test_bundled_extract_has_survey_row_count():
    ds = load_csv(synthetic_survey_path(), survey_specs())
    assert ds.n_raw == 3865


@pytest.mark.parametrize("value, expected", [(18, 0.18), (104, 1.04)])
def test_percentize_age_examples(value, expected):
    assert percentize(value, 0, 100) == pytest.approx(expected, abs=1e-15)


def test_percentize_lower_endpoint_and_domain():
    assert percentize(3.0, 3.0, 7.0) == 0.0
    with pytest.raises(DomainError):
        percentize(1.0, 2.0, 2.0)


@given(finite, finite, st.floats(1e-3, 1e3), st.floats(1e-3, 10))
def test_percentize_affine_and_increasing(v, lo, width, step):
    hi = lo + width
    assert percentize(hi, lo, hi) == pytest.approx(1.0)
    assert percentize(v + step, lo, hi) > percentize(v, lo, hi)
    mid = 0.5 * (v + (v + step))
    # rounding in (value - c_min) grows with the magnitude of the inputs
    tol = 1e-12 * (abs(v) + abs(lo) + 1.0) / width
    assert percentize(mid, lo, hi) == pytest.approx(
        0.5 * (percentize(v, lo, hi) + percentize(v + step, lo, hi)), rel=1e-9, abs=tol
    )


def test_describe_constant_and_hand_example():
    ds = Dataset.from_arrays(c=[2.0, 2.0, 2.0], s=[0.0, 1.0, 2.0])
    summ = describe(ds, [VariableSpec("c"), VariableSpec("s", "control", 0, 3)])
    assert summ["c"].raw_sd == 0.0
    ds2 = Dataset.from_arrays(s=[0.0, 1.0, 2.0, 3.0])
    r = describe(ds2, [VariableSpec("s", "control", 0, 3)])["s"]
    assert r.ps_mean == pytest.approx(0.5)
    # sample sd of {0,1,2,3} is sqrt(5/3)
    assert r.raw_sd == pytest.approx(math.sqrt(5 / 3))


def test_describe_empty_column_is_flagged():
    ds = Dataset.from_arrays(e=[np.nan, np.nan])
    r = describe(ds, [VariableSpec("e")])["e"]
    assert r.empty and r.n == 0 and np.isnan(r.raw_mean)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=30), finite, st.floats(0.1, 100))
def test_describe_percentized_is_affine_image(values, lo, width):
    spec = VariableSpec("v", "control", lo, lo + width)
    raw = describe(Dataset.from_arrays(v=values), [spec])["v"]
    assert raw.ps_mean == pytest.approx((raw.raw_mean - lo) / width, rel=1e-9, abs=1e-9)
    assert raw.ps_sd == pytest.approx(raw.raw_sd / width, rel=1e-9, abs=1e-9)
    assert raw.n <= 30 and raw.raw_sd >= 0


def test_summary_serialization_column_order():
    ds = Dataset.from_arrays(a=[1.0, 2.0, np.nan])
    summ = describe(ds, [VariableSpec("a", "control", 0, 4)])
    header = summ.to_csv().splitlines()[0].split(",")
    assert tuple(header) == SUMMARY_COLUMNS
    data = json.loads(summ.to_json())
    assert data["columns"] == list(SUMMARY_COLUMNS)
    assert list(data["rows"][0])[:10] == list(SUMMARY_COLUMNS)
    assert data["rows"][0]["n"] == 2


def test_complete_cases_examples():
    ds = Dataset.from_arrays(Y=[1.0, 2.0, 3.0], M=[1.0, np.nan, 3.0], X=[0.0, 1.0, 2.0])
    assert complete_cases(ds, ["Y", "X"]).n_raw == 3
    cc = complete_cases(ds, ["Y", "M", "X"])
    assert cc.n_raw == 2
    assert complete_cases(cc, ["Y", "M", "X"]).columns.keys() == cc.columns.keys()


@given(st.lists(st.tuples(st.one_of(st.none(), finite), st.one_of(st.none(), finite)), max_size=40))
def test_complete_cases_idempotent(rows):
    a = [np.nan if r[0] is None else r[0] for r in rows]
    b = [np.nan if r[1] is None else r[1] for r in rows]
    ds = Dataset.from_arrays(a=a, b=b)
    once = complete_cases(ds, ["a", "b"])
    twice = complete_cases(once, ["a", "b"])
    np.testing.assert_array_equal(once["a"], twice["a"])
    assert not np.isnan(once["a"]).any()


def test_survey_model_complete_case_counts():
    ds = load_csv(synthetic_survey_path(), survey_specs())
    assert complete_cases(ds, ["SM", "PD", "CG", "Age", "Income", "Edu"]).n_raw == 3267
    assert complete_cases(ds, ["PA", "PD", "EM", "Age", "Gender", "Edu"]).n_raw == 3594
    summ = describe(ds, survey_specs())
    expected = {"SM": 3821, "PD": 3810, "CG": 3738, "Age": 3738, "Income": 3448,
                "Edu": 3722, "PA": 3739, "EM": 3778, "Gender": 3765}
    assert {r.variable: r.n for r in summ.rows} == expected
