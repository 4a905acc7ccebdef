import json
import math

import numpy as np
import pytest

from vmalloc import (ConfigurationError, DomainError, Exponential, PolicyTable, PricingParams,
                     SolverConfig, TableFormatError, TableValidationError, TimeGrid,
                     build_table, load_table, lookup, price, save_table)

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import given, settings, strategies as st

SMALL = SolverConfig(grid=TimeGrid(0.0, 12.0, 256), n_operational=512)


@pytest.fixture(scope="module")
def small_table():
    return build_table(Exponential(1.0), [10.0, 100.0], 6, SMALL, stamp=False)


def test_price_examples():
    assert price(PricingParams(q=1.0), 7.09243, 3.0) == pytest.approx(7.09243)
    pp = PricingParams(q=0.5, surcharge=[(0.0, 0.1)])
    assert price(pp, 2.0, 5.0) == pytest.approx(1.1)
    assert price(PricingParams(q=0.0), 12.5, 1.0) == 0.0


def test_surcharge_schedule():
    pp = PricingParams(surcharge=[(2.0, 0.5), (6.0, 0.25)])
    assert pp.s_of_t(1.0) == 0.0
    assert pp.s_of_t(2.0) == 0.5
    assert pp.s_of_t(5.9) == 0.5
    assert pp.s_of_t(11.0) == 0.25
    with pytest.raises(ConfigurationError):
        PricingParams(q=1.5)
    with pytest.raises(ConfigurationError):
        PricingParams(surcharge=[(3.0, 1.0), (1.0, 1.0)])


@given(st.floats(0, 1), st.floats(0, 50), st.floats(0, 10), st.floats(0, 12))
@settings(max_examples=100, deadline=None)
def test_price_linear_in_threshold(q, y, a, t):
    pp = PricingParams(q=q, surcharge=[(0.0, 0.3), (4.0, 0.7)])
    s = pp.s_of_t(t)
    assert price(pp, a * y, t) - s == pytest.approx(a * (price(pp, y, t) - s), rel=1e-9, abs=1e-12)


def test_build_cardinality(small_table):
    assert len(small_table.curves) == 12
    assert small_table.created is None
    one = build_table(Exponential(1.0), [100.0], 1, SMALL, stamp=True)
    assert len(one.curves) == 1 and one.created


def test_build_rejects_bad_grid():
    with pytest.raises(ConfigurationError):
        build_table(Exponential(1.0), [], 2, SMALL)
    with pytest.raises(ConfigurationError):
        build_table(Exponential(1.0), [100.0, 10.0], 2, SMALL)


def test_lookup_semantics(small_table):
    tb = small_table
    assert lookup(tb, 100.0, 6, 12.0) == pytest.approx(1.0, abs=1e-8)
    assert lookup(tb, 100.0, 0, 3.0) == math.inf
    # nearest rate, ties to the lower one
    assert lookup(tb, 60.0, 3, 1.0) == lookup(tb, 100.0, 3, 1.0)
    assert lookup(tb, 55.0, 3, 1.0) == lookup(tb, 10.0, 3, 1.0)
    assert lookup(tb, 1000.0, 3, 1.0) == lookup(tb, 100.0, 3, 1.0)
    # clamping above the table's largest count
    assert lookup(tb, 100.0, 50, 2.0) == lookup(tb, 100.0, 6, 2.0)
    # interpolation in t
    c = tb.curves[(1, 4)]
    mid = 0.5 * (c.t[10] + c.t[11])
    assert lookup(tb, 100.0, 4, mid) == pytest.approx(0.5 * (c.values[10] + c.values[11]), rel=1e-14)
    for bad in (-0.1, 12.01):
        with pytest.raises(DomainError):
            lookup(tb, 100.0, 2, bad)


def test_lookup_nonincreasing_in_inventory(small_table):
    for lam in (10.0, 100.0):
        for t in np.linspace(0, 12, 37):
            vals = [lookup(small_table, lam, n, t) for n in range(0, 9)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_save_load_round_trip(small_table, tmp_path):
    path = tmp_path / "table.json"
    save_table(small_table, path)
    back = load_table(path)
    for key, c in small_table.curves.items():
        assert np.array_equal(back.curves[key].values, c.values)
    for lam in (10.0, 70.0, 100.0):
        for n in range(0, 8):
            for t in (0.0, 0.3, 5.5, 11.99, 12.0):
                assert lookup(back, lam, n, t) == pytest.approx(lookup(small_table, lam, n, t), abs=1e-12)
    text = path.read_text()
    assert '"created"' not in text
    doc = json.loads(text)
    assert doc["grid"]["n_steps"] == 256 and doc["lambda_grid"] == [10.0, 100.0]


def test_load_missing_curve(small_table, tmp_path):
    path = tmp_path / "t.json"
    save_table(small_table, path)
    doc = json.loads(path.read_text())
    del doc["curves"]["1:3"]
    path.write_text(json.dumps(doc))
    with pytest.raises(TableFormatError) as err:
        load_table(path)
    assert err.value.field == "curves.1:3"


@pytest.mark.parametrize("field,value", [("horizon_hours", "twelve"), ("n_vms_max", 2.5),
                                         ("lambda_grid", []), ("distribution", {"family": "x"})])
def test_load_bad_fields(small_table, tmp_path, field, value):
    path = tmp_path / "t.json"
    save_table(small_table, path)
    doc = json.loads(path.read_text())
    doc[field] = value
    path.write_text(json.dumps(doc))
    with pytest.raises(TableFormatError) as err:
        load_table(path)
    assert err.value.field == field


def test_load_garbage(tmp_path):
    path = tmp_path / "t.json"
    path.write_text("{not json")
    with pytest.raises(TableFormatError):
        load_table(path)


def test_load_swapped_curves_fails_validation(small_table, tmp_path):
    path = tmp_path / "t.json"
    save_table(small_table, path)
    doc = json.loads(path.read_text())
    c = doc["curves"]
    c["1:2"], c["1:5"] = c["1:5"], c["1:2"]
    path.write_text(json.dumps(doc))
    with pytest.raises(TableValidationError):
        load_table(path)
