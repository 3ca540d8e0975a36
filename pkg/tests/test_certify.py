import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from gapcert.certify import (
    CubeRootSchedule,
    DeltaModel,
    PowerSchedule,
    delta_model_from_spec,
    local_gap_threshold,
    log_threshold,
    pvbs_bound,
    pvbs_certify,
    pvbs_delta,
    recursion_bound,
    schedule_constant,
    schedule_from_name,
    table1_thresholds,
    threshold_check,
    verify_recursion_step,
)
from gapcert.errors import DecompositionError
from gapcert.lattice import Region

I = Region.interval


def test_zero_delta_constant():
    res = recursion_bound(1.0, 1, PowerSchedule(2), DeltaModel.zero())
    assert res.valid
    assert res.lower_bound <= math.pi / math.sinh(math.pi)
    assert res.lower_bound == pytest.approx(math.pi / math.sinh(math.pi), rel=1e-12)


def test_schedule_constant_k2():
    C, info = schedule_constant(PowerSchedule(2))
    # Π_{k>=1} (1 + 1/k²) = sinh(π)/π
    assert C == pytest.approx(math.pi / math.sinh(math.pi), rel=1e-12)


def test_exponential_auto_k0():
    res = recursion_bound(1.0, None, PowerSchedule(2), DeltaModel.exponential(1.0, 0.5))
    assert res.valid and res.k0 == 23
    assert 0 < res.lower_bound < 1
    assert all(f["delta"] < 0.5 for f in res.factors)


def test_invalid_when_delta_reaches_half():
    res = recursion_bound(1.0, 3, PowerSchedule(2), DeltaModel.exponential(1.0, 0.5))
    assert not res.valid and res.offending_level == 4
    assert res.lower_bound == 0.0


def test_finite_table_not_certified():
    res = recursion_bound(1.0, 1, PowerSchedule(2), DeltaModel.from_table({2: 0.1, 3: 0.1}))
    assert not res.valid and "finite table" in res.reason
    assert len(res.level_bounds) == 3


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.45), st.floats(0.05, 0.45))
def test_monotone_in_delta(d1, d2):
    lo, hi = sorted((d1, d2))
    a = recursion_bound(1.0, 1, PowerSchedule(2), DeltaModel.from_table({2: lo}, DeltaModel.zero()))
    b = recursion_bound(1.0, 1, PowerSchedule(2), DeltaModel.from_table({2: hi}, DeltaModel.zero()))
    assert a.lower_bound >= b.lower_bound


def test_other_schedules():
    assert recursion_bound(1.0, None, PowerSchedule(1.5), DeltaModel.polynomial(1.0, 2.0)).valid
    assert recursion_bound(1.0, None, CubeRootSchedule(), DeltaModel.exponential(1.0, 0.5)).valid
    for D in (2, 3):
        assert recursion_bound(1.0, None, PowerSchedule(2), DeltaModel.exponential(1.0, 0.5), dim=D).valid


def test_spec_parsers():
    assert schedule_from_name("k2").name == "k2"
    assert delta_model_from_spec("exponential:c=1,alpha=0.5").kind == "exponential"
    assert delta_model_from_spec("zero").c == 0.0
    with pytest.raises(ValueError):
        schedule_from_name("nope")


def test_json_schema():
    doc = json.loads(recursion_bound(1.0, 1, PowerSchedule(2), DeltaModel.zero()).to_json())
    assert doc["schema_version"] >= 1
    assert {"lower_bound", "C", "factors", "tail_bound", "valid"} <= set(doc)


def test_recursion_step_holds(heis):
    out = verify_recursion_step(heis, 5, max_dim=4096)
    assert out["passed"]


def test_thresholds():
    th = table1_thresholds(10)
    assert th["knabe_1d"] == 1 / 9 and th["gosset_mozgunov_2d_square"] == 8 / 100
    assert log_threshold(10) == pytest.approx(math.log(10) ** 3 / 10)
    rows = threshold_check([(10, 1.0), (10, 0.01)], "1d")
    assert rows[0].clears_table1 and rows[1].below_table1
    assert local_gap_threshold(10, 1) == pytest.approx(10 / 1.5**10)
    with pytest.raises(ValueError):
        table1_thresholds(1)


def test_pvbs_delta_cardinality():
    assert pvbs_delta(I(0, 9), I(5, 14), [1.0]).value == pytest.approx(0.5, abs=1e-12)
    assert pvbs_delta(I(0, 9), I(0, 3), [0.5]).value == 0.0


def test_pvbs_delta_brute_force():
    lam, A, B = 0.7, I(0, 6), I(3, 9)
    C = lambda X: sum(lam ** (2 * x[0]) for x in X.sites)  # noqa: E731
    ref = math.sqrt(C(A - B) * C(B - A) / (C(A) * C(B)))
    assert pvbs_delta(A, B, [lam]).value == pytest.approx(ref, rel=1e-12)
    assert ref <= pvbs_bound(3, 6, 6, lam)


def test_pvbs_2d_box():
    A, B = Region.box([0, 0], [3, 6]), Region.box([0, 3], [3, 9])
    assert pvbs_delta(A, B, [1.3, 0.6]).value == pytest.approx(pvbs_delta(I(0, 6), I(3, 9), [0.6]).value, rel=1e-12)
    with pytest.raises(DecompositionError):
        pvbs_delta(A | Region.box([10, 10], [11, 11]), B, [1.0, 0.5])


def test_pvbs_certify():
    assert pvbs_certify([0.5], PowerSchedule(2)).valid
    assert pvbs_certify([1.25, 0.5], PowerSchedule(2)).valid
    assert not pvbs_certify([1.0], PowerSchedule(2)).valid
    assert math.isinf(pvbs_bound(3, 5, 5, 1.0))
