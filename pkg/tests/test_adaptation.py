import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from climate_contingent.adaptation import (
    AdaptationReturnTable,
    DecayCurve,
    MismatchDiscounts,
    VintageLedger,
    adaptation_income,
    expected_income_per_unit,
    historical_factor,
    mismatch_factor,
    mismatch_matrix,
    vintage_weights,
)
from climate_contingent.errors import DomainError

TABLE = AdaptationReturnTable()
D = MismatchDiscounts()
CURVE = DecayCurve()


def _income(ledger, realized, period=0, discounts_on=True, historical_on=True, d=D):
    return adaptation_income(ledger, realized, TABLE, d, CURVE, period, 10, discounts_on, historical_on)


def test_default_table_shape():
    assert TABLE.returns[0] == 0.0
    assert list(TABLE.returns) == sorted(TABLE.returns)


@pytest.mark.parametrize("returns", [(1.0, 0.5), (-1.0, 2.0)])
def test_table_rejects_non_monotone_or_negative(returns):
    with pytest.raises(DomainError):
        AdaptationReturnTable(returns)


def test_mismatch_examples(ladder):
    assert mismatch_factor(ladder.get("extreme"), ladder.get("int"), MismatchDiscounts(upper=0.5)) == 0.5
    assert 10 * mismatch_factor(ladder.get("extreme"), ladder.get("int"), D) == 5
    assert mismatch_factor(ladder.get("int low"), ladder.get("extreme"), MismatchDiscounts(lower=0.75)) == 0.75
    for s in ladder.scenarios:
        assert mismatch_factor(s, s, D) == 1.0


def test_mismatch_off_is_one(ladder):
    assert mismatch_factor(ladder.get("extreme"), ladder.get("low"), D, discounts_on=False) == 1.0


@pytest.mark.parametrize("upper, lower", [(-0.1, 0.5), (0.5, 1.2)])
def test_discount_bounds(upper, lower):
    with pytest.raises(DomainError):
        MismatchDiscounts(upper, lower)


def test_historical_factor_examples():
    assert historical_factor(0, CURVE) == pytest.approx(0.953, abs=1e-3)
    assert historical_factor(40, CURVE) == pytest.approx(0.047, abs=1e-3)
    assert historical_factor(10, CURVE, historical_on=False) == 0.0
    assert historical_factor(0, CURVE, historical_on=False) == 1.0


def test_negative_age_rejected():
    with pytest.raises(DomainError):
        historical_factor(-1, CURVE)


def test_decay_curve_validation():
    with pytest.raises(DomainError):
        DecayCurve(midpoint_years=5.0)
    with pytest.raises(DomainError):
        DecayCurve(steepness=0.0)


@given(st.floats(0, 200), st.floats(0, 200))
def test_decay_nonincreasing(a, b):
    lo, hi = min(a, b), max(a, b)
    assert 0.0 <= CURVE(hi) <= CURVE(lo) <= 1.0


def test_income_examples(ladder):
    ledger = VintageLedger()
    ledger.add(0, ladder.get("extreme"), 1e8)
    assert _income(ledger, ladder.get("extreme"), discounts_on=False, historical_on=False) == 7e8
    for on in (True, False):
        assert _income(ledger, ladder.get("low"), discounts_on=on, historical_on=on) == 0.0

    small = VintageLedger()
    small.add(0, ladder.get("extreme"), 10)
    assert _income(small, ladder.get("int"), discounts_on=True, historical_on=False) == pytest.approx(11.25)


def test_old_vintages_earn_only_with_history(ladder):
    ledger = VintageLedger()
    ledger.add(0, ladder.get("extreme"), 1.0)
    ledger.add(1, ladder.get("extreme"), 1.0)
    ext = ladder.get("extreme")
    assert _income(ledger, ext, period=1, historical_on=False) == 7.0
    assert _income(ledger, ext, period=1, historical_on=True) == pytest.approx(7 * (CURVE(0) + CURVE(10)))


def test_future_vintage_rejected(ladder):
    ledger = VintageLedger()
    ledger.add(3, ladder.get("int"), 1.0)
    with pytest.raises(DomainError):
        _income(ledger, ladder.get("int"), period=1)


def test_mismatch_matrix_matches_scalar(ladder):
    m = mismatch_matrix(len(ladder), D)
    for e in ladder.scenarios:
        for r in ladder.scenarios:
            assert m[e.index, r.index] == mismatch_factor(e, r, D)


def test_vintage_weights():
    w = vintage_weights(4, 10, CURVE, historical_on=True)
    np.testing.assert_allclose(w, np.cumsum([CURVE(10 * i) for i in range(4)]))
    np.testing.assert_array_equal(vintage_weights(4, 10, CURVE, historical_on=False), np.ones(4))


def test_expected_income_closed_form(ladder):
    # undiscounted, any single-scenario allocation earns E[table] = 2.375 per unit
    for k in range(len(ladder)):
        alloc = np.eye(len(ladder))[k]
        assert expected_income_per_unit(ladder.probs, TABLE, alloc, D, discounts_on=False) == pytest.approx(2.375)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_income_monotone_in_discounts(u1, u2, l1, l2):
    from climate_contingent.scenarios import ScenarioLadder

    ladder = ScenarioLadder.default()
    alloc = [0, 0.2, 0.2, 0.2, 0.2, 0.2]
    lo = expected_income_per_unit(ladder.probs, TABLE, alloc, MismatchDiscounts(min(u1, u2), min(l1, l2)))
    hi = expected_income_per_unit(ladder.probs, TABLE, alloc, MismatchDiscounts(max(u1, u2), max(l1, l2)))
    assert lo <= hi + 1e-12
