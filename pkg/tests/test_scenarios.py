import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from climate_contingent.errors import DomainError
from climate_contingent.scenarios import (
    ScenarioLadder,
    cumulative_trigger_prob,
    sample_indices,
    sample_scenario,
    severity_fraction,
)
from climate_contingent.streams import make_rng


@st.composite
def ladders(draw, max_k=8):
    k = draw(st.integers(1, max_k))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    p = w / w.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return ScenarioLadder(tuple(f"s{i}" for i in range(k)), tuple(p))


def test_default_probabilities_use_cumulative_column(ladder):
    assert ladder.probs == (0.3, 0.2, 0.2, 0.1, 0.1, 0.1)
    np.testing.assert_allclose(ladder.cumulative_probs, [1.0, 0.7, 0.5, 0.3, 0.2, 0.1], atol=1e-15)


@pytest.mark.parametrize("name, expected", [("extreme", 0.1), ("low", 1.0), ("int", 0.5)])
def test_cumulative_trigger_prob(ladder, name, expected):
    assert cumulative_trigger_prob(ladder, name) == pytest.approx(expected, abs=1e-15)


def test_unknown_scenario_is_domain_error(ladder):
    with pytest.raises(DomainError):
        cumulative_trigger_prob(ladder, "apocalyptic")
    with pytest.raises(DomainError):
        ladder.get(6)


def test_scenario_from_other_ladder_rejected(ladder):
    other = ScenarioLadder(("a", "b"), (0.5, 0.5))
    with pytest.raises(DomainError):
        ladder.get(other.get("a"))


@pytest.mark.parametrize(
    "names, probs",
    [((), ()), (("a", "a"), (0.5, 0.5)), (("a", "b"), (0.5, 0.4)), (("a", "b"), (1.0, 0.0)), (("a",), (0.5, 0.5))],
)
def test_invalid_ladders(names, probs):
    with pytest.raises(DomainError):
        ScenarioLadder(names, probs)


def test_records_roundtrip(ladder):
    assert ScenarioLadder.from_records(ladder.to_records()) == ladder


def test_degenerate_ladder_always_draws_single_scenario():
    one = ScenarioLadder(("only",), (1.0,))
    rng = make_rng(3)
    assert {sample_scenario(one, rng).name for _ in range(200)} == {"only"}
    assert severity_fraction(one, "only") == 0.0


def test_extreme_frequency(ladder):
    draws = sample_indices(ladder, make_rng(12345), 100_000)
    assert 0.094 <= np.mean(draws == 5) <= 0.106


def test_fixed_seed_reproducible(ladder):
    r1, r2 = make_rng(9), make_rng(9)
    assert [sample_scenario(ladder, r1).index for _ in range(50)] == [
        sample_scenario(ladder, r2).index for _ in range(50)
    ]


def test_batch_matches_sequential_draws(ladder):
    r1, r2 = make_rng(4, 0, 7), make_rng(4, 0, 7)
    batch = sample_indices(ladder, r1, 25)
    seq = [sample_scenario(ladder, r2).index for _ in range(25)]
    assert list(batch) == seq


@pytest.mark.parametrize("name, expected", [("low", 0.0), ("extreme", 1.0), ("int", 0.4)])
def test_severity_fraction(ladder, name, expected):
    assert severity_fraction(ladder, name) == pytest.approx(expected)


@given(ladders())
def test_cumulative_strictly_decreasing(lad):
    cum = lad.cumulative_probs
    assert cum[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(cum) < 0)
    sev = lad.severity_fractions
    assert sev[0] == 0.0
    if len(lad) > 1:
        assert sev[-1] == 1.0


@given(ladders(), st.integers(0, 2**32 - 1))
def test_samples_stay_on_ladder(lad, seed):
    idx = sample_indices(lad, make_rng(seed), 64)
    assert idx.min() >= 0 and idx.max() < len(lad)
