import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from climate_contingent.config import (
    ExperimentConfig,
    apply_overrides,
    load_config,
    parse_override,
    sweep_points,
)
from climate_contingent.engine import extreme_only, spread_above_lowest
from climate_contingent.errors import ConfigError


def _field_of(raw):
    with pytest.raises(ConfigError) as e:
        ExperimentConfig.from_dict(raw)
    return e.value.field


def test_defaults_validate():
    cfg = ExperimentConfig.from_dict({})
    sim = cfg.simulation_config()
    assert sim.n_replications == 500 and sim.n_periods == 5
    assert sim.allocation_A == spread_above_lowest(sim.ladder)
    assert cfg.ccb_spec().granularity == 15


@pytest.mark.parametrize(
    "raw, field",
    [
        ({"simulation": {"n_replicatoins": 5}}, "simulation"),
        ({"simulation": {"n_replications": "many"}}, "simulation.n_replications"),
        ({"simulation": {"n_replications": 0}}, "simulation.n_replications"),
        ({"adaptation": {"discounts_on": 1}}, "adaptation.discounts_on"),
        ({"adaptation": {"upper_discount": 2.0}}, "adaptation"),
        ({"adaptation": {"returns": [3, 2, 1, 0, 0, 0]}}, "adaptation.returns"),
        ({"scenarios": [{"name": "a", "probability": 0.4}]}, "scenarios"),
        ({"scenarios": [{"name": "a"}]}, "scenarios[0]"),
        ({"simulation": {"allocation_A": "bogus_only"}}, "simulation.allocation_A"),
        ({"simulation": {"prices": {"nope": 3.0}}}, "simulation.prices"),
        ({"price_optimizer": {"bounds": {"extreme": [1]}}}, "price_optimizer.bounds"),
        ({"ccb": {"granularity": 1}}, "ccb.granularity"),
        ({"ccb": {"blend_lambda": -0.5}}, "ccb.blend_lambda"),
        ({"climate_data": {"sigma": -1.0}}, "climate_data"),
    ],
)
def test_field_level_errors(raw, field):
    assert _field_of(raw) == field


def test_unknown_top_level_key():
    with pytest.raises(ConfigError, match="unknown top-level"):
        ExperimentConfig.from_dict({"simulaton": {}})


def test_allocation_forms():
    cfg = ExperimentConfig.from_dict({"simulation": {"allocation_A": "int_low_only"}})
    ladder = cfg.ladder()
    assert cfg.simulation_config().allocation_A == extreme_only(ladder, "int low")
    cfg = ExperimentConfig.from_dict({"simulation": {"allocation_A": {"high": 0.5, "extreme": 0.5}}})
    assert cfg.simulation_config().allocation_A == (0, 0, 0, 0, 0.5, 0.5)


def test_partial_price_dict_filled_with_floors():
    cfg = ExperimentConfig.from_dict({"simulation": {"prices": {"extreme": 15.0}}})
    p = cfg.simulation_config().prices
    assert p[-1] == 15.0 and p[0] == pytest.approx(1.01**10)


def test_parse_override():
    assert parse_override("n_replications=1") == ("n_replications", 1)
    assert parse_override("adaptation.discounts_on=false") == ("adaptation.discounts_on", False)
    assert parse_override("output_dir=out/x") == ("output_dir", "out/x")
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_bare_keys_resolve_to_their_section():
    raw = apply_overrides({}, [("n_replications", 3), ("master_seed", 7), ("upper_discount", 0.1)])
    assert raw == {"simulation": {"n_replications": 3}, "master_seed": 7, "adaptation": {"upper_discount": 0.1}}


def test_ambiguous_or_unknown_override():
    with pytest.raises(ConfigError, match="unknown"):
        apply_overrides({}, [("flux_capacitor", 1)])


def test_load_config_with_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"simulation": {"n_replications": 10}}))
    cfg = load_config(p, [("simulation.n_periods", 3)])
    assert (cfg.simulation.n_replications, cfg.simulation.n_periods) == (10, 3)


def test_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_sweep_points_product():
    pts = sweep_points({"a.x": [1, 2], "b.y": [True, False, None]})
    assert len(pts) == 6 and pts[0] == [("a.x", 1), ("b.y", True)]
    with pytest.raises(ConfigError):
        sweep_points({"a": []})


def test_digest_tracks_content():
    a = ExperimentConfig.from_dict({})
    b = ExperimentConfig.from_dict({"master_seed": 0})
    c = ExperimentConfig.from_dict({"master_seed": 1})
    assert a.digest() == b.digest() != c.digest()


@given(st.integers(1, 50), st.integers(1, 8), st.floats(0, 1), st.booleans())
def test_roundtrip_through_dict(n_rep, n_per, upper, hist):
    raw = {"simulation": {"n_replications": n_rep, "n_periods": n_per},
           "adaptation": {"upper_discount": upper, "historical_on": hist}}
    cfg = ExperimentConfig.from_dict(raw)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg and again.digest() == cfg.digest()
