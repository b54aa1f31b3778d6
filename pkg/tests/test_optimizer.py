"""Vacation-rate optimization: caching, oracles, robustness."""

import numpy as np
import pytest

from standbymmap.config import example_fleet_config
from standbymmap.optimizer import (_CellEvaluator, evaluate, golden_section_scan,
                                   grid_to_csv, optimize)


def test_cached_evaluator_matches_full_pipeline():
    config = example_fleet_config(units=3, vacation_threshold=2)
    cell = _CellEvaluator(config, "erlang2")
    for x in ([0.7, 1.3], [1.0, 1.0], [2.5, 0.4]):
        full_phi, full_a, _ = evaluate(config, "erlang2", x)
        assert cell.profit(x) == pytest.approx(full_phi, abs=1e-9)
        assert cell.availability(x) == pytest.approx(full_a, abs=1e-12)


def test_exponential_optimum_matches_golden_section():
    config = example_fleet_config(units=2, vacation_threshold=2)
    result = optimize(config, "exponential")
    x_gold, phi_gold = golden_section_scan(config)
    assert result.profit == pytest.approx(phi_gold, abs=1e-3)
    assert result.x[0] == pytest.approx(x_gold, rel=1e-2)


def test_restart_robustness():
    """Distinct starting points land on the same profit."""
    config = example_fleet_config(units=2, vacation_threshold=2)
    profits = [optimize(config, "erlang2", x0=x0).profit
               for x0 in ([0.3, 0.3], [1.0, 2.0], [3.0, 0.5])]
    assert max(profits) - min(profits) < 0.01


def test_result_record_round_trips():
    config = example_fleet_config(units=2, vacation_threshold=1)
    result = optimize(config, "exponential")
    rec = result.as_record()
    assert rec["n"] == 2 and rec["R"] == 1 and rec["family"] == "exponential"
    assert len(rec["x"]) == 1 and rec["x"][0] > 0
    assert rec["evaluations"] > 10


def test_grid_csv_schema():
    config = example_fleet_config(units=2, vacation_threshold=2)
    results = [optimize(config, "exponential")]
    text = grid_to_csv(results)
    lines = text.strip().splitlines()
    assert lines[0] == "n,R,pm,family,x,profit,availability,evaluations,converged"
    assert lines[1].startswith("2,2,1,exponential,")


def test_profit_surface_is_locally_concave_at_the_optimum():
    config = example_fleet_config(units=2, vacation_threshold=2)
    cell = _CellEvaluator(config, "exponential")
    result = optimize(config, "exponential")
    x = result.x[0]
    mid = cell.profit([x])
    assert mid >= cell.profit([x * 1.2]) - 1e-9
    assert mid >= cell.profit([x / 1.2]) - 1e-9
