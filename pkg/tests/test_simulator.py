"""Simulation oracle: reproducibility, semantics, generator equivalence."""

from dataclasses import replace

import numpy as np
import pytest

from standbymmap.assembler import assemble_all
from standbymmap.config import example_fleet_config
from standbymmap.simulator import (FleetSimulator, SimState, simulate, validate)
from standbymmap.statespace import MacroStateKey, enumerate_states


def global_index(layout, st):
    """Map a simulator state onto the generator's row index."""
    key = MacroStateKey(st.k, st.s, "v" if st.on_vacation else "nv", st.queue)
    lo, _ = layout.index_of(key)
    if st.s < st.k:
        phases = [st.internal, st.shock, st.damage, st.inspection]
    else:
        phases = [st.shock]
    if st.clock is not None:
        phases.append(st.clock)
    dims = layout.phase_dims(key.k, key.s, key.x, key.queue)
    flat = 0
    for p, dim in zip(phases, dims):
        flat = flat * dim + p
    return lo + flat


def sim_state_of(layout, config, index):
    """Inverse of global_index, for sampling arbitrary rows."""
    key, phases = layout.decode(index)      # decode is 1-based
    phases = [p - 1 for p in phases]
    if key.s < key.k:
        i, j, h, u = phases[:4]
        rest = phases[4:]
    else:
        (j,), rest = phases[:1], phases[1:]
        i = h = u = None
    clock = rest[0] if rest else None
    return SimState(key.k, key.s, key.queue, key.x == "v", i, j, h, u, clock)


@pytest.mark.parametrize("n,R", [(2, 1), (2, 2)])
def test_rows_match_the_assembled_generator(n, R):
    """Per-state exit rates and targets agree with D entry by entry."""
    config = example_fleet_config(units=n, vacation_threshold=R)
    layout = enumerate_states(config)
    D = assemble_all(config, layout, validate=False).total.tocsr()
    sim = FleetSimulator(config)
    rng = np.random.default_rng(11)
    for index in rng.integers(0, layout.total, size=60):
        index = int(index)
        st = sim_state_of(layout, config, index)
        row = sim.row(st)
        flows = {}
        probs = np.diff(row.cum, prepend=0.0)
        for rate, target in zip(row.total * probs, row.targets):
            tgt = global_index(layout, target)
            flows[tgt] = flows.get(tgt, 0.0) + rate
        dense = np.zeros(layout.total)
        dense[list(flows)] = list(flows.values())
        expected = D[index].toarray().ravel()
        self_rate = dense[index]
        dense[index] = 0.0
        off = expected.copy()
        off[index] = 0.0
        np.testing.assert_allclose(dense, off, atol=1e-10)
        # the total exit rate matches the generator diagonal
        assert row.total - self_rate == pytest.approx(-expected[index], abs=1e-10)


def test_seed_reproducibility():
    config = example_fleet_config()
    a = simulate(config, horizon=2000.0, replications=2, seed=5)
    b = simulate(config, horizon=2000.0, replications=2, seed=5)
    assert a == b


def test_different_seeds_differ():
    config = example_fleet_config()
    a = simulate(config, horizon=2000.0, replications=1, seed=1)
    b = simulate(config, horizon=2000.0, replications=1, seed=2)
    assert a.availability.mean != b.availability.mean


def test_zero_horizon_is_an_error():
    with pytest.raises(ValueError):
        simulate(example_fleet_config(), horizon=0.0)
    with pytest.raises(ValueError):
        simulate(example_fleet_config(), horizon=1000.0, replications=0)


def test_no_nonrepairable_channel_means_no_renewals():
    """Closing every non-repairable path keeps the fleet alive forever."""
    c = example_fleet_config()
    config = replace(
        c,
        internal_exit_repairable=(c.internal_exit_repairable
                                  + c.internal_exit_nonrepairable),
        internal_exit_nonrepairable=np.zeros(c.m),
        total_failure_prob=0.0,
        shock_repairable=c.shock_repairable + c.shock_nonrepairable,
        shock_nonrepairable=np.zeros(c.m),
        damage_matrix=np.array([[0.0, 1.0], [0.0, 1.0]]),
        damage_exit=np.zeros(2),
    )
    report = simulate(config, horizon=20000.0, replications=2, seed=3)
    for name in ("C", "CD", "NS"):
        assert report.event_rates[name].mean == 0.0
    assert report.rates["nonrepairable"].mean == 0.0


def test_occupancy_estimates_sum_to_one():
    report = simulate(example_fleet_config(), horizon=5000.0,
                      replications=2, seed=9)
    total = sum(est.mean for est in report.occupancy.values())
    assert total == pytest.approx(1.0, abs=1e-9)


def test_threaded_run_matches_sequential():
    config = example_fleet_config(units=2, vacation_threshold=1)
    seq = simulate(config, horizon=1500.0, replications=2, seed=4)
    par = simulate(config, horizon=1500.0, replications=2, seed=4, threads=2)
    assert seq == par


def test_validate_flags_a_shifted_quantity():
    config = example_fleet_config()
    report = simulate(config, horizon=20000.0, replications=4, seed=0)
    good = {"availability": report.availability.mean}
    assert validate(good, report).passed
    bad = {"availability": report.availability.mean + 0.05}
    result = validate(bad, report)
    assert not result.passed
    assert "FAIL" in result.to_text()


def test_validate_rejects_unknown_quantities():
    report = simulate(example_fleet_config(), horizon=500.0,
                      replications=1, seed=0)
    with pytest.raises(KeyError):
        validate({"nonsense": 1.0}, report)
