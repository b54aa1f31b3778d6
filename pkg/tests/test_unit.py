"""Single-unit event blocks: outflow balance and the PM switch."""

import numpy as np
import pytest

from standbymmap.config import example_fleet_config
from standbymmap.unit import build_H0, build_HB, build_unit_blocks


@pytest.fixture()
def blocks():
    return build_unit_blocks(example_fleet_config())


def test_block_shapes(blocks):
    c = example_fleet_config()
    full = c.m * c.t * c.d * c.eps
    assert blocks.H0.shape == (full, full)
    assert blocks.HA.shape == (full, full)
    assert blocks.HA_p.shape == (full, c.t)
    assert blocks.HC_p.shape == (full, c.t)


def test_outflow_balance(blocks):
    """Diagonal block plus every event outflow is conservative."""
    total = (blocks.H0 + blocks.HA + blocks.HB + blocks.HC).sum(axis=1)
    assert np.max(np.abs(total)) < 1e-10


def test_primed_variants_balance_too(blocks):
    total = (blocks.H0.sum(axis=1) + blocks.HA_p.sum(axis=1)
             + blocks.HB_p.sum(axis=1) + blocks.HC_p.sum(axis=1))
    assert np.max(np.abs(total)) < 1e-10


def test_event_blocks_are_nonnegative(blocks):
    for mat in (blocks.HA, blocks.HB, blocks.HC,
                blocks.HA_p, blocks.HB_p, blocks.HC_p):
        assert mat.min() >= 0.0


def test_disabling_pm_removes_major_inspections():
    config = example_fleet_config(pm_enabled=False)
    assert np.count_nonzero(build_HB(config)) == 0
    # the would-be inspection flow folds back into the diagonal block
    on = example_fleet_config()
    gain = build_H0(config) - build_H0(on)
    assert gain.min() >= -1e-12 and gain.max() > 0


def test_pm_switch_preserves_conservation():
    blocks = build_unit_blocks(example_fleet_config(pm_enabled=False))
    total = (blocks.H0 + blocks.HA + blocks.HB + blocks.HC).sum(axis=1)
    assert np.max(np.abs(total)) < 1e-10


def test_inspection_never_triggers_repair_in_good_minor_states():
    """A unit in its best internal phase with minor damage stays put."""
    c = example_fleet_config()
    HB = build_HB(c)
    # phase (i=0, j=*, h=0, u=*): first eps rows of the first t*d*eps block
    rows = [((0 * c.t + j) * c.d + 0) * c.eps + u
            for j in range(c.t) for u in range(c.eps)]
    assert np.count_nonzero(HB[rows]) == 0
