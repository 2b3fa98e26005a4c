"""Bit-true loopback helpers and calibration bookkeeping (the full-ladder
threshold sweep itself is exercised by the acceptance suite)."""

import numpy as np

from sidelink_sim.calibrate import (
    chain_link_for,
    empirical_bler,
    loopback_trial,
    transmit_once,
)
from sidelink_sim.linkadapt import LinkType, transport_block_bits


def test_chain_link_assignment(table):
    for e in table:
        link = chain_link_for(e)
        if e.modulation_order <= 4:
            assert link is LinkType.SIDELINK
        else:
            assert link is LinkType.DOWNLINK


def test_transmit_once_noiseless_exact(num, table, rng):
    for mcs, link in ((0, LinkType.SIDELINK), (19, LinkType.SIDELINK), (28, LinkType.DOWNLINK)):
        n = transport_block_bits(mcs, num.n_prb, link, table)
        payload = rng.integers(0, 2, n).astype(np.uint8)
        ok, decoded = transmit_once(payload, mcs, link, 300.0, rng, table, num)
        assert ok
        assert np.array_equal(decoded, payload)


def test_transmit_once_fails_deep_in_noise(num, table, rng):
    n = transport_block_bits(19, num.n_prb, LinkType.SIDELINK, table)
    payload = rng.integers(0, 2, n).astype(np.uint8)
    ok, _ = transmit_once(payload, 19, LinkType.SIDELINK, -20.0, rng, table, num)
    assert not ok


def test_loopback_trial_flags_exactness(num, table, rng):
    ok, exact = loopback_trial(0, LinkType.SIDELINK, 300.0, rng, table, num)
    assert ok and exact


def test_empirical_bler_deterministic(num, table):
    a = empirical_bler(0, LinkType.SIDELINK, -8.0, 10, 42, table, num)
    b = empirical_bler(0, LinkType.SIDELINK, -8.0, 10, 42, table, num)
    assert a == b


def test_empirical_bler_early_exit_overestimates(num, table):
    """With a zero error budget the estimate stops at the first failure."""
    rate = empirical_bler(
        0, LinkType.SIDELINK, -20.0, 50, 42, table, num, early_exit_errors=0
    )
    assert rate == 1.0  # first trial fails, 1 error / 1 trial
