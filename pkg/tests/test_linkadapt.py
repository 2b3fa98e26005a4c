"""MCS ladder semantics: transport block sizes against hand calculations,
ladder ordering, the abstract BLER ramp, and the max-throughput rule."""

from fractions import Fraction

import numpy as np
import pytest

from sidelink_sim.linkadapt import (
    LinkType,
    McsEntry,
    McsTable,
    bler_for,
    max_throughput,
    tb_bits_for,
    transport_block_bits,
)


def test_ladder_has_29_entries(table):
    assert len(table) == 29
    orders = [e.modulation_order for e in table]
    assert orders == [2] * 10 + [4] * 10 + [6] * 9


def test_spectral_efficiency_strictly_increases(table):
    eff = [e.modulation_order * float(e.code_rate) for e in table]
    assert all(b > a for a, b in zip(eff, eff[1:]))


def test_thresholds_strictly_increase(table):
    th = [e.snr_threshold_db for e in table]
    assert all(b > a for a, b in zip(th, th[1:]))


def test_tb_bits_hand_anchors():
    # sidelink: 25 PRB * 12 * 9 data symbols = 2700 RE; QPSK rate 1/3:
    # floor(2700*2/3) - 24 = 1776
    assert tb_bits_for(2, Fraction(1, 3), 25, LinkType.SIDELINK) == 1776
    # downlink: 3300 RE; 64-QAM rate 3/4: 19800*3/4 - 24 = 14826
    assert tb_bits_for(6, Fraction(3, 4), 25, LinkType.DOWNLINK) == 14826


def test_sidelink_rejects_order6(table):
    with pytest.raises(ValueError):
        transport_block_bits(20, 25, LinkType.SIDELINK, table)
    assert transport_block_bits(20, 25, LinkType.DOWNLINK, table) > 0


def test_downlink_tb_larger_for_same_mcs(table):
    """11 data symbols versus 9 at identical modulation and rate."""
    for mcs in (0, 10, 19):
        dl = transport_block_bits(mcs, 25, LinkType.DOWNLINK, table)
        sl = transport_block_bits(mcs, 25, LinkType.SIDELINK, table)
        assert dl > sl


def test_table_rejects_nonmonotone_thresholds():
    entries = [
        McsEntry(0, 2, Fraction(1, 3), 0.0),
        McsEntry(1, 2, Fraction(1, 2), -1.0),
    ]
    with pytest.raises(ValueError):
        McsTable(entries)


def test_table_json_roundtrip(table, tmp_path):
    path = tmp_path / "mcs.json"
    table.to_json(path)
    back = McsTable.from_json(path)
    assert [e for e in back] == [e for e in table]


def test_max_throughput_none_below_floor(table):
    assert max_throughput(-50.0, 25, LinkType.SIDELINK, table) is None


def test_max_throughput_uses_link_cap(table):
    dl = max_throughput(40.0, 25, LinkType.DOWNLINK, table)
    sl = max_throughput(40.0, 25, LinkType.SIDELINK, table)
    assert dl.mcs == 28 and sl.mcs == 19
    assert dl.throughput_bps > sl.throughput_bps


def test_max_throughput_monotone_in_snr(table):
    for link in (LinkType.DOWNLINK, LinkType.SIDELINK):
        last = 0
        for snr in np.arange(-10.0, 25.0, 0.5):
            rep = max_throughput(float(snr), 25, link, table)
            tput = rep.throughput_bps if rep else 0
            assert tput >= last
            last = tput


def test_bler_ramp_shape(table):
    th = table.entry(5).snr_threshold_db
    assert bler_for(th, 5, LinkType.SIDELINK, table) == 0.0
    assert bler_for(th + 10, 5, LinkType.SIDELINK, table) == 0.0
    assert bler_for(th - 3.0, 5, LinkType.SIDELINK, table) == 1.0
    mid = bler_for(th - 1.5, 5, LinkType.SIDELINK, table)
    assert 0.0 < mid < 1.0
    # monotone in the deficit
    assert bler_for(th - 2.0, 5, LinkType.SIDELINK, table) > mid


def test_bler_respects_cap(table):
    with pytest.raises(ValueError):
        bler_for(10.0, 25, LinkType.SIDELINK, table)


def test_entry_lookup_errors(table):
    with pytest.raises(KeyError):
        table.entry(99)
