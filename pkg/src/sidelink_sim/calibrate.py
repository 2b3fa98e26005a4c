"""SNR-threshold calibration of the MCS table against the bit-true chain.

For each MCS a bisection finds the lowest SNR at which the empirical BLER of
the full build -> AWGN -> decode loop stays at or below 1%.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from sidelink_sim import channels as ch
from sidelink_sim.chanmodel import apply_awgn
from sidelink_sim.linkadapt import LinkType, McsEntry, McsTable, transport_block_bits
from sidelink_sim.waveform import Numerology, ofdm_demodulate, ofdm_modulate

TARGET_BLER = 0.01
MAX_BISECT_STEPS = 20
BISECT_TOL_DB = 0.05
SNR_SEARCH_LO = -10.0
SNR_SEARCH_HI = 40.0


def chain_link_for(entry: McsEntry) -> LinkType:
    """Calibration chain: sidelink where the order allows it, downlink for 64-QAM."""
    return LinkType.SIDELINK if entry.modulation_order <= 4 else LinkType.DOWNLINK


def transmit_once(
    payload: np.ndarray,
    mcs: int,
    link: LinkType,
    snr_db: float,
    rng: np.random.Generator,
    table: McsTable,
    num: Numerology,
) -> tuple[bool, np.ndarray | None]:
    """Carry one transport block through build -> waveform -> AWGN -> decode.

    Returns (crc_ok, decoded payload bits or None).
    """
    tb = ch.TransportBlock(payload)
    if link is LinkType.SIDELINK:
        sci = ch.Sci(mcs_index=mcs, group_dest_id=0, rb_offset=0, rb_length=num.n_prb)
        grid = ch.build_pssch_subframe(tb, sci, num, table)
    else:
        grid = ch.build_pdsch_subframe(tb, mcs, num, table)
    buf = ofdm_modulate(grid, num)
    power = float(np.mean(np.abs(buf.iq) ** 2))
    rx = apply_awgn(buf, snr_db, power, rng)
    rx_grid = ofdm_demodulate(rx, num)
    if link is LinkType.SIDELINK:
        res = ch.decode_pssch_subframe(rx_grid, num, table)
    else:
        res = ch.decode_pdsch_subframe(rx_grid, num, table)
    decoded = res.tb.payload if (res.crc_ok and res.tb is not None) else None
    return res.crc_ok, decoded


def loopback_trial(
    mcs: int,
    link: LinkType,
    snr_db: float,
    rng: np.random.Generator,
    table: McsTable,
    num: Numerology,
) -> tuple[bool, bool]:
    """One random-payload loopback pass; returns (decoded_ok, payload_exact)."""
    n = transport_block_bits(mcs, num.n_prb, link, table)
    payload = rng.integers(0, 2, n).astype(np.uint8)
    ok, decoded = transmit_once(payload, mcs, link, snr_db, rng, table, num)
    exact = bool(ok and decoded is not None and np.array_equal(decoded, payload))
    return ok, exact


def empirical_bler(
    mcs: int,
    link: LinkType,
    snr_db: float,
    trials: int,
    seed: int,
    table: McsTable,
    num: Numerology,
    early_exit_errors: int | None = None,
) -> float:
    """Block error rate over seeded trials; optionally stops once the error
    budget is blown (the rate is then a lower bound, still above the budget)."""
    errors = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, mcs, t])
        ok, _ = loopback_trial(mcs, link, snr_db, rng, table, num)
        if not ok:
            errors += 1
            if early_exit_errors is not None and errors > early_exit_errors:
                return errors / (t + 1)
    return errors / trials


@dataclass(frozen=True)
class CalibrationResult:
    table: McsTable
    flagged: tuple  # MCS indices whose bisection did not converge


def calibrate_thresholds(
    trials: int = 200,
    seed: int = 20260824,
    base: McsTable | None = None,
    num: Numerology | None = None,
    progress=None,
) -> CalibrationResult:
    base = base or McsTable.default_ladder()
    num = num or Numerology()
    budget = int(TARGET_BLER * trials)
    entries = []
    flagged = []
    for entry in base:
        link = chain_link_for(entry)

        def passes(snr):
            bler = empirical_bler(
                entry.index, link, snr, trials, seed, base, num, early_exit_errors=budget
            )
            return bler <= TARGET_BLER

        lo, hi = SNR_SEARCH_LO, SNR_SEARCH_HI
        converged = passes(hi) and not passes(lo)
        if converged:
            steps = 0
            while hi - lo > BISECT_TOL_DB and steps < MAX_BISECT_STEPS:
                mid = (lo + hi) / 2
                if passes(mid):
                    hi = mid
                else:
                    lo = mid
                steps += 1
            threshold = hi
        else:
            threshold = entry.snr_threshold_db
            flagged.append(entry.index)
        threshold = round(threshold, 4)
        # neighbouring entries can land within the bisection tolerance of each
        # other; nudging upward keeps the ladder strictly increasing without
        # moving any threshold by more than the tolerance
        if entries and threshold <= entries[-1].snr_threshold_db:
            threshold = entries[-1].snr_threshold_db + 0.01
        entries.append(replace(entry, snr_threshold_db=threshold))
        if progress:
            progress(entry.index, entries[-1].snr_threshold_db)
    return CalibrationResult(table=McsTable(entries), flagged=tuple(flagged))
