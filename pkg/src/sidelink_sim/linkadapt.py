"""MCS semantics: modulation order, code rate, transport block size, throughput,
SNR thresholds, and the max-throughput-at-zero-BLER selection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from importlib import resources
from typing import Optional

import math

CRC_BITS = 24
SUBFRAMES_PER_SECOND = 1000


class LinkType(Enum):
    DOWNLINK = "downlink"
    SIDELINK = "sidelink"

    @property
    def max_order(self) -> int:
        # sidelink tops out at 16-QAM, downlink at 64-QAM
        return 4 if self is LinkType.SIDELINK else 6

    @property
    def data_symbols(self) -> int:
        # sidelink: 14 - 3 (control) - 2 (refs); downlink: 14 - 1 (control) - 2 (refs)
        return 9 if self is LinkType.SIDELINK else 11


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int
    code_rate: Fraction
    snr_threshold_db: float

    def __post_init__(self):
        if self.modulation_order not in (2, 4, 6):
            raise ValueError(f"bad modulation order {self.modulation_order}")
        if not 0 < self.code_rate < 1:
            raise ValueError(f"code rate {self.code_rate} outside (0,1)")


@dataclass(frozen=True)
class ThroughputReport:
    mcs: int
    bits_per_subframe: int
    throughput_bps: int
    bler: float


# 29-entry ladder: QPSK 0-9, 16-QAM 10-19, 64-QAM 20-28 (rate num / 1024).
# Spectral efficiency is strictly increasing across the whole ladder.
_LADDER = [
    (2, 70), (2, 133), (2, 196), (2, 260), (2, 323),
    (2, 386), (2, 450), (2, 513), (2, 576), (2, 640),
    (4, 340), (4, 380), (4, 420), (4, 460), (4, 500),
    (4, 540), (4, 580), (4, 620), (4, 660), (4, 700),
    (6, 480), (6, 516), (6, 552), (6, 588), (6, 624),
    (6, 660), (6, 696), (6, 732), (6, 768),
]


def shannon_gap_threshold(order: int, rate: Fraction, margin_db: float = 3.0) -> float:
    """Initial SNR threshold: gap-to-capacity estimate plus a fixed margin."""
    eff = order * float(rate)
    return 10 * math.log10(2 ** eff - 1) + margin_db


class McsTable:
    """Immutable MCS ladder; thresholds strictly increase with index."""

    def __init__(self, entries: list[McsEntry]):
        entries = sorted(entries, key=lambda e: e.index)
        for a, b in zip(entries, entries[1:]):
            if b.snr_threshold_db <= a.snr_threshold_db:
                raise ValueError(
                    f"thresholds must strictly increase: mcs {a.index} -> {b.index}"
                )
        self._entries = tuple(entries)

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def entry(self, index: int) -> McsEntry:
        for e in self._entries:
            if e.index == index:
                return e
        raise KeyError(f"no MCS with index {index}")

    def entries_for(self, link: LinkType) -> list[McsEntry]:
        return [e for e in self._entries if e.modulation_order <= link.max_order]

    @classmethod
    def default_ladder(cls) -> "McsTable":
        entries = [
            McsEntry(i, order, Fraction(num, 1024), shannon_gap_threshold(order, Fraction(num, 1024)))
            for i, (order, num) in enumerate(_LADDER)
        ]
        return cls(entries)

    @classmethod
    def from_json(cls, path) -> "McsTable":
        with open(path) as f:
            raw = json.load(f)
        return cls._from_records(raw)

    @classmethod
    def _from_records(cls, raw) -> "McsTable":
        entries = [
            McsEntry(
                r["index"], r["order"], Fraction(r["rate_num"], r["rate_den"]),
                float(r["snr_threshold_db"]),
            )
            for r in raw
        ]
        return cls(entries)

    @classmethod
    def calibrated_default(cls) -> "McsTable":
        """The shipped table, thresholds calibrated against the bit-true chain."""
        raw = json.loads(
            resources.files("sidelink_sim.data").joinpath("mcs_table.json").read_text()
        )
        return cls._from_records(raw)

    def to_json(self, path) -> None:
        raw = [
            {
                "index": e.index,
                "order": e.modulation_order,
                "rate_num": e.code_rate.numerator,
                "rate_den": e.code_rate.denominator,
                "snr_threshold_db": e.snr_threshold_db,
            }
            for e in self._entries
        ]
        with open(path, "w") as f:
            json.dump(raw, f, indent=1)
            f.write("\n")


def tb_bits_for(order: int, rate: Fraction, n_prb: int, link: LinkType) -> int:
    """floor(N_data_RE * order * rate) - CRC, with the per-link symbol overhead."""
    if n_prb < 1:
        raise ValueError("n_prb must be positive")
    n_re = n_prb * 12 * link.data_symbols
    bits = math.floor(n_re * order * Fraction(rate)) - CRC_BITS
    if bits < 1:
        raise ValueError("allocation too small for any payload")
    return bits


def transport_block_bits(mcs: int, n_prb: int, link: LinkType, table: McsTable) -> int:
    entry = table.entry(mcs)
    if entry.modulation_order > link.max_order:
        raise ValueError(
            f"mcs {mcs} (order {entry.modulation_order}) exceeds the {link.value} cap"
        )
    return tb_bits_for(entry.modulation_order, entry.code_rate, n_prb, link)


def max_throughput(
    snr_db: float, n_prb: int, link: LinkType, table: McsTable
) -> Optional[ThroughputReport]:
    """Highest MCS whose threshold is met; the max-throughput-at-zero-BLER point."""
    best = None
    for e in table.entries_for(link):
        if e.snr_threshold_db <= snr_db:
            best = e
    if best is None:
        return None
    bits = tb_bits_for(best.modulation_order, best.code_rate, n_prb, link)
    return ThroughputReport(
        mcs=best.index,
        bits_per_subframe=bits,
        throughput_bps=bits * SUBFRAMES_PER_SECOND,
        bler=0.0,
    )


BLER_RAMP_DB = 3.0
_RAMP_ALPHA = 2.0


def bler_for(snr_db: float, mcs: int, link: LinkType, table: McsTable) -> float:
    """Deterministic abstract BLER: 0 at/above threshold, exp ramp to 1 over 3 dB."""
    entry = table.entry(mcs)
    if entry.modulation_order > link.max_order:
        raise ValueError(f"mcs {mcs} exceeds the {link.value} cap")
    deficit = entry.snr_threshold_db - snr_db
    if deficit <= 0:
        return 0.0
    if deficit >= BLER_RAMP_DB:
        return 1.0
    return (math.exp(_RAMP_ALPHA * deficit) - 1) / (math.exp(_RAMP_ALPHA * BLER_RAMP_DB) - 1)
