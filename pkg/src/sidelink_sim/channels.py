"""Channel-level framing: SCI + PSCCH, PSSCH/PDSCH transport-block processing,
and synchronization sequences (PSSS for sidelink, PSS for downlink)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from sidelink_sim import coding, modulation
from sidelink_sim.linkadapt import LinkType, McsTable, transport_block_bits
from sidelink_sim.waveform import (
    Numerology,
    ResourceGrid,
    dft_precode,
    idft_despread,
    make_reference_symbols,
    map_to_grid,
)

PSCCH_SYMBOLS = (0, 1, 2)
DMRS_SYMBOLS = (3, 10)
PDSCH_CONTROL_SYMBOL = 0
SIDELINK_DATA_SYMBOLS = (4, 5, 6, 7, 8, 9, 11, 12, 13)
DOWNLINK_DATA_SYMBOLS = (1, 2, 4, 5, 6, 7, 8, 9, 11, 12, 13)

SCI_BITS = 40  # 32 payload + CRC-8
MIB_TAG = 0xA5C3E1  # fixed 24-bit attach-validation tag

SYNC_ZC_LENGTH = 63
SYNC_ROOTS = {LinkType.DOWNLINK: 25, LinkType.SIDELINK: 26}
SYNC_DETECT_THRESHOLD = 4.0
# peak/mean alone cannot reject a mismatched ZC root (its correlation is
# non-flat enough to clear 4.0), so the peak must also carry a minimum
# normalized correlation coefficient against the reference
SYNC_MIN_COEFF = 0.3


@dataclass(frozen=True)
class Sci:
    """Sidelink control information carried on the PSCCH."""

    mcs_index: int
    group_dest_id: int
    rb_offset: int
    rb_length: int
    hopping_flag: bool = False

    def __post_init__(self):
        if not 0 <= self.mcs_index < 32:
            raise ValueError(f"mcs_index {self.mcs_index} outside 0..31")
        if not 0 <= self.group_dest_id < 256:
            raise ValueError(f"group_dest_id {self.group_dest_id} outside 0..255")
        if not 0 <= self.rb_offset < 128 or not 0 <= self.rb_length < 128:
            raise ValueError("rb assignment fields must fit in 7 bits")


@dataclass
class TransportBlock:
    payload: np.ndarray  # information bits, CRC not included

    def __post_init__(self):
        self.payload = np.asarray(self.payload, dtype=np.uint8)


@dataclass
class PsschDecodeResult:
    sci_ok: bool
    sci: Optional[Sci]
    tb: Optional[TransportBlock]
    crc_ok: bool


@dataclass
class PdschDecodeResult:
    mcs_ok: bool
    mcs_index: Optional[int]
    tb: Optional[TransportBlock]
    crc_ok: bool


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def encode_sci(sci: Sci) -> np.ndarray:
    """Pack to a 40-bit string: 5 MCS, 8 group, 7+7 RB assignment, 1 hop, 4 zero, CRC-8."""
    body = np.concatenate(
        [
            _int_to_bits(sci.mcs_index, 5),
            _int_to_bits(sci.group_dest_id, 8),
            _int_to_bits(sci.rb_offset, 7),
            _int_to_bits(sci.rb_length, 7),
            np.array([1 if sci.hopping_flag else 0], dtype=np.uint8),
            np.zeros(4, dtype=np.uint8),
        ]
    )
    return np.concatenate([body, coding.crc8(body)])


def decode_sci(bits: np.ndarray) -> Optional[Sci]:
    """Unpack a 40-bit SCI; None if the CRC-8 fails."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size != SCI_BITS:
        raise ValueError(f"SCI must be {SCI_BITS} bits")
    body, crc = bits[:32], bits[32:]
    if not np.array_equal(coding.crc8(body), crc):
        return None
    return Sci(
        mcs_index=_bits_to_int(body[0:5]),
        group_dest_id=_bits_to_int(body[5:13]),
        rb_offset=_bits_to_int(body[13:20]),
        rb_length=_bits_to_int(body[20:27]),
        hopping_flag=bool(body[27]),
    )


def build_pscch(sci: Sci, grid: ResourceGrid) -> ResourceGrid:
    """QPSK-map the SCI bits, rate-repeated, onto OFDM symbols 0..2."""
    num = grid.num
    for l in PSCCH_SYMBOLS:
        if grid.occupied[:, l].any():
            raise ValueError(f"PSCCH target symbol {l} already occupied")
    bits = encode_sci(sci)
    capacity = len(PSCCH_SYMBOLS) * num.n_subcarriers * 2
    repeated = coding.rate_match(bits, capacity)
    syms = modulation.modulate_bits(repeated, 2)
    out = grid
    for i, l in enumerate(PSCCH_SYMBOLS):
        chunk = syms[i * num.n_subcarriers : (i + 1) * num.n_subcarriers]
        out = map_to_grid(chunk, l, 0, out)
    return out


def decode_pscch(grid: ResourceGrid, noise_var: float = 1.0) -> Optional[Sci]:
    """Soft-combine the PSCCH repetitions and CRC-check the SCI."""
    num = grid.num
    syms = np.concatenate([grid.data[:, l] for l in PSCCH_SYMBOLS])
    llrs = modulation.demodulate_llr(syms, 2, noise_var)
    folded = coding.rate_dematch(llrs, SCI_BITS)
    bits = (folded < 0).astype(np.uint8)
    return decode_sci(bits)


def add_dmrs(grid: ResourceGrid) -> ResourceGrid:
    """Reference symbols on OFDM symbols 3 and 10 (uplink-style layout)."""
    ref = make_reference_symbols(grid.num.n_subcarriers)
    out = grid
    for l in DMRS_SYMBOLS:
        out = map_to_grid(ref, l, 0, out)
    return out


def dmrs_mask(num: Numerology) -> np.ndarray:
    mask = np.zeros((num.n_subcarriers, num.symbols_per_subframe), dtype=bool)
    for l in DMRS_SYMBOLS:
        mask[:, l] = True
    return mask


def dmrs_values(num: Numerology) -> np.ndarray:
    ref = make_reference_symbols(num.n_subcarriers)
    return np.concatenate([ref for _ in DMRS_SYMBOLS])


def estimate_noise_var(grid: ResourceGrid) -> float:
    """Residual power on the reference symbols after a single-tap projection."""
    ref = make_reference_symbols(grid.num.n_subcarriers)
    resid = []
    for l in DMRS_SYMBOLS:
        rx = grid.data[:, l]
        h = np.vdot(ref, rx) / np.vdot(ref, ref).real
        resid.append(np.abs(rx - h * ref) ** 2)
    return float(max(np.mean(np.concatenate(resid)), 1e-30))


def _encode_data_bits(tb: TransportBlock, order: int, n_data_re: int) -> np.ndarray:
    block = coding.attach_crc(tb.payload)
    coded = coding.conv_encode(block)
    budget = n_data_re * order
    matched = coding.rate_match(coded, budget)
    return modulation.modulate_bits(matched, order)


def _decode_data_bits(
    syms: np.ndarray, order: int, n_info: int, noise_var: float
) -> tuple[TransportBlock, bool]:
    llrs = modulation.demodulate_llr(syms, order, noise_var)
    block_len = n_info + 24
    folded = coding.rate_dematch(llrs, 3 * (block_len + coding.N_TAIL))
    decoded = coding.viterbi_decode(folded, block_len)
    ok = coding.check_crc(decoded)
    return TransportBlock(decoded[:-24]), ok


def build_pssch_subframe(
    tb: TransportBlock, sci: Sci, num: Numerology, table: McsTable
) -> ResourceGrid:
    """PSCCH on symbols 0-2, DMRS on 3/10, DFT-precoded coded data on the rest."""
    expected = transport_block_bits(sci.mcs_index, num.n_prb, LinkType.SIDELINK, table)
    if tb.payload.size != expected:
        raise ValueError(
            f"transport block is {tb.payload.size} bits, mcs {sci.mcs_index} needs {expected}"
        )
    order = table.entry(sci.mcs_index).modulation_order
    n_sc = num.n_subcarriers
    syms = _encode_data_bits(tb, order, n_sc * len(SIDELINK_DATA_SYMBOLS))
    grid = ResourceGrid(num)
    grid = build_pscch(sci, grid)
    grid = add_dmrs(grid)
    for i, l in enumerate(SIDELINK_DATA_SYMBOLS):
        chunk = syms[i * n_sc : (i + 1) * n_sc]
        grid = map_to_grid(dft_precode(chunk), l, 0, grid)
    return grid


def decode_pssch_subframe(
    grid: ResourceGrid, num: Numerology, table: McsTable, noise_var: Optional[float] = None
) -> PsschDecodeResult:
    """SCI first (self-describing MCS), then IDFT-despread, demodulate, Viterbi, CRC."""
    if grid.num != num:
        raise ValueError("grid numerology mismatch")
    nv = noise_var if noise_var is not None else estimate_noise_var(grid)
    sci = decode_pscch(grid, nv)
    if sci is None:
        return PsschDecodeResult(sci_ok=False, sci=None, tb=None, crc_ok=False)
    try:
        n_info = transport_block_bits(sci.mcs_index, num.n_prb, LinkType.SIDELINK, table)
    except (ValueError, KeyError):
        return PsschDecodeResult(sci_ok=False, sci=sci, tb=None, crc_ok=False)
    order = table.entry(sci.mcs_index).modulation_order
    n_sc = num.n_subcarriers
    syms = np.concatenate(
        [idft_despread(grid.data[:, l]) for l in SIDELINK_DATA_SYMBOLS]
    )
    tb, ok = _decode_data_bits(syms, order, n_info, nv)
    return PsschDecodeResult(sci_ok=True, sci=sci, tb=tb, crc_ok=ok)


def _encode_control_mcs(mcs_index: int, num: Numerology) -> np.ndarray:
    """Abstract PDCCH stand-in: MCS index + CRC-8, repeated over one QPSK symbol."""
    body = _int_to_bits(mcs_index, 5)
    bits = np.concatenate([body, coding.crc8(body)])
    repeated = coding.rate_match(bits, num.n_subcarriers * 2)
    return modulation.modulate_bits(repeated, 2)


def _decode_control_mcs(grid: ResourceGrid, noise_var: float) -> Optional[int]:
    syms = grid.data[:, PDSCH_CONTROL_SYMBOL]
    llrs = modulation.demodulate_llr(syms, 2, noise_var)
    folded = coding.rate_dematch(llrs, 13)
    bits = (folded < 0).astype(np.uint8)
    body, crc = bits[:5], bits[5:]
    if not np.array_equal(coding.crc8(body), crc):
        return None
    return _bits_to_int(body)


def build_pdsch_subframe(
    tb: TransportBlock, mcs_index: int, num: Numerology, table: McsTable
) -> ResourceGrid:
    """Plain-OFDM downlink subframe: control symbol 0, DMRS on 3/10, data elsewhere."""
    expected = transport_block_bits(mcs_index, num.n_prb, LinkType.DOWNLINK, table)
    if tb.payload.size != expected:
        raise ValueError(
            f"transport block is {tb.payload.size} bits, mcs {mcs_index} needs {expected}"
        )
    order = table.entry(mcs_index).modulation_order
    n_sc = num.n_subcarriers
    syms = _encode_data_bits(tb, order, n_sc * len(DOWNLINK_DATA_SYMBOLS))
    grid = ResourceGrid(num)
    grid = map_to_grid(_encode_control_mcs(mcs_index, num), PDSCH_CONTROL_SYMBOL, 0, grid)
    grid = add_dmrs(grid)
    for i, l in enumerate(DOWNLINK_DATA_SYMBOLS):
        chunk = syms[i * n_sc : (i + 1) * n_sc]
        grid = map_to_grid(chunk, l, 0, grid)
    return grid


def decode_pdsch_subframe(
    grid: ResourceGrid, num: Numerology, table: McsTable, noise_var: Optional[float] = None
) -> PdschDecodeResult:
    if grid.num != num:
        raise ValueError("grid numerology mismatch")
    nv = noise_var if noise_var is not None else estimate_noise_var(grid)
    mcs = _decode_control_mcs(grid, nv)
    if mcs is None:
        return PdschDecodeResult(mcs_ok=False, mcs_index=None, tb=None, crc_ok=False)
    try:
        n_info = transport_block_bits(mcs, num.n_prb, LinkType.DOWNLINK, table)
    except (ValueError, KeyError):
        return PdschDecodeResult(mcs_ok=False, mcs_index=mcs, tb=None, crc_ok=False)
    order = table.entry(mcs).modulation_order
    syms = np.concatenate([grid.data[:, l] for l in DOWNLINK_DATA_SYMBOLS])
    tb, ok = _decode_data_bits(syms, order, n_info, nv)
    return PdschDecodeResult(mcs_ok=True, mcs_index=mcs, tb=tb, crc_ok=ok)


@dataclass(frozen=True)
class SyncSequence:
    link: LinkType
    root_id: int
    samples: np.ndarray


@dataclass(frozen=True)
class SyncDetection:
    offset: int
    metric: float


def generate_sync(link: LinkType, root_id: Optional[int] = None, num: Optional[Numerology] = None) -> SyncSequence:
    """Length-63 Zadoff-Chu on the central subcarriers of one OFDM symbol."""
    num = num or Numerology()
    root = root_id if root_id is not None else SYNC_ROOTS[link]
    n = np.arange(SYNC_ZC_LENGTH)
    zc = np.exp(-1j * np.pi * root * n * (n + 1) / SYNC_ZC_LENGTH)
    freq = np.zeros(num.fft_size, dtype=np.complex128)
    half = SYNC_ZC_LENGTH // 2
    offsets = np.concatenate([np.arange(-half, 0), np.arange(1, half + 2)])
    freq[offsets % num.fft_size] = zc
    time = np.fft.ifft(freq, norm="ortho")
    return SyncSequence(link=link, root_id=root, samples=time)


def detect_sync(samples: np.ndarray, seq: SyncSequence) -> Optional[SyncDetection]:
    """Normalized cross-correlation peak search; None below the detection threshold."""
    samples = np.asarray(samples, dtype=np.complex128)
    ref = seq.samples
    if samples.size < 2 * ref.size:
        raise ValueError("capture too short for sync detection")
    corr = np.abs(np.correlate(samples, ref, mode="valid"))
    mean = corr.mean()
    if mean <= 0:
        return None
    peak_idx = int(corr.argmax())
    metric = float(corr[peak_idx] / mean)
    if metric < SYNC_DETECT_THRESHOLD:
        return None
    window = samples[peak_idx : peak_idx + ref.size]
    ref_energy = np.vdot(ref, ref).real
    window_energy = np.vdot(window, window).real
    if window_energy <= 0:
        return None
    coeff = corr[peak_idx] ** 2 / (ref_energy * window_energy)
    if coeff < SYNC_MIN_COEFF:
        return None
    return SyncDetection(offset=peak_idx, metric=metric)
