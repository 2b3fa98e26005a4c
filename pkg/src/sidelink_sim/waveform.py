"""Baseband waveform layer: DFT precoding, resource grid, OFDM mod/demod, estimators.

Default numerology is the 5 MHz LTE profile implied by a 25-PRB allocation:
512-point FFT at 7.68 Msps, normal cyclic prefix (40 samples on the first
symbol of each slot, 36 on the rest), 14 symbols per 1 ms subframe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUBCARRIERS_PER_PRB = 12
SNR_CAP_DB = 80.0


@dataclass(frozen=True)
class Numerology:
    n_prb: int = 25
    fft_size: int = 512
    sample_rate: float = 7.68e6
    symbols_per_subframe: int = 14
    cp_lengths: tuple = (40, 36, 36, 36, 36, 36, 36, 40, 36, 36, 36, 36, 36, 36)

    def __post_init__(self):
        if self.n_subcarriers > self.fft_size:
            raise ValueError("allocation exceeds FFT size")
        if len(self.cp_lengths) != self.symbols_per_subframe:
            raise ValueError("cp_lengths must cover every symbol")
        budget = self.symbols_per_subframe * self.fft_size + sum(self.cp_lengths)
        if budget != self.subframe_samples:
            raise ValueError(
                f"symbols do not fill 1 ms: {budget} != {self.subframe_samples}"
            )

    @property
    def n_subcarriers(self) -> int:
        return self.n_prb * SUBCARRIERS_PER_PRB

    @property
    def subframe_samples(self) -> int:
        return round(self.sample_rate * 1e-3)

    def subcarrier_bins(self) -> np.ndarray:
        """FFT bin of each allocated subcarrier, centered on DC, DC bin unused."""
        n = self.n_subcarriers
        half = n // 2
        offsets = np.concatenate([np.arange(-half, 0), np.arange(1, n - half + 1)])
        return offsets % self.fft_size


@dataclass
class ResourceGrid:
    """Complex symbols on an n_subcarriers x symbols_per_subframe lattice (1 ms)."""

    num: Numerology
    data: np.ndarray = field(default=None)
    occupied: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (self.num.n_subcarriers, self.num.symbols_per_subframe)
        if self.data is None:
            self.data = np.zeros(shape, dtype=np.complex128)
        if self.occupied is None:
            self.occupied = np.zeros(shape, dtype=bool)
        if self.data.shape != shape or self.occupied.shape != shape:
            raise ValueError(f"grid arrays must have shape {shape}")

    def copy(self) -> "ResourceGrid":
        return ResourceGrid(self.num, self.data.copy(), self.occupied.copy())


@dataclass
class SampleBuffer:
    iq: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.iq = np.asarray(self.iq, dtype=np.complex128)


def dft_precode(x: np.ndarray) -> np.ndarray:
    """Orthonormal forward DFT; spreads M data symbols over M subcarriers."""
    x = np.asarray(x, dtype=np.complex128)
    if x.size < 1 or x.size % SUBCARRIERS_PER_PRB != 0:
        raise ValueError(f"precoder length {x.size} is not a whole number of PRBs")
    return np.fft.fft(x, norm="ortho")


def idft_despread(y: np.ndarray) -> np.ndarray:
    """Exact inverse of dft_precode."""
    y = np.asarray(y, dtype=np.complex128)
    if y.size < 1 or y.size % SUBCARRIERS_PER_PRB != 0:
        raise ValueError(f"despread length {y.size} is not a whole number of PRBs")
    return np.fft.ifft(y, norm="ortho")


def map_to_grid(
    symbols: np.ndarray, symbol_index: int, rb_offset: int, grid: ResourceGrid
) -> ResourceGrid:
    """Place symbols contiguously from rb_offset*12 into one OFDM symbol column."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    out = grid.copy()
    if symbols.size == 0:
        return out
    if not 0 <= symbol_index < grid.num.symbols_per_subframe:
        raise ValueError(f"symbol index {symbol_index} out of range")
    start = rb_offset * SUBCARRIERS_PER_PRB
    stop = start + symbols.size
    if start < 0 or stop > grid.num.n_subcarriers:
        raise ValueError("mapping exceeds grid bounds")
    if out.occupied[start:stop, symbol_index].any():
        raise ValueError("mapping overlaps occupied grid elements")
    out.data[start:stop, symbol_index] = symbols
    out.occupied[start:stop, symbol_index] = True
    return out


def ofdm_modulate(grid: ResourceGrid, num: Numerology) -> SampleBuffer:
    """Per-symbol IFFT with CP insertion; output exactly fills one subframe."""
    if grid.num != num:
        raise ValueError("grid numerology mismatch")
    bins = num.subcarrier_bins()
    out = np.empty(num.subframe_samples, dtype=np.complex128)
    pos = 0
    for l in range(num.symbols_per_subframe):
        freq = np.zeros(num.fft_size, dtype=np.complex128)
        freq[bins] = grid.data[:, l]
        time = np.fft.ifft(freq, norm="ortho")
        cp = num.cp_lengths[l]
        out[pos : pos + cp] = time[-cp:]
        out[pos + cp : pos + cp + num.fft_size] = time
        pos += cp + num.fft_size
    return SampleBuffer(out, num.sample_rate)


def ofdm_demodulate(samples: SampleBuffer, num: Numerology) -> ResourceGrid:
    """CP removal + per-symbol FFT; inverse of ofdm_modulate."""
    iq = samples.iq
    if iq.size != num.subframe_samples:
        raise ValueError(
            f"expected {num.subframe_samples} samples, got {iq.size}"
        )
    bins = num.subcarrier_bins()
    grid = ResourceGrid(num)
    pos = 0
    for l in range(num.symbols_per_subframe):
        cp = num.cp_lengths[l]
        time = iq[pos + cp : pos + cp + num.fft_size]
        freq = np.fft.fft(time, norm="ortho")
        grid.data[:, l] = freq[bins]
        pos += cp + num.fft_size
    grid.occupied[:] = True
    return grid


def make_reference_symbols(n_subcarriers: int, root: int = 7) -> np.ndarray:
    """Constant-amplitude Zadoff-Chu style demodulation reference sequence."""
    n = np.arange(n_subcarriers)
    return np.exp(-1j * np.pi * root * n * (n + 1) / n_subcarriers)


def estimate_snr(
    rx_grid: ResourceGrid, ref_positions: np.ndarray, ref_values: np.ndarray
) -> float:
    """SNR in dB from projection of received reference elements onto the known ones.

    Signal power is taken from the single-tap projection, noise power from the
    residual; invariant under a global phase rotation of the received grid.
    """
    ref_positions = np.asarray(ref_positions, dtype=bool)
    if not ref_positions.any():
        raise ValueError("reference mask is empty")
    rx = rx_grid.data[ref_positions]
    ref = np.asarray(ref_values, dtype=np.complex128).ravel()
    if rx.size != ref.size:
        raise ValueError("reference value count does not match mask")
    ref_energy = np.vdot(ref, ref).real
    if ref_energy == 0:
        return -SNR_CAP_DB
    h = np.vdot(ref, rx) / ref_energy
    signal = (np.abs(h) ** 2) * ref_energy / ref.size
    noise = np.mean(np.abs(rx - h * ref) ** 2)
    if signal <= 0:
        return -SNR_CAP_DB
    if noise <= signal * 10 ** (-SNR_CAP_DB / 10):
        return SNR_CAP_DB
    return float(np.clip(10 * np.log10(signal / noise), -SNR_CAP_DB, SNR_CAP_DB))


def measure_papr(samples: SampleBuffer) -> float:
    """Peak-to-average power ratio in dB."""
    p = np.abs(samples.iq) ** 2
    if p.size == 0 or p.max() == 0:
        raise ValueError("cannot measure PAPR of an all-zero buffer")
    return float(10 * np.log10(p.max() / p.mean()))
