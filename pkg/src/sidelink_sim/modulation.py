"""Gray-mapped QPSK / 16-QAM / 64-QAM at unit average energy, plus max-log LLRs."""

from __future__ import annotations

import numpy as np

VALID_ORDERS = (2, 4, 6)


def _constellation(order: int) -> np.ndarray:
    """Constellation points indexed by the integer value of their bit label (MSB first)."""
    n = 1 << order
    labels = np.arange(n)
    bits = ((labels[:, None] >> np.arange(order - 1, -1, -1)) & 1).astype(np.int8)
    if order == 2:
        i = 1 - 2 * bits[:, 0]
        q = 1 - 2 * bits[:, 1]
        scale = np.sqrt(2)
    elif order == 4:
        i = (1 - 2 * bits[:, 0]) * (2 - (1 - 2 * bits[:, 2]))
        q = (1 - 2 * bits[:, 1]) * (2 - (1 - 2 * bits[:, 3]))
        scale = np.sqrt(10)
    elif order == 6:
        i = (1 - 2 * bits[:, 0]) * (4 - (1 - 2 * bits[:, 2]) * (2 - (1 - 2 * bits[:, 4])))
        q = (1 - 2 * bits[:, 1]) * (4 - (1 - 2 * bits[:, 3]) * (2 - (1 - 2 * bits[:, 5])))
        scale = np.sqrt(42)
    else:
        raise ValueError(f"unsupported modulation order {order}")
    return (i + 1j * q) / scale


_CONSTELLATIONS = {m: _constellation(m) for m in VALID_ORDERS}
_BIT_LABELS = {
    m: ((np.arange(1 << m)[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.int8)
    for m in VALID_ORDERS
}


def modulate_bits(bits: np.ndarray, order: int) -> np.ndarray:
    """Map a bit array to complex symbols; bit count must divide by order."""
    if order not in VALID_ORDERS:
        raise ValueError(f"unsupported modulation order {order}")
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % order != 0:
        raise ValueError(f"bit count {bits.size} not divisible by order {order}")
    groups = bits.reshape(-1, order)
    idx = groups @ (1 << np.arange(order - 1, -1, -1))
    return _CONSTELLATIONS[order][idx]


def demodulate_llr(symbols: np.ndarray, order: int, noise_var: float) -> np.ndarray:
    """Max-log LLRs, positive = bit 0 more likely.

    llr_b = (min_{s: b=1} |y-s|^2 - min_{s: b=0} |y-s|^2) / noise_var
    """
    if order not in VALID_ORDERS:
        raise ValueError(f"unsupported modulation order {order}")
    symbols = np.asarray(symbols, dtype=np.complex128)
    const = _CONSTELLATIONS[order]
    labels = _BIT_LABELS[order]
    d2 = np.abs(symbols[:, None] - const[None, :]) ** 2  # (n_sym, 2^order)
    llrs = np.empty((symbols.size, order))
    for b in range(order):
        mask1 = labels[:, b] == 1
        d0 = d2[:, ~mask1].min(axis=1)
        d1 = d2[:, mask1].min(axis=1)
        llrs[:, b] = (d1 - d0) / max(noise_var, 1e-300)
    return llrs.ravel()


def hard_decisions(symbols: np.ndarray, order: int) -> np.ndarray:
    """Nearest-point demapping back to bits."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    const = _CONSTELLATIONS[order]
    idx = np.abs(symbols[:, None] - const[None, :]).argmin(axis=1)
    return _BIT_LABELS[order][idx].astype(np.uint8).ravel()
