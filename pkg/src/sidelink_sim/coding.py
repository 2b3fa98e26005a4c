"""Channel coding: CRC attachment, convolutional FEC, circular-buffer rate matching.

The code is a tail-terminated rate-1/3 convolutional code, constraint length 7,
generators (133, 171, 165) octal.  The decoder is a soft-input Viterbi running
over LLRs (positive LLR = bit 0 more likely).
"""

from __future__ import annotations

import numpy as np
from numba import njit

CRC24A_POLY = 0x864CFB
CRC8_POLY = 0x9B  # x^8 + x^7 + x^4 + x^3 + x + 1

CONSTRAINT_LEN = 7
N_TAIL = CONSTRAINT_LEN - 1
GENERATORS = (0o133, 0o171, 0o165)
CODE_RATE_DEN = 3


def _crc_bits(bits: np.ndarray, poly: int, width: int) -> np.ndarray:
    """CRC of a bit array (MSB-first), zero initial state, no final XOR."""
    reg = 0
    top = 1 << width
    for b in bits:
        reg = (reg << 1) | int(b)
        if reg & top:
            reg ^= top | poly
    # flush width zero bits
    for _ in range(width):
        reg <<= 1
        if reg & top:
            reg ^= top | poly
    out = np.zeros(width, dtype=np.uint8)
    for i in range(width):
        out[i] = (reg >> (width - 1 - i)) & 1
    return out


def crc24a(bits: np.ndarray) -> np.ndarray:
    return _crc_bits(np.asarray(bits, dtype=np.uint8), CRC24A_POLY, 24)


def crc8(bits: np.ndarray) -> np.ndarray:
    return _crc_bits(np.asarray(bits, dtype=np.uint8), CRC8_POLY, 8)


def attach_crc(payload: np.ndarray) -> np.ndarray:
    """Append CRC-24A to a payload bit array."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size < 1:
        raise ValueError("payload must contain at least one bit")
    return np.concatenate([payload, crc24a(payload)])


def check_crc(block: np.ndarray) -> bool:
    """True if the trailing 24 bits are the CRC-24A of the leading bits."""
    block = np.asarray(block, dtype=np.uint8)
    if block.size <= 24:
        return False
    return bool(np.array_equal(crc24a(block[:-24]), block[-24:]))


def _build_trellis():
    """Per-state next-state and output tables for the 64-state trellis."""
    n_states = 1 << (CONSTRAINT_LEN - 1)
    next_state = np.zeros((n_states, 2), dtype=np.int64)
    outputs = np.zeros((n_states, 2, CODE_RATE_DEN), dtype=np.int8)
    for s in range(n_states):
        for b in range(2):
            reg = (b << (CONSTRAINT_LEN - 1)) | s
            next_state[s, b] = reg >> 1
            for gi, g in enumerate(GENERATORS):
                outputs[s, b, gi] = bin(reg & g).count("1") & 1
    return next_state, outputs


_NEXT_STATE, _OUTPUTS = _build_trellis()
# predecessor table: for each state, the two (prev_state, input_bit) pairs
_PREV = np.full((64, 2, 2), -1, dtype=np.int64)
_fill = np.zeros(64, dtype=np.int64)
for _s in range(64):
    for _b in (0, 1):
        _ns = int(_NEXT_STATE[_s, _b])
        _PREV[_ns, _fill[_ns], 0] = _s
        _PREV[_ns, _fill[_ns], 1] = _b
        _fill[_ns] += 1
del _s, _b, _ns, _fill


@njit(cache=True)
def _conv_encode_kernel(bits, next_state, outputs):
    n = bits.shape[0]
    out = np.empty(3 * (n + N_TAIL), dtype=np.uint8)
    state = 0
    for i in range(n + N_TAIL):
        b = bits[i] if i < n else 0
        for g in range(3):
            out[3 * i + g] = outputs[state, b, g]
        state = next_state[state, b]
    return out


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Tail-terminated rate-1/3 encoding; output length 3*(k+6)."""
    bits = np.ascontiguousarray(np.asarray(bits, dtype=np.uint8))
    return _conv_encode_kernel(bits, _NEXT_STATE, _OUTPUTS)


@njit(cache=True)
def _viterbi_kernel(llrs, n_info, prev, outputs_prev):
    n_steps = n_info + N_TAIL
    n_states = 64
    NEG = -1e18
    metric = np.full(n_states, NEG)
    metric[0] = 0.0
    decisions = np.zeros((n_steps, n_states), dtype=np.uint8)
    new_metric = np.empty(n_states)
    for t in range(n_steps):
        # branch metric for expected bit e given llr l is (1-2e)*l
        l0 = llrs[3 * t]
        l1 = llrs[3 * t + 1]
        l2 = llrs[3 * t + 2]
        for s in range(n_states):
            best = NEG
            choice = 0
            for k in range(2):
                ps = prev[s, k, 0]
                m = metric[ps]
                if m <= NEG / 2:
                    continue
                m += (1.0 - 2.0 * outputs_prev[s, k, 0]) * l0
                m += (1.0 - 2.0 * outputs_prev[s, k, 1]) * l1
                m += (1.0 - 2.0 * outputs_prev[s, k, 2]) * l2
                if m > best:
                    best = m
                    choice = k
            new_metric[s] = best
            decisions[t, s] = choice
        metric[:] = new_metric
    # traceback from state 0 (tail termination)
    out = np.empty(n_info, dtype=np.uint8)
    state = 0
    for t in range(n_steps - 1, -1, -1):
        k = decisions[t, state]
        bit = _PREV_BIT[state, k]
        ps = prev[state, k, 0]
        if t < n_info:
            out[t] = bit
        state = ps
    return out


# input bit associated with each predecessor slot, and the coded output bits on
# the transition prev -> state, reindexed for the traceback kernel
_PREV_BIT = np.zeros((64, 2), dtype=np.uint8)
_OUT_PREV = np.zeros((64, 2, 3), dtype=np.float64)
for _s in range(64):
    for _k in (0, 1):
        _ps = int(_PREV[_s, _k, 0])
        _b = int(_PREV[_s, _k, 1])
        _PREV_BIT[_s, _k] = _b
        _OUT_PREV[_s, _k, :] = _OUTPUTS[_ps, _b, :]
del _s, _k, _ps, _b


def viterbi_decode(llrs: np.ndarray, n_info: int) -> np.ndarray:
    """Maximum-likelihood decode of a tail-terminated codeword from LLRs.

    llrs must have length 3*(n_info+6); positive values favour bit 0.
    """
    llrs = np.ascontiguousarray(np.asarray(llrs, dtype=np.float64))
    expected = 3 * (n_info + N_TAIL)
    if llrs.size != expected:
        raise ValueError(f"llr length {llrs.size} != 3*(k+6) = {expected}")
    return _viterbi_kernel(llrs, n_info, _PREV, _OUT_PREV)


def _selection_indices(n_coded: int, n_out: int) -> np.ndarray:
    """Codeword positions transmitted, in order.

    Repetition (n_out >= n_coded) cycles through the codeword; puncturing keeps
    evenly spaced positions so at most ceil(n_coded/n_out)-1 consecutive coded
    bits are dropped (the trellis never loses a whole step at our code rates).
    """
    if n_out >= n_coded:
        return np.arange(n_out) % n_coded
    return (np.arange(n_out) * n_coded) // n_out


def rate_match(coded: np.ndarray, n_out: int) -> np.ndarray:
    """Circular-buffer selection: repeat or evenly puncture to exactly n_out bits."""
    coded = np.asarray(coded, dtype=np.uint8)
    if n_out < 1:
        raise ValueError("n_out must be positive")
    return coded[_selection_indices(coded.size, n_out)]


def rate_dematch(llrs: np.ndarray, n_coded: int) -> np.ndarray:
    """Fold received LLRs back onto codeword positions (sum over repeats;
    punctured positions stay at zero)."""
    llrs = np.asarray(llrs, dtype=np.float64)
    out = np.zeros(n_coded)
    np.add.at(out, _selection_indices(n_coded, llrs.size), llrs)
    return out
