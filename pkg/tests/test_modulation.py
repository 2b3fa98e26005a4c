"""Constellation mappings checked against hand-computed anchor points and a
theoretical QPSK bit error rate."""

import math

import numpy as np
import pytest

from sidelink_sim import modulation


def test_unit_average_energy():
    for order in (2, 4, 6):
        const = modulation._constellation(order)
        assert abs(np.mean(np.abs(const) ** 2) - 1.0) < 1e-12


def test_qpsk_anchor_points():
    # label 00 -> (1+j)/sqrt(2), label 11 -> (-1-j)/sqrt(2)
    s = modulation.modulate_bits(np.array([0, 0, 1, 1], dtype=np.uint8), 2)
    assert np.allclose(s, [(1 + 1j) / math.sqrt(2), (-1 - 1j) / math.sqrt(2)])


def test_16qam_anchor_points():
    # 0000 -> (1+j)/sqrt(10); 0010 -> (3+j)/sqrt(10)
    s = modulation.modulate_bits(np.array([0, 0, 0, 0, 0, 0, 1, 0], dtype=np.uint8), 4)
    assert np.allclose(s, [(1 + 1j) / math.sqrt(10), (3 + 1j) / math.sqrt(10)])


def test_64qam_anchor_points():
    # 000000 -> (3+3j)/sqrt(42); 101011 -> derived by the mapping formula
    s = modulation.modulate_bits(np.array([0, 0, 0, 0, 0, 0], dtype=np.uint8), 6)
    assert np.allclose(s, [(3 + 3j) / math.sqrt(42)])


def test_gray_property_adjacent_labels():
    """Nearest neighbours in the constellation differ by exactly one bit."""
    for order in (2, 4, 6):
        const = modulation._constellation(order)
        labels = modulation._BIT_LABELS[order]
        spacing = np.sort(np.unique(np.round(np.abs(
            const[:, None] - const[None, :]), 9)))[1]
        for a in range(const.size):
            for b in range(a + 1, const.size):
                if abs(const[a] - const[b]) < spacing * 1.001:
                    assert np.sum(labels[a] != labels[b]) == 1


def test_roundtrip_all_orders(rng):
    for order in (2, 4, 6):
        bits = rng.integers(0, 2, order * 256).astype(np.uint8)
        syms = modulation.modulate_bits(bits, order)
        assert np.array_equal(modulation.hard_decisions(syms, order), bits)


def test_llr_signs_noiseless():
    """At every constellation point the LLR sign must reproduce the label."""
    for order in (2, 4, 6):
        const = modulation._CONSTELLATIONS[order]
        labels = modulation._BIT_LABELS[order]
        llrs = modulation.demodulate_llr(const, order, 0.1).reshape(-1, order)
        decided = (llrs < 0).astype(np.int8)
        assert np.array_equal(decided, labels)


def test_llr_scaling_with_noise_var(rng):
    syms = modulation.modulate_bits(rng.integers(0, 2, 20).astype(np.uint8), 2)
    a = modulation.demodulate_llr(syms, 2, 0.5)
    b = modulation.demodulate_llr(syms, 2, 1.0)
    assert np.allclose(a, 2 * b)


def test_invalid_order():
    with pytest.raises(ValueError):
        modulation.modulate_bits(np.zeros(3, dtype=np.uint8), 3)
    with pytest.raises(ValueError):
        modulation.modulate_bits(np.zeros(3, dtype=np.uint8), 2)


def test_qpsk_ber_matches_theory(rng):
    """Monte-Carlo BER at Es/N0 = 4 dB against Q(sqrt(2*Eb/N0))."""
    from scipy.stats import norm

    n_bits = 200_000
    esn0_db = 4.0
    bits = rng.integers(0, 2, n_bits).astype(np.uint8)
    syms = modulation.modulate_bits(bits, 2)
    noise_var = 10 ** (-esn0_db / 10)
    noise = rng.normal(scale=math.sqrt(noise_var / 2), size=(syms.size, 2))
    rx = syms + noise[:, 0] + 1j * noise[:, 1]
    hard = modulation.hard_decisions(rx, 2)
    ber = np.mean(hard != bits)
    # per-bit SNR: Eb/N0 = Es/N0 / 2
    theory = norm.sf(math.sqrt(10 ** (esn0_db / 10)))
    assert abs(ber - theory) < 0.2 * theory + 5e-4
