"""Desk-scale LTE Release-12 sidelink relay simulator.

Bit-true SC-FDMA sidelink transmission, an eNodeB -> relay UE -> remote UE
pipeline, measurement-calibrated channel models, link adaptation, and live
mode selection between downlink and sidelink.
"""

from sidelink_sim.waveform import Numerology, ResourceGrid, SampleBuffer

__all__ = ["Numerology", "ResourceGrid", "SampleBuffer"]
