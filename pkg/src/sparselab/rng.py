"""Seeded random streams.

Each component (design, support, magnitudes, signs, noise, ...) draws from its
own PCG64 stream keyed by ``seed XOR role``, so changing how many numbers one
component consumes never shifts another.
"""
from enum import IntEnum

import numpy as np

_MASK64 = (1 << 64) - 1


class Role(IntEnum):
    DESIGN = 0x5DE5_16E0_0000_0001
    SUPPORT = 0x5DE5_16E0_0000_0002
    MAGNITUDE = 0x5DE5_16E0_0000_0003
    SIGN = 0x5DE5_16E0_0000_0004
    NOISE = 0x5DE5_16E0_0000_0005
    PROBE = 0x5DE5_16E0_0000_0006
    ORDER = 0x5DE5_16E0_0000_0007


def stream(seed, role):
    return np.random.Generator(np.random.PCG64((int(seed) & _MASK64) ^ int(role)))
