"""Binary signal levels and five-bit pin vectors."""

from __future__ import annotations

import enum


class Level(enum.IntEnum):
    """A binary signal level. LOW sorts before HIGH."""

    LOW = 0
    HIGH = 1

    def __invert__(self) -> "Level":
        return Level(1 - self.value)


LOW = Level.LOW
HIGH = Level.HIGH

N_PINS = 5

# A chassis-wide pin vector, always of length N_PINS, pin 1 first.
Vector = tuple[Level, ...]

ALL_LOW: Vector = (LOW,) * N_PINS


def vector(*bits: int) -> Vector:
    if len(bits) != N_PINS:
        raise ValueError(f"expected {N_PINS} bits, got {len(bits)}")
    return tuple(Level(b) for b in bits)


def vector_from_int(value: int) -> Vector:
    """Map 0..31 to a pin vector, pin 1 taken as the most significant bit."""
    if not 0 <= value < 2**N_PINS:
        raise ValueError(f"vector index out of range: {value}")
    return tuple(Level((value >> (N_PINS - i)) & 1) for i in range(1, N_PINS + 1))


def vector_to_int(v: Vector) -> int:
    acc = 0
    for bit in v:
        acc = (acc << 1) | int(bit)
    return acc


def all_vectors() -> list[Vector]:
    """All 32 input combinations in ascending binary order."""
    return [vector_from_int(i) for i in range(2**N_PINS)]
