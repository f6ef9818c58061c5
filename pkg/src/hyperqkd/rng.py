"""Counter-based deterministic random source.

Every stream is a pure function of a 64-bit seed, so a round's randomness
depends only on (master seed, round id) and never on how rounds are
partitioned across workers. The generator is SplitMix64: constant-time
seeding, full 64-bit avalanche, and identical output on every platform.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0 ** -53


def mix64(value: int) -> int:
    """64-bit finalizer with full avalanche (SplitMix64 mixing function)."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RandomSource:
    """Deterministic uniform generator over [0, 1).

    Instances are cheap to create; simulation code makes one per round via
    :meth:`for_round` so that partitioning rounds across workers cannot
    change any round's draws.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    @classmethod
    def for_round(cls, master_seed: int, round_id: int) -> "RandomSource":
        """Derive the independent stream for one round of a batch."""
        return cls(mix64((master_seed & _MASK64) ^ mix64(round_id)))

    @classmethod
    def for_stream(cls, master_seed: int, stream_label: int) -> "RandomSource":
        """Derive an auxiliary stream (e.g. verification sampling) from the master seed."""
        return cls(mix64((master_seed & _MASK64) ^ mix64(stream_label)))

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """Next double in [0, 1), consuming exactly one 64-bit step."""
        return (self.next_u64() >> 11) * _INV_2_53
