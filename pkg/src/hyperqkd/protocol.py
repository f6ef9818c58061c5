"""Protocol round engine: basis choice, measurement, sifting, keys, verification.

One round: the parties share the hyperentangled pair state, an optional
eavesdropper interferes on the channel, each party picks one of the two
complementary Bell bases at random and measures its photon, and each
detection independently succeeds with the configured efficiency.
Coincident rounds (both photons detected) are sifted by announced basis
into a same-basis group (2 key bits per round) and a different-basis
group (1 key bit per round); a random sample of same-basis rounds is
compared in public to estimate the mismatch rate and is removed from the
key material.

Per-round uniform draws happen in a fixed documented order so runs replay
bit-exactly from a seed: eavesdropper basis draw(s) (if random), her
measurement draw(s), Alice's basis, Bob's basis, Alice's measurement,
Bob's measurement, Alice's detection, Bob's detection. Forced bases and
a forced measurement order (testing aids) skip the corresponding draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from .errors import ConfigurationError
from .hilbert import BasisType, BellLabel, Photon, build_shared_state, measure_party
from .rng import RandomSource

if TYPE_CHECKING:
    from .adversary import AttackConfig, EveRecord

#: Group tags used in key-bit provenance.
SAME = "same"
DIFF = "diff"

# Same-basis rounds carry two bits; the four labels of either basis map to
# 00, 01, 10, 11 in their fixed listing order.
_CODE_TWO_BITS = {
    BellLabel.PHI_PLUS: (0, 0),
    BellLabel.PHI_MINUS: (0, 1),
    BellLabel.PSI_PLUS: (1, 0),
    BellLabel.PSI_MINUS: (1, 1),
    BellLabel.CHI_PLUS: (0, 0),
    BellLabel.CHI_MINUS: (0, 1),
    BellLabel.OMEGA_PLUS: (1, 0),
    BellLabel.OMEGA_MINUS: (1, 1),
}

# Different-basis rounds carry one bit. The classes {Phi+, Psi-} <-> {omega+,
# chi-} -> 0 and {Phi-, Psi+} <-> {omega-, chi+} -> 1 are exactly the pairs
# that stay correlated when the two parties use different bases, so both
# parties always extract the same bit from an unperturbed round.
_CODE_ONE_BIT = {
    BellLabel.PHI_PLUS: 0,
    BellLabel.PSI_MINUS: 0,
    BellLabel.PHI_MINUS: 1,
    BellLabel.PSI_PLUS: 1,
    BellLabel.OMEGA_PLUS: 0,
    BellLabel.CHI_MINUS: 0,
    BellLabel.OMEGA_MINUS: 1,
    BellLabel.CHI_PLUS: 1,
}


@dataclass(frozen=True, slots=True)
class RoundRecord:
    """Everything one protocol round produced."""

    round_id: int
    alice_basis: BasisType
    bob_basis: BasisType
    alice_outcome: Optional[BellLabel]
    bob_outcome: Optional[BellLabel]
    alice_detected: bool
    bob_detected: bool
    eve_trace: Optional["EveRecord"] = None

    def __post_init__(self) -> None:
        if (self.alice_outcome is not None) != self.alice_detected:
            raise ValueError("alice_outcome must be present iff alice_detected")
        if (self.bob_outcome is not None) != self.bob_detected:
            raise ValueError("bob_outcome must be present iff bob_detected")
        if self.alice_outcome is not None and self.alice_outcome.basis is not self.alice_basis:
            raise ValueError("alice_outcome does not belong to alice_basis")
        if self.bob_outcome is not None and self.bob_outcome.basis is not self.bob_basis:
            raise ValueError("bob_outcome does not belong to bob_basis")

    @property
    def coincident(self) -> bool:
        return self.alice_detected and self.bob_detected

    @property
    def same_basis(self) -> bool:
        return self.alice_basis is self.bob_basis


@dataclass(frozen=True)
class SiftGroups:
    """Partition of a record list: coincident same-basis, coincident
    different-basis, and discarded (non-coincident) rounds."""

    same_basis: tuple[RoundRecord, ...]
    diff_basis: tuple[RoundRecord, ...]
    discarded: tuple[RoundRecord, ...]


@dataclass(frozen=True)
class KeyBits:
    """A party's key material with per-bit provenance ``(round_id, group tag)``."""

    bits: tuple[int, ...]
    provenance: tuple[tuple[int, str], ...]

    def __len__(self) -> int:
        return len(self.bits)

    def as_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class VerificationReport:
    """Public comparison of sampled same-basis outcomes.

    ``mismatch_rate`` is None (undefined) when nothing was compared, rather
    than a misleading 0.
    """

    compared_rounds: int
    mismatches: int
    mismatch_rate: Optional[float]

    @property
    def undefined(self) -> bool:
        return self.mismatch_rate is None


def choose_basis(rand: RandomSource) -> BasisType:
    """Fair choice between the two complementary bases; one uniform draw."""
    return BasisType.TYPE_I if rand.uniform() < 0.5 else BasisType.TYPE_II


def run_round(
    round_id: int,
    attack: Optional["AttackConfig"],
    efficiency: float,
    rand: RandomSource,
    *,
    alice_basis: Optional[BasisType] = None,
    bob_basis: Optional[BasisType] = None,
    alice_measures_first: bool = True,
) -> RoundRecord:
    """Execute one protocol round.

    ``rand`` must be the round's own stream (see ``RandomSource.for_round``).
    ``alice_basis``/``bob_basis`` force a party's basis instead of drawing
    it, and ``alice_measures_first`` flips the measurement order; these are
    testing aids and do not change the joint statistics.
    """
    if not 0.0 < efficiency <= 1.0:
        raise ConfigurationError(f"efficiency must be in (0, 1], got {efficiency}")

    state = build_shared_state()
    trace = None
    if attack is not None:
        state, trace = attack.apply(state, round_id, rand)

    a_basis = alice_basis if alice_basis is not None else choose_basis(rand)
    b_basis = bob_basis if bob_basis is not None else choose_basis(rand)

    if alice_measures_first:
        res_a = measure_party(state, Photon.ONE, a_basis, rand)
        res_b = measure_party(res_a.post_state, Photon.TWO, b_basis, rand)
    else:
        res_b = measure_party(state, Photon.TWO, b_basis, rand)
        res_a = measure_party(res_b.post_state, Photon.ONE, a_basis, rand)

    a_detected = rand.uniform() < efficiency
    b_detected = rand.uniform() < efficiency
    return RoundRecord(
        round_id=round_id,
        alice_basis=a_basis,
        bob_basis=b_basis,
        alice_outcome=res_a.label if a_detected else None,
        bob_outcome=res_b.label if b_detected else None,
        alice_detected=a_detected,
        bob_detected=b_detected,
        eve_trace=trace,
    )


def sift(records: Iterable[RoundRecord]) -> SiftGroups:
    """Partition rounds: coincident by basis equality, the rest discarded."""
    same: list[RoundRecord] = []
    diff: list[RoundRecord] = []
    dropped: list[RoundRecord] = []
    for rec in records:
        if not (rec.alice_detected and rec.bob_detected):
            dropped.append(rec)
        elif rec.alice_basis is rec.bob_basis:
            same.append(rec)
        else:
            diff.append(rec)
    return SiftGroups(tuple(same), tuple(diff), tuple(dropped))


def encode_same_basis(label: BellLabel) -> tuple[int, int]:
    """Two-bit code of an outcome when both parties used the same basis."""
    return _CODE_TWO_BITS[label]


def encode_diff_basis(label: BellLabel) -> int:
    """One-bit code of an outcome when the parties used different bases."""
    return _CODE_ONE_BIT[label]


def build_keys(
    groups: SiftGroups, verify_exclusions: Sequence[int] | set[int] = ()
) -> tuple[KeyBits, KeyBits]:
    """Extract both parties' key bits from sifted rounds in round-id order.

    Same-basis rounds contribute two bits, different-basis rounds one;
    rounds consumed by verification are skipped.
    """
    excluded = frozenset(verify_exclusions)
    alice_bits: list[int] = []
    bob_bits: list[int] = []
    provenance: list[tuple[int, str]] = []
    ordered = sorted(
        list(groups.same_basis) + list(groups.diff_basis), key=lambda r: r.round_id
    )
    for rec in ordered:
        if rec.round_id in excluded:
            continue
        if rec.alice_basis is rec.bob_basis:
            alice_bits.extend(_CODE_TWO_BITS[rec.alice_outcome])
            bob_bits.extend(_CODE_TWO_BITS[rec.bob_outcome])
            provenance.append((rec.round_id, SAME))
            provenance.append((rec.round_id, SAME))
        else:
            alice_bits.append(_CODE_ONE_BIT[rec.alice_outcome])
            bob_bits.append(_CODE_ONE_BIT[rec.bob_outcome])
            provenance.append((rec.round_id, DIFF))
    prov = tuple(provenance)
    return KeyBits(tuple(alice_bits), prov), KeyBits(tuple(bob_bits), prov)


def verify_sample(
    groups: SiftGroups, fraction: float, rand: RandomSource
) -> tuple[VerificationReport, frozenset[int]]:
    """Publicly compare a random sample of same-basis rounds.

    Samples ``ceil(fraction * len(same_basis))`` rounds uniformly without
    replacement, compares the full outcome labels, and returns the report
    together with the sampled round ids (consumed: excluded from keys).
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"verification fraction must be in (0, 1), got {fraction}")
    same = groups.same_basis
    n = len(same)
    if n == 0:
        return VerificationReport(0, 0, None), frozenset()
    k = math.ceil(fraction * n)
    # Partial Fisher-Yates: the first k slots end up a uniform sample.
    idx = list(range(n))
    for i in range(k):
        j = i + min(int(rand.uniform() * (n - i)), n - i - 1)
        idx[i], idx[j] = idx[j], idx[i]
    chosen = idx[:k]
    mismatches = sum(
        1 for i in chosen if same[i].alice_outcome is not same[i].bob_outcome
    )
    consumed = frozenset(same[i].round_id for i in chosen)
    return VerificationReport(k, mismatches, mismatches / k), consumed
