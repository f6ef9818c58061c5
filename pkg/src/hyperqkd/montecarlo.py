"""Batch simulation driver and the estimators for the protocol's headline numbers.

A batch runs independent rounds whose randomness is derived per round from
the master seed, so results are bit-identical for a given configuration
regardless of how many workers execute it. Estimators report binomial
standard errors.

The key-rate baseline for the efficiency comparison is the entangled-qubit
protocol in which only 2/9 of detected pairs yield a key bit; at the ideal
1.5 bits per coincidence the ratio is 27/4.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

from .adversary import (
    AttackConfig,
    AttackKind,
    EveRecord,
    eve_guess_accuracy,
    eve_information,
)
from .errors import ConfigurationError
from .protocol import (
    KeyBits,
    RoundRecord,
    SiftGroups,
    VerificationReport,
    build_keys,
    run_round,
    sift,
    verify_sample,
)
from .rng import RandomSource

#: Key bits per detected pair in the three-bases entangled-qubit baseline.
EKERT_BITS_PER_PAIR = 2.0 / 9.0

# Stream tag for the verification sampler, distinct from every round id.
_VERIFY_STREAM = 0x7665726966790001


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one batch run."""

    rounds: int
    seed: int = 42
    efficiency: float = 1.0
    attack: Optional[AttackConfig] = None
    verify_fraction: float = 0.1
    workers: int = 1

    def validate(self) -> None:
        """Raise ConfigurationError listing every violated field."""
        problems = []
        if not isinstance(self.rounds, int) or self.rounds < 1:
            problems.append(f"rounds must be an integer >= 1, got {self.rounds!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            problems.append(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not 0.0 < self.efficiency <= 1.0:
            problems.append(f"efficiency must be in (0, 1], got {self.efficiency!r}")
        if not 0.0 <= self.verify_fraction < 1.0:
            problems.append(
                f"verify_fraction must be in [0, 1), got {self.verify_fraction!r}"
            )
        if not isinstance(self.workers, int) or self.workers < 1:
            problems.append(f"workers must be an integer >= 1, got {self.workers!r}")
        if self.attack is not None and not isinstance(self.attack, AttackConfig):
            problems.append(f"attack must be an AttackConfig or None, got {self.attack!r}")
        if problems:
            raise ConfigurationError("; ".join(problems))


@dataclass(frozen=True)
class DetectionStats:
    """Same-basis mismatch rates stratified by whether Eve's two bases matched."""

    same_bases_compared: int
    same_bases_mismatches: int
    same_bases_rate: Optional[float]
    same_bases_se: Optional[float]
    diff_bases_compared: int
    diff_bases_mismatches: int
    diff_bases_rate: Optional[float]
    diff_bases_se: Optional[float]

    def to_dict(self) -> dict:
        return {
            "same_bases_compared": self.same_bases_compared,
            "same_bases_mismatches": self.same_bases_mismatches,
            "same_bases_rate": self.same_bases_rate,
            "same_bases_se": self.same_bases_se,
            "diff_bases_compared": self.diff_bases_compared,
            "diff_bases_mismatches": self.diff_bases_mismatches,
            "diff_bases_rate": self.diff_bases_rate,
            "diff_bases_se": self.diff_bases_se,
        }


@dataclass(frozen=True)
class BatchStats:
    """Monte Carlo estimates for one batch, with binomial standard errors."""

    rounds: int
    coincidences: int
    coincidence_rate: Optional[float]
    coincidence_rate_se: Optional[float]
    same_basis_count: int
    diff_basis_count: int
    discarded_count: int
    bits_per_coincidence: Optional[float]
    bits_per_coincidence_se: Optional[float]
    ekert_ratio: Optional[float]
    ekert_ratio_se: Optional[float]
    same_basis_compared: int
    same_basis_mismatches: int
    same_basis_mismatch_rate: Optional[float]
    same_basis_mismatch_se: Optional[float]
    key_length: int
    key_bit_error_rate: Optional[float]
    key_bit_error_se: Optional[float]
    verification: VerificationReport
    eve_information: Optional[float]
    eve_information_se: Optional[float]
    eve_guess_accuracy: Optional[float]
    detection: Optional[DetectionStats]

    def to_dict(self) -> dict:
        """Flat-ish dict with a fixed field order, for serialization."""
        return {
            "rounds": self.rounds,
            "coincidences": self.coincidences,
            "coincidence_rate": self.coincidence_rate,
            "coincidence_rate_se": self.coincidence_rate_se,
            "same_basis_count": self.same_basis_count,
            "diff_basis_count": self.diff_basis_count,
            "discarded_count": self.discarded_count,
            "bits_per_coincidence": self.bits_per_coincidence,
            "bits_per_coincidence_se": self.bits_per_coincidence_se,
            "ekert_ratio": self.ekert_ratio,
            "ekert_ratio_se": self.ekert_ratio_se,
            "same_basis_compared": self.same_basis_compared,
            "same_basis_mismatches": self.same_basis_mismatches,
            "same_basis_mismatch_rate": self.same_basis_mismatch_rate,
            "same_basis_mismatch_se": self.same_basis_mismatch_se,
            "key_length": self.key_length,
            "key_bit_error_rate": self.key_bit_error_rate,
            "key_bit_error_se": self.key_bit_error_se,
            "verification": {
                "compared_rounds": self.verification.compared_rounds,
                "mismatches": self.verification.mismatches,
                "mismatch_rate": self.verification.mismatch_rate,
            },
            "eve_information": self.eve_information,
            "eve_information_se": self.eve_information_se,
            "eve_guess_accuracy": self.eve_guess_accuracy,
            "detection": self.detection.to_dict() if self.detection else None,
        }


@dataclass(frozen=True)
class BatchResult:
    """Everything a batch produced: estimators, raw rounds, and both keys."""

    stats: BatchStats
    records: tuple[RoundRecord, ...]
    alice_key: KeyBits
    bob_key: KeyBits


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def ekert_ratio(bits_per_coincidence: float) -> float:
    """Key-rate advantage over the 2/9-bits-per-pair baseline."""
    if not bits_per_coincidence >= 0.0:
        raise ValueError(
            f"bits_per_coincidence must be >= 0, got {bits_per_coincidence!r}"
        )
    return bits_per_coincidence / EKERT_BITS_PER_PAIR


def _simulate_chunk(args: tuple) -> list[RoundRecord]:
    seed, attack, efficiency, start, stop = args
    return [
        run_round(i, attack, efficiency, RandomSource.for_round(seed, i))
        for i in range(start, stop)
    ]


def _simulate(config: SimConfig) -> list[RoundRecord]:
    if config.workers == 1 or config.rounds < 2 * config.workers:
        return _simulate_chunk(
            (config.seed, config.attack, config.efficiency, 0, config.rounds)
        )
    bounds = [
        config.rounds * k // config.workers for k in range(config.workers + 1)
    ]
    tasks = [
        (config.seed, config.attack, config.efficiency, lo, hi)
        for lo, hi in zip(bounds, bounds[1:])
    ]
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else None)
    with ProcessPoolExecutor(max_workers=config.workers, mp_context=ctx) as pool:
        parts = list(pool.map(_simulate_chunk, tasks))
    return [rec for part in parts for rec in part]


def detection_probability(
    records: Iterable[RoundRecord], traces: Optional[Iterable[EveRecord]] = None
) -> DetectionStats:
    """Stratified same-basis mismatch rates for a double-intercept batch.

    Compares all coincident same-basis rounds, split by whether Eve used
    equal or different bases on the two photons. Traces default to the ones
    embedded in the records; passing them separately re-aligns by round id.
    Raises ValueError if any compared round lacks a two-basis trace.
    """
    traces_by_id = None
    if traces is not None:
        traces_by_id = {}
        for trace in traces:
            if trace.round_id in traces_by_id:
                raise ValueError(f"duplicate trace for round {trace.round_id}")
            traces_by_id[trace.round_id] = trace
    compared = [0, 0]
    mismatched = [0, 0]
    for rec in records:
        if not rec.coincident or not rec.same_basis:
            continue
        trace = rec.eve_trace if traces_by_id is None else traces_by_id.get(rec.round_id)
        if trace is None or len(trace.bases) != 2:
            raise ValueError(
                f"round {rec.round_id} lacks a double-intercept trace; "
                "detection_probability needs a double-intercept batch"
            )
        stratum = 0 if trace.bases[0] is trace.bases[1] else 1
        compared[stratum] += 1
        if rec.alice_outcome is not rec.bob_outcome:
            mismatched[stratum] += 1
    rates = [
        (mismatched[s] / compared[s]) if compared[s] else None for s in (0, 1)
    ]
    ses = [
        _binomial_se(rates[s], compared[s]) if compared[s] else None for s in (0, 1)
    ]
    return DetectionStats(
        same_bases_compared=compared[0],
        same_bases_mismatches=mismatched[0],
        same_bases_rate=rates[0],
        same_bases_se=ses[0],
        diff_bases_compared=compared[1],
        diff_bases_mismatches=mismatched[1],
        diff_bases_rate=rates[1],
        diff_bases_se=ses[1],
    )


def _batch_stats(
    config: SimConfig,
    records: list[RoundRecord],
    groups: SiftGroups,
    verification: VerificationReport,
    alice_key: KeyBits,
    bob_key: KeyBits,
) -> BatchStats:
    same_n = len(groups.same_basis)
    diff_n = len(groups.diff_basis)
    coincidences = same_n + diff_n

    coincidence_rate = coincidences / config.rounds
    coincidence_se = _binomial_se(coincidence_rate, config.rounds)

    if coincidences:
        bpc = (2 * same_n + diff_n) / coincidences
        # bits/coincidence = 1 + (same-basis fraction), so its SE is that
        # fraction's binomial SE.
        bpc_se = _binomial_se(same_n / coincidences, coincidences)
        ratio = ekert_ratio(bpc)
        ratio_se = bpc_se / EKERT_BITS_PER_PAIR
    else:
        bpc = bpc_se = ratio = ratio_se = None

    mism = sum(
        1 for rec in groups.same_basis if rec.alice_outcome is not rec.bob_outcome
    )
    if same_n:
        mism_rate = mism / same_n
        mism_se = _binomial_se(mism_rate, same_n)
    else:
        mism_rate = mism_se = None

    key_len = len(alice_key.bits)
    if key_len:
        errors = sum(a != b for a, b in zip(alice_key.bits, bob_key.bits))
        key_err = errors / key_len
        key_err_se = _binomial_se(key_err, key_len)
    else:
        key_err = key_err_se = None

    info = info_se = accuracy = None
    detection = None
    if config.attack is not None:
        traces = [rec.eve_trace for rec in records if rec.eve_trace is not None]
        info = eve_information(traces, records, bob_key)
        info_se = _binomial_se(info, key_len) if key_len else None
        accuracy = eve_guess_accuracy(traces, records, bob_key)
        if config.attack.kind is AttackKind.DOUBLE_INTERCEPT:
            detection = detection_probability(records)

    return BatchStats(
        rounds=config.rounds,
        coincidences=coincidences,
        coincidence_rate=coincidence_rate,
        coincidence_rate_se=coincidence_se,
        same_basis_count=same_n,
        diff_basis_count=diff_n,
        discarded_count=len(groups.discarded),
        bits_per_coincidence=bpc,
        bits_per_coincidence_se=bpc_se,
        ekert_ratio=ratio,
        ekert_ratio_se=ratio_se,
        same_basis_compared=same_n,
        same_basis_mismatches=mism,
        same_basis_mismatch_rate=mism_rate,
        same_basis_mismatch_se=mism_se,
        key_length=key_len,
        key_bit_error_rate=key_err,
        key_bit_error_se=key_err_se,
        verification=verification,
        eve_information=info,
        eve_information_se=info_se,
        eve_guess_accuracy=accuracy,
        detection=detection,
    )


def run_batch(config: SimConfig) -> BatchResult:
    """Run a configured batch and compute its estimators.

    Identical configurations produce bit-identical results; changing only
    ``workers`` changes nothing but wall time. The headline bits-per-
    coincidence counts every coincident round as key material; the bits
    consumed by verification show up separately in ``key_length``.
    """
    config.validate()
    records = _simulate(config)
    groups = sift(records)
    if config.verify_fraction > 0.0 and groups.same_basis:
        verification, consumed = verify_sample(
            groups,
            config.verify_fraction,
            RandomSource.for_stream(config.seed, _VERIFY_STREAM),
        )
    else:
        verification, consumed = VerificationReport(0, 0, None), frozenset()
    alice_key, bob_key = build_keys(groups, consumed)
    stats = _batch_stats(config, records, groups, verification, alice_key, bob_key)
    return BatchResult(
        stats=stats, records=tuple(records), alice_key=alice_key, bob_key=bob_key
    )
