"""Exact information-causality evaluation and the limits that validate quadratic inequalities.

Everything here enumerates finite distributions exactly. The only numerical
approximation is the Richardson extrapolation of ratios towards a vanishing
channel.
"""

import logging
import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..shared.config import Config
from ..shared.errors import (AlphabetMismatch, DegenerateChannel, DomainError,
                             InvalidDistribution, ShapeMismatch)
from ..shared.schemas import ICEvaluationResponse, ValidationReport
from .inequality import QuadraticInequality
from .infotheory import (LN2, Channel, InputDistribution, binary_symmetric,
                         capacity, conditional_mutual_information,
                         correlated_pair, fourier_clock, mutual_information,
                         one_minus_binary_entropy, uniform_deficit)
from .nsbox import NSBox, box_from_biases, random_biases
from .protocol import (Protocol, enumerate_error_distribution,
                       guessing_probability, input_vectors, is_balanced_h,
                       is_balanced_per_setting, joint_guess_table,
                       van_dam)

logger = logging.getLogger(__name__)

SMALL_CHANNELS = (0.05, 0.02, 0.01, 0.005, 1e-3, 1e-4)


@dataclass(frozen=True)
class ICEvaluation:
    lhs_bits: float
    capacity_bits: float
    gap: float
    per_i: List[float]

    def to_response(self) -> ICEvaluationResponse:
        return ICEvaluationResponse(
            lhs_bits=self.lhs_bits,
            capacity_bits=self.capacity_bits,
            gap=self.gap,
            per_i=self.per_i,
        )


@dataclass(frozen=True)
class ConcavityReport:
    e_vector: List[float]
    sum_sq: float
    e_c_samples: List[float]
    f_values: List[float]
    f_second: List[float]
    f_second_numeric: List[float] = field(default_factory=list)

    @property
    def concave(self) -> bool:
        return max(self.f_second) <= 1e-12

    @property
    def max_finite_difference_error(self) -> float:
        return max(
            (
                abs(a - b)
                for a, b in zip(self.f_second, self.f_second_numeric)
                if not math.isnan(b)
            ),
            default=0.0,
        )


def _evaluation(per_i: Sequence[float], channel: Channel) -> ICEvaluation:
    lhs = float(sum(per_i))
    cap = capacity(channel)
    return ICEvaluation(lhs_bits=lhs, capacity_bits=cap, gap=lhs - cap, per_i=list(per_i))


def ic_lhs(
    box: NSBox,
    protocol: Protocol,
    channel: Channel,
    input_dist: Optional[InputDistribution] = None,
) -> ICEvaluation:
    """sum_i I(a_i; g | b = i) against the channel capacity"""
    if input_dist is not None and input_dist.kind != "uniform":
        raise InvalidDistribution("ic_lhs needs uniform independent inputs")
    d = protocol.d
    vectors = input_vectors(protocol.n, d)
    per_i = []
    for i in range(protocol.n):
        joint = joint_guess_table(box, protocol, channel, i, input_dist)
        pairs = np.zeros((d, d))
        np.add.at(pairs, vectors[:, i], joint)
        per_i.append(mutual_information(pairs))
    return _evaluation(per_i, channel)


def correlated_ic_lhs(
    box: NSBox, protocol: Protocol, channel: Channel, epsilon: float
) -> ICEvaluation:
    """I(a_0; g | b = 0) + I(a_1; g | b = 1, a_0) for two correlated input bits"""
    if (protocol.n, protocol.d) != (2, 2):
        raise ShapeMismatch(f"correlated inputs need n = d = 2, got n={protocol.n}, d={protocol.d}")
    inputs = correlated_pair(epsilon)
    vectors = input_vectors(2, 2)

    first = np.zeros((2, 2))
    np.add.at(first, vectors[:, 0], joint_guess_table(box, protocol, channel, 0, inputs))

    # [a_1][g][a_0]
    second = np.zeros((2, 2, 2))
    for rank, row in enumerate(joint_guess_table(box, protocol, channel, 1, inputs)):
        a0, a1 = vectors[rank]
        second[a1, :, a0] += row

    per_i = [mutual_information(first), conditional_mutual_information(second)]
    return _evaluation(per_i, channel)


def fano_lhs(box: NSBox, protocol: Protocol, channel: Channel) -> float:
    """sum_i (log2 d - H(E | b = i)), the Fano lower bound on the IC sum"""
    return float(
        sum(
            uniform_deficit(enumerate_error_distribution(box, protocol, channel, i).probabilities)
            for i in range(protocol.n)
        )
    )


def extrapolated_limit(
    ratio: Callable[[float], float],
    h: Optional[float] = None,
    powers: Sequence[int] = (2, 4),
) -> float:
    """Richardson extrapolation of ratio(x) as x -> 0 on the ladder h, h/2, h/4, ...

    ``powers`` lists the exponents of the error terms removed, in order.
    """
    h = Config.RICHARDSON_STEP if h is None else h
    samples = [ratio(h / 2**k) for k in range(len(powers) + 1)]
    for power in powers:
        factor = 2.0**power
        samples = [(factor * fine - coarse) / (factor - 1.0) for coarse, fine in zip(samples, samples[1:])]
    return samples[0]


def lhopital_ratio(box: NSBox, protocol: Protocol, e_c: float) -> float:
    """[n - sum_i h(Pr(g = a_i | b = i))] / [1 - h((1 + e_c) / 2)]"""
    if protocol.d != 2:
        raise AlphabetMismatch("lhopital_ratio needs a binary protocol")
    if e_c == 0.0:
        raise DegenerateChannel("the ratio is undefined for a useless channel")
    channel = binary_symmetric(e_c)
    numerator = sum(
        one_minus_binary_entropy(2.0 * guessing_probability(box, protocol, channel, None, i) - 1.0)
        for i in range(protocol.n)
    )
    return numerator / one_minus_binary_entropy(e_c)


def lhopital_limit(box: NSBox, protocol: Protocol, h: Optional[float] = None) -> float:
    return extrapolated_limit(lambda e_c: lhopital_ratio(box, protocol, e_c), h, (2, 4))


def dary_lhopital_ratio(box: NSBox, protocol: Protocol, t: int, strength: float) -> float:
    """Fano IC sum over capacity for the clock channel p_m = (1 + s cos(2 pi t m / d)) / d"""
    if strength == 0.0:
        raise DegenerateChannel("the ratio is undefined for a useless channel")
    channel = fourier_clock(protocol.d, t, strength)
    return fano_lhs(box, protocol, channel) / capacity(channel)


def dary_lhopital_limit(
    box: NSBox, protocol: Protocol, t: int, h: Optional[float] = None
) -> float:
    # odd orders survive for d > 2
    return extrapolated_limit(
        lambda s: dary_lhopital_ratio(box, protocol, t, s), h, (1, 2, 3)
    )


def correlated_lhopital_ratio(box: NSBox, epsilon: float, e_c: float) -> float:
    if e_c == 0.0:
        raise DegenerateChannel("the ratio is undefined for a useless channel")
    channel = binary_symmetric(e_c)
    return correlated_ic_lhs(box, van_dam(), channel, epsilon).lhs_bits / capacity(channel)


def correlated_lhopital_limit(box: NSBox, epsilon: float, h: Optional[float] = None) -> float:
    return extrapolated_limit(lambda e_c: correlated_lhopital_ratio(box, epsilon, e_c), h, (2, 4))


# Concavity


def _f(e_vector: np.ndarray, e_c: float) -> float:
    return float(one_minus_binary_entropy(e_c * e_vector).sum() - one_minus_binary_entropy(e_c))


def _f_second(e_vector: np.ndarray, e_c: float) -> float:
    squares = e_vector**2
    return float(
        (np.sum(squares / (1.0 - e_c**2 * squares)) - 1.0 / (1.0 - e_c**2)) / LN2
    )


def concavity_check(
    e_vector: Sequence[float], e_c_samples: Sequence[float], step: float = 1e-4
) -> ConcavityReport:
    """Sample F(e_c) = sum_i [1 - h((1 + e_c e_i)/2)] - [1 - h((1 + e_c)/2)] and F''"""
    e = np.asarray(e_vector, dtype=float)
    samples = [float(x) for x in e_c_samples]
    if (np.abs(e) > 1.0).any():
        raise DomainError(f"every e_i must lie in [-1, 1], got {e.tolist()}")
    if any(abs(x) >= 1.0 for x in samples):
        raise DomainError("e_c samples must lie strictly inside (-1, 1)")

    # nan where the stencil would leave (-1, 1)
    numeric = [
        (_f(e, x + step) - 2.0 * _f(e, x) + _f(e, x - step)) / step**2
        if abs(x) + step < 1.0
        else math.nan
        for x in samples
    ]
    return ConcavityReport(
        e_vector=e.tolist(),
        sum_sq=float(np.sum(e**2)),
        e_c_samples=samples,
        f_values=[_f(e, x) for x in samples],
        f_second=[_f_second(e, x) for x in samples],
        f_second_numeric=numeric,
    )


def exceeds_capacity_near_zero(e_vector: Sequence[float]) -> bool:
    """True when F(e_c) > 0 at some channel strength with |e_c| <= 0.05"""
    e = np.asarray(e_vector, dtype=float)
    return any(_f(e, x) > 0.0 for x in SMALL_CHANNELS)


# Randomized validation


def _validation_shard(
    args: Tuple[QuadraticInequality, Protocol, np.random.SeedSequence, int]
) -> List[Tuple[float, float]]:
    ineq, protocol, seed, count = args
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(count):
        bias_table = random_biases(ineq.n_a, ineq.n_b, 2, rng)
        box = box_from_biases(bias_table)
        normalized = ineq.lhs(bias_table) / ineq.bound
        margins.append((normalized, lhopital_limit(box, protocol)))
    return margins


def validate_inequality(
    ineq: QuadraticInequality,
    protocol: Protocol,
    trials: Optional[int] = None,
    rng_seed: Optional[int] = None,
    jobs: Optional[int] = None,
) -> ValidationReport:
    """Compare the inequality with the extrapolated IC limit on random full-correlation boxes"""
    if ineq.d != 2 or protocol.d != 2:
        raise AlphabetMismatch("validation runs on binary families only")
    trials = Config.DEFAULT_TRIALS if trials is None else trials
    rng_seed = Config.DEFAULT_SEED if rng_seed is None else rng_seed
    jobs = Config.JOBS if jobs is None else jobs

    sizes = [Config.SHARD_SIZE] * (trials // Config.SHARD_SIZE)
    if trials % Config.SHARD_SIZE:
        sizes.append(trials % Config.SHARD_SIZE)
    seeds = np.random.SeedSequence(rng_seed).spawn(len(sizes))
    tasks = [(ineq, protocol, seed, size) for seed, size in zip(seeds, sizes)]

    if jobs > 1 and len(tasks) > 1:
        with Pool(processes=jobs) as pool:
            shards = pool.map(_validation_shard, tasks)
    else:
        shards = [_validation_shard(task) for task in tasks]

    disagreements = 0
    worst_margin = 0.0
    worst_limit_error = 0.0
    for normalized, limit in (pair for shard in shards for pair in shard):
        worst_limit_error = max(worst_limit_error, abs(limit - normalized))
        generated, oracle = normalized - 1.0, limit - 1.0
        if (generated > 0) != (oracle > 0) and min(abs(generated), abs(oracle)) > Config.MARGIN_BAND:
            disagreements += 1
            worst_margin = max(worst_margin, min(abs(generated), abs(oracle)))

    balanced = is_balanced_per_setting(protocol)
    report = ValidationReport(
        family=ineq.family,
        seed=rng_seed,
        trials=trials,
        disagreements=disagreements,
        max_disagreement_margin=worst_margin,
        max_limit_error=worst_limit_error,
        balanced_h=is_balanced_h(protocol),
        balanced_per_setting=balanced,
        asserted=balanced,
    )
    if disagreements and not balanced:
        logger.warning(
            f"{disagreements} sign disagreements for {ineq.family} with h unbalanced on some preimage of f (reported only)"
        )
    logger.debug(f"Validation report: {report.model_dump()}")
    return report
