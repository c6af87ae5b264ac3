"""Entropies, mutual information and the symmetric channel families, all in bits."""

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.special import entr, xlog1py, xlogy

from ..shared.config import Config
from ..shared.errors import (DimensionMismatch, DomainError, InvalidChannel,
                             InvalidDistribution, InvalidEpsilon)

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def _check_distribution(dist, ndim: Optional[int] = None) -> np.ndarray:
    p = np.asarray(dist, dtype=float)
    if ndim is not None and p.ndim != ndim:
        raise InvalidDistribution(f"expected a {ndim}-D table, got shape {p.shape}")
    if p.size == 0:
        raise InvalidDistribution("empty distribution")
    tol = Config.PROBABILITY_TOLERANCE
    if (p < -tol).any():
        raise InvalidDistribution(f"negative probability {p.min():.3g}")
    if abs(p.sum() - 1.0) > tol * max(1, p.size):
        raise InvalidDistribution(f"probabilities sum to {p.sum():.12g}")
    return np.clip(p, 0.0, None)


def _entropy_bits(p: np.ndarray) -> float:
    return float(entr(p).sum() / LN2)


@dataclass(frozen=True, eq=False)
class Channel:
    """Symmetric channel with transition matrix T[x'][x] = p[(x' - x) mod d]"""

    d: int
    kind: Literal["binary_symmetric", "clock"]
    noise: np.ndarray  # p_m, the probability of shifting a symbol by m
    e_c: Optional[float] = None

    @property
    def transition(self) -> np.ndarray:
        shifts = (np.arange(self.d)[:, None] - np.arange(self.d)[None, :]) % self.d
        return self.noise[shifts]


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Distribution of Alice's input vector, indexed by little-endian rank"""

    n: int
    d: int
    kind: Literal["uniform", "correlated_pair"] = "uniform"
    epsilon: float = 0.0

    def probabilities(self) -> np.ndarray:
        if self.kind == "uniform":
            return np.full(self.d**self.n, float(self.d) ** -self.n)
        # rank = a_0 + 2 a_1
        parity = np.array([0, 1, 1, 0])
        return (1.0 + (-1.0) ** parity * self.epsilon) / 4.0


def uniform_inputs(n: int, d: int = 2) -> InputDistribution:
    return InputDistribution(n=n, d=d)


def correlated_pair(epsilon: float) -> InputDistribution:
    """Two correlated bits with Pr(a_0 = l, a_1 = m) = (1 + (-1)^(l+m) eps) / 4"""
    if not -1.0 <= epsilon <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [-1, 1], got {epsilon}")
    return InputDistribution(n=2, d=2, kind="correlated_pair", epsilon=float(epsilon))


def binary_symmetric(e_c: float) -> Channel:
    """Bit channel that transmits correctly with probability (1 + e_c) / 2"""
    if not -1.0 <= e_c <= 1.0:
        raise InvalidChannel(f"e_c must lie in [-1, 1], got {e_c}")
    return Channel(
        d=2,
        kind="binary_symmetric",
        noise=_frozen([(1.0 + e_c) / 2.0, (1.0 - e_c) / 2.0]),
        e_c=float(e_c),
    )


def clock(d: int, p: Sequence[float]) -> Channel:
    """Clock channel from the free parameters p_0 .. p_{d//2}, mirrored so p_m = p_{d-m}"""
    if d < 2:
        raise InvalidChannel(f"alphabet size must be at least 2, got {d}")
    free = np.asarray(p, dtype=float)
    if free.shape != (d // 2 + 1,):
        raise InvalidChannel(f"clock channel on {d} symbols takes {d // 2 + 1} parameters")
    noise = free[np.minimum(np.arange(d), d - np.arange(d))]
    tol = Config.PROBABILITY_TOLERANCE
    if (noise < -tol).any() or abs(noise.sum() - 1.0) > tol:
        raise InvalidChannel(f"mirrored clock parameters {noise.tolist()} are not a distribution")
    return Channel(d=d, kind="clock", noise=_frozen(np.clip(noise, 0.0, None)))


def noiseless(d: int) -> Channel:
    return clock(d, [1.0] + [0.0] * (d // 2))


def useless(d: int) -> Channel:
    return clock(d, [1.0 / d] * (d // 2 + 1))


def clock_from_biases(d: int, e: Sequence[float]) -> Channel:
    """Clock channel with p_m = (1 + e_m) / d for m >= 1 and p_0 = (1 - sum e_m) / d.

    ``e`` holds the free biases e_1 .. e_{d//2}; the rest are mirrored.
    """
    free = np.asarray(e, dtype=float)
    if free.shape != (d // 2,):
        raise InvalidChannel(f"clock channel on {d} symbols takes {d // 2} biases")
    shifts = np.arange(1, d)
    full = free[np.minimum(shifts, d - shifts) - 1]
    noise = np.concatenate([[1.0 - full.sum()], 1.0 + full]) / d
    return clock(d, noise[: d // 2 + 1])


def fourier_clock(d: int, t: int, strength: float) -> Channel:
    """Clock channel p_m = (1 + strength cos(2 pi t m / d)) / d carrying one Fourier mode"""
    shifts = np.arange(1, d // 2 + 1)
    return clock_from_biases(d, strength * np.cos(2.0 * np.pi * t * shifts / d))


# Entropies


def shannon_entropy(dist) -> float:
    return _entropy_bits(_check_distribution(dist))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary entropy needs p in [0, 1], got {p}")
    return _entropy_bits(np.array([p, 1.0 - p]))


def one_minus_binary_entropy(y):
    """1 - h((1 + y) / 2) without the cancellation of the direct form near y = 0"""
    y = np.asarray(y, dtype=float)
    value = (xlog1py(1.0 + y, y) + xlog1py(1.0 - y, -y)) / (2.0 * LN2)
    return float(value) if value.ndim == 0 else value


def uniform_deficit(dist) -> float:
    """log2 d - H(p), summed as (1/d) sum (1 + F) log(1 + F) with F = d p - 1"""
    p = _check_distribution(dist, ndim=1)
    deviations = p.size * p - 1.0
    return max(float(xlog1py(1.0 + deviations, deviations).sum() / (p.size * LN2)), 0.0)


def mutual_information(joint) -> float:
    p = _check_distribution(joint, ndim=2)
    value = (
        _entropy_bits(p.sum(axis=1)) + _entropy_bits(p.sum(axis=0)) - _entropy_bits(p)
    )
    return max(value, 0.0)


def conditional_mutual_information(joint) -> float:
    """I(X; Y | Z) for a table indexed [x][y][z]"""
    p = _check_distribution(joint, ndim=3)
    value = (
        _entropy_bits(p.sum(axis=1))
        + _entropy_bits(p.sum(axis=0))
        - _entropy_bits(p)
        - _entropy_bits(p.sum(axis=(0, 1)))
    )
    return max(value, 0.0)


# Channels


def capacity(channel: Channel) -> float:
    if channel.kind == "binary_symmetric":
        return one_minus_binary_entropy(channel.e_c)
    return uniform_deficit(channel.noise)


def capacity_from_biases(e: Sequence[float]) -> float:
    """Clock capacity from the full bias list e_1 .. e_{d-1}"""
    e = np.asarray(e, dtype=float)
    d = e.size + 1
    total = xlogy(1.0 - e.sum(), 1.0 - e.sum()) + xlogy(1.0 + e, 1.0 + e).sum()
    return float(total / (d * LN2))


def transmit(channel: Channel, input_dist) -> np.ndarray:
    """Joint distribution of (x, x') indexed [x][x']"""
    p = _check_distribution(input_dist, ndim=1)
    if p.size != channel.d:
        raise DimensionMismatch(
            f"input alphabet {p.size} does not match channel alphabet {channel.d}"
        )
    return p[:, None] * channel.transition.T
