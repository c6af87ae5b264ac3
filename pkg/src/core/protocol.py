"""Encoding-decoding protocols and exact guessing statistics.

A protocol acts on Alice's inputs ``a`` in [d]^n, ranked little-endian
(rank = sum a_i d^i). Alice feeds ``alpha = f(a)`` into her box, obtains A and
sends ``x = A - h(a) mod d``. Bob receives ``x'`` from the channel, feeds
``beta = b`` into his box, obtains B and guesses ``g = x' + B + r(b) mod d``.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..shared.errors import (AlphabetMismatch, InvalidArity, InvalidProtocol,
                             ShapeMismatch)
from ..shared.schemas import ProtocolFile
from .infotheory import Channel, InputDistribution, uniform_inputs
from .nsbox import BiasTable, NSBox, biases

logger = logging.getLogger(__name__)


def _frozen_int(values) -> np.ndarray:
    array = np.array(values, dtype=np.int64)
    array.setflags(write=False)
    return array


@lru_cache(maxsize=32)
def input_vectors(n: int, d: int) -> np.ndarray:
    """All input vectors in rank order, shape (d^n, n)"""
    ranks = np.arange(d**n)
    vectors = (ranks[:, None] // d ** np.arange(n)[None, :]) % d
    vectors.setflags(write=False)
    return vectors


@dataclass(frozen=True, eq=False)
class Protocol:
    n: int
    d: int
    f: np.ndarray
    h: np.ndarray
    r: np.ndarray
    n_alpha: int

    def to_file(self) -> ProtocolFile:
        return ProtocolFile(
            n=self.n,
            d=self.d,
            f=self.f.tolist(),
            h=self.h.tolist(),
            r=self.r.tolist(),
            n_alpha=self.n_alpha,
        )


@dataclass(frozen=True, eq=False)
class ErrorDistribution:
    """Pr(E = k | b = i) where g = a_i + E"""

    i: int
    probabilities: np.ndarray

    @property
    def deviations(self) -> np.ndarray:
        """F_k with Pr(E = k) = (1 + F_k) / d"""
        return self.probabilities.size * self.probabilities - 1.0


def make_protocol(
    n: int,
    d: int,
    f: Sequence[int],
    h: Sequence[int],
    r: Optional[Sequence[int]] = None,
    n_alpha: Optional[int] = None,
) -> Protocol:
    n_alpha = n if n_alpha is None else n_alpha
    f = np.asarray(f, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    r = np.zeros(n, dtype=np.int64) if r is None else np.asarray(r, dtype=np.int64)

    if n < 1 or d < 2 or n_alpha < 1:
        raise InvalidProtocol(f"need n >= 1, d >= 2 and n_alpha >= 1, got {n}, {d}, {n_alpha}")
    if f.shape != (d**n,) or h.shape != (d**n,) or r.shape != (n,):
        raise InvalidProtocol(
            f"table sizes {f.size}, {h.size}, {r.size} must be {d**n}, {d**n}, {n}"
        )
    if f.min() < 0 or f.max() >= n_alpha:
        raise InvalidProtocol(f"f values must lie in [0, {n_alpha})")
    for name, table in (("h", h), ("r", r)):
        if table.min() < 0 or table.max() >= d:
            raise InvalidProtocol(f"{name} values must lie in [0, {d})")

    return Protocol(
        n=n,
        d=d,
        f=_frozen_int(f),
        h=_frozen_int(h),
        r=_frozen_int(r),
        n_alpha=n_alpha,
    )


def protocol_from_file(data: ProtocolFile) -> Protocol:
    return make_protocol(data.n, data.d, data.f, data.h, data.r, data.n_alpha)


def load_protocol(path: Union[str, Path]) -> Protocol:
    return protocol_from_file(ProtocolFile.model_validate_json(Path(path).read_text()))


def save_protocol(protocol: Protocol, path: Union[str, Path]) -> None:
    Path(path).write_text(protocol.to_file().model_dump_json(indent=2))


def relabel_settings(protocol: Protocol, mapping: Sequence[int]) -> Protocol:
    """Protocol that feeds mapping[f(a)] into the box instead of f(a)"""
    mapping = np.asarray(mapping, dtype=np.int64)
    if sorted(mapping.tolist()) != list(range(protocol.n_alpha)):
        raise InvalidProtocol(f"{mapping.tolist()} is not a permutation of the settings")
    return make_protocol(
        protocol.n, protocol.d, mapping[protocol.f], protocol.h, protocol.r, protocol.n_alpha
    )


# Named protocols


def van_dam() -> Protocol:
    a = input_vectors(2, 2)
    return make_protocol(2, 2, f=a[:, 0] ^ a[:, 1], h=a[:, 0])


def canonical_nn22(n: int) -> Protocol:
    """h(a) = a_0 and f(a) = n - 1 - sum_i prod_{l <= i} (a_0 + a_l mod 2)"""
    if n < 2:
        raise InvalidArity(f"canonical protocol needs n >= 2, got {n}")
    a = input_vectors(n, 2)
    differs = a[:, 1:] ^ a[:, [0]]
    f = n - 1 - np.cumprod(differs, axis=1).sum(axis=1)
    return make_protocol(n, 2, f=f, h=a[:, 0])


def d2dd_protocol(d: int) -> Protocol:
    """Two inputs over [d]; alpha = a_1 - a_0 and the message is x = A + a_0"""
    if d < 2:
        raise InvalidArity(f"d2dd protocol needs d >= 2, got {d}")
    a = input_vectors(2, d)
    return make_protocol(
        2, d, f=(a[:, 1] - a[:, 0]) % d, h=(-a[:, 0]) % d, n_alpha=d
    )


# Coefficients


def coefficients_nn22(protocol: Protocol) -> np.ndarray:
    """Signed c_{j,i} = sum_k [f(k) = j] (-1)^(h(k) + k_i), indexed [j][i]"""
    if protocol.d != 2:
        raise AlphabetMismatch(f"signed coefficients need d = 2, got d = {protocol.d}")
    a = input_vectors(protocol.n, 2)
    signs = 1 - 2 * ((protocol.h[:, None] + a) % 2)
    selector = np.eye(protocol.n_alpha, dtype=np.int64)[protocol.f]
    return selector.T @ signs


def coefficients_nndd(protocol: Protocol) -> np.ndarray:
    """c^l_{j,i} = #{k : f(k) = j, h(k) + k_i = l + r(i) mod d}, indexed [l][j][i]"""
    d = protocol.d
    a = input_vectors(protocol.n, d)
    levels = (protocol.h[:, None] + a - protocol.r[None, :]) % d
    table = np.zeros((d, protocol.n_alpha, protocol.n), dtype=np.int64)
    for i in range(protocol.n):
        np.add.at(table[:, :, i], (levels[:, i], protocol.f), 1)
    return table


def is_balanced_h(protocol: Protocol) -> bool:
    if protocol.d != 2:
        raise AlphabetMismatch(f"balance is defined for d = 2, got d = {protocol.d}")
    return int((protocol.h == 0).sum()) == 2 ** (protocol.n - 1)


def is_balanced_per_setting(protocol: Protocol) -> bool:
    """h is balanced on every preimage f^-1(j).

    Equivalent to Pr(g = 0 | b = i) = 1/2 for every box and every i.
    """
    if protocol.d != 2:
        raise AlphabetMismatch(f"balance is defined for d = 2, got d = {protocol.d}")
    signs = np.bincount(protocol.f, weights=1 - 2 * protocol.h, minlength=protocol.n_alpha)
    return bool(np.all(signs == 0))


# Enumeration


def _check_shapes(box: NSBox, protocol: Protocol, channel: Channel, i: int) -> None:
    if box.d_a != protocol.d or box.d_b != protocol.d:
        raise ShapeMismatch(f"box outcomes ({box.d_a}, {box.d_b}) vs protocol d = {protocol.d}")
    if box.n_a != protocol.n_alpha or box.n_b != protocol.n:
        raise ShapeMismatch(
            f"box settings ({box.n_a}, {box.n_b}) vs protocol ({protocol.n_alpha}, {protocol.n})"
        )
    if channel.d != protocol.d:
        raise ShapeMismatch(f"channel alphabet {channel.d} vs protocol d = {protocol.d}")
    if not 0 <= i < protocol.n:
        raise ShapeMismatch(f"Bob input {i} outside [0, {protocol.n})")


def guess_given_inputs(
    box: NSBox, protocol: Protocol, channel: Channel, i: int
) -> np.ndarray:
    """Pr(g | a, b = i) indexed [rank][g], exact over box outcomes and channel noise"""
    _check_shapes(box, protocol, channel, i)
    d = protocol.d
    ranks = np.arange(d**protocol.n)

    outcomes = box.table[protocol.f, i]  # [rank, A, B]
    # x = A - h, so A = x + h
    shifted = (np.arange(d)[None, :] + protocol.h[:, None]) % d
    message = outcomes[ranks[:, None], shifted]  # [rank, x, B]
    received = np.einsum("yx,rxb->ryb", channel.transition, message)  # [rank, x', B]

    guesses = (np.arange(d)[:, None] + np.arange(d)[None, :] + protocol.r[i]) % d
    return np.stack(
        [(received * (guesses == g)).sum(axis=(1, 2)) for g in range(d)], axis=1
    )


def joint_guess_table(
    box: NSBox,
    protocol: Protocol,
    channel: Channel,
    i: int,
    input_dist: Optional[InputDistribution] = None,
) -> np.ndarray:
    """Pr(a, g | b = i) indexed [rank][g]"""
    input_dist = input_dist or uniform_inputs(protocol.n, protocol.d)
    if (input_dist.n, input_dist.d) != (protocol.n, protocol.d):
        raise ShapeMismatch("input distribution does not match the protocol")
    return input_dist.probabilities()[:, None] * guess_given_inputs(box, protocol, channel, i)


def guessing_probability(
    box: NSBox,
    protocol: Protocol,
    channel: Channel,
    input_dist: Optional[InputDistribution],
    i: int,
) -> float:
    joint = joint_guess_table(box, protocol, channel, i, input_dist)
    targets = input_vectors(protocol.n, protocol.d)[:, i]
    return float(joint[np.arange(joint.shape[0]), targets].sum())


def guessing_probability_closed_form(
    bias_table: BiasTable, protocol: Protocol, e_c: float, i: int
) -> float:
    """1/2 + (e_c / 2) 2^-n (-1)^r(i) sum_j c_{j,i} e_{j,i}, uniform inputs"""
    c = coefficients_nn22(protocol)
    sign = -1.0 if protocol.r[i] else 1.0
    weighted = float(c[:, i] @ bias_table.binary[:, i])
    return 0.5 + 0.5 * e_c * sign * weighted / 2**protocol.n


def error_distribution(
    box: NSBox, protocol: Protocol, channel: Channel, i: int
) -> ErrorDistribution:
    """Closed form Pr(E = k) = (1 + F_k) / d for uniform inputs.

    F_k = d^-n sum_m p_m sum_{j,l} c^l_{j,i} e^{k + l - m}_{j,i}.
    """
    _check_shapes(box, protocol, channel, i)
    d = protocol.d
    e = biases(box).values[:, :, i]  # [k, j]
    c = coefficients_nndd(protocol)[:, :, i]  # [l, j]
    k, l, m = np.ogrid[:d, :d, :d]
    index = (k + l - m) % d  # [k, l, m]
    # sum_j c[l, j] e[index, j]
    terms = np.einsum("lj,klmj->klm", c, e[index])
    deviations = np.einsum("m,klm->k", channel.noise, terms) / d**protocol.n
    return ErrorDistribution(i=i, probabilities=(1.0 + deviations) / d)


def enumerate_error_distribution(
    box: NSBox, protocol: Protocol, channel: Channel, i: int
) -> ErrorDistribution:
    joint = joint_guess_table(box, protocol, channel, i)
    d = protocol.d
    targets = input_vectors(protocol.n, d)[:, i]
    ranks = np.arange(joint.shape[0])
    probabilities = np.array(
        [joint[ranks, (targets + k) % d].sum() for k in range(d)]
    )
    return ErrorDistribution(i=i, probabilities=probabilities)
