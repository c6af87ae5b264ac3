"""Bipartite nonsignaling boxes and their correlator (bias) parametrization.

Tables are indexed ``[alpha][beta][a][b]`` and all indices are 0-based. Every
object here is immutable once built: arrays are copied and flagged read-only.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..shared.config import Config
from ..shared.errors import (BellError, DimensionMismatch, InvalidArity,
                             InvalidBias, InvalidCG, InvalidWeights,
                             NegativeProbability, NormalizationError,
                             ShapeMismatch, SignalingError)
from ..shared.schemas import BoxFile, CollinsGisinFile

logger = logging.getLogger(__name__)


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def _tolerance(tol: Optional[float]) -> float:
    return Config.PROBABILITY_TOLERANCE if tol is None else tol


@dataclass(frozen=True, eq=False)
class NSBox:
    """Full conditional distribution P(A=a, B=b | alpha, beta)"""

    n_a: int
    n_b: int
    d_a: int
    d_b: int
    table: np.ndarray

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (self.n_a, self.n_b, self.d_a, self.d_b)

    def to_file(self) -> BoxFile:
        return BoxFile(
            n_a=self.n_a,
            n_b=self.n_b,
            d_a=self.d_a,
            d_b=self.d_b,
            p=self.table.tolist(),
        )


@dataclass(frozen=True, eq=False)
class BiasTable:
    """Correlators e^k_{j,i} = d Pr(A+B = k mod d | j, i) - 1, stored [k][j][i]"""

    n_a: int
    n_b: int
    d: int
    values: np.ndarray

    @classmethod
    def from_binary(cls, e) -> "BiasTable":
        """Build a d=2 table from the scalar correlators e_{j,i} indexed [j][i]"""
        e = np.asarray(e, dtype=float)
        if e.ndim != 2:
            raise ShapeMismatch(f"binary biases must be 2-D, got shape {e.shape}")
        return cls(n_a=e.shape[0], n_b=e.shape[1], d=2, values=_frozen([e, -e]))

    @classmethod
    def from_values(cls, values) -> "BiasTable":
        values = np.asarray(values, dtype=float)
        if values.ndim != 3:
            raise ShapeMismatch(f"bias values must be [k][j][i], got {values.shape}")
        d, n_a, n_b = values.shape
        return cls(n_a=n_a, n_b=n_b, d=d, values=_frozen(values))

    @property
    def binary(self) -> np.ndarray:
        """Scalar correlators e_{j,i} := e^0_{j,i}, only meaningful for d = 2"""
        if self.d != 2:
            raise DimensionMismatch(f"scalar biases need d = 2, table has d = {self.d}")
        return self.values[0]

    def e(self, j: int, i: int, k: int = 0) -> float:
        return float(self.values[k, j, i])

    def scaled(self, q: float) -> "BiasTable":
        return BiasTable.from_values(q * self.values)


@dataclass(frozen=True, eq=False)
class CollinsGisinTable:
    """Outcome-0 marginals and (0,0) joints of a binary-outcome box"""

    pa: np.ndarray
    pb: np.ndarray
    joint: np.ndarray  # [i][j] = [Bob setting][Alice setting]

    def to_file(self) -> CollinsGisinFile:
        return CollinsGisinFile(
            pa=self.pa.tolist(), pb=self.pb.tolist(), joint=self.joint.tolist()
        )


def nonsignaling_residual(box: Union[NSBox, np.ndarray]) -> float:
    """Largest dependence of a party's marginal on the remote setting"""
    table = box.table if isinstance(box, NSBox) else np.asarray(box, dtype=float)
    bob_marginals = table.sum(axis=2)  # [alpha, beta, b]
    alice_marginals = table.sum(axis=3)  # [alpha, beta, a]
    return float(
        max(
            np.ptp(bob_marginals, axis=0).max(),
            np.ptp(alice_marginals, axis=1).max(),
        )
    )


def make_box(
    n_a: int, n_b: int, d_a: int, d_b: int, table, tol: Optional[float] = None
) -> NSBox:
    tol = _tolerance(tol)
    table = np.asarray(table, dtype=float)

    if table.shape != (n_a, n_b, d_a, d_b):
        raise ShapeMismatch(
            f"table shape {table.shape} does not match ({n_a}, {n_b}, {d_a}, {d_b})"
        )
    if (table < -tol).any():
        raise NegativeProbability(f"minimum entry {table.min():.3g} is negative")

    sums = table.sum(axis=(2, 3))
    worst = np.abs(sums - 1.0).max()
    if worst > tol:
        alpha, beta = np.unravel_index(np.abs(sums - 1.0).argmax(), sums.shape)
        raise NormalizationError(
            f"P(.,.|{alpha},{beta}) sums to {sums[alpha, beta]:.6g}, not 1"
        )

    bob_residual = np.ptp(table.sum(axis=2), axis=0).max()
    if bob_residual > tol:
        raise SignalingError(
            f"Bob's marginal depends on Alice's setting (residual {bob_residual:.3g})"
        )
    alice_residual = np.ptp(table.sum(axis=3), axis=1).max()
    if alice_residual > tol:
        raise SignalingError(
            f"Alice's marginal depends on Bob's setting (residual {alice_residual:.3g})"
        )

    return NSBox(n_a=n_a, n_b=n_b, d_a=d_a, d_b=d_b, table=_frozen(table))


def box_from_file(data: BoxFile, tol: Optional[float] = None) -> NSBox:
    return make_box(data.n_a, data.n_b, data.d_a, data.d_b, data.p, tol=tol)


def load_box(path: Union[str, Path]) -> NSBox:
    return box_from_file(BoxFile.model_validate_json(Path(path).read_text()))


def save_box(box: NSBox, path: Union[str, Path]) -> None:
    Path(path).write_text(box.to_file().model_dump_json(indent=2))


def marginals(box: NSBox) -> Tuple[np.ndarray, np.ndarray]:
    """Alice's P(a|alpha) indexed [alpha][a] and Bob's P(b|beta) indexed [beta][b]"""
    return box.table.sum(axis=3)[:, 0, :], box.table.sum(axis=2)[0, :, :]


def _sum_index(d: int) -> np.ndarray:
    outcomes = np.arange(d)
    return (outcomes[:, None] + outcomes[None, :]) % d


def biases(box: NSBox) -> BiasTable:
    if box.d_a != box.d_b:
        raise DimensionMismatch(
            f"biases need equal outcome counts, got d_a={box.d_a}, d_b={box.d_b}"
        )
    d = box.d_a
    index = _sum_index(d)
    probabilities = np.stack(
        [(box.table * (index == k)).sum(axis=(2, 3)) for k in range(d)]
    )
    return BiasTable.from_values(d * probabilities - 1.0)


def box_from_biases(bias_table: BiasTable, tol: Optional[float] = None) -> NSBox:
    """Full-correlation box with uniform marginals realizing the given biases"""
    tol = _tolerance(tol)
    values = bias_table.values
    d = bias_table.d

    drift = np.abs(values.sum(axis=0)).max()
    if drift > tol:
        raise InvalidBias(f"biases of some setting pair sum to {drift:.3g}, not 0")

    # P(a, b | j, i) = (1 + e^{a+b}_{j,i}) / d^2
    table = np.moveaxis((1.0 + values[_sum_index(d)]) / d**2, (0, 1), (2, 3))
    if (table < -tol).any():
        raise InvalidBias(
            f"biases imply a negative probability ({table.min():.3g})"
        )
    table = np.clip(table, 0.0, None)
    return make_box(bias_table.n_a, bias_table.n_b, d, d, table, tol=tol)


def mix(
    boxes: Sequence[NSBox], weights: Sequence[float], tol: Optional[float] = None
) -> NSBox:
    tol = _tolerance(tol)
    if not boxes:
        raise ShapeMismatch("cannot mix an empty collection of boxes")
    if len(boxes) != len(weights):
        raise InvalidWeights(f"{len(boxes)} boxes but {len(weights)} weights")
    shape = boxes[0].shape
    if any(box.shape != shape for box in boxes):
        raise ShapeMismatch("all mixed boxes must share one shape")

    weights = np.asarray(weights, dtype=float)
    if (weights < -tol).any() or abs(weights.sum() - 1.0) > tol:
        raise InvalidWeights(f"weights {weights.tolist()} are not a distribution")

    table = np.tensordot(weights, np.stack([box.table for box in boxes]), axes=1)
    return make_box(*shape, np.clip(table, 0.0, None), tol=tol)


def relabel(
    box: NSBox,
    alice_perm: Optional[Sequence[int]] = None,
    bob_perm: Optional[Sequence[int]] = None,
    alice_shifts: Optional[Sequence[int]] = None,
    bob_shifts: Optional[Sequence[int]] = None,
    swap_parties: bool = False,
) -> NSBox:
    """Relabel settings and outcomes.

    The result satisfies P'(a, b | j, i) = P(a + sa_j, b + sb_i | perm_a[j], perm_b[i])
    with outcome arithmetic mod d, applied after the optional party exchange.
    For binary outcomes a shift of 1 is an outcome flip.
    """
    table = np.asarray(box.table)
    n_a, n_b, d_a, d_b = box.shape
    if swap_parties:
        table = table.transpose(1, 0, 3, 2)
        n_a, n_b, d_a, d_b = n_b, n_a, d_b, d_a

    if alice_perm is not None:
        table = table[list(alice_perm)]
    if bob_perm is not None:
        table = table[:, list(bob_perm)]

    table = table.copy()
    for j, shift in enumerate(alice_shifts or ()):
        table[j] = np.roll(table[j], -shift, axis=1)
    for i, shift in enumerate(bob_shifts or ()):
        table[:, i] = np.roll(table[:, i], -shift, axis=2)

    return make_box(n_a, n_b, d_a, d_b, table)


def random_biases(n_a: int, n_b: int, d: int, rng: np.random.Generator) -> BiasTable:
    """Uniform correlators on [-1, 1] for d = 2, Dirichlet-drawn A+B laws otherwise"""
    if d == 2:
        return BiasTable.from_binary(rng.uniform(-1.0, 1.0, size=(n_a, n_b)))
    laws = rng.dirichlet(np.ones(d), size=(n_a, n_b))  # [j, i, k]
    return BiasTable.from_values(np.moveaxis(d * laws - 1.0, 2, 0))


# Collins-Gisin notation


def to_collins_gisin(box: NSBox) -> CollinsGisinTable:
    if box.d_a != 2 or box.d_b != 2:
        raise DimensionMismatch("Collins-Gisin notation needs binary outcomes")
    table = box.table
    return CollinsGisinTable(
        pa=_frozen(table[:, 0, 0, :].sum(axis=1)),
        pb=_frozen(table[0, :, :, 0].sum(axis=1)),
        joint=_frozen(table[:, :, 0, 0].T),
    )


def from_collins_gisin(
    cg: Union[CollinsGisinTable, CollinsGisinFile], tol: Optional[float] = None
) -> NSBox:
    tol = _tolerance(tol)
    pa = np.asarray(cg.pa, dtype=float)
    pb = np.asarray(cg.pb, dtype=float)
    joint = np.asarray(cg.joint, dtype=float).T  # [j][i]
    if joint.shape != (pa.size, pb.size):
        raise InvalidCG(
            f"joint shape {joint.T.shape} does not match ({pb.size}, {pa.size})"
        )

    table = np.empty((pa.size, pb.size, 2, 2))
    table[:, :, 0, 0] = joint
    table[:, :, 0, 1] = pa[:, None] - joint
    table[:, :, 1, 0] = pb[None, :] - joint
    table[:, :, 1, 1] = 1.0 - pa[:, None] - pb[None, :] + joint
    if (table < -tol).any() or (table > 1.0 + tol).any():
        raise InvalidCG("Collins-Gisin entries imply probabilities outside [0, 1]")

    try:
        return make_box(pa.size, pb.size, 2, 2, np.clip(table, 0.0, 1.0), tol=tol)
    except BellError as e:
        raise InvalidCG(str(e)) from e


def load_collins_gisin(path: Union[str, Path]) -> NSBox:
    return from_collins_gisin(
        CollinsGisinFile.model_validate_json(Path(path).read_text())
    )


# Catalog


def pr_box() -> NSBox:
    """Popescu-Rohrlich box, A + B = alpha * beta mod 2"""
    return generalized_pr_box(2)


def generalized_pr_box(d: int, n_a: int = 2, n_b: int = 2) -> NSBox:
    """Box with A + B = alpha * beta mod d and uniform marginals"""
    table = np.zeros((n_a, n_b, d, d))
    index = _sum_index(d)
    for j in range(n_a):
        for i in range(n_b):
            table[j, i] = (index == (j * i) % d) / d
    return make_box(n_a, n_b, d, d, table)


def white_noise(n: int, d: int = 2, n_b: Optional[int] = None) -> NSBox:
    n_b = n if n_b is None else n_b
    return make_box(n, n_b, d, d, np.full((n, n_b, d, d), 1.0 / d**2))


def local_deterministic(
    a_map: Sequence[int], b_map: Sequence[int], d: int = 2
) -> NSBox:
    """Box with A = a_map[alpha] and B = b_map[beta]"""
    if any(not 0 <= v < d for v in (*a_map, *b_map)):
        raise DimensionMismatch(f"deterministic outcomes must lie in [0, {d})")
    table = np.zeros((len(a_map), len(b_map), d, d))
    for j, a in enumerate(a_map):
        for i, b in enumerate(b_map):
            table[j, i, a, b] = 1.0
    return make_box(len(a_map), len(b_map), d, d, table)


def max_violation_nn22(n: int) -> NSBox:
    """e_{0,i} = 1 and e_{j,i} = (-1)^[j = n - i] for j > 0"""
    if n < 2:
        raise InvalidArity(f"nn22 boxes need n >= 2, got {n}")
    e = np.ones((n, n))
    for i in range(1, n):
        e[n - i, i] = -1.0
    return box_from_biases(BiasTable.from_binary(e))


def fig2_boxes() -> Tuple[NSBox, NSBox, NSBox]:
    """PR box, local box (A = alpha, B = 0), local box (A = alpha, B = beta)"""
    return (
        pr_box(),
        local_deterministic([0, 1], [0, 0]),
        local_deterministic([0, 1], [0, 1]),
    )


def fig2_mixture(q1: float, q2: float) -> NSBox:
    return mix(fig2_boxes(), [1.0 - q1 - q2, q1, q2])


def _cg(pa, pb, joint) -> CollinsGisinTable:
    return CollinsGisinTable(pa=_frozen(pa), pb=_frozen(pb), joint=_frozen(joint))


def cg3322_p1() -> NSBox:
    return from_collins_gisin(
        _cg([0.5] * 3, [0.5] * 3, np.array([[1, 1, 1], [1, 0, 1], [1, 1, 0]]) / 2)
    )


def cg3322_p2() -> NSBox:
    return from_collins_gisin(
        _cg([0.5] * 3, [0.5] * 3, np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]) / 2)
    )


def cg3322_pN() -> NSBox:
    return from_collins_gisin(_cg([0.5] * 3, [0.5] * 3, np.full((3, 3), 0.25)))


def cg3322_family(c: float) -> NSBox:
    """p_c = c (p1 + p2) / 2 + (1 - c) pN"""
    return mix([cg3322_p1(), cg3322_p2(), cg3322_pN()], [c / 2, c / 2, 1.0 - c])


CATALOG = {
    "pr_box": pr_box,
    "white_noise": white_noise,
    "local_deterministic": local_deterministic,
    "max_violation_nn22": max_violation_nn22,
    "fig2_boxes": fig2_boxes,
    "cg3322_p1": cg3322_p1,
    "cg3322_p2": cg3322_p2,
    "cg3322_pN": cg3322_pN,
}


def catalog() -> dict:
    """Named box constructors"""
    return dict(CATALOG)
