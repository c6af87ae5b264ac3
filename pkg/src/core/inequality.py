"""Quadratic Bell inequalities on correlators, plus the linear I3322 functional.

A quadratic inequality stores, for every Bob setting i, a complex weight
``w[i][m][j]`` on the bias e^m_{j,i}. Its left-hand side is
sum_i |sum_{m,j} w[i][m][j] e^m_{j,i}|^2 and it holds when that is at most
``bound``.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..shared.config import Config
from ..shared.errors import (AlphabetMismatch, BellError, DomainError,
                             InvalidArity, InvalidEpsilon, InvalidPhaseIndex,
                             ShapeMismatch)
from ..shared.schemas import EvaluationResponse, InequalityFile
from .nsbox import (BiasTable, NSBox, cg3322_p1, cg3322_p2, cg3322_pN,
                    local_deterministic, random_biases, relabel,
                    to_collins_gisin)
from .protocol import Protocol, coefficients_nn22, coefficients_nndd

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QuadraticInequality:
    family: str
    bound: float
    n_a: int
    d: int
    coeffs: np.ndarray  # complex, [i][m][j]
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_b(self) -> int:
        return self.coeffs.shape[0]

    def brackets(self, bias_table: BiasTable) -> np.ndarray:
        """Per-i bracket sum_{m,j} w[i][m][j] e^m_{j,i}"""
        expected = (self.d, self.n_a, self.n_b)
        if bias_table.values.shape != expected:
            raise ShapeMismatch(
                f"biases {bias_table.values.shape} do not match inequality {expected}"
            )
        return np.einsum("imj,mji->i", self.coeffs, bias_table.values)

    def lhs(self, bias_table: BiasTable) -> float:
        return float(np.sum(np.abs(self.brackets(bias_table)) ** 2))

    def to_file(self) -> InequalityFile:
        flat = self.coeffs.reshape(self.n_b, -1)
        return InequalityFile(
            family=self.family,
            params=self.params,
            bound=self.bound,
            n_a=self.n_a,
            d=self.d,
            coeffs=[[[w.real, w.imag] for w in row] for row in flat],
        )


@dataclass(frozen=True)
class Evaluation:
    lhs: float
    bound: float
    violation: float
    violated: bool

    def to_response(self) -> EvaluationResponse:
        return EvaluationResponse(
            lhs=self.lhs, bound=self.bound, violation=self.violation, violated=self.violated
        )


def _frozen(values, dtype=complex) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def binary_inequality(family: str, rows, bound: float, **params) -> QuadraticInequality:
    """Inequality sum_i (sum_j rows[i][j] e_{j,i})^2 <= bound on binary correlators"""
    rows = np.asarray(rows, dtype=float)
    coeffs = np.zeros((rows.shape[0], 2, rows.shape[1]), dtype=complex)
    coeffs[:, 0, :] = rows
    return QuadraticInequality(
        family=family,
        bound=float(bound),
        n_a=rows.shape[1],
        d=2,
        coeffs=_frozen(coeffs),
        params=params,
    )


def binary_rows(ineq: QuadraticInequality) -> np.ndarray:
    """Real per-i weights on e_{j,i} for a d = 2 inequality, indexed [i][j]"""
    if ineq.d != 2:
        raise AlphabetMismatch(f"binary weights need d = 2, got d = {ineq.d}")
    rows = ineq.coeffs[:, 0, :] - ineq.coeffs[:, 1, :]
    return rows.real


def from_file(data: InequalityFile) -> QuadraticInequality:
    coeffs = np.array(
        [[complex(re, im) for re, im in row] for row in data.coeffs], dtype=complex
    )
    if coeffs.ndim != 2 or coeffs.shape[1] != data.d * data.n_a:
        raise ShapeMismatch(f"each coefficient row needs {data.d * data.n_a} entries")
    return QuadraticInequality(
        family=data.family,
        bound=data.bound,
        n_a=data.n_a,
        d=data.d,
        coeffs=_frozen(coeffs.reshape(-1, data.d, data.n_a)),
        params=dict(data.params),
    )


def load_inequality(path: Union[str, Path]) -> QuadraticInequality:
    return from_file(InequalityFile.model_validate_json(Path(path).read_text()))


def save_inequality(ineq: QuadraticInequality, path: Union[str, Path]) -> None:
    Path(path).write_text(ineq.to_file().model_dump_json(indent=2))


# Families


def uffink() -> QuadraticInequality:
    return binary_inequality("uffink", [[1, 1], [1, -1]], 4)


def result1_nn22(n: int) -> QuadraticInequality:
    """sum_i (e_{0,i} + sum_{j=1}^{n-i} (-1)^[j = n-i] 2^(j-1) e_{j,i})^2 <= 4^(n-1)"""
    if n < 2:
        raise InvalidArity(f"nn22 family needs n >= 2, got {n}")
    rows = np.zeros((n, n))
    rows[:, 0] = 1.0
    for i in range(n):
        # e_{n,0} does not exist
        for j in range(1, min(n - i, n - 1) + 1):
            rows[i, j] = (-1.0 if j == n - i else 1.0) * 2 ** (j - 1)
    return binary_inequality("result1", rows, 4 ** (n - 1), n=n)


def from_protocol_nn22(protocol: Protocol) -> QuadraticInequality:
    c = coefficients_nn22(protocol)
    return binary_inequality(
        "nn22_protocol",
        c.T,
        4**protocol.n,
        n=protocol.n,
        f=protocol.f.tolist(),
        h=protocol.h.tolist(),
    )


def _omega(d: int) -> complex:
    return complex(np.exp(2j * np.pi / d))


def d2dd_family(d: int) -> List[QuadraticInequality]:
    """One inequality per l in 1..d//2 with w[i][m][j] = omega^((m - i j) l), bound d^4"""
    if d < 2:
        raise InvalidArity(f"d2dd family needs d >= 2, got {d}")
    i, m, j = np.ogrid[:2, :d, :d]
    family = []
    for l in range(1, d // 2 + 1):
        coeffs = _omega(d) ** (((m - i * j) * l) % d)
        family.append(
            QuadraticInequality(
                family="d2dd",
                bound=float(d**4),
                n_a=d,
                d=d,
                coeffs=_frozen(coeffs),
                params={"d": d, "l": l},
            )
        )
    return family


def _check_phase_index(d: int, t: int) -> None:
    if not 1 <= t <= d // 2:
        raise InvalidPhaseIndex(f"t must lie in 1..{d // 2}, got {t}")


def nndd_from_protocol(
    protocol: Protocol, t: int, variant: str = "difference"
) -> QuadraticInequality:
    """w[i][m][j] = sum_l c^l_{j,i} omega^(phase t), bound d^(2(n+1)).

    The "difference" phase is (m - l) and the "sum" phase is (l + m).
    """
    d = protocol.d
    _check_phase_index(d, t)
    if variant not in ("difference", "sum"):
        raise BellError(f"unknown phase variant '{variant}'")
    c = coefficients_nndd(protocol)  # [l][j][i]
    l, m = np.ogrid[:d, :d]
    exponents = (m - l) if variant == "difference" else (l + m)
    phases = _omega(d) ** ((exponents * t) % d)  # [l][m]
    coeffs = np.einsum("lji,lm->imj", c, phases)
    return QuadraticInequality(
        family="nndd_protocol",
        bound=float(d ** (2 * (protocol.n + 1))),
        n_a=protocol.n_alpha,
        d=d,
        coeffs=_frozen(coeffs),
        params={"n": protocol.n, "d": d, "t": t, "variant": variant},
    )


def nndd_variants(protocol: Protocol, t: int) -> Dict[str, QuadraticInequality]:
    return {
        variant: nndd_from_protocol(protocol, t, variant)
        for variant in ("difference", "sum")
    }


def phase_conventions_agree(
    protocol: Protocol, t: int, trials: int = 50, seed: Optional[int] = None
) -> bool:
    """Compare both phase conventions on random biases; a mismatch is logged"""
    variants = nndd_variants(protocol, t)
    rng = np.random.default_rng(Config.DEFAULT_SEED if seed is None else seed)
    worst = 0.0
    for _ in range(trials):
        sample = random_biases(protocol.n_alpha, protocol.n, protocol.d, rng)
        a, b = (variants[name].lhs(sample) for name in ("difference", "sum"))
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1.0))
    if worst > 1e-9:
        logger.warning(
            f"Phase conventions differ for d={protocol.d}, t={t}: "
            f"max relative deviation {worst:.3g}"
        )
        return False
    return True


def correlated_2222(epsilon: float) -> QuadraticInequality:
    """((1+eps) e00 + (1-eps) e10)^2 + (1-eps^2)(e01 - e11)^2 <= 4"""
    if not -1.0 <= epsilon <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [-1, 1], got {epsilon}")
    scale = math.sqrt(1.0 - epsilon**2)
    rows = [[1.0 + epsilon, 1.0 - epsilon], [scale, -scale]]
    return binary_inequality("correlated", rows, 4, eps=epsilon)


def named_inequality(
    family: str, n: int = 2, d: int = 2, t: int = 1, eps: float = 0.0
) -> QuadraticInequality:
    """Build a family member by name, as used by the CLI and the HTTP service"""
    if family == "uffink":
        return uffink()
    if family == "result1":
        return result1_nn22(n)
    if family == "d2dd":
        members = d2dd_family(d)
        _check_phase_index(d, t)
        return members[t - 1]
    if family == "correlated":
        return correlated_2222(eps)
    raise BellError(f"unknown inequality family '{family}'")


# Evaluation


def evaluate(
    ineq: QuadraticInequality, bias_table: BiasTable, tol: Optional[float] = None
) -> Evaluation:
    tol = Config.VIOLATION_TOLERANCE if tol is None else tol
    lhs = ineq.lhs(bias_table)
    violation = lhs - ineq.bound
    return Evaluation(lhs=lhs, bound=ineq.bound, violation=violation, violated=violation > tol)


def white_noise_threshold(ineq: QuadraticInequality, bias_table: BiasTable) -> float:
    """Largest q with LHS(q e) <= bound; inf when the biases give LHS 0"""
    lhs = ineq.lhs(bias_table)
    if lhs == 0.0:
        return math.inf
    return math.sqrt(ineq.bound / lhs)


def _binary_correlators(bias_table) -> np.ndarray:
    e = bias_table.binary if isinstance(bias_table, BiasTable) else np.asarray(bias_table, float)
    if e.shape != (2, 2):
        raise ShapeMismatch(f"2222 correlators must be 2x2, got {e.shape}")
    return e


def epsilon_envelope(bias_table) -> Tuple[float, float]:
    """Max over eps in [-1, 1] of the correlated-input LHS, and the maximizing eps.

    LHS(eps) = A + 2 B eps + C eps^2 with s = e01 - e11.
    """
    e = _binary_correlators(bias_table)
    e00, e10, s = e[0, 0], e[1, 0], e[0, 1] - e[1, 1]
    a = (e00 + e10) ** 2 + s**2
    b = e00**2 - e10**2
    c = (e00 - e10) ** 2 - s**2

    candidates = [-1.0, 1.0]
    if c < 0 and abs(b / c) <= 1.0:
        candidates.append(-b / c)
    values = [a + 2 * b * x + c * x * x for x in candidates]
    best = int(np.argmax(values))
    return float(values[best]), float(candidates[best])


def tlm_quantum_boundary(
    e00: float, e01: float, e10: float, e11: float, tol: Optional[float] = None
) -> bool:
    """Arcsine criterion for quantum-realizable 2222 full correlations"""
    tol = Config.VIOLATION_TOLERANCE if tol is None else tol
    values = np.array([e00, e01, e10, e11], dtype=float)
    if (np.abs(values) > 1.0).any():
        raise DomainError(f"correlators must lie in [-1, 1], got {values.tolist()}")
    angles = np.arcsin(values)
    total = angles.sum()
    return bool((np.abs(total - 2.0 * angles) <= np.pi + tol).all())


# Canonical form


def canonical_form(ineq: QuadraticInequality, tol: float = 1e-12) -> np.ndarray:
    """Gauge-fixed, bound-normalized coefficients.

    The per-i mean over m is removed, each row is rotated so its first
    nonzero entry is real positive, and everything is scaled by 1/sqrt(bound).
    Row order is kept.
    """
    coeffs = ineq.coeffs - ineq.coeffs.mean(axis=1, keepdims=True)
    rows = coeffs.reshape(ineq.n_b, -1).copy()
    for row in rows:
        nonzero = np.flatnonzero(np.abs(row) > tol)
        if nonzero.size:
            pivot = row[nonzero[0]]
            row *= np.conj(pivot) / abs(pivot)
    rows[np.abs(rows) <= tol] = 0.0
    return rows / math.sqrt(ineq.bound)


def equivalent(a: QuadraticInequality, b: QuadraticInequality, tol: float = 1e-9) -> bool:
    if (a.n_b, a.n_a, a.d) != (b.n_b, b.n_a, b.d):
        return False
    return bool(np.allclose(canonical_form(a), canonical_form(b), atol=tol, rtol=0.0))


# Linear functionals in Collins-Gisin notation


@dataclass(frozen=True, eq=False)
class LinearBellFunctional:
    """constant + a.pa + b.pb + sum_{i,j} joint[i][j] Pr(A_j = 0, B_i = 0)

    ``relabeling`` holds keyword arguments for ``nsbox.relabel`` applied to a
    box before it is evaluated.
    """

    name: str
    a: np.ndarray
    b: np.ndarray
    joint: np.ndarray
    constant: float = 0.0
    relabeling: Optional[Dict[str, Any]] = None

    @property
    def n_a(self) -> int:
        return self.a.size

    @property
    def n_b(self) -> int:
        return self.b.size

    def value(self, box: NSBox) -> float:
        if self.relabeling:
            box = relabel(box, **self.relabeling)
        cg = to_collins_gisin(box)
        if cg.pa.size != self.n_a or cg.pb.size != self.n_b:
            raise ShapeMismatch(f"{self.name} needs a {self.n_a}{self.n_b}22 box")
        return float(
            self.constant
            + self.a @ cg.pa
            + self.b @ cg.pb
            + np.sum(self.joint * cg.joint)
        )


def i3322_standard() -> LinearBellFunctional:
    return LinearBellFunctional(
        name="I3322",
        a=_frozen([-1, 0, 0], float),
        b=_frozen([-2, -1, 0], float),
        joint=_frozen([[1, 1, 1], [1, 1, -1], [1, -1, 0]], float),
    )


def local_bound(functional: LinearBellFunctional) -> float:
    """Maximum over deterministic local boxes"""
    best = -math.inf
    for a_map in itertools.product(range(2), repeat=functional.n_a):
        for b_map in itertools.product(range(2), repeat=functional.n_b):
            best = max(best, functional.value(local_deterministic(a_map, b_map)))
    return best


def _relabelings(n_a: int, n_b: int):
    for swap in (False, True):
        for alice_perm in itertools.permutations(range(n_a)):
            for bob_perm in itertools.permutations(range(n_b)):
                for alice_shifts in itertools.product(range(2), repeat=n_a):
                    for bob_shifts in itertools.product(range(2), repeat=n_b):
                        yield {
                            "alice_perm": list(alice_perm),
                            "bob_perm": list(bob_perm),
                            "alice_shifts": list(alice_shifts),
                            "bob_shifts": list(bob_shifts),
                            "swap_parties": swap,
                        }


def calibrate_i3322(
    p1: NSBox, p2: NSBox, pN: NSBox, tol: float = 1e-12
) -> LinearBellFunctional:
    """First relabeling of I3322 with I(p1) = I(p2) = 1, I(pN) = -1 and local bound 0.

    By linearity the mixture c (p1 + p2) / 2 + (1 - c) pN then scores 2c - 1.
    """
    base = i3322_standard()
    for candidate in _relabelings(base.n_a, base.n_b):
        values = [base.value(relabel(box, **candidate)) for box in (p1, p2, pN)]
        if not np.allclose(values, [1.0, 1.0, -1.0], atol=tol, rtol=0.0):
            continue
        functional = LinearBellFunctional(
            name="I3322",
            a=base.a,
            b=base.b,
            joint=base.joint,
            relabeling=candidate,
        )
        if abs(local_bound(functional)) <= tol:
            logger.debug(f"Calibrated I3322 with relabeling {candidate}")
            return functional
    raise BellError("no relabeling of I3322 matches the calibration boxes")


@lru_cache(maxsize=1)
def calibrated_i3322() -> LinearBellFunctional:
    return calibrate_i3322(cg3322_p1(), cg3322_p2(), cg3322_pN())
