"""Named experiments that reproduce the quantitative claims as pass/fail reports."""

import logging
import math
import time
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.inequality import (binary_rows, d2dd_family, equivalent, evaluate,
                               from_protocol_nn22, nndd_from_protocol,
                               phase_conventions_agree, result1_nn22,
                               correlated_2222, epsilon_envelope,
                               tlm_quantum_boundary, uffink,
                               white_noise_threshold)
from ..core.infotheory import fourier_clock, noiseless
from ..core.nsbox import (BiasTable, biases, box_from_biases, fig2_mixture,
                          generalized_pr_box, max_violation_nn22, mix,
                          pr_box, random_biases, white_noise)
from ..core.oracle import (concavity_check, correlated_lhopital_limit,
                           dary_lhopital_limit, exceeds_capacity_near_zero,
                           validate_inequality)
from ..core.protocol import (canonical_nn22, coefficients_nn22, d2dd_protocol,
                             enumerate_error_distribution, error_distribution,
                             input_vectors, make_protocol, van_dam)
from ..shared.config import TSIRELSON_BIAS, Config
from ..shared.errors import InvalidArity
from ..shared.schemas import Check, ExperimentResult

logger = logging.getLogger(__name__)

WITNESS = (0.55, 0.05)


def _plain(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def check(
    name: str,
    expected: Any,
    actual: Any,
    tolerance: float = 0.0,
    provenance: str = "derived-oracle",
) -> Check:
    expected, actual = _plain(expected), _plain(actual)
    if isinstance(expected, (int, float)) and not isinstance(expected, bool):
        passed = abs(float(actual) - float(expected)) <= tolerance
    elif isinstance(expected, list) and tolerance > 0:
        passed = bool(np.allclose(actual, expected, atol=tolerance, rtol=0.0))
    else:
        passed = expected == actual
    if not passed:
        logger.warning(f"Check '{name}' failed: expected {expected}, got {actual}")
    return Check(
        name=name,
        expected=expected,
        actual=actual,
        tolerance=tolerance,
        provenance=provenance,
        passed=bool(passed),
    )


def finish(
    name: str,
    parameters: Dict[str, Any],
    values: Dict[str, Any],
    checks: List[Check],
    started: float,
) -> ExperimentResult:
    result = ExperimentResult(
        name=name,
        parameters=_plain(parameters),
        values=_plain(values),
        checks=checks,
        runtime_s=time.perf_counter() - started,
    )
    logger.info(
        f"Experiment {name}: {'PASS' if result.passed else 'FAIL'} "
        f"({sum(c.passed for c in checks)}/{len(checks)} checks, {result.runtime_s:.2f}s)"
    )
    return result


def tsirelson_biases() -> BiasTable:
    return BiasTable.from_binary(TSIRELSON_BIAS * np.array([[1.0, 1.0], [1.0, -1.0]]))


def canonical_coefficients(n: int) -> np.ndarray:
    """Closed form of the canonical protocol's signed coefficients, indexed [j][i]"""
    c = np.zeros((n, n), dtype=np.int64)
    c[0, 0] = 2
    c[0, 1:] = -2
    for j in range(1, n):
        c[j, 0] = 2**j
        c[j, n - j] = 2**j
        c[j, 1 : n - j] = -(2**j)
    return c


def repro_uffink() -> ExperimentResult:
    started = time.perf_counter()
    protocol = van_dam()
    derived = from_protocol_nn22(protocol)
    reference = uffink()
    tsirelson = evaluate(reference, tsirelson_biases())
    pr = evaluate(reference, biases(pr_box()))

    checks = [
        check("van Dam coefficients", [[2, 2], [2, -2]], coefficients_nn22(protocol)),
        check("coefficients are twice Uffink's", 2 * binary_rows(reference), binary_rows(derived), 1e-12),
        check("bound is four times Uffink's", 4 * reference.bound, derived.bound, 0.0),
        check("equivalent to Uffink", True, equivalent(derived, reference), provenance="paper"),
        check("Tsirelson point saturates", 4.0, tsirelson.lhs, 1e-12),
        check("Tsirelson point is quantum", True, tlm_quantum_boundary(*TSIRELSON_BIAS * np.array([1, 1, 1, -1]))),
        check("PR box violation", 4.0, pr.violation, 1e-12),
    ]
    values = {
        "coefficients": coefficients_nn22(protocol),
        "tsirelson_lhs": tsirelson.lhs,
        "pr_violation": pr.violation,
    }
    return finish("uffink", {}, values, checks, started)


def repro_result1(n_max: int = 6) -> ExperimentResult:
    if not 2 <= n_max <= 8:
        raise InvalidArity(f"n_max must lie in 2..8, got {n_max}")
    started = time.perf_counter()
    checks, values = [], {}
    for n in range(2, n_max + 1):
        protocol = canonical_nn22(n)
        c = coefficients_nn22(protocol)
        inputs = input_vectors(n, 2)
        all_differ = (inputs[:, 1:] != inputs[:, [0]]).all(axis=1)
        evaluation = evaluate(result1_nn22(n), biases(max_violation_nn22(n)))
        expected_violation = (4**n - 4) // 3

        checks += [
            check(f"n={n} canonical coefficients", canonical_coefficients(n), c, provenance="paper"),
            check(f"n={n} f = 0 exactly when every a_i differs from a_0", True, bool(np.array_equal(protocol.f == 0, all_differ)), provenance="paper"),
            check(f"n={n} protocol inequality matches the family", True, equivalent(from_protocol_nn22(protocol), result1_nn22(n))),
            check(f"n={n} max violation", expected_violation, evaluation.violation, 1e-9, "paper"),
        ]
        values[f"n={n}"] = {"lhs": evaluation.lhs, "violation": evaluation.violation}
    return finish("result1", {"n_max": n_max}, values, checks, started)


def repro_qbound(n_max: int = 6) -> ExperimentResult:
    if not 2 <= n_max <= 8:
        raise InvalidArity(f"n_max must lie in 2..8, got {n_max}")
    started = time.perf_counter()
    checks, values, thresholds = [], {}, []
    for n in range(2, n_max + 1):
        ineq = result1_nn22(n)
        extremal = max_violation_nn22(n)
        q = white_noise_threshold(ineq, biases(extremal))
        squared = 3.0 / (7.0 - 4.0 ** (2 - n))
        thresholds.append(q)

        mixed = mix([extremal, white_noise(n)], [q, 1.0 - q])
        checks += [
            check(f"n={n} q*^2", squared, q * q, 1e-12),
            check(f"n={n} mixture sits on the bound", ineq.bound, evaluate(ineq, biases(mixed)).lhs, 1e-9),
        ]
        values[f"n={n}"] = {
            "q_star": q,
            "q_star_squared": q * q,
            "printed_bound": squared,
            "printed_minus_q_star": squared - q,
        }
    decreasing = all(a > b for a, b in zip(thresholds, thresholds[1:]))
    checks.append(check("q* strictly decreasing in n", True, decreasing, provenance="paper"))
    values["printed_bound_is_squared"] = all(
        abs(values[f"n={n}"]["q_star_squared"] - values[f"n={n}"]["printed_bound"]) <= 1e-12
        for n in range(2, n_max + 1)
    )
    return finish("qbound", {"n_max": n_max}, values, checks, started)


def repro_d2dd(d_max: int = 5, trials: int = 200, seed: Optional[int] = None) -> ExperimentResult:
    if not 2 <= d_max <= 7:
        raise InvalidArity(f"d_max must lie in 2..7, got {d_max}")
    started = time.perf_counter()
    seed = Config.DEFAULT_SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    checks, values = [], {}

    for d in range(2, d_max + 1):
        family = d2dd_family(d)
        protocol = d2dd_protocol(d)
        checks.append(check(f"d={d} family size", d // 2, len(family)))
        if d == 2:
            checks += [
                check("d=2 coefficients are twice Uffink's", 2 * binary_rows(uffink()), binary_rows(family[0]), 1e-12),
                check("d=2 bound is four times Uffink's", 16.0, family[0].bound),
            ]
            checks += _binary_proportionality(trials, rng, values)

        samples = [random_biases(d, 2, d, rng) for _ in range(trials)]
        for t, member in enumerate(family, start=1):
            derived = nndd_from_protocol(protocol, t)
            deviation = max(
                abs(derived.lhs(s) - d**2 * member.lhs(s)) / max(d**2 * member.lhs(s), 1e-300)
                for s in samples
            )
            box = box_from_biases(samples[0])
            limit = dary_lhopital_limit(box, protocol, t)
            checks += [
                check(f"d={d} t={t} protocol family proportional", 0.0, deviation, 1e-9),
                check(f"d={d} t={t} clock-channel limit", derived.lhs(samples[0]) / derived.bound, limit, 1e-6),
            ]
            values[f"d={d} t={t}"] = {
                "max_relative_deviation": deviation,
                "limit": limit,
                "phase_conventions_agree": phase_conventions_agree(protocol, t, seed=seed),
            }

        box = box_from_biases(samples[-1])
        channel = fourier_clock(d, 1, 0.5)
        closed = error_distribution(box, protocol, channel, 1).probabilities
        enumerated = enumerate_error_distribution(box, protocol, channel, 1).probabilities
        perfect = error_distribution(generalized_pr_box(d, n_a=d, n_b=2), protocol, noiseless(d), 1)
        checks += [
            check(f"d={d} error distribution closed form", 0.0, float(np.abs(closed - enumerated).max()), 1e-12),
            check(f"d={d} perfect box decodes", 1.0, perfect.probabilities[0], 1e-12),
        ]
    return finish("d2dd", {"d_max": d_max, "trials": trials, "seed": seed}, values, checks, started)


def _binary_proportionality(
    trials: int, rng: np.random.Generator, values: Dict[str, Any]
) -> List[Check]:
    """At d = 2 the d-ary protocol inequality is four times the signed one, bound 4^(n+1)"""
    protocols = {
        "van_dam": van_dam(),
        "canonical(2)": canonical_nn22(2),
        "canonical(3)": canonical_nn22(3),
        "random(2) with offsets": _random_protocol(2, rng, offsets=True),
        "random(3) with offsets": _random_protocol(3, rng, offsets=True),
        "pair-balanced random(3)": _random_protocol(3, rng, pair_balanced=True, offsets=True),
    }
    checks = []
    for label, protocol in protocols.items():
        dary = nndd_from_protocol(protocol, 1)
        signed = from_protocol_nn22(protocol)
        samples = [random_biases(protocol.n_alpha, protocol.n, 2, rng) for _ in range(trials)]
        deviation = max(
            abs(dary.lhs(s) - 4 * signed.lhs(s)) / max(4 * signed.lhs(s), 1.0) for s in samples
        )
        checks += [
            check(f"d=2 {label} proportional to the signed form", 0.0, deviation, 1e-9),
            check(f"d=2 {label} bound", 4.0 ** (protocol.n + 1), dary.bound),
        ]
        values[f"d=2 {label}"] = {"max_relative_deviation": deviation}
    return checks


def repro_correlated(trials: int = 20, seed: Optional[int] = None) -> ExperimentResult:
    started = time.perf_counter()
    seed = Config.DEFAULT_SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    checks, values = [], {}

    checks.append(check("eps=0 recovers Uffink", binary_rows(uffink()), binary_rows(correlated_2222(0.0)), 0.0, "paper"))

    for epsilon in (-0.8, -0.4, 0.0, 0.4, 0.8):
        ineq = correlated_2222(epsilon)
        worst_error, disagreements = 0.0, 0
        for _ in range(trials):
            sample = random_biases(2, 2, 2, rng)
            normalized = ineq.lhs(sample) / ineq.bound
            limit = correlated_lhopital_limit(box_from_biases(sample), epsilon)
            worst_error = max(worst_error, abs(limit - normalized))
            generated, oracle = normalized - 1.0, limit - 1.0
            if (generated > 0) != (oracle > 0) and min(abs(generated), abs(oracle)) > Config.MARGIN_BAND:
                disagreements += 1
        checks += [
            check(f"eps={epsilon} limit matches the inequality", 0.0, worst_error, 1e-6),
            check(f"eps={epsilon} sign disagreements", 0, disagreements),
        ]
        values[f"eps={epsilon}"] = {"max_limit_error": worst_error}

    witness = biases(fig2_mixture(*WITNESS))
    uffink_lhs = uffink().lhs(witness)
    envelope, argmax = epsilon_envelope(witness)
    checks += [
        check("witness Uffink LHS", 3.88, uffink_lhs, 1e-12),
        check("witness envelope maximum", 4.392, envelope, 1e-3),
        check("witness maximizing eps", 8.0 / 15.0, argmax, 1e-3),
        check("witness passes Uffink but fails some eps", True, uffink_lhs <= 4.0 and envelope > 4.0),
    ]

    extremes = [random_biases(2, 2, 2, rng) for _ in range(trials)]
    never = all(
        correlated_2222(sign).lhs(sample) <= 4.0 + Config.VIOLATION_TOLERANCE
        for sample in extremes
        for sign in (-1.0, 1.0)
    )
    checks.append(check("eps=+-1 never violated", True, never))
    values["witness"] = {"uffink_lhs": uffink_lhs, "envelope_lhs": envelope, "envelope_eps": argmax}
    return finish("correlated", {"trials": trials, "seed": seed}, values, checks, started)


def _random_protocol(
    n: int, rng: np.random.Generator, pair_balanced: bool = False, offsets: bool = False
):
    """Random binary protocol; pair_balanced gives rank k and its complement the same
    setting and opposite h, so h is balanced on every preimage of f"""
    size = 2**n
    f = rng.integers(0, n, size=size)
    h = rng.integers(0, 2, size=size)
    if pair_balanced:
        half = np.arange(size // 2)
        f[size - 1 - half] = f[half]
        h[size - 1 - half] = 1 - h[half]
    r = rng.integers(0, 2, size=n) if offsets else None
    return make_protocol(n, 2, f=f, h=h, r=r)


def repro_oracle(
    trials: Optional[int] = None, seed: Optional[int] = None, jobs: Optional[int] = None
) -> ExperimentResult:
    started = time.perf_counter()
    trials = Config.DEFAULT_TRIALS if trials is None else trials
    seed = Config.DEFAULT_SEED if seed is None else seed
    rng = np.random.default_rng(seed)

    cases = [("uffink/van_dam", uffink(), van_dam()), ("result1(3)/canonical(3)", result1_nn22(3), canonical_nn22(3))]
    for k in range(10):
        protocol = _random_protocol(2 + k % 2, rng, pair_balanced=k < 6)
        cases.append((f"random protocol {k}", from_protocol_nn22(protocol), protocol))

    checks, values = [], {}
    for index, (label, ineq, protocol) in enumerate(cases):
        count = trials if index < 2 else max(trials // 10, 1)
        report = validate_inequality(ineq, protocol, count, seed + index, jobs)
        checks.append(check(f"{label} limit error", 0.0, report.max_limit_error, 1e-6))
        if report.asserted:
            checks.append(check(f"{label} sign disagreements", 0, report.disagreements))
        values[label] = report.model_dump()
    return finish("oracle", {"trials": trials, "seed": seed}, values, checks, started)


def repro_concavity(samples: int = 10_000, seed: Optional[int] = None) -> ExperimentResult:
    started = time.perf_counter()
    seed = Config.DEFAULT_SEED if seed is None else seed
    rng = np.random.default_rng(seed)

    worst_second = worst_value = worst_difference = -math.inf
    for _ in range(samples):
        size = int(rng.integers(1, 5))
        direction = rng.normal(size=size)
        e = direction / np.linalg.norm(direction) * math.sqrt(rng.uniform())
        report = concavity_check(e, [rng.uniform(-0.95, 0.95)])
        worst_second = max(worst_second, max(report.f_second))
        worst_value = max(worst_value, max(report.f_values))
        worst_difference = max(worst_difference, report.max_finite_difference_error)

    outside, exceeding = 0, 0
    while outside < max(samples // 10, 1):
        e = rng.uniform(-1.0, 1.0, size=int(rng.integers(2, 5)))
        if np.sum(e**2) <= 1.01:
            continue
        outside += 1
        exceeding += exceeds_capacity_near_zero(e)

    checks = [
        check("F'' <= 0 inside the unit ball", True, worst_second <= 1e-12, provenance="paper"),
        check("F <= 0 inside the unit ball", True, worst_value <= 1e-12, provenance="paper"),
        check("finite differences match F''", 0.0, worst_difference, 1e-5),
        check("F > 0 near zero outside the unit ball", outside, exceeding),
        check("saturating vector is flat", 0.0, concavity_check([1.0, 0.0], [0.3]).f_second[0], 1e-12),
        check("(0.6, 0.6) is concave at 0.5", True, concavity_check([0.6, 0.6], [0.5]).f_second[0] < 0),
        check("(0.9, 0.9) exceeds capacity", True, concavity_check([0.9, 0.9], [0.01]).f_values[0] > 0),
    ]
    values = {
        "max_f_second": worst_second,
        "max_f": worst_value,
        "max_finite_difference_error": worst_difference,
    }
    return finish("concavity", {"samples": samples, "seed": seed}, values, checks, started)
