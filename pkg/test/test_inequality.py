import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.inequality import (QuadraticInequality, binary_inequality,
                                 binary_rows, calibrated_i3322, canonical_form,
                                 correlated_2222, d2dd_family,
                                 epsilon_envelope, equivalent, evaluate,
                                 from_file, from_protocol_nn22,
                                 i3322_standard, load_inequality, local_bound,
                                 named_inequality, nndd_from_protocol,
                                 nndd_variants, phase_conventions_agree,
                                 result1_nn22, save_inequality,
                                 tlm_quantum_boundary, uffink,
                                 white_noise_threshold)
from src.core.nsbox import (BiasTable, biases, cg3322_family, cg3322_p1,
                            cg3322_p2, cg3322_pN, generalized_pr_box,
                            max_violation_nn22, pr_box, random_biases,
                            white_noise)
from src.core.protocol import canonical_nn22, d2dd_protocol, van_dam
from src.shared.errors import (BellError, DomainError, InvalidArity,
                               InvalidEpsilon, InvalidPhaseIndex,
                               ShapeMismatch)

TSIRELSON = BiasTable.from_binary(np.array([[1, 1], [1, -1]]) / math.sqrt(2))


class TestUffink:
    """Test cases for the Uffink inequality"""

    def test_pr_box_violation(self):
        """Test the PR box reaches 8 against a bound of 4"""
        evaluation = evaluate(uffink(), biases(pr_box()))

        assert evaluation.lhs == pytest.approx(8.0)
        assert evaluation.violation == pytest.approx(4.0)
        assert evaluation.violated

    def test_tsirelson_saturates(self):
        """Test the Tsirelson correlations sit exactly on the bound"""
        evaluation = evaluate(uffink(), TSIRELSON)

        assert evaluation.lhs == pytest.approx(4.0)
        assert not evaluation.violated

    def test_to_response(self):
        """Test the evaluation converts to the response schema"""
        response = evaluate(uffink(), biases(white_noise(2))).to_response()

        assert response.lhs == 0.0
        assert response.bound == 4.0
        assert response.violated is False

    def test_shape_mismatch(self):
        """Test biases of the wrong shape are rejected"""
        with pytest.raises(ShapeMismatch):
            uffink().lhs(biases(white_noise(3)))

    def test_van_dam_protocol_is_uffink(self):
        """Test the van Dam protocol yields twice Uffink's coefficients and four times its bound"""
        derived = from_protocol_nn22(van_dam())

        np.testing.assert_allclose(binary_rows(derived), 2 * binary_rows(uffink()))
        assert derived.bound == 16
        assert equivalent(derived, uffink())


class TestNn22Family:
    """Test cases for the nn22 family"""

    def test_n2_is_uffink(self):
        """Test the n = 2 member is the Uffink inequality"""
        np.testing.assert_allclose(binary_rows(result1_nn22(2)), [[1, 1], [1, -1]])
        assert result1_nn22(2).bound == 4

    def test_n3_rows(self):
        """Test the n = 3 weights"""
        np.testing.assert_allclose(
            binary_rows(result1_nn22(3)), [[1, 1, 2], [1, 1, -2], [1, -1, 0]]
        )

    @pytest.mark.parametrize("n,violation", [(2, 4), (3, 20), (4, 84), (5, 340)])
    def test_maximal_violation(self, n, violation):
        """Test the extremal box violates by (4^n - 4) / 3"""
        evaluation = evaluate(result1_nn22(n), biases(max_violation_nn22(n)))

        assert evaluation.violation == pytest.approx(violation)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_matches_canonical_protocol(self, n):
        """Test the family equals the canonical protocol's inequality"""
        assert equivalent(from_protocol_nn22(canonical_nn22(n)), result1_nn22(n))

    def test_arity(self):
        """Test n < 2 is rejected"""
        with pytest.raises(InvalidArity):
            result1_nn22(1)

    def test_white_noise_threshold(self):
        """Test q* = 2/3 for n = 3"""
        q = white_noise_threshold(result1_nn22(3), biases(max_violation_nn22(3)))

        assert q == pytest.approx(2 / 3)

    def test_threshold_of_zero_biases(self):
        """Test white noise never violates"""
        assert white_noise_threshold(uffink(), biases(white_noise(2))) == math.inf


class TestD2dd:
    """Test cases for the two-input d-outcome family"""

    @pytest.mark.parametrize("d,size", [(2, 1), (3, 1), (4, 2), (5, 2), (6, 3)])
    def test_family_size(self, d, size):
        """Test one member per l in 1..d//2"""
        assert len(d2dd_family(d)) == size

    def test_d2_is_uffink(self):
        """Test d = 2 gives twice Uffink's weights and bound 16"""
        member = d2dd_family(2)[0]

        np.testing.assert_allclose(binary_rows(member), 2 * binary_rows(uffink()))
        assert member.bound == 16

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_generalized_pr_box(self, d):
        """Test the generalized PR box reaches twice the bound"""
        box = generalized_pr_box(d, n_a=d, n_b=2)

        for member in d2dd_family(d):
            assert member.lhs(biases(box)) == pytest.approx(2 * d**4)

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_protocol_family_is_proportional(self, d, rng):
        """Test the d2dd protocol inequality is d^2 times the family member"""
        protocol = d2dd_protocol(d)
        for t, member in enumerate(d2dd_family(d), start=1):
            derived = nndd_from_protocol(protocol, t)
            for _ in range(20):
                sample = random_biases(d, 2, d, rng)
                assert derived.lhs(sample) == pytest.approx(d**2 * member.lhs(sample), rel=1e-9, abs=1e-12)
            assert derived.bound == d**2 * member.bound

    def test_phase_index_range(self):
        """Test t must lie in 1..d//2"""
        with pytest.raises(InvalidPhaseIndex):
            nndd_from_protocol(d2dd_protocol(5), 3)

    def test_binary_protocol_normalization(self, rng):
        """Test the d-ary form of a binary protocol agrees with the signed form after normalization"""
        protocol = canonical_nn22(3)
        dary = nndd_from_protocol(protocol, 1)
        signed = from_protocol_nn22(protocol)
        sample = random_biases(3, 3, 2, rng)

        assert dary.lhs(sample) / dary.bound == pytest.approx(signed.lhs(sample) / signed.bound)

    def test_phase_conventions_agree_for_bits(self):
        """Test both conventions coincide when d = 2"""
        assert phase_conventions_agree(van_dam(), 1, trials=10, seed=3)

    def test_variants(self):
        """Test both phase conventions are built"""
        variants = nndd_variants(d2dd_protocol(3), 1)

        assert set(variants) == {"difference", "sum"}
        assert variants["sum"].params["variant"] == "sum"

    def test_unknown_variant(self):
        """Test only the difference and sum phase conventions are accepted"""
        with pytest.raises(BellError):
            nndd_from_protocol(d2dd_protocol(3), 1, variant="product")


class TestCorrelated:
    """Test cases for the correlated-input family and its envelope"""

    def test_eps_zero_is_uffink(self):
        """Test eps = 0 recovers the Uffink weights"""
        np.testing.assert_allclose(binary_rows(correlated_2222(0.0)), binary_rows(uffink()))

    def test_eps_range(self):
        """Test |eps| > 1 is rejected"""
        with pytest.raises(InvalidEpsilon):
            correlated_2222(1.5)

    def test_eps_one_never_violated(self, rng):
        """Test at eps = +-1 only one correlator pair survives"""
        for _ in range(50):
            sample = random_biases(2, 2, 2, rng)
            assert correlated_2222(1.0).lhs(sample) <= 4.0 + 1e-12
            assert correlated_2222(-1.0).lhs(sample) <= 4.0 + 1e-12

    def test_envelope_witness(self, witness_biases):
        """Test the witness passes Uffink but some eps exposes it"""
        envelope, argmax = epsilon_envelope(witness_biases)

        assert uffink().lhs(BiasTable.from_binary(witness_biases)) == pytest.approx(3.88)
        assert envelope == pytest.approx(4.392)
        assert argmax == pytest.approx(8 / 15)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False), min_size=4, max_size=4),
        st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
    )
    def test_envelope_dominates_every_member(self, values, epsilon):
        """Test the envelope is at least the LHS of any single eps"""
        table = BiasTable.from_binary(np.array(values).reshape(2, 2))
        envelope, _ = epsilon_envelope(table)

        assert correlated_2222(epsilon).lhs(table) <= envelope + 1e-9

    def test_envelope_matches_dense_grid(self, rng):
        """Test the closed-form envelope against a 10^4-point eps grid"""
        grid = np.linspace(-1.0, 1.0, 10_001)
        for _ in range(100):
            e = rng.uniform(-1.0, 1.0, size=(2, 2))
            curve = ((1 + grid) * e[0, 0] + (1 - grid) * e[1, 0]) ** 2 + (1 - grid**2) * (e[0, 1] - e[1, 1]) ** 2

            envelope, _ = epsilon_envelope(BiasTable.from_binary(e))

            assert curve.max() <= envelope + 1e-9
            assert envelope - curve.max() <= 1e-6

    def test_envelope_shape(self):
        """Test the envelope needs 2x2 correlators"""
        with pytest.raises(ShapeMismatch):
            epsilon_envelope(np.zeros((3, 2)))


class TestQuantumBoundary:
    """Test cases for the arcsine criterion"""

    def test_tsirelson_is_quantum(self):
        """Test the Tsirelson point lies on the quantum boundary"""
        s = 1 / math.sqrt(2)

        assert tlm_quantum_boundary(s, s, s, -s)

    def test_pr_box_is_not_quantum(self):
        """Test the PR correlations are not quantum"""
        assert not tlm_quantum_boundary(1, 1, 1, -1)

    def test_local_is_quantum(self):
        """Test a deterministic local box is quantum"""
        assert tlm_quantum_boundary(1, 1, -1, -1)

    def test_domain(self):
        """Test correlators outside [-1, 1] are rejected"""
        with pytest.raises(DomainError):
            tlm_quantum_boundary(1.1, 0, 0, 0)


class TestCanonicalForm:
    """Test cases for inequality equivalence"""

    def test_scaling_is_equivalent(self):
        """Test scaling weights and bound together keeps the inequality"""
        assert equivalent(from_protocol_nn22(van_dam()), uffink())

    def test_sign_flip_per_row(self):
        """Test negating one row is a gauge change"""
        rows = binary_rows(result1_nn22(3)).copy()
        rows[1] *= -1
        flipped = binary_inequality("flipped", rows, 16)

        assert equivalent(result1_nn22(3), flipped)
        np.testing.assert_allclose(canonical_form(result1_nn22(3)), canonical_form(flipped), atol=1e-12)

    def test_row_phase_is_a_gauge(self, rng):
        """Test multiplying each row by its own complex phase leaves the LHS unchanged"""
        member = d2dd_family(5)[1]
        phases = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=member.n_b))
        rotated = QuadraticInequality(
            family=member.family,
            bound=member.bound,
            n_a=member.n_a,
            d=member.d,
            coeffs=member.coeffs * phases[:, None, None],
        )

        for _ in range(20):
            sample = random_biases(5, 2, 5, rng)
            assert rotated.lhs(sample) == pytest.approx(member.lhs(sample), rel=1e-12)

    def test_different_inequalities(self):
        """Test Uffink and the eps = 0.5 member differ"""
        assert not equivalent(uffink(), correlated_2222(0.5))

    def test_shape_difference(self):
        """Test inequalities of different shapes are never equivalent"""
        assert not equivalent(uffink(), result1_nn22(3))


class TestNamedInequality:
    """Test cases for building families by name"""

    def test_families(self):
        """Test each family name builds its member"""
        assert named_inequality("uffink").family == "uffink"
        assert named_inequality("result1", n=4).bound == 4**3
        assert named_inequality("d2dd", d=5, t=2).params == {"d": 5, "l": 2}
        assert named_inequality("correlated", eps=0.3).params == {"eps": 0.3}

    def test_unknown_family(self):
        """Test an unknown name raises a domain error"""
        with pytest.raises(BellError):
            named_inequality("chsh3")

    def test_d2dd_phase_index(self):
        """Test an out-of-range t is rejected"""
        with pytest.raises(InvalidPhaseIndex):
            named_inequality("d2dd", d=3, t=2)

    def test_file_round_trip(self, tmp_path):
        """Test a complex-valued inequality survives save and load"""
        path = tmp_path / "ineq.json"
        original = d2dd_family(5)[1]
        save_inequality(original, path)

        loaded = load_inequality(path)

        np.testing.assert_allclose(loaded.coeffs, original.coeffs)
        assert loaded.bound == original.bound

    def test_from_file_row_length(self):
        """Test coefficient rows of the wrong length are rejected"""
        data = uffink().to_file()
        data.coeffs = [row[:-1] for row in data.coeffs]

        with pytest.raises(ShapeMismatch):
            from_file(data)


class TestI3322:
    """Test cases for the I3322 functional"""

    def test_standard_local_bound(self):
        """Test the standard I3322 has local bound 0"""
        assert local_bound(i3322_standard()) == pytest.approx(0.0)

    def test_white_noise_scores_minus_one(self):
        """Test the isotropic box scores -1 under any relabeling"""
        assert i3322_standard().value(cg3322_pN()) == pytest.approx(-1.0)

    def test_calibration(self):
        """Test I(p1) = I(p2) = 1 and I(pN) = -1 after calibration"""
        functional = calibrated_i3322()

        assert functional.value(cg3322_p1()) == pytest.approx(1.0)
        assert functional.value(cg3322_p2()) == pytest.approx(1.0)
        assert functional.value(cg3322_pN()) == pytest.approx(-1.0)
        assert local_bound(functional) == pytest.approx(0.0)

    def test_family_is_linear(self):
        """Test p_c scores 2c - 1"""
        functional = calibrated_i3322()

        for c in (0.0, 0.25, 2 / 3, 1.0):
            assert functional.value(cg3322_family(c)) == pytest.approx(2 * c - 1)

    def test_wrong_shape(self):
        """Test a 2222 box is rejected"""
        with pytest.raises(ShapeMismatch):
            i3322_standard().value(pr_box())
