import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.nsbox import (BiasTable, biases, box_from_biases, cg3322_family,
                            cg3322_p1, cg3322_p2, cg3322_pN, catalog,
                            fig2_mixture, from_collins_gisin,
                            generalized_pr_box, load_box, load_collins_gisin,
                            local_deterministic, make_box, marginals,
                            max_violation_nn22, mix, nonsignaling_residual,
                            pr_box, random_biases, relabel, save_box,
                            to_collins_gisin, white_noise)
from src.shared.errors import (DimensionMismatch, InvalidArity, InvalidBias,
                               InvalidCG, InvalidWeights, NegativeProbability,
                               NormalizationError, ShapeMismatch,
                               SignalingError)
from src.shared.schemas import CollinsGisinFile


class TestMakeBox:
    """Test cases for box construction and validation"""

    def test_pr_box_is_valid(self):
        """Test the PR box passes validation with zero residual"""
        box = pr_box()

        assert box.shape == (2, 2, 2, 2)
        assert nonsignaling_residual(box) == 0.0

    def test_table_is_read_only(self):
        """Test the stored table cannot be mutated"""
        box = pr_box()

        with pytest.raises(ValueError):
            box.table[0, 0, 0, 0] = 1.0

    def test_shape_mismatch(self):
        """Test a table of the wrong shape is rejected"""
        with pytest.raises(ShapeMismatch):
            make_box(2, 2, 2, 2, np.full((2, 2, 2), 0.5))

    def test_negative_probability(self):
        """Test a negative entry is rejected"""
        table = np.full((1, 1, 2, 2), 0.25)
        table[0, 0, 0, 0] = -0.25
        table[0, 0, 1, 1] = 0.75

        with pytest.raises(NegativeProbability):
            make_box(1, 1, 2, 2, table)

    def test_normalization_error(self):
        """Test an unnormalized setting pair is rejected"""
        with pytest.raises(NormalizationError):
            make_box(1, 1, 2, 2, np.full((1, 1, 2, 2), 0.3))

    def test_signaling_error(self):
        """Test Bob's marginal depending on Alice's setting is rejected"""
        table = np.zeros((2, 1, 2, 2))
        table[0, 0, :, 0] = 0.5
        table[1, 0, :, 1] = 0.5

        assert nonsignaling_residual(table) == pytest.approx(1.0)
        with pytest.raises(SignalingError):
            make_box(2, 1, 2, 2, table)

    def test_tolerance_absorbs_rounding(self):
        """Test entries off by less than the tolerance are accepted"""
        table = np.full((1, 1, 2, 2), 0.25)
        table[0, 0, 0, 0] += 1e-12

        box = make_box(1, 1, 2, 2, table)

        assert box.n_a == 1

    def test_file_round_trip(self, tmp_path):
        """Test a box survives save and load"""
        path = tmp_path / "box.json"
        save_box(pr_box(), path)

        loaded = load_box(path)

        np.testing.assert_array_equal(loaded.table, pr_box().table)


class TestBiases:
    """Test cases for the correlator parametrization"""

    def test_pr_box_biases(self):
        """Test the PR box has e = 1 except e11 = -1"""
        np.testing.assert_array_equal(biases(pr_box()).binary, [[1, 1], [1, -1]])

    def test_white_noise_biases_vanish(self):
        """Test white noise has zero correlators for every alphabet"""
        for d in (2, 3, 5):
            assert np.abs(biases(white_noise(2, d)).values).max() == pytest.approx(0.0)

    def test_generalized_pr_box(self):
        """Test e^0_{j,i} = d [j i = 0 mod d] - 1"""
        d = 3
        e = biases(generalized_pr_box(d)).values[0]
        expected = np.array([[2, 2], [2, -1]])

        np.testing.assert_allclose(e, expected)

    def test_biases_sum_to_zero(self, rng):
        """Test sum_k e^k vanishes for every setting pair"""
        table = random_biases(3, 2, 4, rng)

        np.testing.assert_allclose(table.values.sum(axis=0), 0.0, atol=1e-12)

    def test_unequal_alphabets(self):
        """Test biases need equal outcome counts"""
        box = make_box(1, 1, 2, 3, np.full((1, 1, 2, 3), 1 / 6))

        with pytest.raises(DimensionMismatch):
            biases(box)

    def test_scalar_access_needs_binary(self):
        """Test the scalar view is refused for d > 2"""
        with pytest.raises(DimensionMismatch):
            biases(generalized_pr_box(3)).binary

    def test_box_from_biases_recovers_pr_box(self):
        """Test the full-correlation box of the PR biases is the PR box"""
        box = box_from_biases(biases(pr_box()))

        np.testing.assert_allclose(box.table, pr_box().table)

    def test_box_from_biases_rejects_negative(self):
        """Test biases beyond [-1, 1] cannot be realized"""
        with pytest.raises(InvalidBias):
            box_from_biases(BiasTable.from_binary([[1.5]]))

    def test_box_from_biases_rejects_drift(self):
        """Test biases that do not sum to zero over k are rejected"""
        values = np.zeros((3, 1, 1))
        values[0] = 0.5

        with pytest.raises(InvalidBias):
            box_from_biases(BiasTable.from_values(values))

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
            min_size=4,
            max_size=4,
        )
    )
    def test_biases_of_box_from_biases(self, values):
        """Test biases(box_from_biases(e)) returns e"""
        e = np.array(values).reshape(2, 2)

        recovered = biases(box_from_biases(BiasTable.from_binary(e))).binary

        np.testing.assert_allclose(recovered, e, atol=1e-12)

    def test_marginals_are_uniform(self):
        """Test the PR box has uniform marginals"""
        alice, bob = marginals(pr_box())

        np.testing.assert_allclose(alice, 0.5)
        np.testing.assert_allclose(bob, 0.5)


class TestMix:
    """Test cases for convex mixtures"""

    def test_mixture_biases_are_linear(self):
        """Test the mixture of PR box and white noise scales the biases"""
        box = mix([pr_box(), white_noise(2)], [0.25, 0.75])

        np.testing.assert_allclose(biases(box).binary, 0.25 * biases(pr_box()).binary)

    def test_invalid_weights(self):
        """Test weights that are not a distribution are rejected"""
        with pytest.raises(InvalidWeights):
            mix([pr_box(), white_noise(2)], [0.7, 0.7])

    def test_weight_count_mismatch(self):
        """Test one weight per box is required"""
        with pytest.raises(InvalidWeights):
            mix([pr_box()], [0.5, 0.5])

    def test_shape_mismatch(self):
        """Test boxes of different shapes cannot be mixed"""
        with pytest.raises(ShapeMismatch):
            mix([pr_box(), white_noise(3)], [0.5, 0.5])

    def test_empty(self):
        """Test mixing nothing is an error"""
        with pytest.raises(ShapeMismatch):
            mix([], [])

    def test_witness_mixture(self, witness_biases):
        """Test the three-box mixture at (0.55, 0.05)"""
        np.testing.assert_allclose(biases(fig2_mixture(0.55, 0.05)).binary, witness_biases, atol=1e-12)


class TestRelabel:
    """Test cases for setting and outcome relabeling"""

    def test_outcome_flip_negates_biases(self):
        """Test flipping Alice's outcome for setting 1 negates row 1"""
        box = relabel(pr_box(), alice_shifts=[0, 1])

        np.testing.assert_array_equal(biases(box).binary, [[1, 1], [-1, 1]])

    def test_bob_permutation_swaps_columns(self):
        """Test a Bob setting permutation reorders the columns"""
        box = relabel(pr_box(), bob_perm=[1, 0])

        np.testing.assert_array_equal(biases(box).binary, [[1, 1], [-1, 1]])

    def test_party_swap_transposes(self):
        """Test exchanging the parties transposes the correlators"""
        e = np.array([[0.5, 0.1], [-0.3, 0.2]])
        box = box_from_biases(BiasTable.from_binary(e))

        np.testing.assert_allclose(biases(relabel(box, swap_parties=True)).binary, e.T)

    def test_white_noise_is_invariant(self):
        """Test white noise is unchanged by any relabeling"""
        box = relabel(white_noise(3), [2, 0, 1], [1, 2, 0], [1, 0, 1], [0, 1, 1], True)

        np.testing.assert_allclose(box.table, white_noise(3).table)


class TestCollinsGisin:
    """Test cases for Collins-Gisin conversion"""

    def test_pr_box_table(self):
        """Test the PR box joint table indexed [bob][alice]"""
        cg = to_collins_gisin(pr_box())

        np.testing.assert_allclose(cg.pa, [0.5, 0.5])
        np.testing.assert_allclose(cg.pb, [0.5, 0.5])
        np.testing.assert_allclose(cg.joint, [[0.5, 0.5], [0.5, 0.0]])

    def test_round_trip(self):
        """Test a 3322 box survives conversion to and from Collins-Gisin"""
        box = cg3322_family(0.4)

        np.testing.assert_allclose(from_collins_gisin(to_collins_gisin(box)).table, box.table)

    def test_invalid_entries(self):
        """Test a joint larger than its marginal is rejected"""
        with pytest.raises(InvalidCG):
            from_collins_gisin(CollinsGisinFile(pa=[0.5], pb=[0.5], joint=[[0.8]]))

    def test_invalid_shape(self):
        """Test a joint table of the wrong shape is rejected"""
        with pytest.raises(InvalidCG):
            from_collins_gisin(CollinsGisinFile(pa=[0.5, 0.5], pb=[0.5], joint=[[0.25]]))

    def test_non_binary_box(self):
        """Test Collins-Gisin notation needs binary outcomes"""
        with pytest.raises(DimensionMismatch):
            to_collins_gisin(white_noise(2, 3))

    def test_load(self, tmp_path):
        """Test loading a Collins-Gisin file"""
        path = tmp_path / "cg.json"
        path.write_text(to_collins_gisin(pr_box()).to_file().model_dump_json())

        np.testing.assert_allclose(load_collins_gisin(path).table, pr_box().table)


class TestCatalog:
    """Test cases for named boxes"""

    def test_catalog_names(self):
        """Test every named constructor is listed"""
        assert {"pr_box", "white_noise", "cg3322_p1", "fig2_boxes"} <= set(catalog())

    def test_local_deterministic(self):
        """Test deterministic outcomes give correlators (-1)^(a + b)"""
        box = local_deterministic([0, 1], [0, 0])

        np.testing.assert_array_equal(biases(box).binary, [[1, 1], [-1, -1]])

    def test_local_deterministic_out_of_range(self):
        """Test outcomes must lie in the alphabet"""
        with pytest.raises(DimensionMismatch):
            local_deterministic([0, 2], [0])

    def test_max_violation_box(self):
        """Test e_{j,i} = -1 exactly on the anti-diagonal j = n - i"""
        e = biases(max_violation_nn22(3)).binary

        expected = np.ones((3, 3))
        expected[2, 1] = expected[1, 2] = -1

        np.testing.assert_allclose(e, expected)

    def test_max_violation_arity(self):
        """Test n < 2 is rejected"""
        with pytest.raises(InvalidArity):
            max_violation_nn22(1)

    def test_3322_family_biases(self):
        """Test p_c has biases c s with s_00 = 0 and |s| = 1 elsewhere"""
        c = 0.6
        e = biases(cg3322_family(c)).binary

        assert e[0, 0] == pytest.approx(0.0)
        off_diagonal = np.abs(e)[np.arange(9).reshape(3, 3) != 0]
        np.testing.assert_allclose(off_diagonal, c)

    def test_3322_components_have_uniform_marginals(self):
        """Test p1, p2 and pN all have uniform marginals"""
        for box in (cg3322_p1(), cg3322_p2(), cg3322_pN()):
            alice, bob = marginals(box)
            np.testing.assert_allclose(alice, 0.5)
            np.testing.assert_allclose(bob, 0.5)
