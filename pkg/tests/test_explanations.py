"""Basis specs, explanation containers, and their serialization."""

import json
import math

import numpy as np
import pytest

from interax import (
    KERNEL_SHAPLEY,
    KERNEL_WEIGHTED_BANZHAF,
    BasisSpec,
    Explanation,
    PlayerSpace,
    UnsupportedConversionError,
    ValidationError,
    dumps_canonical,
    first_order_conversion,
)
from interax.games import enumerate_masks

from conftest import all_masks_bool


def _random_explanation(space, basis=None, kernel=KERNEL_WEIGHTED_BANZHAF, p=0.3, seed=0):
    rng = np.random.default_rng(seed)
    basis = basis or BasisSpec.full(space)
    coef = rng.standard_normal(basis.size)
    return Explanation.from_coefficients(basis, coef, kernel=kernel, p=p)


class TestBasisSpec:
    def test_sizes(self):
        space = PlayerSpace(3, 4)
        assert BasisSpec.full(space).size == 1 + 7 + math.comb(7, 2)
        assert BasisSpec.cross_modal(space).size == 1 + 7 + 3 * 4
        assert BasisSpec.first_order(space).size == 1 + 7

    def test_cross_modal_pairs_span_modalities(self):
        space = PlayerSpace(2, 3)
        pairs = BasisSpec.cross_modal(space).pairs
        assert pairs == tuple((i, j) for i in range(2) for j in range(2, 5))
        for i, j in pairs:
            assert space.is_image(i) and space.is_text(j)

    def test_clique_pairs(self):
        space = PlayerSpace(3, 3)
        basis = BasisSpec.clique(space, [4, 0, 2])
        assert basis.pairs == ((0, 2), (0, 4), (2, 4))

    def test_pair_validation(self):
        space = PlayerSpace(2, 2)
        with pytest.raises(ValidationError):
            BasisSpec(space, "full", ((1, 1),))
        with pytest.raises(ValidationError):
            BasisSpec(space, "full", ((2, 1),))
        with pytest.raises(ValidationError):
            BasisSpec(space, "full", ((0, 1), (0, 1)))
        with pytest.raises(ValidationError):
            BasisSpec(space, "full", ((0, 3), (0, 1)))

    def test_design_matrix_matches_loops(self):
        """Vectorized design agrees with per-row Python construction."""
        space = PlayerSpace(3, 2)
        basis = BasisSpec.cross_modal(space)
        mat = all_masks_bool(5)
        design = basis.design_matrix(mat)
        for r in range(mat.shape[0]):
            expect = [1.0] + [float(b) for b in mat[r]]
            expect += [float(mat[r, i] and mat[r, j]) for i, j in basis.pairs]
            np.testing.assert_array_equal(design[r], expect)


class TestExplanation:
    def test_coefficient_round_trip(self):
        space = PlayerSpace(2, 3)
        expl = _random_explanation(space, seed=4)
        coef = expl.coefficients()
        again = Explanation.from_coefficients(expl.basis, coef, kernel=expl.kernel, p=expl.p)
        np.testing.assert_array_equal(again.coefficients(), coef)

    def test_pair_value_symmetric(self):
        expl = _random_explanation(PlayerSpace(2, 2), seed=1)
        assert expl.pair_value(0, 3) == expl.pair_value(3, 0)
        basis = BasisSpec.cross_modal(PlayerSpace(2, 2))
        sparse = _random_explanation(PlayerSpace(2, 2), basis=basis, seed=2)
        assert sparse.pair_value(0, 1) == 0.0  # image-image pair outside basis

    def test_interaction_matrix_layout(self):
        space = PlayerSpace(2, 2)
        expl = _random_explanation(space, seed=3)
        w = expl.interaction_matrix()
        np.testing.assert_array_equal(w, w.T)
        np.testing.assert_array_equal(np.diag(w), np.zeros(4))
        assert w[1, 2] == expl.pair_value(1, 2)

    def test_evaluate_matches_to_game(self):
        space = PlayerSpace(3, 2)
        expl = _random_explanation(space, seed=5)
        mat = enumerate_masks(space.n)
        np.testing.assert_allclose(
            expl.evaluate_matrix(mat), expl.to_game().evaluate_matrix(mat), rtol=0, atol=1e-14
        )

    def test_without_interactions(self):
        space = PlayerSpace(2, 2)
        expl = _random_explanation(space, seed=6)
        flat = expl.without_interactions()
        mat = enumerate_masks(4)
        expect = expl.constant + mat @ expl.singles
        np.testing.assert_allclose(flat.evaluate_matrix(mat), expect, atol=1e-14)

    def test_scaled(self):
        expl = _random_explanation(PlayerSpace(2, 2), seed=7)
        mat = enumerate_masks(4)
        np.testing.assert_allclose(
            expl.scaled(-2.5).evaluate_matrix(mat), -2.5 * expl.evaluate_matrix(mat), atol=1e-12
        )


class TestSerialization:
    def test_json_round_trip_is_exact(self):
        """Floats survive the JSON round trip bit for bit (repr round trip)."""
        space = PlayerSpace(3, 3)
        expl = _random_explanation(space, seed=8, p=0.35)
        doc = json.loads(dumps_canonical(expl.to_json_dict()))
        again = Explanation.from_json_dict(doc)
        assert again.basis.pairs == expl.basis.pairs
        assert again.p == expl.p
        assert again.kernel == expl.kernel
        np.testing.assert_array_equal(again.coefficients(), expl.coefficients())

    def test_file_round_trip(self, tmp_path):
        expl = _random_explanation(PlayerSpace(2, 2), seed=9)
        path = tmp_path / "expl.json"
        expl.save(path, extra={"exact": True})
        again = Explanation.load(path)
        np.testing.assert_array_equal(again.coefficients(), expl.coefficients())

    def test_canonical_form_is_deterministic(self, tmp_path):
        expl = _random_explanation(PlayerSpace(2, 3), seed=10)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        expl.save(a)
        expl.save(b)
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes().endswith(b"\n")

    def test_schema_version_present(self):
        doc = _random_explanation(PlayerSpace(2, 2), seed=11).to_json_dict()
        assert doc["schema_version"] == 1
        assert doc["space"] == {"n_image": 2, "n_text": 2}

    def test_rejects_unknown_schema(self):
        doc = _random_explanation(PlayerSpace(2, 2), seed=12).to_json_dict()
        doc["schema_version"] = 99
        with pytest.raises(ValidationError):
            Explanation.from_json_dict(doc)


class TestFirstOrderConversion:
    def test_formula(self):
        """Converted attribution is e_i + p * sum_j e_ij."""
        space = PlayerSpace(2, 2)
        expl = _random_explanation(space, seed=13, p=0.4)
        attr = first_order_conversion(expl)
        expect = expl.singles + 0.4 * expl.interaction_matrix().sum(axis=1)
        np.testing.assert_allclose(attr, expect, atol=1e-14)

    def test_shapley_kernel_refused(self):
        expl = _random_explanation(PlayerSpace(2, 2), kernel=KERNEL_SHAPLEY, p=None, seed=14)
        with pytest.raises(UnsupportedConversionError):
            first_order_conversion(expl)
