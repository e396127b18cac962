"""Mask algebra, player spaces, and game containers.

Set-algebra operations on masks are checked against Python sets, tabulated
games against elementwise re-evaluation, and the 2-additive container
against its defining discrete-derivative identity.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interax import (
    EnumerationGuardError,
    InvalidMaskError,
    Mask,
    PlayerSpace,
    TabulatedGame,
    TwoAdditiveGame,
    ValidationError,
    evaluate,
    load_tabulated_game,
    make_random_game,
    save_tabulated_game,
)
from interax.games import (
    check_p,
    enumerate_masks,
    ints_to_matrix,
    mask_matrix,
    matrix_to_ints,
    popcounts,
)

from conftest import all_masks_bool


class TestPlayerSpace:
    def test_rejects_empty_modalities(self):
        with pytest.raises(ValidationError):
            PlayerSpace(0, 3)
        with pytest.raises(ValidationError):
            PlayerSpace(3, 0)

    def test_index_layout(self):
        """Image tokens occupy 0..n_image-1, text tokens the rest."""
        space = PlayerSpace(3, 2)
        assert space.n == 5
        assert list(space.image_indices) == [0, 1, 2]
        assert list(space.text_indices) == [3, 4]
        for i in range(space.n):
            assert space.is_image(i) != space.is_text(i)


class TestMask:
    def test_bitstring_orientation(self):
        """Index 0 is the leftmost character of the wire bitstring."""
        m = Mask.from_bitstring("100")
        assert m.to_indices() == (0,)
        assert Mask.from_indices([2], 3).to_bitstring() == "001"

    def test_bitstring_round_trip(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            arr = rng.random(11) < 0.4
            m = Mask.from_array(arr)
            assert Mask.from_bitstring(m.to_bitstring()) == m
            np.testing.assert_array_equal(m.to_array(), arr)

    def test_malformed_bitstrings(self):
        for bad in ["", "01x", "2", "0 1"]:
            with pytest.raises(InvalidMaskError):
                Mask.from_bitstring(bad)

    def test_out_of_range_index(self):
        with pytest.raises(InvalidMaskError):
            Mask.from_indices([5], 5)

    @given(
        st.sets(st.integers(0, 15)),
        st.sets(st.integers(0, 15)),
    )
    @settings(max_examples=200, deadline=None)
    def test_set_algebra_matches_python_sets(self, a, b):
        """union/intersection/complement agree with set semantics."""
        width = 16
        ma, mb = Mask.from_indices(a, width), Mask.from_indices(b, width)
        assert set(ma.union(mb).to_indices()) == a | b
        assert set(ma.intersection(mb).to_indices()) == a & b
        assert set(ma.complement().to_indices()) == set(range(width)) - a
        assert ma.popcount() == len(a)
        for i in range(width):
            assert ma.contains(i) == (i in a)

    def test_width_mismatch(self):
        with pytest.raises(InvalidMaskError):
            Mask.empty(3).union(Mask.empty(4))

    def test_matrix_round_trips(self):
        mat = all_masks_bool(6)
        ints = matrix_to_ints(mat)
        np.testing.assert_array_equal(ints, np.arange(64))
        np.testing.assert_array_equal(ints_to_matrix(ints, 6), mat)
        np.testing.assert_array_equal(enumerate_masks(6), mat)
        np.testing.assert_array_equal(popcounts(ints), mat.sum(axis=1))


class TestEvaluate:
    def test_order_and_values(self, small_space):
        """evaluate preserves request order and matches value_at pointwise."""
        game = make_random_game(small_space, "tabulated", seed=3)
        masks = [Mask(b, small_space.n) for b in [5, 0, 63, 5, 17]]
        out = evaluate(game, masks)
        np.testing.assert_array_equal(out, [game.value_at(m) for m in masks])

    def test_width_mismatch_rejected(self, small_space):
        game = make_random_game(small_space, "tabulated", seed=3)
        with pytest.raises(InvalidMaskError):
            evaluate(game, [Mask.empty(4)])

    def test_known_two_additive_values(self):
        """nu(M) = e0 + sum singles + sum active pairs, hand-computed."""
        space = PlayerSpace(2, 2)
        game = TwoAdditiveGame(
            space, 1.5, {0: 2.0, 3: -1.0}, {(0, 2): 0.5, (1, 3): -2.0}
        )
        assert game.value_at(Mask.empty(4)) == 1.5
        assert game.value_at(Mask.from_indices([0], 4)) == 3.5
        assert game.value_at(Mask.from_indices([0, 2], 4)) == 4.0
        assert game.value_at(Mask.full(4)) == 1.5 + 2.0 - 1.0 + 0.5 - 2.0


class TestTwoAdditiveGame:
    def test_discrete_derivative_identity(self, small_space):
        """Second discrete derivative at {i,j} is constant in the context M.

        nu(M+i+j) - nu(M+i) - nu(M+j) + nu(M) == pair coefficient, all M.
        """
        game = make_random_game(small_space, "two-additive", seed=11)
        table = TabulatedGame.from_oracle(game)
        v, n = table.values, small_space.n
        pair = game.pair_dict()
        for i in range(n):
            for j in range(i + 1, n):
                bi, bj = 1 << i, 1 << j
                for m in range(1 << n):
                    if m & (bi | bj):
                        continue
                    d2 = v[m | bi | bj] - v[m | bi] - v[m | bj] + v[m]
                    assert d2 == pytest.approx(pair.get((i, j), 0.0), abs=1e-12)

    def test_rejects_degenerate_pair(self, small_space):
        with pytest.raises(ValidationError):
            TwoAdditiveGame(small_space, 0.0, {}, {(2, 2): 1.0})

    def test_dict_and_matrix_forms_agree(self, tiny_space):
        a = TwoAdditiveGame(tiny_space, 0.3, {1: 2.0}, {(0, 3): -1.0})
        mat = np.zeros((4, 4))
        mat[0, 3] = mat[3, 0] = -1.0
        b = TwoAdditiveGame(tiny_space, 0.3, [0.0, 2.0, 0.0, 0.0], mat)
        full = enumerate_masks(4)
        np.testing.assert_allclose(a.evaluate_matrix(full), b.evaluate_matrix(full))


class TestTabulatedGame:
    def test_from_oracle_pointwise(self, small_space):
        game = make_random_game(small_space, "two-additive", seed=5)
        table = TabulatedGame.from_oracle(game)
        for m in range(1 << small_space.n):
            mask = Mask(m, small_space.n)
            assert table.value_at(mask) == game.value_at(mask)

    def test_value_table_validation(self, tiny_space):
        with pytest.raises(ValidationError):
            TabulatedGame(tiny_space, np.zeros(15))
        with pytest.raises(ValidationError):
            TabulatedGame(tiny_space, [0.0] * 15 + [np.nan])

    def test_enumeration_guard_names_the_limit(self):
        with pytest.raises(EnumerationGuardError, match="24"):
            TabulatedGame(PlayerSpace(13, 12), np.zeros(2))

    def test_file_round_trip(self, tmp_path, small_space):
        game = make_random_game(small_space, "tabulated", seed=9)
        path = tmp_path / "game.json"
        save_tabulated_game(game, path)
        loaded = load_tabulated_game(path)
        assert loaded.space == small_space
        np.testing.assert_array_equal(loaded.values, game.values)


class TestMakeRandomGame:
    def test_deterministic_in_seed(self, small_space):
        a = make_random_game(small_space, "tabulated", seed=7)
        b = make_random_game(small_space, "tabulated", seed=7)
        np.testing.assert_array_equal(a.values, b.values)
        c = make_random_game(small_space, "tabulated", seed=8)
        assert not np.array_equal(a.values, c.values)

    def test_two_additive_kind_is_two_additive(self, tiny_space):
        """All Mobius mass above order 2 vanishes for the 2-additive kind."""
        from conftest import slow_mobius

        game = make_random_game(tiny_space, "two-additive", seed=2)
        table = TabulatedGame.from_oracle(game)
        a = slow_mobius(table.values, tiny_space.n)
        for m in range(1 << tiny_space.n):
            if bin(m).count("1") > 2:
                assert a[m] == pytest.approx(0.0, abs=1e-12)

    def test_unknown_kind(self, tiny_space):
        with pytest.raises(ValidationError):
            make_random_game(tiny_space, "cubic", seed=0)


class TestCheckP:
    def test_open_interval(self):
        assert check_p(0.5) == 0.5
        for bad in [0.0, 1.0, -0.1, 1.1]:
            with pytest.raises(ValidationError):
                check_p(bad)


def test_mask_matrix_validates_space(small_space):
    masks = [Mask.empty(6), Mask.full(6)]
    mat = mask_matrix(masks, small_space)
    assert mat.shape == (2, 6)
    with pytest.raises(InvalidMaskError):
        mask_matrix([Mask.empty(5)], small_space)
