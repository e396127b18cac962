"""Exact solver: Mobius transform, optimal order-2 fits, weighted Banzhaf.

Every derived quantity is checked against a second route written in
conftest.py: inclusion-exclusion Mobius, a dense lstsq solve, the closed
form at p = 1/2, and the probabilistic-marginal definition of the weighted
Banzhaf values.
"""

import numpy as np
import pytest

from interax import (
    Mask,
    PlayerSpace,
    SpaceMismatchError,
    TabulatedGame,
    TwoAdditiveGame,
    ValidationError,
    exact_explanation,
    exact_p_faithfulness,
    exact_weighted_banzhaf_values,
    first_order_conversion,
    make_random_game,
    mobius,
)

from conftest import (
    all_masks_bool,
    dense_wls,
    exact_pp_mass,
    hammer_holzman,
    popcount,
    slow_mobius,
)


def weighted_banzhaf_marginals(table, p):
    """phi_i = sum_{S not ni i} p^|S| (1-p)^(n-1-|S|) (nu(S+i) - nu(S)).

    The probabilistic-marginal definition, independent of the Mobius route
    used by the package.
    """
    n = table.space.n
    v = table.values
    phi = np.zeros(n)
    for i in range(n):
        for s in range(1 << n):
            if (s >> i) & 1:
                continue
            w = p ** popcount(s) * (1 - p) ** (n - 1 - popcount(s))
            phi[i] += w * (v[s | (1 << i)] - v[s])
    return phi


class TestMobius:
    @pytest.mark.parametrize("n_image,n_text", [(1, 1), (2, 1), (2, 3), (4, 4)])
    def test_matches_inclusion_exclusion(self, n_image, n_text):
        space = PlayerSpace(n_image, n_text)
        game = make_random_game(space, "tabulated", seed=17)
        np.testing.assert_allclose(
            mobius(game).coefficients,
            slow_mobius(game.values, space.n),
            atol=1e-12,
        )

    def test_reconstruct_is_inverse(self):
        space = PlayerSpace(5, 5)
        game = make_random_game(space, "tabulated", seed=23)
        back = mobius(game).reconstruct()
        np.testing.assert_allclose(back.values, game.values, atol=1e-10)

    def test_two_additive_has_order_two(self, small_space):
        game = make_random_game(small_space, "two-additive", seed=2)
        assert mobius(game).max_order(tol=1e-10) == 2

    def test_coefficient_lookup(self, tiny_space):
        game = make_random_game(tiny_space, "tabulated", seed=5)
        tr = mobius(game)
        m = Mask.from_indices([0, 2], 4)
        assert tr.coefficient(m) == tr.coefficients[m.bits]


class TestExactExplanation:
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_matches_dense_lstsq(self, p):
        """Streamed normal equations agree with an assembled lstsq solve."""
        space = PlayerSpace(2, 3)
        game = make_random_game(space, "tabulated", seed=31)
        expl = exact_explanation(game, p)
        coef, _ = dense_wls(game.values, space.n, p)
        np.testing.assert_allclose(expl.coefficients(), coef, atol=1e-9)

    def test_matches_closed_form_at_half(self):
        """At p = 1/2 the solution has a known closed form (via Mobius)."""
        space = PlayerSpace(3, 3)
        game = make_random_game(space, "tabulated", seed=37)
        expl = exact_explanation(game, 0.5)
        const, singles, pairs = hammer_holzman(game.values, space.n)
        assert expl.constant == pytest.approx(const, abs=1e-10)
        np.testing.assert_allclose(expl.singles, singles, atol=1e-10)
        for (i, j), v in pairs.items():
            assert expl.pair_value(i, j) == pytest.approx(v, abs=1e-10)

    def test_recovers_two_additive_games(self, small_space):
        """A game that is exactly order-2 is recovered coefficient for
        coefficient, at any p."""
        game = make_random_game(small_space, "two-additive", seed=41)
        for p in (0.25, 0.5, 0.75):
            expl = exact_explanation(game, p)
            np.testing.assert_allclose(expl.constant, game.constant, atol=1e-10)
            np.testing.assert_allclose(expl.singles, game.singles, atol=1e-10)
            for (i, j), v in game.pair_dict().items():
                assert expl.pair_value(i, j) == pytest.approx(v, abs=1e-10)
            assert expl.diagnostics["p_faithfulness"] < 1e-18

    def test_local_optimality(self, tiny_space):
        """Perturbing any coefficient strictly increases F_p."""
        game = make_random_game(tiny_space, "tabulated", seed=43)
        p = 0.3
        expl = exact_explanation(game, p)
        base = exact_p_faithfulness(game, expl.to_game(), p)
        coef = expl.coefficients()
        for k in range(coef.size):
            for delta in (-1e-3, 1e-3):
                bumped = coef.copy()
                bumped[k] += delta
                rival = type(expl).from_coefficients(expl.basis, bumped, p=p)
                assert exact_p_faithfulness(game, rival.to_game(), p) > base

    def test_diagnostic_matches_recomputation(self, tiny_space):
        game = make_random_game(tiny_space, "tabulated", seed=47)
        expl = exact_explanation(game, 0.6)
        again = exact_p_faithfulness(game, expl.to_game(), 0.6)
        assert expl.diagnostics["p_faithfulness"] == pytest.approx(again, rel=1e-12)

    def test_rejects_degenerate_p(self, tiny_space):
        game = make_random_game(tiny_space, "tabulated", seed=3)
        for bad in (0.0, 1.0):
            with pytest.raises(ValidationError):
                exact_explanation(game, bad)


class TestWeightedBanzhafValues:
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_matches_marginal_definition(self, p):
        space = PlayerSpace(3, 2)
        game = make_random_game(space, "tabulated", seed=53)
        np.testing.assert_allclose(
            exact_weighted_banzhaf_values(game, p),
            weighted_banzhaf_marginals(game, p),
            atol=1e-11,
        )

    def test_dummy_player(self):
        """A token that never changes the value gets exactly zero."""
        space = PlayerSpace(2, 2)
        rng = np.random.default_rng(59)
        sub = rng.standard_normal(8)
        # token 1 is dummy: the value depends only on bits {0, 2, 3}
        values = np.empty(16)
        for m in range(16):
            key = (m & 0b0001) | ((m & 0b1100) >> 1)
            values[m] = sub[key]
        game = TabulatedGame(space, values)
        phi = exact_weighted_banzhaf_values(game, 0.37)
        assert phi[1] == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_players(self):
        """Interchangeable tokens receive equal values."""
        space = PlayerSpace(2, 2)
        values = np.array([float(popcount(m)) ** 1.5 for m in range(16)])
        game = TabulatedGame(space, values)
        phi = exact_weighted_banzhaf_values(game, 0.41)
        np.testing.assert_allclose(phi, phi[0], atol=1e-12)

    def test_linearity(self, tiny_space):
        u = make_random_game(tiny_space, "tabulated", seed=61)
        v = make_random_game(tiny_space, "tabulated", seed=67)
        combo = TabulatedGame(tiny_space, 2.0 * u.values - 3.0 * v.values)
        np.testing.assert_allclose(
            exact_weighted_banzhaf_values(combo, 0.3),
            2.0 * exact_weighted_banzhaf_values(u, 0.3)
            - 3.0 * exact_weighted_banzhaf_values(v, 0.3),
            atol=1e-11,
        )


class TestFirstOrderConversionTheorem:
    @pytest.mark.parametrize("p", [0.15, 0.5, 0.85])
    def test_conversion_equals_banzhaf_of_surrogate(self, p):
        """The converted attribution of a fitted explanation coincides with
        the weighted Banzhaf values of the surrogate game it defines."""
        space = PlayerSpace(3, 3)
        game = make_random_game(space, "tabulated", seed=71)
        expl = exact_explanation(game, p)
        converted = first_order_conversion(expl)
        direct = exact_weighted_banzhaf_values(expl.to_game(), p)
        np.testing.assert_allclose(converted, direct, atol=1e-10)

    def test_on_hand_built_surrogate(self):
        space = PlayerSpace(2, 2)
        game = TwoAdditiveGame(space, 0.7, {0: 1.0, 2: -2.0}, {(0, 3): 4.0, (1, 2): -1.0})
        p = 0.25
        direct = exact_weighted_banzhaf_values(game, p)
        expect = game.singles + p * game.interactions.sum(axis=1)
        np.testing.assert_allclose(direct, expect, atol=1e-12)


class TestExactPFaithfulness:
    def test_matches_direct_sum(self, tiny_space):
        game = make_random_game(tiny_space, "tabulated", seed=73)
        surr = make_random_game(tiny_space, "two-additive", seed=79)
        p = 0.35
        mass = exact_pp_mass(tiny_space.n, p)
        mat = all_masks_bool(tiny_space.n)
        resid = game.evaluate_matrix(mat) - surr.evaluate_matrix(mat)
        expect = float(mass @ resid ** 2)
        assert exact_p_faithfulness(game, surr, p) == pytest.approx(expect, rel=1e-12)

    def test_space_mismatch(self):
        a = make_random_game(PlayerSpace(2, 2), "tabulated", seed=1)
        b = make_random_game(PlayerSpace(2, 3), "two-additive", seed=1)
        with pytest.raises(SpaceMismatchError):
            exact_p_faithfulness(a, b, 0.5)

    def test_zero_for_identical_games(self, tiny_space):
        game = make_random_game(tiny_space, "two-additive", seed=83)
        assert exact_p_faithfulness(game, game, 0.5) == 0.0
