"""Shared fixtures and independent brute-force oracles.

The oracles here deliberately avoid the package's vectorized code paths:
Mobius coefficients come from a double loop over subsets, least-squares
solves from an explicitly assembled dense design, Shapley values from the
subset-weight formula.  They exist so package results are checked against a
second, independently written route.
"""

import itertools
import math

import numpy as np
import pytest

from interax import PlayerSpace, TabulatedGame, TwoAdditiveGame, make_random_game
from interax.rng import stream


def popcount(x):
    return bin(x).count("1")


def all_masks_bool(n):
    """All 2^n masks, row r has token i active iff bit i of r is set."""
    return np.array(
        [[(r >> i) & 1 for i in range(n)] for r in range(1 << n)], dtype=bool
    )


def slow_mobius(values, n):
    """a(M) = sum_{L subseteq M} (-1)^(|M|-|L|) nu(L), by double loop."""
    a = np.zeros(1 << n)
    for m in range(1 << n):
        for l in range(1 << n):
            if l & m == l:
                a[m] += (-1) ** (popcount(m) - popcount(l)) * values[l]
    return a


def hammer_holzman(values, n):
    """Closed-form best 2-additive approximation at p = 1/2.

    Built on the brute-force Mobius transform:
      pair  b_ij = sum_{T supseteq {i,j}} (1/2)^(|T|-2) a(T)
      single b_i = a({i}) - sum_{T ni i, |T|>=3} (|T|-2) (1/2)^(|T|-1) a(T)
      const b_0  = a(0) + sum_{|T|>=3} C(|T|-1, 2) (1/2)^|T| a(T)
    """
    a = slow_mobius(values, n)
    const = a[0]
    for t in range(1 << n):
        s = popcount(t)
        if s >= 3:
            const += math.comb(s - 1, 2) * 0.5 ** s * a[t]
    singles = np.zeros(n)
    for i in range(n):
        singles[i] = a[1 << i]
        for t in range(1 << n):
            s = popcount(t)
            if (t >> i) & 1 and s >= 3:
                singles[i] -= (s - 2) * 0.5 ** (s - 1) * a[t]
    pairs = {}
    for i, j in itertools.combinations(range(n), 2):
        pat = (1 << i) | (1 << j)
        pairs[(i, j)] = sum(
            0.5 ** (popcount(t) - 2) * a[t]
            for t in range(1 << n)
            if t & pat == pat
        )
    return const, singles, pairs


def dense_wls(values, n, p, pairs=None, first_order_only=False):
    """Independent weighted least-squares solve over all 2^n masks.

    Assembles the dense design row by row with Python loops and solves with
    lstsq; used as the oracle for the package's streamed normal equations.
    """
    if pairs is None and not first_order_only:
        pairs = list(itertools.combinations(range(n), 2))
    pairs = [] if first_order_only else list(pairs)
    rows, weights = [], []
    for m in range(1 << n):
        active = [(m >> i) & 1 for i in range(n)]
        row = [1.0] + [float(b) for b in active]
        row += [float(active[i] and active[j]) for i, j in pairs]
        rows.append(row)
        weights.append(p ** popcount(m) * (1 - p) ** (n - popcount(m)))
    design = np.array(rows)
    w = np.sqrt(np.array(weights))
    coef, *_ = np.linalg.lstsq(design * w[:, None], np.asarray(values) * w, rcond=None)
    return coef, pairs


def shapley_values_subset_formula(game):
    """phi_i = sum_{S not ni i} |S|!(n-|S|-1)!/n! (nu(S+i) - nu(S))."""
    n = game.space.n
    table = game if isinstance(game, TabulatedGame) else TabulatedGame.from_oracle(game)
    phi = np.zeros(n)
    for i in range(n):
        for s in range(1 << n):
            if (s >> i) & 1:
                continue
            size = popcount(s)
            weight = math.factorial(size) * math.factorial(n - size - 1) / math.factorial(n)
            phi[i] += weight * (table.values[s | (1 << i)] - table.values[s])
    return phi


def exact_pp_mass(n, p):
    """P_p probability of every mask int."""
    return np.array(
        [p ** popcount(m) * (1 - p) ** (n - popcount(m)) for m in range(1 << n)]
    )


def near_two_additive_game(space, scale, seed):
    """A game that is 2-additive up to a small tabulated perturbation."""
    base = TabulatedGame.from_oracle(make_random_game(space, "two-additive", seed))
    noise = stream(seed + 1000, "game").uniform(-1.0, 1.0, size=base.values.size)
    return TabulatedGame(space, base.values + scale * noise)


class CountingOracle(TwoAdditiveGame):
    """Charges one unit per distinct side pattern in each evaluate call."""

    def __init__(self, space):
        rng = stream(99, "game")
        n = space.n
        upper = np.triu(rng.uniform(-1, 1, size=(n, n)), k=1)
        super().__init__(space, 0.0, rng.uniform(-1, 1, size=n), upper + upper.T)
        self.side_encodings = 0

    def evaluate_matrix(self, mat):
        img, txt = self.space.modality_slices()
        self.side_encodings += len(np.unique(np.packbits(mat[:, img], axis=1), axis=0))
        self.side_encodings += len(np.unique(np.packbits(mat[:, txt], axis=1), axis=0))
        return super().evaluate_matrix(mat)


@pytest.fixture
def small_space():
    return PlayerSpace(3, 3)


@pytest.fixture
def tiny_space():
    return PlayerSpace(2, 2)
