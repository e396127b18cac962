"""Exact enumeration solvers: ground truth for every estimator in the package.

All routines enumerate the full 2^n mask lattice (subject to the enumeration
guard) in fixed-size blocks, so memory stays bounded while reduction order
stays deterministic.  One weighted-least-squares path serves every p in
(0, 1); closed forms for special p live in the test suite as independent
oracles, not here.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SpaceMismatchError
from .explanations import KERNEL_WEIGHTED_BANZHAF, BasisSpec, Explanation
from .games import (
    Mask,
    PlayerSpace,
    TabulatedGame,
    check_p,
    guard_enumeration,
    ints_to_matrix,
    popcounts,
)

# Masks are enumerated in blocks of this many rows.
_BLOCK = 1 << 16


def _as_table(game):
    if isinstance(game, TabulatedGame):
        return game
    return TabulatedGame.from_oracle(game)


def _blocks(n):
    total = 1 << n
    for lo in range(0, total, _BLOCK):
        hi = min(lo + _BLOCK, total)
        yield lo, np.arange(lo, hi, dtype=np.int64)


def _mask_weights(pc, n, p):
    """P_p probability of each mask given its popcount: p^|M| (1-p)^(n-|M|)."""
    return np.power(p, pc) * np.power(1.0 - p, n - pc)


@dataclass(frozen=True)
class MobiusTransform:
    """Coefficients a(M) for all 2^n subsets, indexed by mask bit pattern."""

    space: PlayerSpace
    coefficients: np.ndarray

    def coefficient(self, mask):
        bits = mask.bits if isinstance(mask, Mask) else int(mask)
        return float(self.coefficients[bits])

    def reconstruct(self):
        """Invert back to the game: nu(M) = sum_{L subseteq M} a(L)."""
        values = _zeta_in_place(self.coefficients.copy(), self.space.n)
        return TabulatedGame(self.space, values)

    def max_order(self, tol=0.0):
        """Largest |M| with |a(M)| > tol (0 for a constant game)."""
        pc = popcounts(np.arange(self.coefficients.size, dtype=np.int64))
        live = np.abs(self.coefficients) > tol
        return int(pc[live].max()) if live.any() else 0


def _butterfly(values, n, sign):
    # In-place subset-sum transform: axis b separates masks by bit b.
    for b in range(n):
        view = values.reshape(-1, 2, 1 << b)
        if sign < 0:
            view[:, 1, :] -= view[:, 0, :]
        else:
            view[:, 1, :] += view[:, 0, :]
    return values


def _zeta_in_place(values, n):
    return _butterfly(values, n, +1)


def mobius(game):
    """Möbius transform a(M) = sum_{L subseteq M} (-1)^{|M|-|L|} nu(L)."""
    table = _as_table(game)
    coeffs = _butterfly(table.values.copy(), table.space.n, -1)
    return MobiusTransform(table.space, coeffs)


def exact_explanation(game, p):
    """The F_p-optimal order-2 explanation, by full weighted least squares.

    Enumerates every mask, weights it by its P_p probability, and solves the
    normal equations over the full basis [1, singles, all pairs].  Strictly
    positive weights make the Gram matrix positive definite, so a failed
    Cholesky factorization is a genuine bug and is allowed to propagate.
    """
    p = check_p(p)
    guard_enumeration(game.space.n)
    basis = BasisSpec.full(game.space)
    n = game.space.n

    gram = np.zeros((basis.size, basis.size))
    moment = np.zeros(basis.size)
    for _, ints in _blocks(n):
        bits = ints_to_matrix(ints, n)
        design = basis.design_matrix(bits)
        w = _mask_weights(popcounts(ints), n, p)
        weighted = design * w[:, None]
        gram += weighted.T @ design
        moment += weighted.T @ game.evaluate_matrix(bits)

    chol = scipy.linalg.cho_factor(gram)
    coefficients = scipy.linalg.cho_solve(chol, moment)
    explanation = Explanation.from_coefficients(
        basis, coefficients, kernel=KERNEL_WEIGHTED_BANZHAF, p=p
    )
    residual = exact_p_faithfulness(game, explanation.to_game(), p)
    explanation.diagnostics = {"p_faithfulness": residual, "masks_enumerated": 1 << n}
    return explanation


def exact_weighted_banzhaf_values(game, p):
    """Per-token weighted Banzhaf values phi_i = sum_{M ni i} p^{|M|-1} a(M)."""
    p = check_p(p)
    transform = mobius(game)
    n = game.space.n
    phi = np.zeros(n)
    for lo, ints in _blocks(n):
        pc = popcounts(ints)
        scaled = transform.coefficients[ints] * np.power(p, pc - 1)
        if lo == 0:
            scaled[0] = 0.0  # the empty set contains no token
        phi += ints_to_matrix(ints, n).astype(np.float64).T @ scaled
    return phi


def exact_p_faithfulness(game, surrogate, p):
    """F_p(nu, nu_hat) = sum_M p^|M| (1-p)^(n-|M|) (nu(M) - nu_hat(M))^2."""
    p = check_p(p)
    if surrogate.space != game.space:
        raise SpaceMismatchError(
            f"game has space {game.space}, surrogate has {surrogate.space}"
        )
    n = game.space.n
    guard_enumeration(n)
    total = 0.0
    for _, ints in _blocks(n):
        bits = ints_to_matrix(ints, n)
        resid = game.evaluate_matrix(bits) - surrogate.evaluate_matrix(bits)
        total += float(_mask_weights(popcounts(ints), n, p) @ np.square(resid))
    return total
