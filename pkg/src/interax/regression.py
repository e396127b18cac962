"""Weighted least squares fitting of order-2 explanations from mask samples.

The design matrix is never materialized whole: Gram and moment terms are
accumulated over row blocks, so batches of ~10^6 masks stay affordable.
For the weighted-Banzhaf kernel the rows carry uniform weight because the
sampling distribution already realizes P_p; the Shapley kernel weights rows
by coalition size and treats the empty and full masks as equality
constraints (or as large finite weights, behind a switch).
"""

import math

import numpy as np
import scipy.linalg

from .errors import IllPosedFitError, SpaceMismatchError, ValidationError
from .explanations import (
    KERNEL_SHAPLEY,
    KERNEL_WEIGHTED_BANZHAF,
    BasisSpec,
    Explanation,
    first_order_conversion,
)
from .games import check_p, mask_matrix, matrix_to_ints
from .sampling import SampleBatch

__all__ = [
    "fit",
    "select_clique",
    "shapley_kernel_weight",
    "first_order_conversion",
]

_BLOCK_ROWS = 4096
_CONDITION_LIMIT = 1e10
# Penalty-mode stand-in for the boundary constraints, relative to the largest
# interior weight.
_PENALTY_FACTOR = 1e8


def shapley_kernel_weight(s, n):
    """Shapley kernel weight for coalition size s out of n tokens.

    Interior sizes get (n-1) / (C(n,s) * s * (n-s)); the boundary sizes 0 and
    n are returned as inf, signalling "handle as a hard constraint".
    """
    s, n = int(s), int(n)
    if not 0 <= s <= n:
        raise ValidationError(f"coalition size {s} outside [0, {n}]")
    if s == 0 or s == n:
        return math.inf
    return (n - 1) / (math.comb(n, s) * s * (n - s))


def _ceil_div(a, b):
    return -(-a // b)


def _top_abs(values, count):
    # descending |value|, ties resolved toward the lower index
    values = np.asarray(values, dtype=np.float64)
    order = np.lexsort((np.arange(values.size), -np.abs(values)))
    return np.sort(order[:count])


def select_clique(first_order, space, k):
    """Basis restricted to the k tokens with the largest |attribution|.

    The clique budget splits as k_T = max(5, ceil(k * n_T / n)) text tokens
    and k_I = k - k_T image tokens, each capped at its modality size with the
    surplus moved to the other side.  Singles stay unrestricted; only pairs
    are filtered.
    """
    k = int(k)
    if k < 6:
        raise ValidationError(f"clique size must be at least 6 (5 text + 1 image), got {k}")
    if k > space.n:
        raise ValidationError(f"clique size {k} exceeds {space.n} tokens")
    first_order = np.asarray(first_order, dtype=np.float64)
    if first_order.shape != (space.n,):
        raise ValidationError(f"need one attribution per token, got shape {first_order.shape}")

    k_text = max(5, _ceil_div(k * space.n_text, space.n))
    k_image = k - k_text
    # the formula can overshoot a small modality; cap and hand the rest over
    if k_text > space.n_text:
        k_image += k_text - space.n_text
        k_text = space.n_text
    if k_image > space.n_image:
        k_text = min(space.n_text, k_text + (k_image - space.n_image))
        k_image = space.n_image

    img, txt = space.modality_slices()
    image_members = _top_abs(first_order[img], k_image)
    text_members = space.n_image + _top_abs(first_order[txt], k_text)
    return BasisSpec.clique(space, np.concatenate([image_members, text_members]))


def _batch_matrix(batch, space):
    if isinstance(batch, SampleBatch):
        if batch.space != space:
            raise SpaceMismatchError("batch and basis use different player spaces")
        return batch.matrix
    return mask_matrix(batch, space)


def _solve_gram(gram, moment, size):
    """Solve G e = b, reporting condition and falling back past the limit."""
    anorm = np.linalg.norm(gram, 1)
    chol, info = scipy.linalg.lapack.dpotrf(gram, lower=0)
    if info == 0:
        rcond, _ = scipy.linalg.lapack.dpocon(chol, anorm, uplo=b"U")
        if rcond > 1.0 / _CONDITION_LIMIT:
            coef = scipy.linalg.cho_solve((chol, False), moment)
            return coef, 1.0 / max(rcond, np.finfo(float).tiny)
    # not positive definite or too ill-conditioned: inspect the spectrum
    eigvals, eigvecs = np.linalg.eigh(gram)
    top = eigvals[-1]
    if top <= 0:
        raise IllPosedFitError("all-zero design", deficiency=size)
    keep = eigvals > top / _CONDITION_LIMIT
    rank = int(np.count_nonzero(keep))
    if rank < size:
        raise IllPosedFitError(
            f"design matrix rank {rank} < basis size {size}", deficiency=size - rank
        )
    coef = eigvecs @ ((eigvecs.T @ moment) / eigvals)
    return coef, float(top / eigvals[0])


def _solve_constrained(gram, moment, con_rows, con_vals, size):
    """KKT system for min ||W^(1/2)(Xe - y)|| s.t. (con_rows) e = con_vals."""
    c = con_rows.shape[0]
    kkt = np.zeros((size + c, size + c))
    kkt[:size, :size] = gram
    kkt[:size, size:] = con_rows.T
    kkt[size:, :size] = con_rows
    rhs = np.concatenate([moment, con_vals])
    coef, _, rank, _ = np.linalg.lstsq(kkt, rhs, rcond=None)
    if rank < size + c:
        raise IllPosedFitError(
            f"constrained system rank {rank} < {size + c}", deficiency=size + c - rank
        )
    svals = np.abs(np.linalg.eigvalsh(kkt))
    cond = float(svals[-1] / max(svals[0], np.finfo(float).tiny))
    if cond > _CONDITION_LIMIT ** 2:
        raise IllPosedFitError("constrained system numerically singular", deficiency=0)
    return coef[:size], cond


def fit(
    batch,
    values,
    basis,
    kernel=KERNEL_WEIGHTED_BANZHAF,
    p=None,
    row_weights=None,
    boundary="constrain",
):
    """Fit an explanation to observed game values at sampled masks.

    batch may be a SampleBatch or anything mask_matrix accepts.  For the
    weighted-Banzhaf kernel, pass the p the batch was sampled under (stored
    on the result and used by first-order conversion); rows are equally
    weighted unless explicit ``row_weights`` are given.  For the Shapley
    kernel, rows are kernel-weighted by coalition size and the empty/full
    masks are enforced exactly (boundary="constrain") or via a large finite
    weight (boundary="penalty").
    """
    matrix = _batch_matrix(batch, basis.space)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (matrix.shape[0],):
        raise ValidationError(
            f"got {values.shape} values for {matrix.shape[0]} masks"
        )
    if values.size == 0:
        raise ValidationError("cannot fit to an empty batch")
    n = basis.space.n
    size = basis.size

    if kernel == KERNEL_WEIGHTED_BANZHAF:
        p = check_p(p)
        weights = row_weights
    elif kernel == KERNEL_SHAPLEY:
        if p is not None:
            raise ValidationError("the Shapley kernel takes no p parameter")
        if row_weights is not None:
            raise ValidationError("row_weights conflict with the Shapley kernel")
        if boundary not in ("constrain", "penalty"):
            raise ValidationError(f"unknown boundary mode {boundary!r}")
        weights = _shapley_row_weights(matrix, n, boundary)
    else:
        raise ValidationError(f"unknown kernel {kernel!r}")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (matrix.shape[0],):
            raise ValidationError("row_weights must align with the batch")

    interior = np.ones(matrix.shape[0], dtype=bool)
    constraints = None
    if kernel == KERNEL_SHAPLEY and boundary == "constrain":
        sizes = matrix.sum(axis=1)
        boundary_rows = (sizes == 0) | (sizes == n)
        if boundary_rows.any():
            interior = ~boundary_rows
            constraints = _boundary_constraints(matrix[boundary_rows], values[boundary_rows], basis)

    gram = np.zeros((size, size))
    moment = np.zeros(size)
    for lo in range(0, matrix.shape[0], _BLOCK_ROWS):
        hi = min(lo + _BLOCK_ROWS, matrix.shape[0])
        rows = interior[lo:hi]
        design = basis.design_matrix(matrix[lo:hi][rows])
        y = values[lo:hi][rows]
        if weights is None:
            gram += design.T @ design
            moment += design.T @ y
        else:
            w = weights[lo:hi][rows]
            weighted = design * w[:, None]
            gram += weighted.T @ design
            moment += weighted.T @ y

    if constraints is None:
        coef, cond = _solve_gram(gram, moment, size)
    else:
        con_rows, con_vals = constraints
        coef, cond = _solve_constrained(gram, moment, con_rows, con_vals, size)

    explanation = Explanation.from_coefficients(
        basis,
        coef,
        kernel=kernel,
        p=p if kernel == KERNEL_WEIGHTED_BANZHAF else None,
    )
    explanation.diagnostics = _diagnostics(explanation, matrix, values, cond)
    return explanation


def _shapley_row_weights(matrix, n, boundary):
    sizes = matrix.sum(axis=1)
    weights = np.zeros(matrix.shape[0])
    inner = (sizes > 0) & (sizes < n)
    if inner.any():
        s = sizes[inner]
        comb = np.array([math.comb(n, int(v)) for v in s], dtype=np.float64)
        weights[inner] = (n - 1) / (comb * s * (n - s))
    if boundary == "penalty":
        cap = weights.max() if inner.any() else 1.0
        weights[~inner] = cap * _PENALTY_FACTOR
    # constrain mode leaves boundary rows at weight 0; they become equality
    # constraints in fit() instead
    return weights


def _boundary_constraints(rows, row_values, basis):
    # one constraint per distinct boundary mask, valued at the mean observation
    design = basis.design_matrix(rows)
    empty = rows.sum(axis=1) == 0
    con_rows, con_vals = [], []
    for sel in (empty, ~empty):
        if sel.any():
            con_rows.append(design[sel][0])
            con_vals.append(row_values[sel].mean())
    return np.stack(con_rows), np.array(con_vals)


def _diagnostics(explanation, matrix, values, cond):
    resid = values - explanation.evaluate_matrix(matrix)
    diag = {
        "residual_mse": float(np.mean(np.square(resid))),
        "condition_estimate": float(cond),
        "sample_count": int(matrix.shape[0]),
    }
    if matrix.shape[1] <= 62:
        diag["distinct_masks"] = int(np.unique(matrix_to_ints(matrix)).size)
    return diag
