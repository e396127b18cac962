"""Explanation quality metrics: rank correlation, insertion/deletion area,
and pointing-game recognition, plus the greedy extremal-subset search they
share.

Greedy tie-breaking is deterministic (lowest token index wins) and the
minimizing direction is implemented as maximization of the negated
explanation, so negating an explanation swaps the two searches exactly.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DegenerateNormalizationError,
    UndefinedMetricError,
    ValidationError,
)
from .explanations import first_order_conversion
from .games import Mask, check_p
from .rng import stream

# Fractions of the token count at which normalized curves are reported.
CURVE_GRID = np.linspace(0.0, 1.0, 51)
# Above this many tokens, greedy restarts seed from every other token only.
FULL_SEEDING_LIMIT = 120

CURVE_CSV_SCHEMA_VERSION = 1


def faithfulness_correlation(explanation, game, p, m=1000, seed=0):
    """Spearman rank correlation between nu and nu_hat over m P_p draws.

    Ties get average ranks.  A constant rank vector on either side leaves the
    correlation undefined and raises rather than returning NaN.
    """
    p = check_p(p)
    m = int(m)
    if m < 2:
        raise ValidationError(f"need at least 2 evaluation masks, got {m}")
    rng = stream(seed, "eval")
    matrix = rng.random((m, game.space.n)) < p
    ranks_nu = rankdata(game.evaluate_matrix(matrix))
    ranks_hat = rankdata(explanation.evaluate_matrix(matrix))
    sd_nu = ranks_nu.std()
    sd_hat = ranks_hat.std()
    if sd_nu == 0.0 or sd_hat == 0.0:
        raise UndefinedMetricError(
            "rank correlation undefined: a rank vector has zero variance"
        )
    cov = np.mean((ranks_nu - ranks_nu.mean()) * (ranks_hat - ranks_hat.mean()))
    return float(cov / (sd_nu * sd_hat))


def _default_seeds(n):
    step = 1 if n <= FULL_SEEDING_LIMIT else 2
    return range(0, n, step)


def _greedy_maximize(constant, singles, interactions, seeds):
    """Best mask per size via greedy forward selection from each seed token.

    Returns (values, masks): arrays indexed by size-1.  Appending token t to
    set M changes the surrogate by singles[t] + sum_{j in M} interactions[t, j],
    so gains update incrementally.
    """
    n = singles.size
    best_values = np.full(n, -np.inf)
    best_masks = np.zeros(n, dtype=np.int64)
    for seed_token in seeds:
        active = np.zeros(n, dtype=bool)
        active[seed_token] = True
        bits = np.int64(1) << seed_token
        value = constant + singles[seed_token]
        gains = singles + interactions[:, seed_token]
        if value > best_values[0]:
            best_values[0] = value
            best_masks[0] = bits
        for size in range(2, n + 1):
            candidate_gains = np.where(active, -np.inf, gains)
            t = int(np.argmax(candidate_gains))
            active[t] = True
            bits |= np.int64(1) << t
            value += gains[t]
            gains = gains + interactions[:, t]
            if value > best_values[size - 1]:
                best_values[size - 1] = value
                best_masks[size - 1] = bits
    return best_values, best_masks


def greedy_extremal_subsets(explanation, direction, seeds=None):
    """Per-size extremal masks of the surrogate: {k: Mask} for k = 1..n.

    Restarts from every token (every other token above FULL_SEEDING_LIMIT,
    unless explicit seeds are given) and keeps the best subset found per
    size; masks of different sizes need not be nested.
    """
    if direction not in ("max", "min"):
        raise ValidationError(f"direction must be 'max' or 'min', got {direction!r}")
    n = explanation.space.n
    sign = 1.0 if direction == "max" else -1.0
    singles = sign * explanation.singles
    interactions = sign * explanation.interaction_matrix()
    if seeds is None:
        seeds = _default_seeds(n)
    _, masks = _greedy_maximize(sign * explanation.constant, singles, interactions, seeds)
    return {k: Mask(int(masks[k - 1]), n) for k in range(1, n + 1)}


@dataclass
class CurveSet:
    """Insertion/deletion curves of one explanation against one game.

    ``insertion[k-1]`` is (k, nu(M_max_k)); ``deletion[k-1]`` is
    (k, nu(M_min_{n-k})), i.e. the value after deleting k tokens.  Normalized
    variants live on the 51-point fraction grid with nu(full) at 1 and
    nu(empty) at 0 (values may leave [0, 1]).
    """

    insertion: list
    deletion: list
    insertion_masks: dict
    deletion_masks: dict
    grid: np.ndarray
    insertion_norm: np.ndarray | None
    deletion_norm: np.ndarray | None
    aid: float
    value_empty: float
    value_full: float

    def raw_on_grid(self):
        n = len(self.insertion)
        fractions = np.arange(n + 1) / n
        ins = np.concatenate([[self.value_empty], [v for _, v in self.insertion]])
        dele = np.concatenate([[self.value_full], [v for _, v in self.deletion]])
        return (
            np.interp(self.grid, fractions, ins),
            np.interp(self.grid, fractions, dele),
        )

    def write_csv(self, fh):
        ins_raw, del_raw = self.raw_on_grid()
        none = [""] * self.grid.size
        ins_norm = self.insertion_norm if self.insertion_norm is not None else none
        del_norm = self.deletion_norm if self.deletion_norm is not None else none
        fh.write(f"# curve_csv schema_version={CURVE_CSV_SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["fraction", "insertion_raw", "deletion_raw", "insertion_norm", "deletion_norm"]
        )
        for row in zip(self.grid, ins_raw, del_raw, ins_norm, del_norm):
            writer.writerow(list(row))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)


def insertion_deletion(explanation, game, seeds=None):
    """Greedy insertion/deletion curves and their area difference (AID).

    aid = sum_k nu(M_max_k) - nu(M_min_k): the gap between inserting the most
    helpful k tokens and keeping the least helpful k, summed over k.  Raises
    DegenerateNormalizationError when nu(full) = nu(empty); the raw curves
    ride along on the exception.
    """
    n = explanation.space.n
    max_masks = greedy_extremal_subsets(explanation, "max", seeds=seeds)
    min_masks = greedy_extremal_subsets(explanation, "min", seeds=seeds)
    min_masks[0] = Mask.empty(n)

    value_empty, value_full = game.evaluate([Mask.empty(n), Mask.full(n)])
    max_values = game.evaluate([max_masks[k] for k in range(1, n + 1)])
    min_values = game.evaluate([min_masks[k] for k in range(0, n + 1)])

    insertion = [(k, float(max_values[k - 1])) for k in range(1, n + 1)]
    deletion = [(k, float(min_values[n - k])) for k in range(1, n + 1)]
    aid = float(np.sum(max_values - min_values[1:]))

    curves = CurveSet(
        insertion=insertion,
        deletion=deletion,
        insertion_masks=max_masks,
        deletion_masks={k: min_masks[n - k] for k in range(1, n + 1)},
        grid=CURVE_GRID.copy(),
        insertion_norm=None,
        deletion_norm=None,
        aid=aid,
        value_empty=float(value_empty),
        value_full=float(value_full),
    )
    span = curves.value_full - curves.value_empty
    if span == 0.0:
        raise DegenerateNormalizationError(
            "cannot normalize curves: nu(full set) equals nu(empty set)", curves=curves
        )
    ins_raw, del_raw = curves.raw_on_grid()
    curves.insertion_norm = (ins_raw - curves.value_empty) / span
    curves.deletion_norm = (del_raw - curves.value_empty) / span
    return curves


@dataclass(frozen=True)
class PointingGameSpec:
    """Ground-truth objects: per object, its text tokens and image patches.

    Indices are modality-local (text token j means the j-th explainable text
    token; image patch i the i-th image token).  Index sets must be disjoint
    within each modality; unassigned patches belong to no object and are
    ignored by the metric.
    """

    objects: tuple

    def __post_init__(self):
        if not self.objects:
            raise ValidationError("pointing spec needs at least one object")
        seen_text, seen_image = set(), set()
        for text_tokens, image_patches in self.objects:
            if not text_tokens or not image_patches:
                raise ValidationError("each object needs >= 1 text token and >= 1 image patch")
            for t in text_tokens:
                if t in seen_text:
                    raise ValidationError(f"text token {t} assigned to two objects")
                seen_text.add(t)
            for i in image_patches:
                if i in seen_image:
                    raise ValidationError(f"image patch {i} assigned to two objects")
                seen_image.add(i)

    @classmethod
    def from_json_dict(cls, doc):
        return cls(
            tuple(
                (tuple(obj["text_tokens"]), tuple(obj["image_patches"]))
                for obj in doc["objects"]
            )
        )

    def to_json_dict(self):
        return {
            "objects": [
                {"text_tokens": list(t), "image_patches": list(i)}
                for t, i in self.objects
            ]
        }

    def check_space(self, space):
        for text_tokens, image_patches in self.objects:
            if any(not 0 <= t < space.n_text for t in text_tokens):
                raise ValidationError("text token index outside the player space")
            if any(not 0 <= i < space.n_image for i in image_patches):
                raise ValidationError("image patch index outside the player space")


def pointing_game_recognition(explanation, spec, first_order_fallback=False):
    """Share of cross-modal interaction mass placed correctly.

    For each object: in-pairs link its text tokens to its own image patches,
    out-pairs link them to other objects' patches.  The score is
    (L1 of positive in-values + L1 of negative out-values) / (L1 of all
    in/out values).  Intra-modal pairs and singles never enter.  With
    ``first_order_fallback`` the pair values of an interaction-free
    explanation are replaced by products of its per-token attributions
    (off by default; changes the metric's meaning).
    """
    space = explanation.space
    spec.check_space(space)
    pair_matrix = explanation.interaction_matrix()
    if first_order_fallback and not np.any(explanation.pair_values):
        phi = first_order_conversion(explanation)
        pair_matrix = np.outer(phi, phi)

    numerator = 0.0
    denominator = 0.0
    all_patches = [set(img) for _, img in spec.objects]
    for k, (text_tokens, image_patches) in enumerate(spec.objects):
        own = set(image_patches)
        others = set().union(*(s for j, s in enumerate(all_patches) if j != k))
        for t in text_tokens:
            row = pair_matrix[space.n_image + t]
            for i in own:
                v = row[i]
                denominator += abs(v)
                if v > 0:
                    numerator += v
            for i in others:
                v = row[i]
                denominator += abs(v)
                if v < 0:
                    numerator += -v
    if denominator == 0.0:
        raise UndefinedMetricError(
            "pointing-game score undefined: no cross-modal interaction mass on object pairs"
        )
    return float(numerator / denominator)
