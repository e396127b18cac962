"""Mask sampling under P_p and Monte Carlo estimation of p-faithfulness.

Two modes.  Naive: m i.i.d. masks from the product-Bernoulli distribution
P_p over all tokens.  Cross-modal: m_I image-side masks and m_T text-side
masks drawn from independent sub-streams, combined into all m_I*m_T unions;
each emitted mask is marginally P_p-distributed, and a game that factors
through per-side encodings needs only m_I + m_T side encodings instead of
m_I*m_T.

Duplicate masks are kept, never deduplicated: the estimators are plain means
over draws, and dropping repeats would reweight them.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SpaceMismatchError, ValidationError
from .games import Mask, PlayerSpace, check_p, matrix_to_ints
from .rng import stream

MODE_NAIVE = "naive"
MODE_CROSS_MODAL = "cross-modal"


def split_budget(space, m):
    """Split a total budget m into per-side pool sizes (m_I, m_T).

    m_T = min(2^n_T, max(4, ceil(sqrt(m) * n_T / n_I)))
    m_I = min(2^n_I, max(4, floor(sqrt(m) * n_I / n_T)))

    The ceil/floor asymmetry is intentional and kept verbatim; when a cap or
    floor binds, m_I * m_T may undershoot m and no re-balancing is applied.
    """
    m = int(m)
    if m < 16:
        raise ValidationError(f"cross-modal budget must be at least 16, got {m}")
    root = math.isqrt(m)
    if root * root == m:
        # exact arithmetic so integer-valued ratios round predictably
        raw_t = math.ceil(Fraction(root * space.n_text, space.n_image))
        raw_i = math.floor(Fraction(root * space.n_image, space.n_text))
    else:
        s = math.sqrt(m)
        raw_t = math.ceil(s * space.n_text / space.n_image)
        raw_i = math.floor(s * space.n_image / space.n_text)
    m_text = min(1 << space.n_text, max(4, raw_t))
    m_image = min(1 << space.n_image, max(4, raw_i))
    return m_image, m_text


@dataclass(frozen=True)
class SamplePlan:
    """Everything needed to reproduce one sampling run.

    For cross-modal plans, either give the total budget ``m`` (the split is
    derived) or pass ``m_image``/``m_text`` explicitly.
    """

    space: PlayerSpace
    p: float
    mode: str
    seed: int
    m: int | None = None
    m_image: int | None = None
    m_text: int | None = None

    def __post_init__(self):
        check_p(self.p)
        if self.mode == MODE_NAIVE:
            if self.m is None or self.m < 1:
                raise ValidationError("naive plans need a positive budget m")
            if self.m_image is not None or self.m_text is not None:
                raise ValidationError("per-side pool sizes only apply to cross-modal plans")
        elif self.mode == MODE_CROSS_MODAL:
            if (self.m_image is None) != (self.m_text is None):
                raise ValidationError("give both m_image and m_text or neither")
            if self.m_image is None:
                if self.m is None:
                    raise ValidationError("cross-modal plans need m or explicit pool sizes")
                m_image, m_text = split_budget(self.space, self.m)
                object.__setattr__(self, "m_image", m_image)
                object.__setattr__(self, "m_text", m_text)
            if self.m_image < 1 or self.m_text < 1:
                raise ValidationError("pool sizes must be positive")
        else:
            raise ValidationError(f"unknown sampling mode {self.mode!r}")

    @property
    def batch_size(self):
        if self.mode == MODE_NAIVE:
            return self.m
        return self.m_image * self.m_text


class SampleBatch:
    """Sampled masks as a boolean matrix, plus cross-modal provenance.

    ``matrix`` has one mask per row.  In cross-modal mode ``pair_indices``
    holds the (image pool index, text pool index) per row, in image-major
    order, and the two pools are stored as full-width mask matrices with the
    other side's bits all zero.
    """

    def __init__(self, space, matrix, pair_indices=None, image_pool=None, text_pool=None):
        self.space = space
        self.matrix = np.asarray(matrix, dtype=bool)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != space.n:
            raise ValidationError(f"batch matrix must be (m, {space.n})")
        self.pair_indices = pair_indices
        self.image_pool = image_pool
        self.text_pool = text_pool

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def is_cross_modal(self):
        return self.pair_indices is not None

    def masks(self):
        return [Mask(int(b), self.space.n) for b in matrix_to_ints(self.matrix)]

    def write_jsonl(self, fh):
        """One JSON object per mask: bitstring plus provenance if present."""
        ints = matrix_to_ints(self.matrix)
        for r in range(len(self)):
            rec = {"mask": Mask(int(ints[r]), self.space.n).to_bitstring()}
            if self.is_cross_modal:
                rec["image_index"] = int(self.pair_indices[r, 0])
                rec["text_index"] = int(self.pair_indices[r, 1])
            fh.write(json.dumps(rec) + "\n")

    def save_jsonl(self, path):
        with open(path, "w") as fh:
            self.write_jsonl(fh)

    @classmethod
    def load_jsonl(cls, path, space):
        rows, pairs = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                rows.append(Mask.from_bitstring(rec["mask"]).to_array())
                if "image_index" in rec:
                    pairs.append((rec["image_index"], rec["text_index"]))
        matrix = np.array(rows, dtype=bool).reshape(len(rows), space.n)
        if not pairs:
            return cls(space, matrix)
        if len(pairs) != len(rows):
            raise ValidationError("mixed provenance: some lines lack pool indices")
        pair_indices = np.array(pairs, dtype=np.int64)
        image_pool, text_pool = _pools_from_unions(space, matrix, pair_indices)
        return cls(space, matrix, pair_indices, image_pool, text_pool)


def _pools_from_unions(space, matrix, pair_indices):
    # Sides are disjoint bit ranges, so each pool element can be read back
    # from any union row that used it by zeroing the other side.
    img, txt = space.modality_slices()
    image_pool = np.zeros((int(pair_indices[:, 0].max()) + 1, space.n), dtype=bool)
    text_pool = np.zeros((int(pair_indices[:, 1].max()) + 1, space.n), dtype=bool)
    image_pool[pair_indices[:, 0], img] = matrix[:, img]
    text_pool[pair_indices[:, 1], txt] = matrix[:, txt]
    return image_pool, text_pool


def sample_naive(plan):
    """m i.i.d. masks from P_p: each token active independently with prob p."""
    if plan.mode != MODE_NAIVE:
        raise ValidationError(f"plan mode is {plan.mode!r}, expected {MODE_NAIVE!r}")
    rng = stream(plan.seed, "naive")
    matrix = rng.random((plan.m, plan.space.n)) < plan.p
    return SampleBatch(plan.space, matrix)


def sample_cross_modal(plan):
    """All m_I*m_T unions of independently drawn per-side mask pools."""
    if plan.mode != MODE_CROSS_MODAL:
        raise ValidationError(f"plan mode is {plan.mode!r}, expected {MODE_CROSS_MODAL!r}")
    space = plan.space
    img, txt = space.modality_slices()
    image_pool = np.zeros((plan.m_image, space.n), dtype=bool)
    text_pool = np.zeros((plan.m_text, space.n), dtype=bool)
    image_pool[:, img] = stream(plan.seed, "image").random((plan.m_image, space.n_image)) < plan.p
    text_pool[:, txt] = stream(plan.seed, "text").random((plan.m_text, space.n_text)) < plan.p

    li = np.repeat(np.arange(plan.m_image, dtype=np.int64), plan.m_text)
    lt = np.tile(np.arange(plan.m_text, dtype=np.int64), plan.m_image)
    matrix = image_pool[li] | text_pool[lt]
    pair_indices = np.stack([li, lt], axis=1)
    return SampleBatch(space, matrix, pair_indices, image_pool, text_pool)


def sample(plan):
    if plan.mode == MODE_NAIVE:
        return sample_naive(plan)
    return sample_cross_modal(plan)


def estimate_p_faithfulness(game, surrogate, plan):
    """Monte Carlo estimate of F_p: mean squared residual over the batch.

    Unbiased in both modes; the cross-modal batch reuses side draws, which
    correlates its summands but leaves the mean untouched.
    """
    if surrogate.space != game.space or plan.space != game.space:
        raise SpaceMismatchError("game, surrogate, and plan must share one player space")
    batch = sample(plan)
    resid = game.evaluate_matrix(batch.matrix) - surrogate.evaluate_matrix(batch.matrix)
    return float(np.mean(np.square(resid)))
