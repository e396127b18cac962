"""Order-2 explanations: a constant, per-token values, and pair interactions.

An explanation is defined over a basis (which pairs it may use) and a kernel
(which weighting it was optimized for).  Evaluating an explanation at a mask
treats it as a 2-additive game restricted to its basis.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SpaceMismatchError, UnsupportedConversionError, ValidationError
from .games import PlayerSpace, TwoAdditiveGame, mask_matrix

SCHEMA_VERSION = 1

KERNEL_WEIGHTED_BANZHAF = "wbanzhaf"
KERNEL_SHAPLEY = "shapley"


def _all_pairs(n):
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


@dataclass(frozen=True)
class BasisSpec:
    """The resolved basis: always the constant and all singles, plus ``pairs``.

    ``kind`` records how the pair set was chosen: "full" (all pairs),
    "clique" (pairs within a selected token subset), "cross-modal" (only
    image--text pairs), or "first-order" (no pairs).
    """

    space: PlayerSpace
    kind: str
    pairs: tuple

    def __post_init__(self):
        n = self.space.n
        seen = set()
        for i, j in self.pairs:
            if not (0 <= i < j < n):
                raise ValidationError(f"basis pair ({i}, {j}) must satisfy 0 <= i < j < {n}")
            if (i, j) in seen:
                raise ValidationError(f"duplicate basis pair ({i}, {j})")
            seen.add((i, j))
        if list(self.pairs) != sorted(self.pairs):
            raise ValidationError("basis pairs must be sorted lexicographically")

    @classmethod
    def full(cls, space):
        return cls(space, "full", _all_pairs(space.n))

    @classmethod
    def cross_modal(cls, space):
        pairs = tuple(
            (i, j) for i in space.image_indices for j in space.text_indices
        )
        return cls(space, "cross-modal", pairs)

    @classmethod
    def first_order(cls, space):
        return cls(space, "first-order", ())

    @classmethod
    def clique(cls, space, members):
        members = sorted(set(int(i) for i in members))
        for i in members:
            if not 0 <= i < space.n:
                raise ValidationError(f"clique member {i} outside [0, {space.n})")
        pairs = tuple(
            (members[a], members[b])
            for a in range(len(members))
            for b in range(a + 1, len(members))
        )
        return cls(space, "clique", pairs)

    @property
    def size(self):
        """1 (constant) + n (singles) + number of pairs."""
        return 1 + self.space.n + len(self.pairs)

    def pair_columns(self):
        """Mapping pair -> column index in the design/coefficient vector."""
        offset = 1 + self.space.n
        return {pair: offset + k for k, pair in enumerate(self.pairs)}

    def design_matrix(self, mat):
        """Design rows for a boolean mask matrix: [1, mask, pair products]."""
        m = np.asarray(mat, dtype=np.float64)
        cols = [np.ones((m.shape[0], 1)), m]
        if self.pairs:
            left = np.fromiter((p[0] for p in self.pairs), dtype=np.int64, count=len(self.pairs))
            right = np.fromiter((p[1] for p in self.pairs), dtype=np.int64, count=len(self.pairs))
            cols.append(m[:, left] * m[:, right])
        return np.concatenate(cols, axis=1)


@dataclass
class Explanation:
    """Fitted (or exact) order-2 explanation over a basis.

    ``pair_values[k]`` belongs to ``basis.pairs[k]``; pairs outside the basis
    are semantically zero.  ``kernel`` is "wbanzhaf" (requires ``p``) or
    "shapley" (``p`` is None).
    """

    space: PlayerSpace
    basis: BasisSpec
    constant: float
    singles: np.ndarray
    pair_values: np.ndarray
    kernel: str = KERNEL_WEIGHTED_BANZHAF
    p: float | None = None
    diagnostics: dict | None = field(default=None)

    def __post_init__(self):
        if self.basis.space != self.space:
            raise SpaceMismatchError("basis and explanation use different player spaces")
        self.singles = np.asarray(self.singles, dtype=np.float64)
        self.pair_values = np.asarray(self.pair_values, dtype=np.float64)
        if self.singles.shape != (self.space.n,):
            raise ValidationError(f"singles must have length {self.space.n}")
        if self.pair_values.shape != (len(self.basis.pairs),):
            raise ValidationError("pair_values must align with basis.pairs")
        if self.kernel == KERNEL_WEIGHTED_BANZHAF:
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ValidationError("weighted-Banzhaf explanations need p in (0, 1)")
        elif self.kernel != KERNEL_SHAPLEY:
            raise ValidationError(f"unknown kernel {self.kernel!r}")

    @classmethod
    def from_coefficients(cls, basis, coefficients, kernel=KERNEL_WEIGHTED_BANZHAF, p=None, diagnostics=None):
        """Unpack a stacked coefficient vector [e0, singles..., pairs...]."""
        coefficients = np.asarray(coefficients, dtype=np.float64)
        if coefficients.shape != (basis.size,):
            raise ValidationError(f"expected {basis.size} coefficients, got {coefficients.shape}")
        n = basis.space.n
        return cls(
            space=basis.space,
            basis=basis,
            constant=float(coefficients[0]),
            singles=coefficients[1 : 1 + n],
            pair_values=coefficients[1 + n :],
            kernel=kernel,
            p=p,
            diagnostics=diagnostics,
        )

    def coefficients(self):
        return np.concatenate(([self.constant], self.singles, self.pair_values))

    def pair_value(self, i, j):
        if i > j:
            i, j = j, i
        col = self.basis.pair_columns().get((i, j))
        if col is None:
            return 0.0
        return float(self.pair_values[col - 1 - self.space.n])

    def interaction_matrix(self):
        """Symmetric (n, n) matrix of pair values, zero off-basis and on the diagonal."""
        n = self.space.n
        mat = np.zeros((n, n))
        for (i, j), v in zip(self.basis.pairs, self.pair_values):
            mat[i, j] = v
            mat[j, i] = v
        return mat

    def evaluate_matrix(self, mat):
        m = np.asarray(mat, dtype=np.float64)
        out = self.constant + m @ self.singles
        if len(self.basis.pairs):
            out = out + 0.5 * np.einsum("ri,ij,rj->r", m, self.interaction_matrix(), m)
        return out

    def evaluate(self, masks):
        return self.evaluate_matrix(mask_matrix(masks, self.space))

    def to_game(self):
        """View this explanation as a 2-additive game."""
        return TwoAdditiveGame(self.space, self.constant, self.singles, self.interaction_matrix())

    def without_interactions(self):
        """Copy with every pair value zeroed (basis unchanged)."""
        return Explanation(
            space=self.space,
            basis=self.basis,
            constant=self.constant,
            singles=self.singles.copy(),
            pair_values=np.zeros_like(self.pair_values),
            kernel=self.kernel,
            p=self.p,
            diagnostics=None,
        )

    def scaled(self, factor):
        return Explanation(
            space=self.space,
            basis=self.basis,
            constant=self.constant * factor,
            singles=self.singles * factor,
            pair_values=self.pair_values * factor,
            kernel=self.kernel,
            p=self.p,
            diagnostics=None,
        )

    def to_json_dict(self, extra=None):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "space": {"n_image": self.space.n_image, "n_text": self.space.n_text},
            "p": self.p,
            "kernel": self.kernel,
            "basis": self.basis.kind,
            "e0": self.constant,
            "singles": [[i, float(v)] for i, v in enumerate(self.singles)],
            "pairs": [
                [i, j, float(v)] for (i, j), v in zip(self.basis.pairs, self.pair_values)
            ],
            "diagnostics": self.diagnostics or {},
        }
        if extra:
            doc.update(extra)
        return doc

    @classmethod
    def from_json_dict(cls, doc):
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported explanation schema_version {version!r}, expected {SCHEMA_VERSION}"
            )
        space = PlayerSpace(doc["space"]["n_image"], doc["space"]["n_text"])
        singles = np.zeros(space.n)
        for i, v in doc["singles"]:
            singles[i] = v
        pairs = tuple((int(i), int(j)) for i, j, _ in doc["pairs"])
        basis = BasisSpec(space, doc["basis"], pairs)
        values = np.array([v for _, _, v in doc["pairs"]], dtype=np.float64)
        return cls(
            space=space,
            basis=basis,
            constant=float(doc["e0"]),
            singles=singles,
            pair_values=values,
            kernel=doc["kernel"],
            p=doc["p"],
            diagnostics=doc.get("diagnostics") or None,
        )

    def save(self, path, extra=None):
        with open(path, "w") as fh:
            fh.write(dumps_canonical(self.to_json_dict(extra=extra)))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def dumps_canonical(doc):
    """Deterministic JSON rendering (sorted keys, shortest-round-trip floats)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def first_order_conversion(explanation):
    """Collapse an order-2 explanation to per-token attributions.

    For a weighted-Banzhaf explanation with parameter p the attribution of
    token i is ``e_i + p * sum_j e_{i,j}`` over basis pairs, which equals the
    weighted Banzhaf value of the explanation viewed as a game.  Not defined
    for Shapley-kernel explanations.
    """
    if explanation.kernel != KERNEL_WEIGHTED_BANZHAF:
        raise UnsupportedConversionError(
            f"first-order conversion requires the weighted-Banzhaf kernel, got {explanation.kernel!r}"
        )
    return explanation.singles + explanation.p * explanation.interaction_matrix().sum(axis=1)
