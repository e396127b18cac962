"""Players, masks, and cooperative games over two-modality token sets.

A game assigns a real value to every subset of "players": the image tokens
and text tokens of one input pair.  Token ``i`` occupies bit ``i`` of a mask,
with image tokens in the low bits (``0 .. n_image-1``) and text tokens in the
high bits (``n_image .. n_image+n_text-1``).  This bit order is fixed and is
part of every serialization format in the package.
"""

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationGuardError, InvalidMaskError, SpaceMismatchError, ValidationError
from .rng import stream

# Exact, table-based code paths refuse spaces above this many players
# (2^24 = 16.7M evaluations keeps full enumeration desk-scale).
ENUMERATION_LIMIT = 24


@dataclass(frozen=True)
class PlayerSpace:
    """The index layout of one image--text input pair."""

    n_image: int
    n_text: int

    def __post_init__(self):
        if self.n_image < 1 or self.n_text < 1:
            raise ValidationError(
                f"need at least one token per modality, got n_image={self.n_image}, n_text={self.n_text}"
            )

    @property
    def n(self):
        return self.n_image + self.n_text

    @property
    def image_indices(self):
        return range(0, self.n_image)

    @property
    def text_indices(self):
        return range(self.n_image, self.n)

    def is_image(self, i):
        return 0 <= i < self.n_image

    def is_text(self, i):
        return self.n_image <= i < self.n

    def modality_slices(self):
        """(image, text) slices into a width-n mask vector."""
        return slice(0, self.n_image), slice(self.n_image, self.n)


@dataclass(frozen=True)
class Mask:
    """A subset of active tokens, stored as an integer bit pattern.

    Bit ``i`` set means token ``i`` is active (unmasked).  ``width`` pins the
    player-space size the mask was created under.
    """

    bits: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValidationError("mask width must be positive")
        if self.bits < 0 or self.bits >> self.width:
            raise InvalidMaskError(f"bit pattern {self.bits:#x} does not fit in width {self.width}")

    @classmethod
    def empty(cls, width):
        return cls(0, width)

    @classmethod
    def full(cls, width):
        return cls((1 << width) - 1, width)

    @classmethod
    def from_indices(cls, indices, width):
        bits = 0
        for i in indices:
            if not 0 <= i < width:
                raise InvalidMaskError(f"token index {i} outside [0, {width})")
            bits |= 1 << i
        return cls(bits, width)

    @classmethod
    def from_bitstring(cls, s):
        """Parse the wire format: '0'/'1' characters, index 0 leftmost."""
        if not s or set(s) - {"0", "1"}:
            raise InvalidMaskError(f"malformed mask bitstring {s!r}")
        bits = 0
        for i, c in enumerate(s):
            if c == "1":
                bits |= 1 << i
        return cls(bits, len(s))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=bool)
        bits = 0
        for i in np.flatnonzero(arr):
            bits |= 1 << int(i)
        return cls(bits, arr.shape[0])

    def to_bitstring(self):
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.width))

    def to_indices(self):
        return tuple(i for i in range(self.width) if self.bits >> i & 1)

    def to_array(self):
        return np.array([(self.bits >> i) & 1 for i in range(self.width)], dtype=bool)

    def popcount(self):
        return self.bits.bit_count()

    def contains(self, i):
        return bool(self.bits >> i & 1)

    def union(self, other):
        self._check_width(other)
        return Mask(self.bits | other.bits, self.width)

    def intersection(self, other):
        self._check_width(other)
        return Mask(self.bits & other.bits, self.width)

    def complement(self):
        return Mask(~self.bits & ((1 << self.width) - 1), self.width)

    def add(self, i):
        if not 0 <= i < self.width:
            raise InvalidMaskError(f"token index {i} outside [0, {self.width})")
        return Mask(self.bits | (1 << i), self.width)

    def _check_width(self, other):
        if self.width != other.width:
            raise InvalidMaskError(f"mask widths differ: {self.width} vs {other.width}")


def mask_matrix(masks, space):
    """Normalize masks to a boolean matrix of shape (m, space.n).

    Accepts a boolean/0-1 array, a single ``Mask``, or a sequence of ``Mask``.
    Raises ``InvalidMaskError`` on any width mismatch.
    """
    if isinstance(masks, Mask):
        masks = [masks]
    if isinstance(masks, np.ndarray):
        mat = np.atleast_2d(np.asarray(masks, dtype=bool))
        if mat.shape[1] != space.n:
            raise InvalidMaskError(f"mask width {mat.shape[1]} does not match space size {space.n}")
        return mat
    mat = np.zeros((len(masks), space.n), dtype=bool)
    for r, mask in enumerate(masks):
        if mask.width != space.n:
            raise InvalidMaskError(
                f"mask {r} has width {mask.width}, expected {space.n}"
            )
        mat[r] = mask.to_array()
    return mat


def matrix_to_ints(mat):
    """Row-wise bit patterns of a boolean mask matrix (token i -> bit i)."""
    mat = np.asarray(mat, dtype=bool)
    n = mat.shape[1]
    if n > 62:
        raise EnumerationGuardError(f"cannot pack {n}-player masks into int64")
    weights = (np.int64(1) << np.arange(n, dtype=np.int64))
    return mat @ weights


def ints_to_matrix(ints, n):
    ints = np.asarray(ints, dtype=np.int64)
    return (ints[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1 > 0


def enumerate_masks(n):
    """Boolean matrix of all 2^n masks in bit-pattern order."""
    guard_enumeration(n)
    return ints_to_matrix(np.arange(1 << n, dtype=np.int64), n)


def popcounts(ints):
    return np.bitwise_count(np.asarray(ints, dtype=np.int64)).astype(np.int64)


def guard_enumeration(n):
    if n > ENUMERATION_LIMIT:
        raise EnumerationGuardError(
            f"{n} players exceeds the {ENUMERATION_LIMIT}-player enumeration limit"
        )


def check_p(p):
    """Masking parameter must lie strictly inside (0, 1); the limits are rejected."""
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ValidationError(f"masking parameter p must be a number in (0, 1), got {p!r}") from None
    if not 0.0 < p < 1.0:
        raise ValidationError(f"masking parameter p must be in the open interval (0, 1), got {p}")
    return p


class GameOracle(ABC):
    """Anything that maps batches of masks to real game values.

    Implementations must be deterministic per mask and safe for concurrent
    ``evaluate`` calls.
    """

    space: PlayerSpace

    def evaluate(self, masks):
        """Evaluate a batch of masks, preserving order."""
        mat = mask_matrix(masks, self.space)
        return self.evaluate_matrix(mat)

    def value_at(self, mask):
        """Evaluate a single mask."""
        return float(self.evaluate([mask])[0])

    @abstractmethod
    def evaluate_matrix(self, mat):
        """Evaluate a pre-validated boolean mask matrix of shape (m, n)."""


def evaluate(game, masks):
    """Evaluate ``game`` at each mask; output k corresponds to input k."""
    return game.evaluate(masks)


class TabulatedGame(GameOracle):
    """A game stored as a full value table indexed by mask bit pattern."""

    def __init__(self, space, values):
        guard_enumeration(space.n)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (1 << space.n,):
            raise ValidationError(
                f"value table must have length 2^{space.n}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("value table contains non-finite entries")
        self.space = space
        self.values = values
        self.values.setflags(write=False)

    @classmethod
    def from_oracle(cls, oracle):
        """Tabulate any oracle by full enumeration (subject to the size guard)."""
        mat = enumerate_masks(oracle.space.n)
        return cls(oracle.space, oracle.evaluate_matrix(mat))

    def evaluate_matrix(self, mat):
        return self.values[matrix_to_ints(mat)]

    def value_at(self, mask):
        """Constant-time lookup by bit pattern."""
        if mask.width != self.space.n:
            raise InvalidMaskError(f"mask width {mask.width} does not match space size {self.space.n}")
        return float(self.values[mask.bits])


class TwoAdditiveGame(GameOracle):
    """A game determined by a constant, per-token terms, and pair terms.

    Evaluates to ``constant + sum_{i in M} singles[i]
    + sum_{{i,j} subset M} pairs[{i,j}]``.
    """

    def __init__(self, space, constant, singles, pairs):
        self.space = space
        self.constant = float(constant)
        n = space.n
        if isinstance(singles, dict):
            vec = np.zeros(n)
            for i, v in singles.items():
                if not 0 <= i < n:
                    raise ValidationError(f"single index {i} outside [0, {n})")
                vec[i] = v
            singles = vec
        self.singles = np.asarray(singles, dtype=np.float64).copy()
        if self.singles.shape != (n,):
            raise ValidationError(f"singles must have length {n}")

        # Pairs live in a symmetric zero-diagonal matrix for vectorized
        # evaluation; the mapping view is available via pair_dict().
        mat = np.zeros((n, n))
        if isinstance(pairs, dict):
            for key, v in pairs.items():
                i, j = key
                if i == j:
                    raise ValidationError(f"pair {key} has identical endpoints")
                if not (0 <= i < n and 0 <= j < n):
                    raise ValidationError(f"pair {key} outside [0, {n})")
                mat[i, j] = v
                mat[j, i] = v
        else:
            mat = np.asarray(pairs, dtype=np.float64).copy()
            if mat.shape != (n, n):
                raise ValidationError(f"pair matrix must be {n}x{n}")
            if not np.allclose(mat, mat.T):
                raise ValidationError("pair matrix must be symmetric")
            if np.any(np.diag(mat) != 0):
                raise ValidationError("pair matrix diagonal must be zero")
        self.interactions = mat
        for arr in (self.singles, self.interactions):
            arr.setflags(write=False)

    def pair_dict(self):
        n = self.space.n
        out = {}
        for i in range(n):
            for j in range(i + 1, n):
                if self.interactions[i, j] != 0.0:
                    out[(i, j)] = float(self.interactions[i, j])
        return out

    def evaluate_matrix(self, mat):
        m = mat.astype(np.float64)
        pair_part = 0.5 * np.einsum("ri,ij,rj->r", m, self.interactions, m)
        return self.constant + m @ self.singles + pair_part


def load_tabulated_game(path):
    """Read a game table: JSON {"n_image", "n_text", "values"} in mask-bit order."""
    with open(path) as fh:
        doc = json.load(fh)
    space = PlayerSpace(int(doc["n_image"]), int(doc["n_text"]))
    return TabulatedGame(space, doc["values"])


def save_tabulated_game(game, path):
    table = game if isinstance(game, TabulatedGame) else TabulatedGame.from_oracle(game)
    doc = {
        "n_image": table.space.n_image,
        "n_text": table.space.n_text,
        "values": [float(v) for v in table.values],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def make_random_game(space, kind, seed):
    """Draw a reproducible random game fixture.

    All coefficients (or table entries) are uniform in [-1, 1], which mixes
    signs and keeps values bounded.  ``kind`` is "tabulated" or
    "two-additive"; the tabulated kind is subject to the enumeration guard.
    """
    rng = stream(seed, "game")
    if kind == "tabulated":
        guard_enumeration(space.n)
        values = rng.uniform(-1.0, 1.0, size=1 << space.n)
        return TabulatedGame(space, values)
    if kind == "two-additive":
        n = space.n
        constant = rng.uniform(-1.0, 1.0)
        singles = rng.uniform(-1.0, 1.0, size=n)
        upper = rng.uniform(-1.0, 1.0, size=(n, n))
        mat = np.triu(upper, k=1)
        mat = mat + mat.T
        return TwoAdditiveGame(space, constant, singles, mat)
    raise ValidationError(f"unknown game kind {kind!r}")
