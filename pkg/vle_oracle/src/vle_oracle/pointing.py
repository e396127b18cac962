"""Pointing-game inputs: a 2x2 image grid with one label per quadrant.

Four images are composed into one; each single-token label claims the
patches of its quadrant.  The resulting spec file tells an evaluator
which cross-modal interactions an explanation should have found:

    {"objects": [{"text_tokens": [...], "image_patches": [...]}, ...]}

with text tokens indexed within the explainable caption tokens and
image patches indexed in the model's row-major patch grid.
"""

import numpy as np

from .errors import LabelTokenizationError, SessionError
from .session import EncoderSession


def compose_grid(images):
    """Stack four equally sized (h, w, 3) images into a 2x2 grid."""
    if len(images) != 4:
        raise SessionError(f"need exactly four images, got {len(images)}")
    arrays = [np.asarray(img) for img in images]
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise SessionError("the four images must share one shape")
    top = np.concatenate([arrays[0], arrays[1]], axis=1)
    bottom = np.concatenate([arrays[2], arrays[3]], axis=1)
    return np.concatenate([top, bottom], axis=0)


def quadrant_patches(grid):
    """Partition the grid x grid patch indices into the four quadrants.

    A patch belongs to the quadrant its center falls in, so odd grids
    split as evenly as the geometry allows.  Order: top-left, top-right,
    bottom-left, bottom-right.
    """
    half = grid / 2.0
    quadrants = [[], [], [], []]
    for patch in range(grid * grid):
        r, c = divmod(patch, grid)
        q = 2 * int(r + 0.5 >= half) + int(c + 0.5 >= half)
        quadrants[q].append(patch)
    return [tuple(q) for q in quadrants]


def _single_token_id(tokenizer, label):
    ids = tokenizer(label)["input_ids"]
    content = [t for t in ids if t not in (tokenizer.bos_token_id,
                                           tokenizer.eos_token_id)]
    if len(content) != 1:
        pieces = tokenizer.convert_ids_to_tokens(content)
        raise LabelTokenizationError(
            f"label {label!r} splits into {len(content)} tokens {pieces}; "
            "pointing-game labels must be single tokens"
        )
    return content[0]


def build_pointing_input(images, labels, model, tokenizer, model_name="tiny-clip"):
    """Compose the grid image and map labels to quadrants.

    Returns (session, spec_dict).  Labels claim quadrants in reading
    order; with fewer than four labels the remaining quadrants are
    unlabeled distractors.
    """
    if not 1 <= len(labels) <= 4:
        raise SessionError(f"need 1 to 4 labels, got {len(labels)}")
    for label in labels:
        _single_token_id(tokenizer, label)

    composed = compose_grid(images)
    prompt = " ".join(labels)
    session = EncoderSession(model, tokenizer, composed, prompt,
                             model_name=model_name)
    if session.n_text != len(labels):
        raise SessionError(
            "prompt tokenization drifted: expected one token per label"
        )
    quadrants = quadrant_patches(session.grid)
    spec = {
        "objects": [
            {"text_tokens": [k], "image_patches": list(quadrants[k])}
            for k in range(len(labels))
        ]
    }
    return session, spec
