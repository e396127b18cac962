"""Masked image-text similarity of vision-language encoders as a game oracle.

The package adapts a CLIP-style two-tower model to the mask-game wire
protocol: image tokens are patches (masked to the zero tensor after
normalization), text tokens are caption tokens (masked through the
attention mask, special tokens untouched), and the value of a mask is
the logit-scaled cosine similarity of the two masked inputs.
"""

from .checkpoint import DEFAULT_CHECKPOINT, build_tiny_checkpoint, load_checkpoint
from .errors import LabelTokenizationError, SessionError
from .pointing import build_pointing_input, compose_grid, quadrant_patches
from .session import EncoderSession
from .wire import make_tcp_server, serve_stdio, serve_streams

__all__ = [
    "DEFAULT_CHECKPOINT",
    "EncoderSession",
    "LabelTokenizationError",
    "SessionError",
    "build_pointing_input",
    "build_tiny_checkpoint",
    "compose_grid",
    "load_checkpoint",
    "make_tcp_server",
    "quadrant_patches",
    "serve_stdio",
    "serve_streams",
]
