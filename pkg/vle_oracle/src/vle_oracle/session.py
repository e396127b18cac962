"""One image-text pair held against a two-tower encoder.

An EncoderSession pins the masking semantics:

  * image tokens are the patch-grid cells, row major; a deleted patch is
    zeroed in the normalized pixel tensor, so its (bias-free) patch
    embedding vanishes and only the position embedding remains;
  * text tokens are the caption tokens between the begin/end markers; a
    deleted token keeps its input id but gets attention weight zero, and
    the special tokens are never exposed for masking;
  * the value of a mask is the logit-scaled cosine similarity
    C * cos(f_I(masked image), f_T(masked text)).

The two sides are encoded independently, embeddings are cached per side
pattern, and similarities are combined pairwise outside the model, so a
request of a * b paired masks costs a + b encoder calls.  The cache also
makes repeated queries bit-identical, whatever batch they arrive in.
"""

import numpy as np
import torch

from .errors import SessionError

# normalization statistics the OpenAI CLIP preprocessors use
CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_STD = (0.26862954, 0.26130258, 0.27577711)


class EncoderSession:
    def __init__(self, model, tokenizer, image, text, model_name="tiny-clip"):
        self.model = model
        self.tokenizer = tokenizer
        self.model_name = model_name

        vision = model.config.vision_config
        self.patch_size = vision.patch_size
        self.grid = vision.image_size // vision.patch_size
        self.n_image = self.grid * self.grid
        self._pixels = _normalize_image(image, vision.image_size).to(model.dtype)

        ids = tokenizer(text)["input_ids"]
        limit = model.config.text_config.max_position_embeddings
        if len(ids) > limit:
            raise SessionError(
                f"caption tokenizes to {len(ids)} positions, model limit is {limit}"
            )
        if ids[0] != tokenizer.bos_token_id or ids[-1] != tokenizer.eos_token_id:
            raise SessionError("tokenizer did not wrap the caption in BOS/EOS")
        self.text = text
        self.input_ids = torch.tensor([ids])
        self.special_positions = (0, len(ids) - 1)
        self.n_text = len(ids) - 2
        if self.n_text < 1:
            raise SessionError("caption has no maskable tokens")

        self.logit_scale = float(model.logit_scale.detach().exp())
        self._image_cache = {}
        self._text_cache = {}

    @property
    def n(self):
        return self.n_image + self.n_text

    # -- evaluation ------------------------------------------------------

    def evaluate_matrix(self, masks):
        """Values for a (m, n) boolean mask matrix; True keeps a token."""
        masks = np.asarray(masks, dtype=bool)
        if masks.ndim != 2 or masks.shape[1] != self.n:
            raise SessionError(
                f"mask matrix must be (m, {self.n}), got {masks.shape}"
            )
        image_side = masks[:, : self.n_image]
        text_side = masks[:, self.n_image :]
        image_keys = [row.tobytes() for row in image_side]
        text_keys = [row.tobytes() for row in text_side]
        self._encode_missing(image_side, image_keys, self._image_cache,
                             self._encode_image_batch)
        self._encode_missing(text_side, text_keys, self._text_cache,
                             self._encode_text_batch)
        out = np.empty(len(masks))
        for r, (ik, tk) in enumerate(zip(image_keys, text_keys)):
            out[r] = self.logit_scale * float(
                self._image_cache[ik] @ self._text_cache[tk]
            )
        return out

    def evaluate_joint(self, mask):
        """One-shot full forward pass for a single mask; no caching.

        Exists to cross-check the factored route: both must agree on
        every mask up to float noise.
        """
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n,):
            raise SessionError(f"mask must have shape ({self.n},), got {mask.shape}")
        pixels = self._masked_pixels(mask[: self.n_image][None])
        attention = self._attention_masks(mask[self.n_image :][None])
        with torch.no_grad():
            out = self.model(input_ids=self.input_ids,
                             attention_mask=attention,
                             pixel_values=pixels)
        return float(out.logits_per_image[0, 0])

    # -- side encoders ---------------------------------------------------

    def _encode_missing(self, side, keys, cache, encoder):
        missing, seen = [], set()
        for row, key in zip(side, keys):
            if key not in cache and key not in seen:
                seen.add(key)
                missing.append((key, row))
        if missing:
            batch = np.stack([row for _, row in missing])
            embeddings = encoder(batch)
            for (key, _), vec in zip(missing, embeddings):
                cache[key] = vec

    def _masked_pixels(self, image_masks):
        pixels = self._pixels.repeat(len(image_masks), 1, 1, 1).clone()
        ps = self.patch_size
        for b, row in enumerate(image_masks):
            for patch in np.flatnonzero(~row):
                r, c = divmod(int(patch), self.grid)
                pixels[b, :, r * ps : (r + 1) * ps, c * ps : (c + 1) * ps] = 0.0
        return pixels

    def _attention_masks(self, text_masks):
        attention = torch.ones(
            (len(text_masks), self.input_ids.shape[1]), dtype=torch.long
        )
        for b, row in enumerate(text_masks):
            for token in np.flatnonzero(~row):
                attention[b, int(token) + 1] = 0
        return attention

    def _encode_image_batch(self, image_masks):
        pixels = self._masked_pixels(image_masks)
        with torch.no_grad():
            emb = self.model.get_image_features(pixel_values=pixels).pooler_output
        return _unit_rows(emb)

    def _encode_text_batch(self, text_masks):
        attention = self._attention_masks(text_masks)
        ids = self.input_ids.repeat(len(text_masks), 1)
        with torch.no_grad():
            emb = self.model.get_text_features(
                input_ids=ids, attention_mask=attention
            ).pooler_output
        return _unit_rows(emb)


def _unit_rows(embeddings):
    rows = embeddings.detach().cpu().numpy().astype(np.float64)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _normalize_image(image, expected_size):
    image = np.asarray(image)
    if image.dtype == np.uint8:
        image = image.astype(np.float64) / 255.0
    if image.shape != (expected_size, expected_size, 3):
        raise SessionError(
            f"image must be ({expected_size}, {expected_size}, 3), got {image.shape}"
        )
    if image.min() < 0.0 or image.max() > 1.0:
        raise SessionError("image values must lie in [0, 1]")
    scaled = (image - np.array(CLIP_MEAN)) / np.array(CLIP_STD)
    return torch.from_numpy(scaled.transpose(2, 0, 1).copy())
