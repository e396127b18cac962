"""Pinned tiny checkpoint plus the loader used everywhere else.

The bundled model is a randomly initialized two-tower encoder small
enough to commit: a 4x4 patch grid over 28px images, two transformer
layers per side, a 16-dim shared embedding, and a word-level BPE
vocabulary with a fixed list of whole-word merges.  Random weights are
fine for protocol and semantics work; nothing here depends on the model
being good, only on it being deterministic and pinned.
"""

import math
from importlib.resources import files

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import CLIPConfig, CLIPModel, PreTrainedTokenizerFast
from transformers.utils import logging as hf_logging

DEFAULT_CHECKPOINT = str(files(__package__) / "checkpoints" / "tiny-clip")

# every word here becomes a single token; anything else falls apart into
# characters, which is exactly what the pointing-game label check needs
WHOLE_WORDS = [
    "a", "photo", "of", "the", "and", "on", "in",
    "cat", "dog", "bird", "fish", "car", "tree", "grass", "sky",
    "red", "blue", "green", "small", "big",
]

BOS, EOS = "<|startoftext|>", "<|endoftext|>"


def build_tokenizer():
    vocab = {BOS: 0, EOS: 1}

    def add(token):
        if token not in vocab:
            vocab[token] = len(vocab)

    for ch in "abcdefghijklmnopqrstuvwxyz":
        add(ch)
        add(ch + "</w>")
    merges = []
    for word in WHOLE_WORDS:
        pieces = list(word[:-1]) + [word[-1] + "</w>"]
        while len(pieces) > 1:
            merges.append((pieces[0], pieces[1]))
            pieces = [pieces[0] + pieces[1]] + pieces[2:]
            add(pieces[0])
    merges = list(dict.fromkeys(merges))

    backend = Tokenizer(models.BPE(vocab=vocab, merges=merges,
                                   end_of_word_suffix="</w>", unk_token=None))
    backend.normalizer = normalizers.Lowercase()
    backend.pre_tokenizer = pre_tokenizers.Whitespace()
    backend.post_processor = processors.TemplateProcessing(
        single=f"{BOS} $A {EOS}",
        special_tokens=[(BOS, 0), (EOS, 1)],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        bos_token=BOS,
        eos_token=EOS,
        pad_token=EOS,
    )
    return tokenizer, len(vocab)


def build_tiny_checkpoint(out_dir, seed=20240611, logit_scale=100.0):
    """Write a freshly initialized pinned checkpoint to out_dir."""
    tokenizer, vocab_size = build_tokenizer()
    config = CLIPConfig(
        text_config={
            "vocab_size": vocab_size,
            "hidden_size": 32,
            "intermediate_size": 64,
            "num_hidden_layers": 2,
            "num_attention_heads": 2,
            "max_position_embeddings": 16,
            "bos_token_id": 0,
            "eos_token_id": 1,
        },
        vision_config={
            "hidden_size": 32,
            "intermediate_size": 64,
            "num_hidden_layers": 2,
            "num_attention_heads": 2,
            "image_size": 28,
            "patch_size": 7,
            "num_channels": 3,
        },
        projection_dim=16,
        logit_scale_init_value=math.log(logit_scale),
    )
    torch.manual_seed(seed)
    model = CLIPModel(config)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir


def load_checkpoint(path=DEFAULT_CHECKPOINT):
    """Load (model, tokenizer) in deterministic inference mode.

    The model runs in float64 on CPU: at this size the cost is nothing,
    and it removes the batch-composition rounding that float32 GEMMs
    exhibit, so a cached embedding is bit-identical to a fresh one.
    """
    hf_logging.disable_progress_bar()
    model = CLIPModel.from_pretrained(path)
    model.eval()
    model.double()
    for parameter in model.parameters():
        parameter.requires_grad_(False)
    tokenizer = PreTrainedTokenizerFast.from_pretrained(path)
    return model, tokenizer
