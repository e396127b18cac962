import numpy as np
import pytest

torch = pytest.importorskip("torch")
pytest.importorskip("transformers")
vle_oracle = pytest.importorskip("vle_oracle")

from vle_oracle import EncoderSession, load_checkpoint

CAPTION = "a photo of a cat and a dog"


@pytest.fixture(scope="session")
def checkpoint():
    return load_checkpoint()


@pytest.fixture(scope="session")
def fixture_image():
    rng = np.random.default_rng(5)
    return rng.random((28, 28, 3))


@pytest.fixture()
def session(checkpoint, fixture_image):
    model, tokenizer = checkpoint
    return EncoderSession(model, tokenizer, fixture_image, CAPTION)
