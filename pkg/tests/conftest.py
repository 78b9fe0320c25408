import numpy as np
import pytest

from cohesion_algos.datasets import SynthSpec, synth_generate, write_synth
from cohesion_algos.models import CapsNetConfig


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_capsnet_config():
    # 8x8 input -> 6x6 conv -> 2x2 grid of 2 primary capsules
    return CapsNetConfig(
        input_size=(8, 8),
        conv_channels=4,
        conv_kernel=3,
        primary_channels=2,
        primary_dim=4,
        primary_kernel=3,
        primary_stride=2,
        emotion_dim=4,
        decoder_widths=(8,),
    )


@pytest.fixture
def synth_manifest():
    return synth_generate(SynthSpec(num_samples=12, faces_range=(1, 4), seed=3))


@pytest.fixture
def synth_dir(tmp_path, synth_manifest):
    """A synthetic dataset written to disk; returns the manifest path."""
    return write_synth(synth_manifest, str(tmp_path / "synth"))
