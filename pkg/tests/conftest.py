import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from remflow import gan, synthgen


@pytest.fixture(scope="session")
def small_gen_config():
    return synthgen.GenerationConfig(image_size=64)


@pytest.fixture(scope="session")
def sample_pair(small_gen_config):
    return synthgen.generate_remnant(7, small_gen_config)


@pytest.fixture(scope="session")
def tiny_gan_config():
    return gan.GanConfig(image_size=16, generator_depth=3, base_channels=8)


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory, tiny_gan_config):
    """Untrained but loadable checkpoint for service/CLI plumbing tests."""
    path = tmp_path_factory.mktemp("ckpt") / "tiny.rfgan"
    generator = gan.build_generator(tiny_gan_config)
    discriminator = gan.build_discriminator(tiny_gan_config)
    gan.save_checkpoint(path, tiny_gan_config, generator, discriminator)
    return path


@pytest.fixture(scope="session")
def tiny_photo_bytes(tiny_gan_config):
    from remflow.imageio import photo_to_bytes

    cfg = synthgen.GenerationConfig(image_size=16, vertex_range=(6, 10),
                                    hole_count_range=(0, 0))
    pair = synthgen.generate_remnant(3, cfg)
    return photo_to_bytes(pair.photo)


@pytest.fixture(scope="session")
def tiny_mask_bytes():
    from remflow.imageio import mask_to_bytes

    cfg = synthgen.GenerationConfig(image_size=16, vertex_range=(6, 10),
                                    hole_count_range=(0, 0))
    pair = synthgen.generate_remnant(3, cfg)
    return mask_to_bytes(pair.mask)
