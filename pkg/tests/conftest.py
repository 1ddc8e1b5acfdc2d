import numpy as np
import pytest

from stbi.field_core import ComplexField
from stbi.reconstruct import locate_carrier, reconstruct_phase
from stbi.simulator import OpticalConfig, demo_scene, generate_focus_stack, record_stbi_hologram


@pytest.fixture(scope="session")
def config():
    return OpticalConfig()


@pytest.fixture(scope="session")
def scene():
    return demo_scene()


@pytest.fixture(scope="session")
def demo_stack(scene, config):
    """61 frames over +-30 um, 1 um apart; ground truth at index 30."""
    return generate_focus_stack(scene, config, -30.0, 30.0, 61)


@pytest.fixture(scope="session")
def background(config):
    empty = ComplexField(np.ones((256, 256)), config.object_pitch)
    return record_stbi_hologram(empty, config, background=1.0)


@pytest.fixture(scope="session")
def bg_carrier(background):
    return locate_carrier(background)


@pytest.fixture(scope="session")
def bg_phase(background, bg_carrier):
    return reconstruct_phase(background, bg_carrier)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
