import numpy as np
import pytest

from helmlab.params import ChromaParams, HkParams, LightnessParams, default_params
from helmlab.transform import build_neutral_lut


@pytest.fixture(scope="session")
def params():
    """Shipped defaults with the neutral LUT built once per session."""
    return default_params()


@pytest.fixture(scope="session")
def identity_params(params):
    """Identity-like set: unit matrices, unit gamma, every correction zero."""
    p = params.replace(
        m1=np.eye(3),
        gamma=np.ones(3),
        m2=np.eye(3),
        hue_corr=np.zeros(8),
        hk=HkParams(0.0, 1.0, 0.0, 0.0, 0.0, 0.0),
        lightness=LightnessParams(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        chroma=ChromaParams(np.zeros(8), np.zeros(4), 0.0, 0.0, np.zeros(4)),
        hue_l=np.zeros(4),
        rotation_phi_deg=0.0,
        neutral_lut=None,
    )
    return p.with_neutral_lut(build_neutral_lut(p))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
