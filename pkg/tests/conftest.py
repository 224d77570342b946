import numpy as np
import pytest

from ndspin import CoilAssembly, FieldConfig, NanodiamondParams


@pytest.fixture
def nd_250nm():
    return NanodiamondParams()


@pytest.fixture
def nd_1pg():
    return NanodiamondParams.from_mass(1e-12)


@pytest.fixture
def field_fig2():
    return FieldConfig(B0=0.0, Bprime=1.0e3)


@pytest.fixture
def field_biased():
    return FieldConfig(B0=5e-4, Bprime=1.0e3)


@pytest.fixture
def field_yellow():
    return FieldConfig(B0=0.0, Bprime=0.475)


@pytest.fixture
def coil_564():
    return CoilAssembly.anti_helmholtz(r_c=0.03, d_c=0.03, mmf=564.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_valid_config(rng):
    """One random (particle, field) pair in the regime every module accepts."""
    diameter = float(rng.uniform(100e-9, 600e-9))
    b0 = float(rng.uniform(-1e-3, 3e-3))
    bprime = float(rng.uniform(0.2, 2000.0))
    return (NanodiamondParams(diameter=diameter),
            FieldConfig(B0=b0, Bprime=bprime))
