import pytest

from spinline.bath import BathSpec, CouplingSpec
from spinline.spin import SpinModel


@pytest.fixture
def phonon():
    return CouplingSpec.phonon()


@pytest.fixture
def bilinear():
    return CouplingSpec.bilinear()


@pytest.fixture
def fig1_like():
    """S=6 with fig-1 barrier and temperature."""
    model = SpinModel.from_reduced(6, 5.0, 10.0)
    return model, CouplingSpec.phonon(), BathSpec(3, 3e-8, 10.0)
