import pytest

from loopmeasure import GroupPresentation, enumerate_spectrum


@pytest.fixture(scope="session")
def modular_group():
    return GroupPresentation.modular_torus()


@pytest.fixture(scope="session")
def table6(modular_group):
    return enumerate_spectrum(modular_group, 6)


@pytest.fixture(scope="session")
def table8(modular_group):
    return enumerate_spectrum(modular_group, 8)


@pytest.fixture(scope="session")
def table10_unit(modular_group):
    return enumerate_spectrum(modular_group, 10, homology_filter=(1, 0))
