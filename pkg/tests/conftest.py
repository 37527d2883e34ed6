import math

import pytest

from fluxbic.params import BasisSpec, CircuitParams
from fluxbic.spectrum import spectral_result

# Three-well working point of the wavefunction figures: E_J/E_C = 2.78,
# E_J/E_L = 21.74.
THREE_WELL = CircuitParams(E_J=10.0, E_C=3.6, E_L=0.46)

GRID_1024 = BasisSpec.grid(1024, 6.0 * math.pi)
LADDER_200 = BasisSpec.ladder(200)


@pytest.fixture(scope="session")
def three_well_params():
    return THREE_WELL


@pytest.fixture(scope="session")
def grid_basis():
    return GRID_1024


@pytest.fixture(scope="session")
def ladder_basis():
    return LADDER_200


@pytest.fixture(scope="session")
def three_well_grid():
    return spectral_result(THREE_WELL, GRID_1024, k=6)


@pytest.fixture(scope="session")
def three_well_ladder():
    return spectral_result(THREE_WELL, LADDER_200, k=6)


@pytest.fixture(scope="session")
def row1_params():
    from fluxbic.experiments import row_circuit

    return row_circuit(E_J=10.0, EJ_over_ECt=5.0, EJ_over_EL=21.74)


@pytest.fixture(scope="session")
def row2_params():
    from fluxbic.experiments import row_circuit

    return row_circuit(E_J=10.0, EJ_over_ECt=5.0, EJ_over_EL=33.79)
