import pytest

from pulledfront.front import solve_front
from pulledfront.model import ModelParameters, WeightFunction, derive_constants

REF_PARAMS = ModelParameters(a=0.75, b=2.0, sigma=1.0, r=0.2)
REF_DELTA = 0.085

# valid parameter sets covering the three connection types at -infinity
RESONANT_PARAMS = ModelParameters(a=0.75, b=1.4, sigma=1.0, r=2.5)
UFASTER_PARAMS = ModelParameters(a=0.75, b=1.4, sigma=1.2, r=4.0)


@pytest.fixture(scope="session")
def ref_dc():
    return derive_constants(REF_PARAMS, delta=REF_DELTA)


@pytest.fixture(scope="session")
def ref_profile(ref_dc):
    return solve_front(REF_PARAMS, ref_dc, L=80.0, n=8000)


@pytest.fixture(scope="session")
def ref_weight(ref_dc):
    return WeightFunction(delta=ref_dc.delta, gamma_star=ref_dc.gamma_star)


@pytest.fixture(scope="session")
def spectral_profile(ref_dc):
    # long domain so the coefficient remainder reaches 1e-12 on both sides
    return solve_front(REF_PARAMS, ref_dc, L=170.0, n=17000)


@pytest.fixture(scope="session")
def ref_field(spectral_profile, ref_weight, ref_dc):
    from pulledfront.odesys import CoefficientField
    return CoefficientField(spectral_profile, ref_weight, REF_PARAMS, ref_dc)
