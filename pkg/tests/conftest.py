import pytest

from kerrcrescent import protocol as pr


@pytest.fixture(scope="session")
def fig4_params():
    # |alpha| = 6, gamma|beta| = 0.36: the crescent regime
    return pr.ProtocolParams(alpha=6.0, beta_mag=360.0, gamma=1e-3)


@pytest.fixture(scope="session")
def fig4_ensemble(fig4_params):
    grid = pr.build_xgrid(fig4_params, 401)
    return pr.ensemble_state(fig4_params, grid), grid
