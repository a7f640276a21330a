import numpy as np
import pytest

from services.core_model import make_grid
from services.gain_spectrum import CrystalParams, calibrate_mismatch, gain_functions
from services.optics_bench import ImagingSetup, double_slit


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


L_COH = 16.6e-6
TAU_COH = 0.87e-12
WAVELENGTH = 702e-9
FOCAL = 0.05
SLIT_A = 17e-6
SLIT_D = 104e-6


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def calibrated_params():
    c_diffr_q, c_gvd_t = calibrate_mismatch(L_COH, TAU_COH)
    return CrystalParams(sigma=250.0, l_c=4e-3, w_p=332e-6, tau_p=1.5e-12,
                         c_diffr_q=c_diffr_q, c_gvd_t=c_gvd_t, wavelength=WAVELENGTH)


@pytest.fixture(scope="session")
def slit_grid():
    # 1 um pitch resolves the 17 um slits to the pixel
    return make_grid(512, 1e-6, 1, 1e-12)


@pytest.fixture(scope="session")
def slit_table(calibrated_params, slit_grid):
    return gain_functions(calibrated_params, slit_grid)


def make_setup(grid, params=None, scheme="a", z_config="f", fixed_point=0.0, relay=True, obj=None):
    from services.gain_spectrum import emission_plane_defocus

    beta = emission_plane_defocus(params) if (relay and params is not None) else 0.0
    if obj is None:
        obj = double_slit(grid, SLIT_A, SLIT_D)
    return ImagingSetup(grid=grid, scheme=scheme, z_config=z_config, object=obj,
                        fixed_point=fixed_point, f=FOCAL, wavelength=WAVELENGTH,
                        relay_beta=beta, slit_width=SLIT_A, slit_distance=SLIT_D)


SMALL_CONFIG = """
n_x = 256
dx = 1e-6
n_t = 1
dt = 1e-12
sigma = 250.0
l_c = 4e-3
w_p = 332e-6
tau_p = 1.5e-12
engine = planewave
seed = 11
pulses = 40
chunk_size = 8
scheme = a
z_config = f
fixed_point = 0.0
"""


@pytest.fixture
def small_config_text():
    return SMALL_CONFIG


@pytest.fixture
def setup_factory():
    return make_setup
