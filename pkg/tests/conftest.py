import pytest

from fkppwave.model import ModelParams
from fkppwave.wave import find_invading_front, profile_from_shot

# frozen outputs of tests/oracles/compute_oracles.py (scipy Radau shooting, quadrature, BDF lines)
ORACLE = {
    "K_star_d0.1_r0": 1.9848872191956906,
    "K_star_d0.3_r1": 1.9540236230243182,
    "fk_u_t1_x-1_c1_L-1": 0.5397689748622946,
    "mean_T0_x-1_c1": 0.9999999999998915,
    "E_min_t_T0_t1_x-1_c1": 0.6637959975536492,
    "energy_bound_d0.3_r1": 17.339658822710035,
}

# paper table of i_-inf at c = 2, rows r = 0, 1 and columns d = 0.1 .. 0.4
PAPER_TABLE = {
    (0.1, 0.0): 1.98489, (0.2, 0.0): 1.96999, (0.3, 0.0): 1.95532, (0.4, 0.0): 1.94091,
    (0.1, 1.0): 1.98430, (0.2, 1.0): 1.96897, (0.3, 1.0): 1.95403, (0.4, 1.0): 1.93948,
}


@pytest.fixture(scope="session")
def oracle():
    return ORACLE


@pytest.fixture(scope="session")
def front_01():
    return find_invading_front(ModelParams(2.0, 0.1, 0.0))


@pytest.fixture(scope="session")
def front_03():
    return find_invading_front(ModelParams(2.0, 0.3, 1.0))


@pytest.fixture(scope="session")
def interior_wave():
    return profile_from_shot(1.5, ModelParams(2.0, 0.1, 0.0))
