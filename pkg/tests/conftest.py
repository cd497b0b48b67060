import numpy as np
import pytest

from cfnet.config import NetworkConfig
from cfnet.topology import generate_network


def random_profile(K, N, rng, low=0.2, high=2.0):
    """Variance profile with O(1) entries."""
    return rng.uniform(low, high, size=(K, N))


def gaussian_channel(theta, rng):
    h = (rng.standard_normal(theta.shape) + 1j * rng.standard_normal(theta.shape)) / np.sqrt(2)
    return np.sqrt(theta) * h


@pytest.fixture
def small_config():
    return NetworkConfig(total_users_K=32, antenna_ratio_beta=4, num_subnetworks_M=2,
                         seed=7, mc_realizations=20, network_realizations=2)


@pytest.fixture
def small_network(small_config):
    return generate_network(small_config, 0)


def block_profile(theta_blocks):
    """LargeScaleProfile from nested lists of theta blocks."""
    from cfnet.topology import LargeScaleProfile

    theta = [[np.ascontiguousarray(b, dtype=float) for b in row] for row in theta_blocks]
    return LargeScaleProfile([[np.sqrt(b) for b in row] for row in theta], theta)


def random_blocks(K_list, N_list, rng, low=0.2, high=2.0):
    return [[random_profile(K, N, rng, low, high) for N in N_list] for K in K_list]
