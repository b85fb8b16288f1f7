import numpy as np
import pytest

from voinet.harness import ScenarioConfig, pendulum_scenario
from voinet.scheduling import NetworkTopology
from voinet.system_model import PlantModel


def random_pd(rng, n, scale=1.0):
    M = rng.standard_normal((n, n))
    return scale * (M @ M.T + 0.5 * np.eye(n))


def random_model(rng, n=3, m=2, p=1, spectral_radius=0.95):
    """Random detectable/stabilizable plant with PD covariances."""
    A = rng.standard_normal((n, n))
    A *= spectral_radius / max(abs(np.linalg.eigvals(A)))
    return PlantModel(
        A=A,
        B=rng.standard_normal((n, p)),
        C=rng.standard_normal((m, n)),
        W=random_pd(rng, n, 0.4),
        V=random_pd(rng, m, 0.3),
        Omega0=random_pd(rng, n, 1.0),
        Q=random_pd(rng, n, 0.5),
        R=random_pd(rng, p, 1.0),
        Lambda=random_pd(rng, n, 0.5),
    )


def scalar_model(a=1.1, b=1.0, c=1.0, W=0.4, V=0.3, Omega0=1.0, Q=1.0, R=1.0, Lam=1.0):
    return PlantModel(A=[[a]], B=[[b]], C=[[c]], W=[[W]], V=[[V]],
                      Omega0=[[Omega0]], Q=[[Q]], R=[[R]], Lambda=[[Lam]])


def two_loop_three_hop(seed=0, T=50):
    """Random 2-loop, 3-hop scenario with unit delays and dVoI everywhere."""
    rng = np.random.default_rng(seed)
    plants = (random_model(rng, n=2, m=1, p=1), random_model(rng, n=3, m=2, p=2))
    topo = NetworkTopology(N=2, L=(3, 3), d=(0, 1, 1, 1), lam=(0.5, 0.8, 1.2),
                           R_budget=(float(T),) * 3, T=T)
    return ScenarioConfig(plants=plants, topology=topo,
                          policies=("dvoi", "dvoi", "dvoi"), name="random-2loop-3hop")


@pytest.fixture(scope="session")
def pendulum():
    return pendulum_scenario()


@pytest.fixture(scope="session")
def pendulum_estimated():
    return pendulum_scenario(input_mode="estimated")
