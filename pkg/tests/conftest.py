import importlib.resources

import numpy as np
import pytest

from asfes import (
    AlgorithmConfig,
    DitherConfig,
    LinearBarrier,
    QuadraticObjective,
    validate_plant,
)


@pytest.fixture(scope="session")
def plant1():
    """One-parameter plant: J = theta^2/20, safe set {theta <= -1}."""
    return validate_plant(
        QuadraticObjective(j_star=0.0, hessian=0.1, theta_star=0.0),
        LinearBarrier(h0=-1.0, h1=-1.0),
    )


@pytest.fixture(scope="session")
def cfg1():
    return AlgorithmConfig(
        k=0.3, c=0.1, delta=1e-3, omega_f=3.0,
        dither=DitherConfig(amplitude=0.25, ratios=(1,), base_scale=200.0),
    )


@pytest.fixture(scope="session")
def plant2():
    """Two-parameter plant: J = theta_1^2 + theta_2^2, safe set
    {theta_1 + theta_2 >= 1}."""
    return validate_plant(
        QuadraticObjective(j_star=0.0, hessian=[[2.0, 0.0], [0.0, 2.0]],
                           theta_star=[0.0, 0.0]),
        LinearBarrier(h0=-1.0, h1=[1.0, 1.0]),
    )


@pytest.fixture(scope="session")
def cfg2():
    return AlgorithmConfig(
        k=0.1, c=1.0, delta=1e-3, omega_f=3.0,
        dither=DitherConfig(amplitude=0.25, ratios=(75, 100), base_scale=1.0),
    )


@pytest.fixture(scope="session")
def scenario_dir():
    return importlib.resources.files("asfes") / "scenarios"


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
