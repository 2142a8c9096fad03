import numpy as np
import pytest

from specdiff import oracle, specs


@pytest.fixture(scope="session")
def rbm():
    return specs.preset("rbm")


@pytest.fixture(scope="session")
def rbm2():
    return specs.preset("rbm2")


@pytest.fixture(scope="session")
def linear_drift():
    return specs.preset("linear_drift")


@pytest.fixture(scope="session")
def all_presets(rbm, rbm2, linear_drift):
    return (rbm, rbm2, linear_drift)


@pytest.fixture(scope="session")
def rbm_dec(rbm):
    """Decomposition shared by sampler and estimator tests."""
    return oracle.generator_eigs(rbm, 512, 64)


@pytest.fixture(scope="session")
def preset_decs(all_presets):
    return {sp.name: oracle.generator_eigs(sp, 512, 64) for sp in all_presets}


@pytest.fixture(scope="session")
def random_specs():
    """Twenty fixed random smooth specs (sigma in [0.5, 2], b in [-2, 2])."""
    rng = np.random.default_rng(20240917)
    return [specs.random_smooth_spec(rng, name=f"random{i}") for i in range(20)]
