import warnings

import numpy as np
import pytest

from hbmatch.rlwe.keyset import generate_keyset
from hbmatch.rlwe.params import production_params, toy_params


@pytest.fixture(scope="session")
def toy():
    return toy_params()


@pytest.fixture(scope="session")
def toy_keys(toy):
    return generate_keyset(toy, 11, eval_keys=True, rotations=range(1, toy.row_size))


@pytest.fixture(scope="session")
def prod():
    return production_params()


@pytest.fixture(scope="session")
def prod_keys(prod):
    # public/secret only; relin + Galois keys are separate since they take a while
    return generate_keyset(prod, 2024)


@pytest.fixture(scope="session")
def prod_eval_keys(prod):
    return generate_keyset(prod, 2025, eval_keys=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _quiet_pca_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="requested k=")
        yield
