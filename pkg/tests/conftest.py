import json
from importlib import resources

import numpy as np
import pytest

from ergoprop.environment import model_from_json


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def rng_seeded(seed):
    return np.random.default_rng(seed)


def bundled_config(name):
    return json.loads(resources.files("ergoprop.configs").joinpath(name).read_text())


def bundled_model(config_name):
    return model_from_json(bundled_config(config_name)["model"])


def random_hermitian(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (g + g.conj().T) / 2.0


def random_complex(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
