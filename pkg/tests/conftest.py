import numpy as np
import pytest

from nlridge import GaussianHomo, corrupt, default_params, denoise, load_test_image


@pytest.fixture(scope="session")
def test_image():
    return load_test_image(256)


@pytest.fixture(scope="session")
def runs(test_image):
    """Cached NL-Ridge runs on the bundled image, keyed by (sigma, constraint, family)."""
    cache = {}

    def get(sigma, constraint="linear", family="nlridge", seed=1, **overrides):
        key = (sigma, constraint, family, seed, tuple(sorted(overrides.items())))
        if key not in cache:
            model = GaussianHomo(sigma)
            y = corrupt(test_image, model, seed)
            params = default_params(model, constraint=constraint, family=family, **overrides)
            cache[key] = (y,) + denoise(y, model, params)
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
