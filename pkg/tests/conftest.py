import pytest
from loguru import logger

from poissonlab.process import RandomSource


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    "Run chunks inline unless a test asks for a pool, and leave no loguru sink pointing at a closed stream."
    monkeypatch.setenv('POISSON_LAB_THREADS', '1')
    yield
    logger.remove()


@pytest.fixture
def rng():
    return RandomSource(seed=20240917, stream=3)
