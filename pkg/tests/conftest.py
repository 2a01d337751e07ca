import time

import pytest

from shearasym.verify import Pipeline

A_VALUES = (0.3, 0.5, 0.7)


class PipelineCache:
    """One solved pipeline per a for the whole session; solve times are kept."""

    def __init__(self):
        self._cache = {}
        self.seconds = {}

    def __call__(self, a):
        if a not in self._cache:
            t = time.perf_counter()
            p = Pipeline(a)
            p.sigma
            self.seconds[a] = time.perf_counter() - t
            self._cache[a] = p
        return self._cache[a]


@pytest.fixture(scope="session")
def pipelines():
    return PipelineCache()


@pytest.fixture(scope="session")
def pipe05(pipelines):
    return pipelines(0.5)


@pytest.fixture(scope="session")
def sigma_csv(pipe05, tmp_path_factory):
    path = tmp_path_factory.mktemp("sigma") / "sigma_a0.5.csv"
    pipe05.sigma.to_csv(path)
    return path
