import pytest

from blotto2 import backend


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # pay the jit compile cost once, before anything is timed
    backend.warmup()
