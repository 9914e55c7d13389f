import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def gauss():
    from torsionlab.quad_arith import ring_of_integers
    return ring_of_integers(1)
