import pytest
from hypothesis import settings, HealthCheck

# solves inside property bodies are slow; never enforce per-example deadlines
settings.register_profile(
    "lab",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def interval64():
    from stlab import build_interval
    return build_interval(64)


@pytest.fixture(scope="session")
def disk8():
    from stlab import build_disk
    return build_disk(8)


@pytest.fixture(scope="session")
def rect16():
    from stlab import build_rectangle
    return build_rectangle(16)
