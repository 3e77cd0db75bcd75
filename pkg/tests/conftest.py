import pytest

from crosshedge import BachelierCallExposure, ModelParams, State


def _params(**kw):
    base = dict(mu=0.0, sigma=1.0, beta=0.0, eta=1.0, rho=0.5, b=1e-2, c=1e-3, k=1e-2, gamma=1.0, alpha=0.05, T=3.0)
    base.update(kw)
    return ModelParams(**base)


@pytest.fixture(scope="session")
def fig1():
    return _params()


@pytest.fixture(scope="session")
def fig1_left():
    return _params(T=0.5)


@pytest.fixture(scope="session")
def fig3():
    return _params(k=1e-3, gamma=0.0, T=1.0)


@pytest.fixture(scope="session")
def fig5():
    return _params(k=1e-3, gamma=1e-3, c=0.0, T=1.0)


@pytest.fixture(scope="session")
def fig7():
    return _params(k=1e-3, gamma=2e-3, T=1.0)


@pytest.fixture(scope="session")
def call100():
    return BachelierCallExposure(n_options=100.0, strike=1.0, dt_offset=1e-5)


@pytest.fixture(scope="session")
def origin_state():
    return State(t=0.0, x=0.0, q=0.0, s=10.0, u=1.0)
