import numpy as np
import pytest

from lvic.datasets import load_builtin
from lvic.models import build_model
from lvic.sampler import ChainConfig, run_mcmc


def _fit(data_name, model_spec, n_keep=2000, seed=11, scale=1.0, data_seed=0):
    data = load_builtin(data_name, seed=data_seed, scale=scale)
    model = build_model(model_spec, data)
    draws = run_mcmc(model, data, ChainConfig(n_keep=n_keep, seed=seed))
    return model, data, draws


@pytest.fixture(scope="session")
def eight4_fit():
    return _fit("eight-schools", "eight-schools:4", scale=4.0)


@pytest.fixture(scope="session")
def vc_fit():
    return _fit("synthetic-vc", "vc")


@pytest.fixture(scope="session")
def vc_small_fit():
    data = load_builtin("synthetic-vc")
    model = build_model("vc", data)
    return model, data, run_mcmc(model, data, ChainConfig(n_keep=400, n_warmup=300, seed=3))


@pytest.fixture(scope="session")
def small_rasch_fit():
    return _fit("small-rasch", "rasch:1")


@pytest.fixture(scope="session")
def cfa_fit():
    return _fit("synthetic-cfa", "cfa:4", n_keep=1000)


@pytest.fixture(scope="session")
def rasch316_fit():
    return _fit("synthetic-rasch", "rasch:4", n_keep=1000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> bool:
    """Store an acceptance verdict for the end-of-run summary."""
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
