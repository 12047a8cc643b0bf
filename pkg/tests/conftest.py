import pytest

from andersonlab.constants import optimize_kappa
from andersonlab.experiments import zeta_ensemble


@pytest.fixture(scope="session")
def kappa22():
    """Planar best constant used as the kappa-hat reference everywhere."""
    return optimize_kappa(2, 2)


@pytest.fixture(scope="session")
def bridge_zeta_criterion2():
    """The 1e5-bridge triangle ensemble at t=1, eps=0.01, dt=eps/10.

    Shared by the SILT mean check, the exponential-moment estimators and the
    tail-rate trend; one (m,) chi array plus its exact centering.
    """
    chi, renorms = zeta_ensemble(1.0, [0.01], 100_000, master_seed=20240817, n_t=1000)
    return chi[:, 0], renorms[0]


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow",
        action="store_true",
        default=False,
        help="skip the long acceptance corpora",
    )


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    marker = pytest.mark.skip(reason="--skip-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(marker)
