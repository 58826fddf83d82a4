import numpy as np
import pytest
import scipy.sparse as sp
from types import SimpleNamespace

from svhoc.controller import ControllerConfig
from svhoc.model import named_model
from svhoc.solver import price_european_put

PRICE_POINTS = [(90.0, 0.3), (100.0, 0.3), (110.0, 0.3)]


def diagonal_system(lam, source=None, h=0.1):
    """Duck-typed semi-discrete system ``U' = source(tau) - diag(lam) U``."""
    lam = np.asarray(lam, dtype=float)
    n = len(lam)
    src = source or (lambda tau: np.zeros(n))
    return SimpleNamespace(
        grid=SimpleNamespace(h=h, n_unknowns=n),
        M=sp.identity(n, format="csc"),
        K=sp.diags(lam, format="csc"),
        boundary_source=src,
    )


@pytest.fixture(scope="session")
def garch_adaptive():
    return price_european_put(named_model("garch"), PRICE_POINTS, cfg=ControllerConfig())


@pytest.fixture(scope="session")
def heston_adaptive():
    return price_european_put(named_model("heston"), PRICE_POINTS, cfg=ControllerConfig())


@pytest.fixture(scope="session")
def garch_equidistant(garch_adaptive):
    return price_european_put(named_model("garch"), [], cfg=ControllerConfig(),
                              equidistant=garch_adaptive.n_points)
