"""Shared fixtures."""
import json
import logging

import pytest

from steinpoly import families, projection
from steinpoly.distributions import (
    BetaTilt,
    NormalLoc,
    GammaShift,
    NegBinTilt,
    MvNormalLoc,
    PascalShift,
    PoissonTilt,
    BinomialShift,
)

LOGGER = logging.getLogger(__name__)

FAMILY_DOCS = {
    "normal": {"kind": "normal", "params": {"sigma2": 1}, "z_domain": [-2, 2]},
    "gamma": {"kind": "gamma", "params": {"r": 1, "delta": 1}, "z_domain": [0, 4]},
    "beta": {"kind": "beta", "params": {"a": 2, "b": 3}, "z_domain": [-1, 2]},
    "poisson": {"kind": "poisson", "params": {"m0": 1}, "z_domain": [0, 2]},
    "negbin": {
        "kind": "negbin",
        "params": {"alpha": 2, "p": "1/2"},
        "z_domain": [-0.25, 0.25],
    },
    "binomial": {
        "kind": "binomial",
        "params": {"N": 10, "p": "3/10"},
        "z_domain": [0, 20],
    },
    "pascal": {
        "kind": "pascal",
        "params": {"alpha": 2, "p": "1/2"},
        "z_domain": [0, 6],
    },
    "mvnormal": {
        "kind": "mvnormal",
        "params": {"M": [[2, 0], [0, 1]]},
        "z_domain": [[-1, 1], [-1, 1]],
    },
}

UNIVARIATE = ("normal", "gamma", "beta", "poisson", "negbin", "binomial", "pascal")


def make_family(name):
    """Build one of the reference families."""
    return {
        "normal": lambda: NormalLoc(sigma2=1),
        "gamma": lambda: GammaShift(r=1, delta=1),
        "beta": lambda: BetaTilt(a=2, b=3),
        "poisson": lambda: PoissonTilt(m0=1),
        "negbin": lambda: NegBinTilt(alpha=2, p="1/2"),
        "binomial": lambda: BinomialShift(N=10, p="3/10"),
        "pascal": lambda: PascalShift(alpha=2, p="1/2"),
        "mvnormal": lambda: MvNormalLoc(M=[[2, 0], [0, 1]]),
    }[name]()


@pytest.fixture(params=UNIVARIATE)
def univariate(request):
    """Every univariate reference family."""
    return make_family(request.param)


@pytest.fixture
def normal():
    return make_family("normal")


@pytest.fixture
def poisson():
    return make_family("poisson")


@pytest.fixture
def binomial():
    return make_family("binomial")


@pytest.fixture
def mvnormal():
    return make_family("mvnormal")


@pytest.fixture
def family_file(tmp_path):
    """Write a reference family document and return its path."""

    def write(name, doc=None):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(FAMILY_DOCS[name] if doc is None else doc))
        return str(path)

    return write


@pytest.fixture
def threads(monkeypatch):
    """Set the worker cap for one test."""

    def set_threads(count):
        monkeypatch.setenv("STEINPOLY_THREADS", str(count))

    return set_threads


@pytest.fixture(autouse=True)
def fresh_caches():
    families.clear_cache()
    projection._FIT_CACHE.clear()
    yield
