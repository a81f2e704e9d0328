import functools
import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from shrinker_lab.catalog import build_model  # noqa: E402

settings.register_profile("ci", max_examples=20, deadline=None, derandomize=True)
settings.load_profile("ci")

CATALOG = ["circle", "clifford:n=2", "al:p=2,q=3", "product(al:p=2,q=3;circle)"]


@functools.lru_cache(maxsize=None)
def model(spec: str, resolution=None, backend: str = "spectral"):
    return build_model(spec, resolution, backend)


@functools.lru_cache(maxsize=None)
def problem(spec: str, resolution=None, backend: str = "spectral"):
    from shrinker_lab.spectral import assemble_weighted_problem
    return assemble_weighted_problem(model(spec, resolution, backend))


@functools.lru_cache(maxsize=None)
def spectral_analysis(spec: str):
    from shrinker_lab.stability import analyze_spectrum
    return analyze_spectrum(model(spec))


@pytest.fixture(params=CATALOG)
def catalog_model(request):
    return model(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
