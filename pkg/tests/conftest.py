import functools

import numpy as np
import pytest

from nc_hodge.complex_engine import build_d, build_space
from nc_hodge.system_models import build_fuzzy_sphere, build_nc_torus, golden_theta

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def fuzzy(N):
    model = build_fuzzy_sphere(N)
    space = build_space(model)
    return model, space, build_d(space)


@functools.lru_cache(maxsize=None)
def torus(M, n=2, golden=True, padding=0):
    theta = golden_theta(n) if golden else np.zeros((n, n))
    model = build_nc_torus(theta, M, padding)
    space = build_space(model)
    return model, space, build_d(space)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
