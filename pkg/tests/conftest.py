"""Shared fixtures: kernel builds are the slow part, so build once per session."""

import pytest

from mfou.numerics import TimeGrid
from mfou.transform import build_kernel, quadratic_variation


@pytest.fixture(scope="session")
def grid_half():
    return TimeGrid(5.0, 256)


@pytest.fixture(scope="session")
def kernel_half(grid_half):
    return build_kernel(0.5, grid_half)


@pytest.fixture(scope="session")
def qv_half(kernel_half):
    return quadratic_variation(kernel_half)


@pytest.fixture(scope="session")
def grid_07():
    return TimeGrid(2.0, 64)


@pytest.fixture(scope="session")
def kernel_07(grid_07):
    return build_kernel(0.7, grid_07)


@pytest.fixture(scope="session")
def qv_07(kernel_07):
    return quadratic_variation(kernel_07)
