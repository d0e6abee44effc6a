"""Shared fixtures and the deviation bound used by the statistical tests."""
import math

import pytest

from pircsi import FieldParams


def count_bound(trials: int, p: float, sigmas: float = 4.0) -> float:
    """Allowed |count - trials*p| for a binomial count, in standard deviations."""
    return sigmas * math.sqrt(trials * p * (1.0 - p))


@pytest.fixture(scope="session")
def gf3() -> FieldParams:
    return FieldParams(3)


@pytest.fixture(scope="session")
def gf9() -> FieldParams:
    return FieldParams(3, 2)
