"""Shared spiral families for the test-suite"""

import math

import orjson
import pytest

from spiral_constraint import alexander_solve
from spiral_model import alexander_family, SpiralFamily


def solved_alexander(a: float, M: int) -> SpiralFamily:
    g, mu = alexander_solve(a, M)
    return alexander_family(a, M, g, mu)


@pytest.fixture
def unit_spiral():
    """a = 1, one branch, g = 1, μ = 0; not a solution but simple to hand-check"""
    return SpiralFamily(a=1.0, mu=0.0, g=(1.0,), theta=(0.0,))


@pytest.fixture
def prandtl():
    """The solved single-branch family at a = 1: g = tanh π, μ = 0"""
    return alexander_family(1.0, 1, math.tanh(math.pi), 0.0)


@pytest.fixture
def alexander2():
    return solved_alexander(1.0, 2)


@pytest.fixture
def alexander3():
    return solved_alexander(1.0, 3)


@pytest.fixture
def asymmetric():
    """Three unequal branches with μ ≠ 0, used for solver round trips"""
    return SpiralFamily(a=0.8, mu=0.05, g=(1.0, 0.7, 1.3), theta=(0.0, 2.0, 4.1))


@pytest.fixture
def family_file(tmp_path):
    """Write a family dict to a JSON file and return its path"""
    def write(raw, name='family.json'):
        path = tmp_path / name
        path.write_bytes(orjson.dumps(raw))
        return path
    return write
