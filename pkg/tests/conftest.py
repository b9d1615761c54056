import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from whopt.geometry import asymptotic_cone
from whopt.kernel import compute_kernel
from whopt.problemfile import load_problem

EXAMPLES = Path(__file__).resolve().parents[1] / "examples"


def _load(name: str):
    return load_problem(EXAMPLES / f"{name}.json")


@pytest.fixture(scope="session")
def ex1():
    return _load("ex1")


@pytest.fixture(scope="session")
def ex2():
    return _load("ex2")


@pytest.fixture(scope="session")
def quartic():
    return _load("quartic")


@pytest.fixture(scope="session")
def pert():
    return _load("pert")


@pytest.fixture(scope="session")
def escape():
    return _load("escape")


@pytest.fixture(scope="session")
def ex1_cones(ex1):
    return asymptotic_cone(ex1.feasible_set)


@pytest.fixture(scope="session")
def ex2_cones(ex2):
    return asymptotic_cone(ex2.feasible_set)


@pytest.fixture(scope="session")
def quartic_cones(quartic):
    return asymptotic_cone(quartic.feasible_set)


@pytest.fixture(scope="session")
def ex2_kernel(ex2, ex2_cones):
    return compute_kernel(ex2.asymptotic, ex2_cones, ex2.alpha)
