"""Shared fixtures: the five canonical inclusions used throughout."""

import numpy as np
import pytest

from expindex.algebra import TraceVector, make_algebra
from expindex.inclusion import build_inclusion


def fixture_f1():
    """C < M2, lambda = [2]."""
    N = make_algebra([1], "C")
    M = make_algebra([2], "M2")
    return build_inclusion(N, M, [[2]])


def fixture_f2():
    """C+C (diagonal) < M2, lambda = [1,1]^T."""
    N = make_algebra([1, 1], "C2")
    M = make_algebra([2], "M2")
    return build_inclusion(N, M, [[1], [1]])


def fixture_f3():
    """C < C+C, lambda = [1,1]."""
    N = make_algebra([1], "C")
    M = make_algebra([1, 1], "C2")
    return build_inclusion(N, M, [[1, 1]])


def fixture_f4():
    """C < M2+M3, lambda = [2,3]."""
    N = make_algebra([1], "C")
    M = make_algebra([2, 3], "M2+M3")
    return build_inclusion(N, M, [[2, 3]])


def fixture_f5():
    """M2 = M2, identity inclusion."""
    N = make_algebra([2], "M2a")
    M = make_algebra([2], "M2b")
    return build_inclusion(N, M, [[1]])


FIXTURES = {
    "F1": fixture_f1,
    "F2": fixture_f2,
    "F3": fixture_f3,
    "F4": fixture_f4,
    "F5": fixture_f5,
}


@pytest.fixture
def f1():
    return fixture_f1()


@pytest.fixture
def f2():
    return fixture_f2()


@pytest.fixture
def f3():
    return fixture_f3()


@pytest.fixture
def f4():
    return fixture_f4()


@pytest.fixture
def f5():
    return fixture_f5()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def unit_trace(inc):
    return TraceVector(inc.M)
