"""Shared fixtures: catalog problems and their penalty sequences.

Sequence generation is the expensive part of the suite, so every test
module shares one session-scoped copy per (problem, candidate point).
"""
import numpy as np
import pytest

from akkt.penalty import PenaltyConfig, generate_akkt_sequence, geometric_schedule
from akkt.problem import builtin


@pytest.fixture(scope="session")
def p1():
    return builtin("mangasarian")


@pytest.fixture(scope="session")
def p2():
    return builtin("abs-biobjective")


@pytest.fixture(scope="session")
def p3():
    return builtin("linear-tradeoff")


@pytest.fixture(scope="session")
def p4():
    return builtin("nonconvex-max")


@pytest.fixture(scope="session")
def seq_p1_1e6(p1):
    cfg = PenaltyConfig(schedule=geometric_schedule(1.0, 1e6))
    return generate_akkt_sequence(p1, [0.0], cfg)


@pytest.fixture(scope="session")
def seq_p1(p1):
    return generate_akkt_sequence(p1, [0.0])


@pytest.fixture(scope="session")
def seq_p2(p2):
    return generate_akkt_sequence(p2, [0.5])


@pytest.fixture(scope="session")
def seq_p3(p3):
    return generate_akkt_sequence(p3, [0.5, 0.5])


@pytest.fixture(scope="session")
def seq_p4(p4):
    return generate_akkt_sequence(p4, [0.0])


@pytest.fixture(scope="session")
def corpus(p1, p2, p3, p4, seq_p1, seq_p2, seq_p3, seq_p4):
    """Every catalog problem with its canonical candidate point and the
    default-schedule sequence generated there."""
    return [
        (p1, np.array([0.0]), seq_p1),
        (p2, np.array([0.5]), seq_p2),
        (p3, np.array([0.5, 0.5]), seq_p3),
        (p4, np.array([0.0]), seq_p4),
    ]
