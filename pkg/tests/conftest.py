import itertools

import numpy as np
import pytest

from qubosmith import QuboMatrix
from qubosmith.generators import GeneratorSpec, random_qubo


def naive_energy(Q, x):
    """Double loop over the upper triangle, straight from the definition."""
    U = Q.to_dense_upper()
    n = Q.n
    total = 0.0
    for i in range(n):
        if x[i]:
            for j in range(i, n):
                if x[j]:
                    total += U[i, j]
    return total


def naive_minimum(Q):
    """(energy, bits) by re-evaluating every assignment from scratch."""
    best = None
    for bits in itertools.product((0, 1), repeat=Q.n):
        x = np.array(bits, dtype=np.int8)
        e = naive_energy(Q, x)
        if best is None or e < best[0]:
            best = (e, x)
    return best


def all_assignments(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


@pytest.fixture
def tri():
    """Two variables: Q00 = 1, Q01 = -3, Q11 = 1; optimum [1, 1] at -1."""
    return QuboMatrix.from_entries(2, [(0, 0, 1.0), (0, 1, -3.0), (1, 1, 1.0)])


@pytest.fixture
def rand_q():
    def make(n, sigma=0.1, seed=0, storage=None):
        Q = random_qubo(GeneratorSpec(n, sigma, seed))
        return Q.with_storage(storage) if storage else Q

    return make
