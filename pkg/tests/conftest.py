import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_matrix(rng, m, n, cond=None):
    """Random ``m x n`` matrix, optionally with prescribed 2-norm condition number."""
    A = rng.standard_normal((m, n))
    if cond is None:
        return A
    U, _, Vt = np.linalg.svd(A, full_matrices=False)
    s = np.geomspace(1.0, 1.0 / cond, min(m, n))
    return (U * s) @ Vt
