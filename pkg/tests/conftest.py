import numpy as np
import pytest

from minsplit import gen_affine_monotone


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def affine_ops(n, dim, seed, moduli=None):
    """Random affine monotone tuple plus its recorded zero."""
    inst = gen_affine_monotone(n, dim, seed, moduli=moduli)
    return inst, inst.operators()
