import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qcds", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("qcds")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n_fock, levels=4):
    """Random normalised hybrid state with a few low Fock levels per block."""
    v = np.zeros(2 * n_fock, dtype=complex)
    for off in (0, n_fock):
        v[off:off + levels] = rng.normal(size=levels) + 1j * rng.normal(size=levels)
    return v / np.linalg.norm(v)
