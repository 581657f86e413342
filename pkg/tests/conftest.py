from __future__ import annotations

import numpy as np
import pytest

from canonical_region import ProblemSpec, resolve_problem


def make_spec(rng, m=None, j=None, l=None, max_alphabet=3, name=""):
    """Small random instance with full-support source (no degeneracy warnings)."""
    m = int(rng.integers(1, 4)) if m is None else m
    j = int(rng.integers(0, m + 1)) if j is None else j
    l = int(rng.integers(0, 3)) if l is None else l
    x_sizes = [int(rng.integers(2, max_alphabet + 1)) for _ in range(m)]
    s_size = int(rng.integers(1, 3))
    v_size = int(rng.integers(2, 4))
    vhat_sizes = [int(rng.integers(2, 4)) for _ in range(l)]
    shape = tuple(x_sizes) + (s_size, v_size)
    probs = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    distortions = [rng.uniform(0.0, 1.0, size=(v_size, n)) for n in vhat_sizes]
    return ProblemSpec(
        m, j, l, x_sizes, s_size, v_size, vhat_sizes, probs, distortions, name=name,
    )


@pytest.fixture(scope="session")
def dsbs():
    return resolve_problem("dsbs")


@pytest.fixture(scope="session")
def bwz():
    return resolve_problem("bwz")


@pytest.fixture(scope="session")
def helper3():
    return resolve_problem("helper3")
