"""Shared fixtures: the genus-2 presentation and the acceptance chains.

Chains are built once per session (seed 7 everywhere); the full depth-2
build takes a couple of seconds.
"""

from fractions import Fraction

import pytest

from allostery import BuildConfig, SurfacePresentation, build_chain
from allostery.induction import orientation_double_cover

ACCEPTANCE_SEED = 7


@pytest.fixture(scope="session")
def pres2():
    return SurfacePresentation(1, 1)


@pytest.fixture(scope="session")
def pres3():
    return SurfacePresentation(1, 2)


@pytest.fixture(scope="session")
def chain_half(pres2):
    """The acceptance chain: t = 1/2, primes (3, 5), depth 2."""
    return build_chain(
        pres2, Fraction(1, 2), 2, BuildConfig(seed=ACCEPTANCE_SEED), primes=(3, 5)
    )


@pytest.fixture(scope="session")
def chain_third(pres2):
    """The comparison chain: s = 1/3, primes (3, 5), depth 2."""
    return build_chain(
        pres2, Fraction(1, 3), 2, BuildConfig(seed=ACCEPTANCE_SEED), primes=(3, 5)
    )


@pytest.fixture(scope="session")
def ed3():
    return orientation_double_cover(3)
