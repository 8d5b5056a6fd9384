import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fsbp.spaces import make_family, product_derivative_space, augment_to_even, orthonormalize
from fsbp.gauss import continuation_solve
from fsbp import refcases


@pytest.fixture(scope="session")
def exp3_space():
    return make_family(refcases.EXP3_SPEC)


@pytest.fixture(scope="session")
def exp3_target(exp3_space):
    """Augmented product-derivative span of the exponential space."""
    return augment_to_even(product_derivative_space(exp3_space))


@pytest.fixture(scope="session")
def exp3_orthonormal(exp3_target):
    return orthonormalize(exp3_target)


@pytest.fixture(scope="session")
def exp3_closed_rule(exp3_target):
    return continuation_solve(exp3_target, closed=True)


@pytest.fixture(scope="session")
def trig_space():
    return make_family({"family": "trig", "max_harmonic": 2, "interval": [0, 1]})


@pytest.fixture(scope="session")
def trig_target(trig_space):
    return augment_to_even(product_derivative_space(trig_space))
