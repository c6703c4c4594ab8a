import numpy as np
import pytest


class SpyOracle:
    """Wraps an oracle and counts raw decide() calls on its own.

    Lets tests check that the ledger's tally equals the number of decisions
    the oracle actually saw, with no path around the accounting.
    """

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.num_classes = inner.num_classes
        self.shape = inner.shape

    def decide(self, x):
        self.calls += 1
        return self.inner.decide(x)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
