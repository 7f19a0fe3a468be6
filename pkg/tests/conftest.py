import numpy as np
import pytest


class FakeRng:
    """Scripted stand-in for numpy's Generator.

    ``random()`` pops from the ``randoms`` sequence (arrays are filled in
    order), ``integers()`` pops from ``integers`` regardless of the bound.
    Running out of scripted values raises, which doubles as a check that
    the code under test consumes exactly the expected number of draws.
    """

    def __init__(self, randoms=(), integers=()):
        self._randoms = list(randoms)
        self._integers = list(integers)

    def random(self, size=None):
        if size is None:
            return self._randoms.pop(0)
        if isinstance(size, tuple):
            n = int(np.prod(size))
            vals = [self._randoms.pop(0) for _ in range(n)]
            return np.array(vals).reshape(size)
        return np.array([self._randoms.pop(0) for _ in range(int(size))])

    def integers(self, *args, **kwargs):
        return self._integers.pop(0)

    @property
    def exhausted(self):
        return not self._randoms and not self._integers


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
