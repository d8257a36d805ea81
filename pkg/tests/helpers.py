"""Profile builders shared by the test modules."""

import numpy as np

from invdesign.profile import Grid, SampledProfile


def step(hi_left, lo_right, at=0.0):
    return lambda x: np.where(np.asarray(x) <= at, hi_left, lo_right)


def on(a, b, n, fn):
    return SampledProfile.from_function(fn, Grid.from_bounds(a, b, n))


def random_data(rng, a=-3.0, b=3.0, n=6000, pieces=(3, 8), lo=0.0, hi=1.0):
    """Random piecewise-constant initial datum on ``[a, b]``."""
    k = int(rng.integers(pieces[0], pieces[1] + 1))
    cuts = np.sort(rng.uniform(a, b, k - 1))
    vals = rng.uniform(lo, hi, k)
    return on(a, b, n, lambda x: vals[np.searchsorted(cuts, x)])
