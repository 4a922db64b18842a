"""Shared helpers for the test suite."""

import numpy as np

from qcflow.operators import Jet2Sample


def random_jet(rng, n, scale=0.3, min_det=0.05):
    """Random well-conditioned second-order jet with symmetric Hessian."""
    while True:
        j = np.eye(n) + scale * rng.standard_normal((n, n))
        if np.linalg.det(j) > min_det:
            break
    h = rng.standard_normal((n, n, n))
    h = 0.5 * (h + np.swapaxes(h, 1, 2))
    x = rng.standard_normal(n)
    return Jet2Sample(x=x, u=rng.standard_normal(n), J=j, H=h)


def random_posdet(rng, n, scale=0.3, min_det=0.05):
    """Random matrix with determinant bounded away from zero."""
    while True:
        q = np.eye(n) + scale * rng.standard_normal((n, n))
        if np.linalg.det(q) > min_det:
            return q
