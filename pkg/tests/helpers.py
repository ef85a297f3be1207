"""Finite-difference utilities shared by the test oracles.

The 9-point central stencils are exact on polynomials through degree 8,
so with steps around 1e-2 the truncation error sits far below the
tolerances used in the tests.
"""

import math

import numpy as np


def stencil(order: int, h: float):
    """Offsets and weights for d^order/dt^order on a 9-point central grid."""
    offsets = np.arange(-4.0, 5.0)
    vand = np.vander(offsets, 9, increasing=True).T
    rhs = np.zeros(9)
    rhs[order] = math.factorial(order)
    weights = np.linalg.solve(vand, rhs)
    return offsets * h, weights / h**order


def fd_partial(fn, point, alpha, h=0.01):
    """Mixed partial of scalar ``fn`` at ``point`` for multi-index ``alpha``."""
    point = np.asarray(point, dtype=float)
    active = [(i, a) for i, a in enumerate(alpha) if a > 0]

    def recurse(base, remaining):
        if not remaining:
            return fn(base)
        (var, order), rest = remaining[0], remaining[1:]
        offs, weights = stencil(order, h)
        total = 0.0
        for off, w in zip(offs, weights):
            shifted = base.copy()
            shifted[var] += off
            total += w * recurse(shifted, rest)
        return total

    return recurse(point, active)


def fd_gradient(fn, point, h=0.01):
    point = np.asarray(point, dtype=float)
    out = np.zeros(point.size)
    for i in range(point.size):
        alpha = [0] * point.size
        alpha[i] = 1
        out[i] = fd_partial(fn, point, alpha, h)
    return out
