"""Gauss-Legendre rules on [0, 1], including composite rules with breakpoints."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order: int, a: float = 0.0, b: float = 1.0):
    """Nodes and weights of the ``order``-point rule on [a, b]."""
    x, w = _leggauss(int(order))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite(breaks, order: int):
    """Composite rule with an ``order``-point panel between consecutive breaks."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(int(order))
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def clustered(order: int, power: int = 5):
    """Gauss-Legendre rule pulled towards both endpoints by a beta-CDF map.

    Absorbs integrable endpoint singularities such as log u or Phi^-1(u).
    """
    from scipy.special import beta, betainc

    t, w = _leggauss(int(order))
    t = 0.5 * (t + 1.0)
    u = betainc(power, power, t)
    du = (t * (1 - t)) ** (power - 1) / beta(power, power)
    keep = (u > 0) & (u < 1)
    return u[keep], 0.5 * (w * du)[keep]


def kink_rule(order: int, panel_order: int = 8, endpoint_clustering: bool = False):
    """Outer rule plus an inner composite rule whose panels break at every outer node.

    Kernels like g(u, v) that are smooth away from u = v integrate to high
    accuracy on the inner rule for every outer node u.
    """
    xo, wo = clustered(order) if endpoint_clustering else gauss_legendre(order)
    xi, wi = composite(np.concatenate(([0.0], xo, [1.0])), panel_order)
    if endpoint_clustering:
        keep = (xi > 0) & (xi < 1)
        xi, wi = xi[keep], wi[keep]
    return xo, wo, xi, wi


def split_at(point: float, order: int):
    """Rule on [0, 1] split at ``point``: exact-rate integration of kinked integrands."""
    x1, w1 = gauss_legendre(order, 0.0, point)
    x2, w2 = gauss_legendre(order, point, 1.0)
    return np.concatenate((x1, x2)), np.concatenate((w1, w2))


def bilinear(kernel, f, g, order: int = 64, panel_order: int = 8,
             endpoint_clustering: bool = False) -> float:
    """Integral of kernel(u, v) f(u) g(v) over the unit square.

    ``kernel`` must be vectorised and may have a kink on the diagonal.
    """
    xo, wo, xi, wi = kink_rule(order, panel_order, endpoint_clustering)
    K = kernel(xo[:, None], xi[None, :])
    return float((wo * f(xo)) @ (K @ (wi * g(xi))))
