"""Grundmann-Moller quadrature on the reference simplex.

The family has odd exactness degree ``2s + 1`` and closed-form weights

    w_i = (-1)^i 2^(-2s) (d + 2s + 1 - 2i)^(2s+1) / (i! (d + 2s + 1 - i)!)

attached to the barycentric points ``(2 beta + 1) / (d + 2s + 1 - 2i)`` for
every composition ``|beta| = s - i``. Weights are formed exactly and summed
over the reference simplex of volume ``1/d!``. For ``s >= 1`` some weights are
negative; this is flagged on the rule, not rejected.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import InvalidDimension, InvalidOrder


@dataclass(frozen=True)
class QuadratureRule:
    d: int
    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self):
        return len(self.weights)

    @property
    def positive(self):
        return bool(np.all(self.weights > 0))


def _compositions(total, parts):
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cut:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield out


@lru_cache(maxsize=None)
def grundmann_moller(d, degree):
    """Rule exact for polynomials of total degree ``degree`` (rounded up to odd)."""
    if d not in (1, 2, 3):
        raise InvalidDimension(f"dimension must be 1, 2 or 3, got {d!r}")
    if degree < 0:
        raise InvalidOrder(f"degree must be non-negative, got {degree}")
    s = degree // 2
    points, weights = [], []
    for i in range(s + 1):
        denom = d + 2 * s + 1 - 2 * i
        w = Fraction((-1) ** i * denom ** (2 * s + 1),
                     2 ** (2 * s) * factorial(i) * factorial(d + 2 * s + 1 - i))
        for beta in _compositions(s - i, d + 1):
            points.append([(2 * b + 1) / denom for b in beta[1:]])
            weights.append(float(w))
    pts = np.array(points)
    wts = np.array(weights)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(d=d, degree=2 * s + 1, points=pts, weights=wts)


def simplex_moment(alpha):
    """Exact integral of ``x^alpha`` over the reference simplex: ``prod(alpha_i!) / (|alpha| + d)!``."""
    num = 1
    for a in alpha:
        num *= factorial(a)
    return Fraction(num, factorial(sum(alpha) + len(alpha)))


def exactness_error(rule, degree=None):
    """Largest relative error over all monomials of total degree <= ``degree``."""
    degree = rule.degree if degree is None else degree
    worst = 0.0
    for alpha in itertools.product(range(degree + 1), repeat=rule.d):
        if sum(alpha) > degree:
            continue
        approx = float(np.dot(rule.weights, np.prod(rule.points ** np.array(alpha), axis=1)))
        exact = simplex_moment(alpha)
        worst = max(worst, abs(approx - float(exact)) / float(exact))
    return worst


def map_points(amap, ref_points):
    """Physical images ``R x_hat + S`` of reference points."""
    return ref_points @ amap.R.T + amap.S


def integrate_on_element(rule, amap, f):
    """Integrate ``f`` (vectorised over an ``(n, d)`` point array) over one element."""
    if rule.d != amap.R.shape[0]:
        raise InvalidDimension("rule and element dimensions differ")
    vals = np.asarray(f(map_points(amap, rule.points)), dtype=float)
    vals = np.broadcast_to(vals, rule.weights.shape)
    return abs(amap.detR) * float(np.dot(rule.weights, vals))
