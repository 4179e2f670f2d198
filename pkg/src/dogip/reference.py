"""Lagrange bases on the reference simplex and the reference interpolation tables.

The reference simplex is the convex hull of the origin and the unit axis
points. Nodes sit on the equispaced barycentric lattice, and the nodal basis
is evaluated with the closed-form barycentric product

    phi_alpha(lam) = prod_i prod_{j < alpha_i} (k * lam_i - j) / (j + 1)

which needs no Vandermonde solve. The interpolation tables are computed in
exact rational arithmetic so that structural zeros and unit entries are exact
before the ``1e-14`` counting threshold is applied.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InvalidDimension, InvalidOrder, PointOutsideSimplex

ZERO_THRESHOLD = 1e-14

# primal orders covered by the efficiency tables; double-grid bases go to 2x
MAX_PRIMAL_ORDER = {2: 8, 3: 4}


def check_dimension(d):
    if d not in (2, 3):
        raise InvalidDimension(f"dimension must be 2 or 3, got {d!r}")


def check_primal_order(d, k, allow_zero=False):
    check_dimension(d)
    lo = 0 if allow_zero else 1
    if not lo <= k <= MAX_PRIMAL_ORDER[d]:
        raise InvalidOrder(f"order k={k} outside [{lo}, {MAX_PRIMAL_ORDER[d]}] for d={d}")


def dim_pk(d, k):
    """Dimension of the polynomial space of total degree ``k`` in ``d`` variables."""
    return comb(k + d, d)


@lru_cache(maxsize=None)
def _lattice(d, k):
    rows = []
    for a in itertools.product(range(k + 1), repeat=d):
        a = a[::-1]  # first coordinate runs fastest
        if sum(a) <= k:
            rows.append((k - sum(a),) + a)
    out = np.array(rows, dtype=np.int64).reshape(-1, d + 1)
    out.setflags(write=False)
    return out


def lattice_indices(d, k):
    """Barycentric multi-indices ``(alpha_0, ..., alpha_d)`` with ``sum(alpha) == k``.

    Row order matches :func:`reference_nodes`; ``alpha_1..alpha_d`` are the
    integer x-lattice coordinates, the first coordinate running fastest.
    """
    check_dimension(d)
    if k < 0:
        raise InvalidOrder(f"order must be non-negative, got {k}")
    return _lattice(d, k)


def reference_nodes(d, k):
    """Equispaced nodal points of order ``k`` on the reference simplex, shape ``(n, d)``.

    For ``k == 0`` the single node is the barycentre.
    """
    alpha = lattice_indices(d, k)
    if k == 0:
        return np.full((1, d), 1.0 / (d + 1))
    return alpha[:, 1:] / k


def barycentric(points):
    """Barycentric coordinates ``(1 - sum(x), x_1, ..., x_d)`` of reference points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.concatenate([1.0 - points.sum(axis=1, keepdims=True), points], axis=1)


@dataclass(frozen=True)
class ReferenceBasis:
    """Nodal Lagrange basis of order ``k`` on the ``d``-dimensional reference simplex."""

    d: int
    k: int
    nodes: np.ndarray
    multi_indices: np.ndarray

    @property
    def dim(self):
        return len(self.nodes)


@lru_cache(maxsize=None)
def build_lagrange_basis(d, k):
    check_dimension(d)
    if not 0 <= k <= 2 * MAX_PRIMAL_ORDER[d]:
        raise InvalidOrder(f"basis order k={k} outside [0, {2 * MAX_PRIMAL_ORDER[d]}] for d={d}")
    return ReferenceBasis(d=d, k=k, nodes=reference_nodes(d, k), multi_indices=lattice_indices(d, k))


def _factor_tables(k, s):
    """Values and s-derivatives of ``P_a(s) = prod_{j<a} (s - j)/(j + 1)`` for ``a = 0..k``."""
    P = np.empty((k + 1,) + s.shape)
    dP = np.empty_like(P)
    P[0] = 1.0
    dP[0] = 0.0
    for a in range(1, k + 1):
        P[a] = P[a - 1] * (s - (a - 1)) / a
        dP[a] = (dP[a - 1] * (s - (a - 1)) + P[a - 1]) / a
    return P, dP


def _checked_barycentric(basis, points, tol):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != basis.d:
        raise PointOutsideSimplex(f"points must have {basis.d} coordinates")
    lam = barycentric(points)
    if lam.size and lam.min() < -tol:
        raise PointOutsideSimplex(f"point outside reference simplex (min barycentric {lam.min():.3e})")
    return lam


def eval_basis(basis, points, tol=1e-12):
    """Evaluate all basis functions at ``points``; returns ``(n_points, V_T)``."""
    lam = _checked_barycentric(basis, points, tol)
    P, _ = _factor_tables(basis.k, basis.k * lam)
    cols = np.arange(basis.d + 1)
    # P[alpha_i, :, i] for each basis function and barycentric slot
    vals = P[basis.multi_indices, :, cols]  # (V_T, d+1, n)
    return vals.prod(axis=1).T


def eval_basis_grad(basis, points, tol=1e-12):
    """Reference gradients of all basis functions; returns ``(n_points, V_T, d)``."""
    lam = _checked_barycentric(basis, points, tol)
    k, d = basis.k, basis.d
    P, dP = _factor_tables(k, k * lam)
    cols = np.arange(d + 1)
    vals = P[basis.multi_indices, :, cols]  # (V_T, d+1, n)
    dvals = dP[basis.multi_indices, :, cols]
    dlam = np.empty_like(vals)
    for i in range(d + 1):
        others = np.delete(vals, i, axis=1).prod(axis=1)
        dlam[:, i] = k * dvals[:, i] * others
    grad = dlam[:, 1:] - dlam[:, :1]  # d/dx_r = d/dlam_r - d/dlam_0
    return grad.transpose(2, 0, 1)


# -- exact rational evaluation used for the interpolation tables -------------

def _exact_lambda(d, m):
    """Barycentric coordinates of the order-``m`` lattice as Fractions."""
    if m == 0:
        return [tuple(Fraction(1, d + 1) for _ in range(d + 1))]
    return [tuple(Fraction(int(b), m) for b in beta) for beta in _lattice(d, m)]


def _exact_factors(k, s):
    P = [Fraction(1)]
    dP = [Fraction(0)]
    for a in range(1, k + 1):
        P.append(P[-1] * (s - (a - 1)) / a)
        dP.append((dP[-1] * (s - (a - 1)) + P[-2]) / a)
    return P, dP


def _exact_values_and_grads(d, k, lam):
    facs = [_exact_factors(k, k * li) for li in lam]
    values, grads = [], []
    for alpha in _lattice(d, k):
        p = [facs[i][0][int(a)] for i, a in enumerate(alpha)]
        dp = [facs[i][1][int(a)] for i, a in enumerate(alpha)]
        val = Fraction(1)
        for x in p:
            val *= x
        dlam = []
        for i in range(d + 1):
            t = k * dp[i]
            for j in range(d + 1):
                if j != i:
                    t *= p[j]
            dlam.append(t)
        values.append(val)
        grads.append([dlam[r] - dlam[0] for r in range(1, d + 1)])
    return values, grads


def _nnz(values):
    return int(np.count_nonzero(np.abs(values) >= ZERO_THRESHOLD))


def _nnz_pm1(values):
    return int(np.count_nonzero(np.abs(np.abs(values) - 1.0) < ZERO_THRESHOLD))


@dataclass(frozen=True)
class InterpTableWP:
    """Primal order-``k`` basis evaluated at the order-``2k`` double-grid nodes.

    ``table[j, l]`` is the value of primal function ``l`` at double-grid node ``j``.
    """

    d: int
    k: int
    table: np.ndarray

    @property
    def W_T(self):
        return self.table.shape[0]

    @property
    def V_T(self):
        return self.table.shape[1]

    @property
    def nnz(self):
        return _nnz(self.table)

    @property
    def nnz_pm1(self):
        return _nnz_pm1(self.table)


@dataclass(frozen=True)
class InterpTableElliptic:
    """Reference gradients of the order-``k`` basis at the order-``2(k-1)`` nodes.

    ``table[r, i, l]`` is the ``x_r`` derivative of primal function ``l`` at
    double-grid node ``i``.
    """

    d: int
    k: int
    table: np.ndarray

    @property
    def W_T(self):
        return self.table.shape[1]

    @property
    def V_T(self):
        return self.table.shape[2]

    @property
    def nnz(self):
        return _nnz(self.table)

    @property
    def nnz_pm1(self):
        return _nnz_pm1(self.table)


@lru_cache(maxsize=None)
def build_interp_wp(d, k):
    check_primal_order(d, k)
    rows = [_exact_values_and_grads(d, k, lam)[0] for lam in _exact_lambda(d, 2 * k)]
    table = np.array([[float(v) for v in row] for row in rows])
    table.setflags(write=False)
    return InterpTableWP(d=d, k=k, table=table)


@lru_cache(maxsize=None)
def build_interp_elliptic(d, k):
    check_primal_order(d, k)
    lattice = _exact_lambda(d, 2 * (k - 1))
    table = np.empty((d, len(lattice), dim_pk(d, k)))
    for i, lam in enumerate(lattice):
        _, grads = _exact_values_and_grads(d, k, lam)
        table[:, i, :] = np.array([[float(g) for g in gl] for gl in grads]).T
    table.setflags(write=False)
    return InterpTableElliptic(d=d, k=k, table=table)
