"""Matrix-free DoGIP operators.

The system matrix is never formed. Each element stores only its
(block-)diagonal double-grid factor; the interpolation from primal DOFs to
double-grid values is a single reference table shared by all elements. A
matrix-vector product gathers local DOFs, interpolates, scales by the
element factor, applies the transposed table and scatters back.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import _parallel
from .assembly import resolve_rule
from .coefficients import check_spd, matrix_field, scalar_field
from .dofmap import build_continuous_dofmap
from .errors import DimensionMismatch
from .reference import (ZERO_THRESHOLD, build_interp_elliptic, build_interp_wp,
                        build_lagrange_basis, check_primal_order, eval_basis)

CHUNK = 100_000


def _gather_scatter(cells, dim, u, local_apply):
    u = np.asarray(u, dtype=float)
    if u.shape != (dim,):
        raise DimensionMismatch(f"vector of length {u.shape} does not match operator dimension {dim}")

    def work(span):
        s, e = span
        out = local_apply(s, e, u[cells[s:e]])
        return np.bincount(cells[s:e].ravel(), weights=out.ravel(), minlength=dim)

    v = np.zeros(dim)
    for part in _parallel.map_ordered(work, _parallel.chunks(len(cells), CHUNK)):
        v += part
    return v


def _quadrature_weights(mesh, rule, s, e, coeff_values):
    """``|det R_T| w_q c(F_T(x_q))`` for elements ``s:e``."""
    R, S, detR, Rinv = mesh.geometry(s, e)
    x = np.einsum("eab,qb->eqa", R, rule.points) + S[:, None, :]
    c = coeff_values(x.reshape(-1, mesh.d))
    c = c.reshape(x.shape[:2] + c.shape[1:])
    w = rule.weights * np.abs(detR)[:, None]
    return w.reshape(w.shape + (1,) * (c.ndim - 2)) * c, Rinv


@dataclass(frozen=True, eq=False)
class DogipWpOperator:
    """Element-wise DoGIP for ``int m u v``: ``weights[t, j] = int_T m phi_W^j``."""

    mesh: object
    dofmap: object
    interp: object
    weights: np.ndarray

    @property
    def k(self):
        return self.dofmap.k

    @property
    def dim(self):
        return self.dofmap.dim

    @property
    def stored_per_element(self):
        return self.interp.W_T

    @property
    def stored_entries(self):
        return self.stored_per_element * self.mesh.n_elements

    def nnz_per_element(self):
        return np.count_nonzero(np.abs(self.weights) >= ZERO_THRESHOLD, axis=1)

    @cached_property
    def w_dofmap(self):
        return build_continuous_dofmap(self.mesh, 2 * self.k)

    def matvec(self, u):
        B = self.interp.table

        def local(s, e, uT):
            return ((uT @ B.T) * self.weights[s:e]) @ B

        return _gather_scatter(self.dofmap.cells, self.dim, u, local)

    __call__ = matvec


@dataclass(frozen=True, eq=False)
class DogipWpGlobalOperator:
    """Global-diagonal DoGIP for ``int m u v`` on the continuous double-grid space."""

    mesh: object
    dofmap: object
    w_dofmap: object
    interp: object
    diagonal: np.ndarray
    multiplicity: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.dofmap.dim

    @property
    def stored_entries(self):
        return len(self.diagonal)

    def matvec(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise DimensionMismatch(f"vector of length {u.shape} does not match operator dimension {self.dim}")
        B = self.interp.table
        Vc, Wc = self.dofmap.cells, self.w_dofmap.cells
        uW = np.empty(self.w_dofmap.dim)
        for s, e in _parallel.chunks(len(Vc), CHUNK):
            uW[Wc[s:e]] = u[Vc[s:e]] @ B.T  # continuous: every element writes the same value
        yW = self.diagonal * uW / self.multiplicity

        def local(s, e, _):
            return yW[Wc[s:e]] @ B

        return _gather_scatter(Vc, self.dim, u, local)

    __call__ = matvec


@dataclass(frozen=True, eq=False)
class DogipEllipticOperator:
    """Element-wise DoGIP for ``int M grad u . grad v``.

    ``blocks[t, r, s, i] = sum_pq Rinv[r, p] Rinv[s, q] int_T M_pq phi_W^i``.
    In the isotropic form only ``iso_weights[t, i] = int_T m phi_W^i`` and
    ``congruence[t] = Rinv Rinv^T`` are stored and ``blocks`` is ``None``.
    """

    mesh: object
    dofmap: object
    interp: object
    blocks: np.ndarray | None = None
    iso_weights: np.ndarray | None = None
    congruence: np.ndarray | None = None

    @property
    def k(self):
        return self.dofmap.k

    @property
    def dim(self):
        return self.dofmap.dim

    @property
    def isotropic(self):
        return self.blocks is None

    @property
    def stored_per_element(self):
        d, W_T = self.mesh.d, self.interp.W_T
        return W_T + d * d if self.isotropic else d * d * W_T

    @property
    def stored_entries(self):
        return self.stored_per_element * self.mesh.n_elements

    def nnz_per_element(self):
        if self.isotropic:
            return (np.count_nonzero(np.abs(self.iso_weights) >= ZERO_THRESHOLD, axis=1)
                    + np.count_nonzero(np.abs(self.congruence) >= ZERO_THRESHOLD, axis=(1, 2)))
        return np.count_nonzero(np.abs(self.blocks) >= ZERO_THRESHOLD, axis=(1, 2, 3))

    def element_blocks(self, s=0, e=None):
        """Full ``(n, d, d, W_T)`` factors, expanded from the isotropic form if needed."""
        if not self.isotropic:
            return self.blocks[s:e]
        return self.congruence[s:e, :, :, None] * self.iso_weights[s:e, None, None, :]

    def matvec(self, u):
        B = self.interp.table  # (d, W_T, V_T)

        def local(s, e, uT):
            g = np.einsum("sjl,el->esj", B, uT, optimize=True)
            if self.isotropic:
                h = np.einsum("ers,esj->erj", self.congruence[s:e], g) * self.iso_weights[s:e, None, :]
            else:
                h = np.einsum("ersj,esj->erj", self.blocks[s:e], g)
            return np.einsum("rjk,erj->ek", B, h, optimize=True)

        return _gather_scatter(self.dofmap.cells, self.dim, u, local)

    __call__ = matvec


def build_wp_dogip(mesh, k, m=1.0, rule=None, dofmap=None):
    """Element-wise operator; the rule must be exact to degree ``2k + deg(m)``."""
    check_primal_order(mesh.d, k)
    m = scalar_field(m, mesh.d)
    rule = resolve_rule(mesh.d, "wp", k, m, rule)
    dofmap = dofmap or build_continuous_dofmap(mesh, k)
    interp = build_interp_wp(mesh.d, k)
    phiW = eval_basis(build_lagrange_basis(mesh.d, 2 * k), rule.points)  # (q, W_T)
    weights = np.empty((mesh.n_elements, interp.W_T))
    for s, e in _parallel.chunks(mesh.n_elements, CHUNK):
        wm, _ = _quadrature_weights(mesh, rule, s, e, m)
        weights[s:e] = wm @ phiW
    weights.setflags(write=False)
    return DogipWpOperator(mesh=mesh, dofmap=dofmap, interp=interp, weights=weights)


def build_wp_dogip_global(mesh, k, m=1.0, rule=None, dofmap=None):
    """Global-diagonal operator over the ``(2kN + 1)^d`` double-grid DOFs."""
    local = build_wp_dogip(mesh, k, m, rule, dofmap)
    Wc = local.w_dofmap.cells
    diagonal = np.bincount(Wc.ravel(), weights=local.weights.ravel(), minlength=local.w_dofmap.dim)
    mult = np.bincount(Wc.ravel(), minlength=local.w_dofmap.dim).astype(float)
    return DogipWpGlobalOperator(mesh=mesh, dofmap=local.dofmap, w_dofmap=local.w_dofmap,
                                 interp=local.interp, diagonal=diagonal, multiplicity=mult)


def build_elliptic_dogip(mesh, k, M="identity", rule=None, dofmap=None, isotropic=False):
    """Element-wise operator; the rule must be exact to degree ``2(k-1) + deg(M)``.

    ``isotropic=True`` stores the reduced form and requires ``M = m I``.
    """
    check_primal_order(mesh.d, k)
    M = matrix_field(M, mesh.d)
    if isotropic and not M.isotropic:
        raise ValueError("isotropic storage needs a coefficient of the form m(x) I")
    rule = resolve_rule(mesh.d, "elliptic", k, M, rule)
    dofmap = dofmap or build_continuous_dofmap(mesh, k)
    interp = build_interp_elliptic(mesh.d, k)
    phiW = eval_basis(build_lagrange_basis(mesh.d, 2 * (k - 1)), rule.points)
    n, d, W_T = mesh.n_elements, mesh.d, interp.W_T
    if isotropic:
        iso = np.empty((n, W_T))
        cong = np.empty((n, d, d))
        for s, e in _parallel.chunks(n, CHUNK):
            wm, Rinv = _quadrature_weights(mesh, rule, s, e, M.iso)
            iso[s:e] = wm @ phiW
            cong[s:e] = Rinv @ np.swapaxes(Rinv, 1, 2)
        return DogipEllipticOperator(mesh=mesh, dofmap=dofmap, interp=interp,
                                     iso_weights=iso, congruence=cong)
    blocks = np.empty((n, d, d, W_T))
    for s, e in _parallel.chunks(n, CHUNK):
        wM, Rinv = _quadrature_weights(mesh, rule, s, e, M)  # (n, q, d, d)
        if s == 0:
            check_spd(wM[:1000].sum(axis=1) if len(wM) else wM)
        C = np.einsum("eqpr,qi->epri", wM, phiW)
        blocks[s:e] = np.einsum("erp,epqi,esq->ersi", Rinv, C, Rinv, optimize=True)
    blocks.setflags(write=False)
    return DogipEllipticOperator(mesh=mesh, dofmap=dofmap, interp=interp, blocks=blocks)


def build_dogip(problem, mesh, k, coefficient, rule=None, dofmap=None):
    if problem == "wp":
        return build_wp_dogip(mesh, k, coefficient, rule, dofmap)
    if problem == "elliptic":
        return build_elliptic_dogip(mesh, k, coefficient, rule, dofmap)
    raise ValueError(f"unknown problem {problem!r}")


def with_perturbed_entry(op, element=0, index=0, delta=1e-6):
    """Copy of ``op`` with one stored factor entry shifted by ``delta`` (negative control)."""
    if isinstance(op, DogipWpOperator):
        w = np.array(op.weights)
        w[element, index] += delta
        return replace(op, weights=w)
    blocks = np.array(op.element_blocks())
    blocks[element].flat[index] += delta
    return replace(op, blocks=blocks, iso_weights=None, congruence=None)


def dogip_matvec(op, u):
    return op.matvec(u)
