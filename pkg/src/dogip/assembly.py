"""Conventional sparse assembly of the weighted-projection and elliptic systems.

Element matrices are integrated with Grundmann-Moller rules, scattered into
coordinate buffers chunk by chunk, summed, and finally thresholded: values
with magnitude below ``1e-14`` are dropped from the stored pattern.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import _parallel
from .coefficients import check_spd, matrix_field, scalar_field
from .errors import DimensionMismatch, RuleDegreeWarning
from .quadrature import grundmann_moller
from .reference import ZERO_THRESHOLD, build_lagrange_basis, eval_basis, eval_basis_grad

COO_BUDGET = 4_000_000


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed-sparse-row matrix; memory is counted in stored numbers."""

    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_scipy(cls, A, threshold=ZERO_THRESHOLD):
        A = sp.csr_matrix(A, copy=True)
        A.sum_duplicates()
        A.data[np.abs(A.data) < threshold] = 0.0
        A.eliminate_zeros()
        A.sort_indices()
        return cls(nrows=A.shape[0], ncols=A.shape[1],
                   row_offsets=A.indptr.astype(np.int64),
                   col_indices=A.indices.astype(np.int64),
                   values=A.data)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def dim(self):
        return self.nrows

    @property
    def nnz(self):
        return int(len(self.values))

    @property
    def mem(self):
        """``2 nnz + nrows``: values, column indices and row counts."""
        return 2 * self.nnz + self.nrows

    def to_scipy(self):
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)

    def toarray(self):
        return self.to_scipy().toarray()

    def matvec(self, u):
        return csr_matvec(self, u)

    def write_matrix_market(self, path):
        scipy.io.mmwrite(path, self.to_scipy(), symmetry="general")


def csr_matvec(A, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (A.ncols,):
        raise DimensionMismatch(f"vector of length {u.shape} does not match {A.ncols} columns")
    return A.to_scipy() @ u


def required_degree(problem, k, coeff_degree):
    return 2 * k + coeff_degree if problem == "wp" else 2 * (k - 1) + coeff_degree


def resolve_rule(d, problem, k, coeff, rule):
    need = required_degree(problem, k, coeff.degree)
    if rule is None:
        return grundmann_moller(d, need)
    if isinstance(rule, (int, np.integer)):
        rule = grundmann_moller(d, int(rule))
    if rule.degree < need:
        warnings.warn(f"quadrature degree {rule.degree} < {need} needed for exact {problem} assembly",
                      RuleDegreeWarning, stacklevel=3)
    return rule


def _assemble(mesh, dofmap, element_block):
    V_T = dofmap.V_T
    size = max(1, COO_BUDGET // (V_T * V_T))
    shape = (dofmap.dim, dofmap.dim)
    local_r = np.repeat(np.arange(V_T), V_T)
    local_c = np.tile(np.arange(V_T), V_T)

    def work(span):
        s, e = span
        blocks = element_block(s, e)
        cells = dofmap.cells[s:e]
        rows = cells[:, local_r].ravel()
        cols = cells[:, local_c].ravel()
        return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=shape).tocsr()

    total = None
    for part in _parallel.map_ordered(work, _parallel.chunks(mesh.n_elements, size)):
        total = part if total is None else total + part
    return CsrMatrix.from_scipy(total)


def _physical_points(R, S, ref_points):
    return np.einsum("eab,qb->eqa", R, ref_points) + S[:, None, :]


def assemble_wp_matrix(mesh, dofmap, m=1.0, rule=None):
    """Matrix of ``int m u v`` on a continuous order-``k`` space."""
    m = scalar_field(m, mesh.d)
    rule = resolve_rule(mesh.d, "wp", dofmap.k, m, rule)
    phi = eval_basis(build_lagrange_basis(mesh.d, dofmap.k), rule.points)  # (q, i)

    def block(s, e):
        R, S, detR, _ = mesh.geometry(s, e)
        x = _physical_points(R, S, rule.points)
        mw = m(x.reshape(-1, mesh.d)).reshape(x.shape[:2]) * rule.weights * np.abs(detR)[:, None]
        return np.einsum("eq,qi,qj->eij", mw, phi, phi, optimize=True)

    return _assemble(mesh, dofmap, block)


def assemble_elliptic_matrix(mesh, dofmap, M="identity", rule=None):
    """Matrix of ``int M grad u . grad v`` on a continuous order-``k`` space."""
    M = matrix_field(M, mesh.d)
    rule = resolve_rule(mesh.d, "elliptic", dofmap.k, M, rule)
    ghat = eval_basis_grad(build_lagrange_basis(mesh.d, dofmap.k), rule.points)  # (q, i, p)
    checked = []

    def block(s, e):
        R, S, detR, Rinv = mesh.geometry(s, e)
        x = _physical_points(R, S, rule.points)
        Mx = M(x.reshape(-1, mesh.d)).reshape(x.shape[:2] + (mesh.d, mesh.d))
        if not checked:
            check_spd(Mx[:1000].reshape(-1, mesh.d, mesh.d))
            checked.append(True)
        G = np.einsum("qip,epc->eqic", ghat, Rinv, optimize=True)
        w = rule.weights * np.abs(detR)[:, None]
        MG = np.einsum("eqcd,eqjd->eqjc", Mx, G, optimize=True)
        return np.einsum("eq,eqic,eqjc->eij", w, G, MG, optimize=True)

    return _assemble(mesh, dofmap, block)


def assemble_rhs(mesh, dofmap, f=1.0, rule=None):
    """Load vector ``b_i = int f phi_i``."""
    f = scalar_field(f, mesh.d)
    rule = resolve_rule(mesh.d, "wp", dofmap.k, f, rule)
    phi = eval_basis(build_lagrange_basis(mesh.d, dofmap.k), rule.points)
    b = np.zeros(dofmap.dim)
    size = max(1, COO_BUDGET // dofmap.V_T)
    for s, e in _parallel.chunks(mesh.n_elements, size):
        R, S, detR, _ = mesh.geometry(s, e)
        x = _physical_points(R, S, rule.points)
        fw = f(x.reshape(-1, mesh.d)).reshape(x.shape[:2]) * rule.weights * np.abs(detR)[:, None]
        b += np.bincount(dofmap.cells[s:e].ravel(), weights=(fw @ phi).ravel(), minlength=dofmap.dim)
    return b
