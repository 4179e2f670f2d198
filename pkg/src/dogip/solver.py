"""Unpreconditioned conjugate gradients over any operator with ``dim`` and ``matvec``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, SolverBreakdown


@dataclass(frozen=True)
class LinearOperator:
    """Symmetric positive (semi)definite action ``apply: R^dim -> R^dim``."""

    dim: int
    apply: Callable

    def matvec(self, u):
        return self.apply(u)

    __call__ = matvec


def as_operator(op):
    """Wrap a CSR matrix, DoGIP operator or dense array as a :class:`LinearOperator`."""
    if isinstance(op, LinearOperator):
        return op
    if isinstance(op, np.ndarray):
        return LinearOperator(op.shape[0], lambda u, A=op: A @ u)
    return LinearOperator(op.dim, op.matvec)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residuals: list = field(default_factory=list)
    converged: bool = True

    @property
    def status(self):
        return "converged" if self.converged else "max-iterations"


def cg_solve(op, b, tol=1e-10, maxit=None, x0=None):
    """Solve ``op x = b`` to ``||op x - b|| <= tol ||b||``.

    Non-convergence is reported through ``CGResult.converged``; a
    non-positive curvature ``p.Ap <= 0`` raises :class:`SolverBreakdown`.
    """
    op = as_operator(op)
    b = np.asarray(b, dtype=float)
    if b.shape != (op.dim,):
        raise DimensionMismatch(f"right-hand side of length {b.shape} for operator of dimension {op.dim}")
    maxit = 2 * op.dim + 10 if maxit is None else maxit
    x = np.zeros(op.dim) if x0 is None else np.array(x0, dtype=float)
    r = b - op(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    target = tol * bnorm
    rr = r @ r
    history = [np.sqrt(rr)]
    if history[-1] <= target:
        return CGResult(x, 0, history, True)
    p = r.copy()
    for it in range(1, maxit + 1):
        Ap = op(p)
        curv = p @ Ap
        if curv <= 0:
            raise SolverBreakdown(f"p.Ap = {curv:.3e} at iteration {it}; operator is not SPD")
        alpha = rr / curv
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        history.append(np.sqrt(rr_new))
        if history[-1] <= target:
            return CGResult(x, it, history, True)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return CGResult(x, maxit, history, False)


@dataclass(frozen=True)
class BcSpec:
    """Dirichlet constraints: ``x[indices] = values``."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        vals = np.broadcast_to(np.asarray(self.values, dtype=float), idx.shape).copy()
        if len(np.unique(idx)) != len(idx):
            raise ValueError("constrained indices must be unique")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)


def apply_dirichlet(op, b, bc):
    """Symmetric elimination of the constrained DOFs.

    Constrained rows and columns act as the identity and ``b`` is shifted so
    the constrained entries solve to ``bc.values`` exactly.
    """
    op = as_operator(op)
    b = np.asarray(b, dtype=float)
    if len(bc.indices) == 0:
        return op, b.copy()
    if bc.indices.min() < 0 or bc.indices.max() >= op.dim:
        raise IndexError("constrained index out of range")
    free = np.ones(op.dim, dtype=bool)
    free[bc.indices] = False
    g = np.zeros(op.dim)
    g[bc.indices] = bc.values

    def apply(u):
        v = op(np.where(free, u, 0.0))
        v[~free] = u[~free]
        return v

    rhs = b - op(g)
    rhs[~free] = bc.values
    return LinearOperator(op.dim, apply), rhs
