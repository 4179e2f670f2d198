"""Memory and multiplication-cost comparison of DoGIP against CSR storage.

Counts are in stored numbers, not bytes. For a CSR matrix ``mem = 2 nnz +
nrows``. DoGIP stores its per-element factors densely, ``W_T`` numbers per
element for the weighted projection and ``d^2 W_T`` for the elliptic
problem.

    memory efficiency        = mem_a_dogip_t * n_elements / mem_a
    computational efficiency = (2 (nnz_bhat - nnz_pm1_bhat) + mem_a_dogip_t) * n_elements / nnz_a

Unit entries of the interpolation table cost no multiplication, hence the
``nnz_pm1`` discount.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .assembly import assemble_elliptic_matrix, assemble_wp_matrix, resolve_rule
from .coefficients import matrix_field, scalar_field
from .dofmap import build_continuous_dofmap
from .operators import build_elliptic_dogip, build_wp_dogip
from .reference import ZERO_THRESHOLD, dim_pk


def nnz_with_threshold(values, threshold=ZERO_THRESHOLD):
    return int(np.count_nonzero(np.abs(np.asarray(values, dtype=float)) >= threshold))


def nnz_pm1(values, threshold=ZERO_THRESHOLD):
    """Entries within ``threshold`` of +1 or -1."""
    a = np.abs(np.asarray(values, dtype=float))
    return int(np.count_nonzero(np.abs(a - 1.0) < threshold))


def memory_efficiency(mem_a_dogip_t, n_elements, mem_a):
    return mem_a_dogip_t * n_elements / mem_a


def computational_efficiency(nnz_bhat, nnz_pm1_bhat, mem_a_dogip_t, n_elements, nnz_a):
    return (2 * (nnz_bhat - nnz_pm1_bhat) + mem_a_dogip_t) * n_elements / nnz_a


def round_half_up(x, places=2):
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class EfficiencyReport:
    d: int
    N: int
    k: int
    problem: str
    coefficient: str
    n_elements: int
    dim_v: int
    nnz_a: int
    mem_a: int
    mem_a_t: int
    mem_a_dogip: int
    mem_a_dogip_t: int
    nnz_a_dogip: int
    nnz_bhat: int
    nnz_pm1_bhat: int
    quad_degree: int
    memory_efficiency: float
    computational_efficiency: float

    def recomputed(self):
        """Both efficiencies recomputed from the raw count fields."""
        return (memory_efficiency(self.mem_a_dogip_t, self.n_elements, self.mem_a),
                computational_efficiency(self.nnz_bhat, self.nnz_pm1_bhat, self.mem_a_dogip_t,
                                         self.n_elements, self.nnz_a))

    def as_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, row):
        kwargs = {}
        for f in dataclasses.fields(cls):
            raw = row[f.name]
            kwargs[f.name] = raw if f.type == "str" else (int(raw) if f.type == "int" else float(raw))
        return cls(**kwargs)

    @classmethod
    def fieldnames(cls):
        return [f.name for f in dataclasses.fields(cls)]


def build_report(mesh, k, problem, coefficient=None, rule=None):
    """Assemble the CSR matrix and build the DoGIP operator for one configuration.

    The CSR matrix is released before the DoGIP factors are built, so peak
    memory is the larger of the two, not their sum.
    """
    d = mesh.d
    dofmap = build_continuous_dofmap(mesh, k)
    if problem == "wp":
        coeff = scalar_field(1.0 if coefficient is None else coefficient, d)
        rule = resolve_rule(d, problem, k, coeff, rule)
        A = assemble_wp_matrix(mesh, dofmap, coeff, rule)
    elif problem == "elliptic":
        coeff = matrix_field("identity" if coefficient is None else coefficient, d)
        rule = resolve_rule(d, problem, k, coeff, rule)
        A = assemble_elliptic_matrix(mesh, dofmap, coeff, rule)
    else:
        raise ValueError(f"unknown problem {problem!r}")
    nnz_a, mem_a = A.nnz, A.mem
    del A
    if problem == "wp":
        op = build_wp_dogip(mesh, k, coeff, rule, dofmap)
    else:
        op = build_elliptic_dogip(mesh, k, coeff, rule, dofmap)
    per_el = op.stored_per_element
    nnz_dogip = int(op.nnz_per_element().sum())
    bhat = op.interp.table
    del op
    n_el = mesh.n_elements
    nb, npm = nnz_with_threshold(bhat), nnz_pm1(bhat)
    return EfficiencyReport(
        d=d, N=mesh.N, k=k, problem=problem, coefficient=coeff.label,
        n_elements=n_el, dim_v=dofmap.dim,
        nnz_a=nnz_a, mem_a=mem_a, mem_a_t=dim_pk(d, k) ** 2,
        mem_a_dogip=per_el * n_el, mem_a_dogip_t=per_el, nnz_a_dogip=nnz_dogip,
        nnz_bhat=nb, nnz_pm1_bhat=npm, quad_degree=rule.degree,
        memory_efficiency=memory_efficiency(per_el, n_el, mem_a),
        computational_efficiency=computational_efficiency(nb, npm, per_el, n_el, nnz_a),
    )


def estimated_entries(d, N, k):
    """Upper bound on coordinate entries before summation: ``n_elements * V_T^2``."""
    n_el = 2 * N ** 2 if d == 2 else 6 * N ** 3
    return n_el * dim_pk(d, k) ** 2
