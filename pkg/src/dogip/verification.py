"""Two-path check of the decomposition: assembled CSR product vs DoGIP product."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble_elliptic_matrix, assemble_wp_matrix
from .dofmap import build_continuous_dofmap
from .mesh import build_structured_mesh
from .operators import build_elliptic_dogip, build_wp_dogip, with_perturbed_entry

TOLERANCE = 1e-10


@dataclass
class VerifyCase:
    d: int
    N: int
    k: int
    problem: str
    coefficient: object
    perturb: float = 0.0
    seed: int = 0

    @property
    def label(self):
        return (f"d={self.d} k={self.k} N={self.N} problem={self.problem} "
                f"coef={self.coefficient} perturb={self.perturb}")


@dataclass
class VerifyResult:
    case: VerifyCase
    discrepancy: float

    @property
    def passed(self):
        return self.discrepancy <= TOLERANCE


def discrepancy(case, n_vectors=10, rng=None, fault=False):
    """Largest ``||A u - Op u||_inf / ||A u||_inf`` over random ``u``."""
    rng = np.random.default_rng(0) if rng is None else rng
    mesh = build_structured_mesh(case.d, case.N, perturb=case.perturb, seed=case.seed)
    V = build_continuous_dofmap(mesh, case.k)
    if case.problem == "wp":
        A = assemble_wp_matrix(mesh, V, case.coefficient)
        op = build_wp_dogip(mesh, case.k, case.coefficient, dofmap=V)
    else:
        A = assemble_elliptic_matrix(mesh, V, case.coefficient)
        op = build_elliptic_dogip(mesh, case.k, case.coefficient, dofmap=V)
    if fault:
        op = with_perturbed_entry(op)
    worst = 0.0
    for _ in range(n_vectors):
        u = rng.standard_normal(V.dim)
        Au = A.matvec(u)
        worst = max(worst, np.abs(Au - op.matvec(u)).max() / np.abs(Au).max())
    return worst


def run_sweep(cases, n_vectors=10, seed=0, fault=False):
    rng = np.random.default_rng(seed)
    return [VerifyResult(c, discrepancy(c, n_vectors, rng, fault)) for c in cases]


def default_cases(ds=(2, 3), Ns=(2,), ks=None, problems=("wp", "elliptic"),
                  m_specs=("1", "1+x"), M_specs=("identity", "diag:1,2", "iso:1+x")):
    cases = []
    for d in ds:
        for k in (ks or ((1, 2, 3) if d == 2 else (1, 2))):
            for N in Ns:
                for problem in problems:
                    specs = m_specs if problem == "wp" else M_specs
                    for spec in specs:
                        if problem == "elliptic" and spec.startswith("diag:") and spec.count(",") != d - 1:
                            spec = "diag:" + ",".join(str(i + 1) for i in range(d))
                        cases.append(VerifyCase(d, N, k, problem, spec))
    return cases
