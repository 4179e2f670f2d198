"""Global numbering of Lagrange degrees of freedom."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reference import check_dimension, dim_pk, lattice_indices, reference_nodes
from .errors import InvalidOrder

CHUNK = 200_000


@dataclass(frozen=True, eq=False)
class DofMap:
    """Local-to-global map ``cells[t, i_hat]`` plus nodal coordinates.

    ``lattice`` (continuous spaces only) gives the integer coordinates of
    each DOF on the global lattice ``{0, ..., kN}^d``.
    """

    space_kind: str
    k: int
    dim: int
    cells: np.ndarray
    coords: np.ndarray
    lattice: np.ndarray | None = None

    @property
    def V_T(self):
        return self.cells.shape[1]

    def boundary_dofs(self):
        if self.lattice is None:
            raise ValueError("boundary DOFs are only defined for continuous spaces")
        top = self.lattice.max()
        on_bdry = np.any((self.lattice == 0) | (self.lattice == top), axis=1)
        return np.flatnonzero(on_bdry)


def _fill_coords(mesh, cells, nodes, dim):
    coords = np.empty((dim, mesh.d))
    for start in range(0, mesh.n_elements, CHUNK):
        R, S = mesh.jacobians(start, start + CHUNK)
        phys = np.einsum("eab,nb->ena", R, nodes) + S[:, None, :]
        coords[cells[start:start + CHUNK]] = phys
    return coords


def build_continuous_dofmap(mesh, k):
    """Continuous order-``k`` Lagrange space; ``dim == (kN + 1)^d``.

    Shared nodes are identified through integer lattice keys, never through
    floating-point coordinates.
    """
    check_dimension(mesh.d)
    if k < 1:
        raise InvalidOrder(f"continuous spaces need k >= 1, got {k}")
    d, N = mesh.d, mesh.N
    alpha = lattice_indices(d, k)
    mult = (k * N + 1) ** np.arange(d, dtype=np.int64)
    cells = np.empty((mesh.n_elements, len(alpha)), dtype=np.int64)
    for start in range(0, mesh.n_elements, CHUNK):
        vlat = mesh.lattice[mesh.elements[start:start + CHUNK]]  # (n, d+1, d)
        glob = np.einsum("ai,eid->ead", alpha, vlat)
        cells[start:start + CHUNK] = glob @ mult
    dim = (k * N + 1) ** d
    gl = np.stack([(np.arange(dim) // m) % (k * N + 1) for m in mult], axis=1)
    cells.setflags(write=False)
    coords = _fill_coords(mesh, cells, reference_nodes(d, k), dim)
    return DofMap(space_kind="continuous", k=k, dim=dim, cells=cells, coords=coords, lattice=gl)


def build_discontinuous_dofmap(mesh, k):
    """Discontinuous order-``k`` space numbered element by element."""
    check_dimension(mesh.d)
    if k < 0:
        raise InvalidOrder(f"order must be non-negative, got {k}")
    V_T = dim_pk(mesh.d, k)
    dim = mesh.n_elements * V_T
    cells = np.arange(dim, dtype=np.int64).reshape(mesh.n_elements, V_T)
    cells.setflags(write=False)
    coords = _fill_coords(mesh, cells, reference_nodes(mesh.d, k), dim)
    return DofMap(space_kind="discontinuous", k=k, dim=dim, cells=cells, coords=coords)
