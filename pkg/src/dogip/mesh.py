"""Structured simplicial meshes of the unit square and cube."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import ElementIndexError, InvalidDimension, InvalidSize


@dataclass(frozen=True)
class AffineMap:
    """Element map ``F_T(x_hat) = R x_hat + S``."""

    R: np.ndarray
    S: np.ndarray
    Rinv: np.ndarray
    detR: float

    def __call__(self, x_hat):
        return np.asarray(x_hat) @ self.R.T + self.S


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh on the lattice ``{0, 1/N, ..., 1}^d``.

    ``lattice`` holds the integer lattice coordinates of each vertex; it fixes
    the topology even when ``vertices`` have been perturbed.
    """

    d: int
    N: int
    vertices: np.ndarray
    elements: np.ndarray
    lattice: np.ndarray

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_vertices(self):
        return len(self.vertices)

    def affine_map(self, t):
        if not 0 <= t < self.n_elements:
            raise ElementIndexError(f"element {t} out of range [0, {self.n_elements})")
        R, S, detR, Rinv = self.geometry(t, t + 1)
        return AffineMap(R=R[0], S=S[0], Rinv=Rinv[0], detR=float(detR[0]))

    def jacobians(self, start=0, stop=None):
        """Batched ``(R, S)``; column ``i`` of ``R`` is ``v_i - v_0``."""
        v = self.vertices[self.elements[start:stop]]  # (n, d+1, d)
        S = v[:, 0, :]
        return np.transpose(v[:, 1:, :] - S[:, None, :], (0, 2, 1)), S

    def geometry(self, start=0, stop=None):
        """Batched ``(R, S, detR, Rinv)`` for elements ``start:stop``."""
        R, S = self.jacobians(start, stop)
        detR = np.linalg.det(R)
        Rinv = np.linalg.inv(R)
        return R, S, detR, Rinv

    def volumes(self):
        return np.abs(self.geometry()[2]) / factorial(self.d)

    def to_dict(self):
        return {
            "d": self.d,
            "N": self.N,
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def _vertex_index(lat, N):
    mult = (N + 1) ** np.arange(lat.shape[-1])
    return lat @ mult


def _cells_2d(N):
    j, i = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    base = np.stack([i.ravel(), j.ravel()], axis=1)
    corner = {c: _vertex_index(base + np.array(c), N) for c in itertools.product((0, 1), repeat=2)}
    lower = np.stack([corner[0, 0], corner[1, 0], corner[1, 1]], axis=1)
    upper = np.stack([corner[0, 0], corner[1, 1], corner[0, 1]], axis=1)
    return np.stack([lower, upper], axis=1).reshape(-1, 3)


def _cells_3d(N):
    l, j, i = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    base = np.stack([i.ravel(), j.ravel(), l.ravel()], axis=1)
    tets = []
    for perm in itertools.permutations(range(3)):
        corners = [np.zeros(3, dtype=np.int64)]
        for axis in perm:
            step = corners[-1].copy()
            step[axis] += 1
            corners.append(step)
        tets.append(np.stack([_vertex_index(base + c, N) for c in corners], axis=1))
    return np.stack(tets, axis=1).reshape(-1, 4)


def build_structured_mesh(d, N, perturb=0.0, seed=0):
    """Triangulate the unit square (2 triangles per cell) or cube (6 Kuhn tetrahedra per cell).

    Parameters
    ----------
    d : int
        Spatial dimension, 2 or 3.
    N : int
        Cells per axis; the mesh has ``2 N^2`` or ``6 N^3`` elements.
    perturb : float
        Amplitude of a uniform random shift of interior vertex coordinates,
        in units of the cell size ``1/N``. Coordinates on the boundary are
        kept, so the domain stays the unit square/cube. ``0`` gives the
        exact lattice.
    seed : int
        Seed of the perturbation generator.
    """
    if d not in (2, 3):
        raise InvalidDimension(f"dimension must be 2 or 3, got {d!r}")
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise InvalidSize(f"N must be a positive integer, got {N!r}")
    N = int(N)
    axes = np.meshgrid(*([np.arange(N + 1)] * d), indexing="ij")
    lattice = np.stack([a.ravel() for a in reversed(axes)], axis=1).astype(np.int64)
    vertices = lattice / N
    elements = _cells_2d(N) if d == 2 else _cells_3d(N)
    if perturb:
        if not 0 < perturb < 0.5:
            raise InvalidSize(f"perturbation must lie in (0, 0.5), got {perturb}")
        rng = np.random.default_rng(seed)
        shift = rng.uniform(-1.0, 1.0, size=vertices.shape) * (perturb / N)
        interior = (lattice > 0) & (lattice < N)
        vertices = vertices + shift * interior
    for arr in (vertices, elements, lattice):
        arr.setflags(write=False)
    mesh = Mesh(d=d, N=N, vertices=vertices, elements=elements, lattice=lattice)
    if perturb:
        _check_orientation(mesh)
    return mesh


def _check_orientation(mesh, chunk=500_000):
    ref = Mesh(mesh.d, mesh.N, mesh.lattice / mesh.N, mesh.elements, mesh.lattice)
    for start in range(0, mesh.n_elements, chunk):
        det = np.linalg.det(mesh.jacobians(start, start + chunk)[0])
        det0 = np.linalg.det(ref.jacobians(start, start + chunk)[0])
        if np.any(det * det0 <= 0):
            raise InvalidSize("perturbation inverted or collapsed an element")
