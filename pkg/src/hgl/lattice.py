"""Lattice geometry and exact discrete calculus on tori and zero-boundary boxes.

Sites live on a d-dimensional grid of per-axis extent ``shape``; every edge is
identified by its base site and a direction i, linking ``x`` to ``x + e_i``.
Site fields are stored as flat float64 arrays in row-major (C) order with the
last axis fastest; edge fields are stored as ``d`` stacked site-shaped blocks,
direction-major, so ``edge_index = i * n_sites + site_index``.  This layout is
part of the snapshot file contract and must not change.

Boundary conditions:

* ``periodic`` -- all differences wrap; this is the default geometry for
  corrector computations.
* ``dirichlet`` -- the grid is still stored as a torus, but the sites with any
  coordinate equal to ``shape[axis] - 1`` form a zero layer that stays pinned
  to 0.  The remaining ``(shape - 1)^d`` box then sees zero values across every
  face (the wrap ends in the zero layer), which realizes zero-extension of
  fields outside a finite box without any special-cased stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

PERIODIC = "periodic"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class LatticeGeometry:
    """Immutable description of a finite lattice.

    d: spatial dimension (>= 1)
    shape: per-axis extent, each >= 2
    bc: "periodic" or "dirichlet" (zero layer at the top face of each axis)
    """

    d: int
    shape: tuple[int, ...]
    bc: str = PERIODIC

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if len(self.shape) != self.d:
            raise ValueError("shape length must equal d")
        if any(L < 2 for L in self.shape):
            raise ValueError("every axis extent must be >= 2")
        if self.bc not in (PERIODIC, DIRICHLET):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        object.__setattr__(self, "shape", tuple(int(L) for L in self.shape))

    # -- counts ------------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_edges(self) -> int:
        return self.d * self.n_sites

    # -- indexing ----------------------------------------------------------

    def site_index(self, coords) -> np.ndarray:
        """Linear index of site coordinate vectors (wraps modulo shape)."""
        coords = np.asarray(coords)
        shape = np.asarray(self.shape)
        if coords.ndim == 1:
            return int(np.ravel_multi_index(tuple(coords % shape), self.shape))
        return np.ravel_multi_index(tuple((coords % shape).T), self.shape)

    def site_coords(self, index) -> np.ndarray:
        """Coordinate vector(s) of linear site indices."""
        out = np.unravel_index(np.asarray(index), self.shape)
        return np.stack(out, axis=-1)

    def edge_index(self, base, direction: int) -> int:
        if not 0 <= direction < self.d:
            raise ValueError(f"direction {direction} out of range for d={self.d}")
        return direction * self.n_sites + self.site_index(base)

    def edge_base_dir(self, edge_index: int) -> tuple[np.ndarray, int]:
        direction, site = divmod(int(edge_index), self.n_sites)
        return self.site_coords(site), direction

    def edge_head(self, edge_index: int) -> np.ndarray:
        base, i = self.edge_base_dir(edge_index)
        head = base.copy()
        head[i] += 1
        return head % np.asarray(self.shape)

    # -- dirichlet support --------------------------------------------------

    def free_mask(self) -> np.ndarray:
        """Boolean site mask of unconstrained sites (all sites on a torus)."""
        if self.bc == PERIODIC:
            return np.ones(self.n_sites, dtype=bool)
        m = np.ones(self.shape, dtype=bool)
        for ax, L in enumerate(self.shape):
            sl = [slice(None)] * self.d
            sl[ax] = L - 1
            m[tuple(sl)] = False
        return m.ravel()

    @property
    def interior_shape(self) -> tuple[int, ...]:
        """Extent of the free box (shape itself on a torus)."""
        if self.bc == PERIODIC:
            return self.shape
        return tuple(L - 1 for L in self.shape)

    def zero_fixed(self, f: np.ndarray) -> np.ndarray:
        """Return f with the constrained (zero-layer) sites set to 0."""
        if self.bc == PERIODIC:
            return f
        out = f.copy()
        out[~self.free_mask()] = 0.0
        return out

    # -- field constructors --------------------------------------------------

    def site_field(self, fill: float = 0.0) -> np.ndarray:
        return np.full(self.n_sites, fill, dtype=np.float64)

    def edge_field(self, fill: float = 0.0) -> np.ndarray:
        return np.full(self.n_edges, fill, dtype=np.float64)

    def site_grid(self, f: np.ndarray) -> np.ndarray:
        """View a flat site field as a d-dimensional grid."""
        return f.reshape(self.shape)

    def edge_grid(self, g: np.ndarray) -> np.ndarray:
        """View a flat edge field as (d, *shape)."""
        return g.reshape((self.d, *self.shape))


def grad(geom: LatticeGeometry, f: np.ndarray) -> np.ndarray:
    """Discrete gradient: (grad f)(x, i) = f(x + e_i) - f(x), wrapping.

    On a dirichlet geometry the zero layer carries 0 by convention, so the
    wrapped difference is exactly the zero-extended one.
    """
    fg = geom.site_grid(np.asarray(f, dtype=np.float64))
    out = np.empty((geom.d, *geom.shape), dtype=np.float64)
    for i in range(geom.d):
        out[i] = np.roll(fg, -1, axis=i) - fg
    return out.reshape(geom.n_edges)

def div(geom: LatticeGeometry, g: np.ndarray) -> np.ndarray:
    """Discrete divergence: (div g)(x) = sum_i [g_i(x - e_i) - g_i(x)].

    Adjoint to :func:`grad`: <grad f, g>_edges = <f, div g>_sites on a torus.
    """
    gg = geom.edge_grid(np.asarray(g, dtype=np.float64))
    out = np.zeros(geom.shape, dtype=np.float64)
    for i in range(geom.d):
        out += np.roll(gg[i], 1, axis=i) - gg[i]
    return out.reshape(geom.n_sites)


def star_norm(x) -> float | np.ndarray:
    """Regularized norm 2 + |x| used throughout decay estimates."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim <= 1:
        return 2.0 + float(np.linalg.norm(x))
    return 2.0 + np.linalg.norm(x, axis=-1)


def direction_projection(geom: LatticeGeometry, xi) -> np.ndarray:
    """Edge field xi(e) = xi_i for every edge in direction i."""
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (geom.d,):
        raise ValueError("direction vector must have length d")
    out = np.empty((geom.d, geom.n_sites), dtype=np.float64)
    for i in range(geom.d):
        out[i] = xi[i]
    return out.reshape(geom.n_edges)


def site_distances(geom: LatticeGeometry, center) -> np.ndarray:
    """Euclidean distance of every site from ``center``, no wrapping."""
    center = np.asarray(center, dtype=np.float64)
    axes = np.indices(geom.shape, dtype=np.float64)
    d2 = np.zeros(geom.shape)
    for i in range(geom.d):
        d2 += (axes[i] - center[i]) ** 2
    return np.sqrt(d2).reshape(geom.n_sites)


def centered_box_mask(geom: LatticeGeometry, origin, side: int) -> np.ndarray:
    """Site mask of the cube [origin, origin + side) (no wrapping)."""
    origin = np.asarray(origin, dtype=int)
    if np.any(origin < 0) or np.any(origin + side > np.asarray(geom.shape)):
        raise ValueError("box does not fit inside the geometry")
    m = np.zeros(geom.shape, dtype=bool)
    sl = tuple(slice(int(o), int(o + side)) for o in origin)
    m[sl] = True
    return m.ravel()
