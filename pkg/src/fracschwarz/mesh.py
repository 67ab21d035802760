"""Uniform triangulations of squares, interior-DOF numbering, and the
two-level overlapping decomposition with subdomain coloring.

Every square cell is split along the same diagonal (lower-left to
upper-right), so interior nodal basis functions are translates of one
another; that translation invariance is what the fast operator
representation relies on.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "UniformMesh",
    "Subdomain",
    "TwoLevelDecomposition",
    "build_mesh",
    "build_decomposition",
    "coarse_prolongation",
    "hat_value",
]


def hat_value(xi, eta):
    """Nodal basis function on the unit lattice, evaluated at (xi, eta).

    Coordinates are relative to the node and scaled by the mesh size.  For
    the fixed lower-left/upper-right diagonal split the hat is
    max(0, 1 - max(|xi|, |eta|, |xi - eta|)), supported on the hexagon
    with vertices (1,0), (1,1), (0,1), (-1,0), (-1,-1), (0,-1).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    m = np.maximum(np.maximum(np.abs(xi), np.abs(eta)), np.abs(xi - eta))
    return np.maximum(0.0, 1.0 - m)


@dataclass(frozen=True, eq=False)
class UniformMesh:
    """Uniform triangulation of a square with the fixed-diagonal split.

    Attributes
    ----------
    bounds : ndarray, shape (2, 2)
        [[ax, bx], [ay, by]] with bx - ax == by - ay.
    n : int
        Cells per axis; the mesh size is h = (bx - ax) / n.
    """

    bounds: np.ndarray
    n: int

    @property
    def h(self):
        return (self.bounds[0, 1] - self.bounds[0, 0]) / self.n

    @property
    def side(self):
        return self.bounds[0, 1] - self.bounds[0, 0]

    @property
    def num_interior(self):
        return (self.n - 1) ** 2

    def node_coords(self, i, j):
        """Physical coordinates of lattice node (i, j), i along x."""
        return (self.bounds[0, 0] + np.asarray(i) * self.h,
                self.bounds[1, 0] + np.asarray(j) * self.h)

    def dof_index(self, i, j):
        """Row-major interior index of lattice node (i, j); rows run in y."""
        i = np.asarray(i)
        j = np.asarray(j)
        if np.any((i < 1) | (i > self.n - 1) | (j < 1) | (j > self.n - 1)):
            raise IndexError("node is not interior")
        return (j - 1) * (self.n - 1) + (i - 1)

    def dof_node(self, index):
        """Inverse of :meth:`dof_index`; returns lattice indices (i, j)."""
        index = np.asarray(index)
        return index % (self.n - 1) + 1, index // (self.n - 1) + 1

    def interior_lattice(self):
        """Arrays (i, j) of all interior lattice indices in dof order."""
        r = np.arange(1, self.n)
        jj, ii = np.meshgrid(r, r, indexing="ij")
        return ii.ravel(), jj.ravel()

    def triangles(self):
        """Vertex coordinates of all 2*n*n triangles, shape (T, 3, 2).

        Cell (i, j) is split into the lower triangle
        {(i,j), (i+1,j), (i+1,j+1)} and the upper triangle
        {(i,j), (i+1,j+1), (i,j+1)}.
        """
        n, h = self.n, self.h
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        i = i.ravel()
        j = j.ravel()
        lower = np.stack([np.stack([i, j], 1), np.stack([i + 1, j], 1),
                          np.stack([i + 1, j + 1], 1)], axis=1)
        upper = np.stack([np.stack([i, j], 1), np.stack([i + 1, j + 1], 1),
                          np.stack([i, j + 1], 1)], axis=1)
        tri = np.concatenate([lower, upper], axis=0).astype(float)
        tri *= h
        tri[..., 0] += self.bounds[0, 0]
        tri[..., 1] += self.bounds[1, 0]
        return tri

    def triangle_vertex_lattice(self):
        """Lattice indices of triangle vertices, shape (T, 3, 2), same order
        as :meth:`triangles`."""
        n = self.n
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        i = i.ravel()
        j = j.ravel()
        lower = np.stack([np.stack([i, j], 1), np.stack([i + 1, j], 1),
                          np.stack([i + 1, j + 1], 1)], axis=1)
        upper = np.stack([np.stack([i, j], 1), np.stack([i + 1, j + 1], 1),
                          np.stack([i, j + 1], 1)], axis=1)
        return np.concatenate([lower, upper], axis=0)


def build_mesh(bounds, n):
    """Build a uniform triangulation of a square.

    Parameters
    ----------
    bounds : sequence
        [[ax, bx], [ay, by]]; must describe a square.
    n : int
        Cells per axis, >= 2.

    Returns
    -------
    UniformMesh
    """
    b = np.array(bounds, dtype=float)
    if b.shape != (2, 2) or b[0, 1] <= b[0, 0] or b[1, 1] <= b[1, 0]:
        raise ValueError("bounds must be [[ax, bx], [ay, by]] with positive extents")
    if abs((b[0, 1] - b[0, 0]) - (b[1, 1] - b[1, 0])) > 1e-12 * (b[0, 1] - b[0, 0]):
        raise ValueError("domain must be a square")
    if n < 2 or n != int(n):
        raise ValueError(f"need an integer n >= 2, got {n}")
    b.setflags(write=False)
    return UniformMesh(bounds=b, n=int(n))


@dataclass(frozen=True, eq=False)
class Subdomain:
    """One overlapped subdomain: core coarse cell and its extension.

    Boxes are stored as half-open lattice ranges in fine-cell units,
    (lo_x, hi_x, lo_y, hi_y), meaning the region [lo*h, hi*h] per axis.
    """

    core: tuple
    extended: tuple
    dofs: np.ndarray = field(repr=False)


class TwoLevelDecomposition:
    """Coarse cells, overlapped subdomains, their DOF sets and a coloring.

    Subdomain i covers coarse cell (I, J) = (i % m, i // m), extended by
    ``overlap_cells`` fine-cell layers and clipped to the domain.  Same-color
    subdomains are pairwise disjoint with non-touching closures, which lets
    the local solves of one color run as a single batch.
    """

    def __init__(self, mesh, m, overlap_cells):
        n = mesh.n
        if n % m != 0:
            raise ValueError(f"coarse count m={m} must divide n={n}")
        r = n // m
        k = int(overlap_cells)
        if k < 1 or k >= r:
            raise ValueError(
                f"overlap_cells must satisfy 1 <= k < n/m = {r}, got {overlap_cells}")
        self.mesh = mesh
        self.m = int(m)
        self.overlap_cells = k
        self.H = mesh.side / m
        self.delta = k * mesh.h
        self.subdomains = []
        for J in range(m):
            for I in range(m):
                core = (r * I, r * (I + 1), r * J, r * (J + 1))
                ext = (max(0, r * I - k), min(n, r * (I + 1) + k),
                       max(0, r * J - k), min(n, r * (J + 1) + k))
                self.subdomains.append(Subdomain(core, ext, self._box_dofs(ext)))
        # Same-color extended closures must not touch: subdomains with core
        # index distance d have gap (d-1)*r - 2k, so the tiling period is the
        # smallest P with (P-1)*r > 2k.
        period = 2 if 2 * k < r else 3
        self.colors = np.array([(i % m) % period + period * ((i // m) % period)
                                for i in range(m * m)])
        self.num_colors = len(np.unique(self.colors))

    @property
    def J(self):
        return self.m * self.m

    def _box_dofs(self, box):
        """Interior DOFs strictly inside the lattice box (sorted)."""
        lo_x, hi_x, lo_y, hi_y = box
        ix = np.arange(max(1, lo_x + 1), min(self.mesh.n - 1, hi_x - 1) + 1)
        iy = np.arange(max(1, lo_y + 1), min(self.mesh.n - 1, hi_y - 1) + 1)
        jj, ii = np.meshgrid(iy, ix, indexing="ij")
        return self.mesh.dof_index(ii.ravel(), jj.ravel())

    def color_classes(self):
        """List of arrays of subdomain indices, one per color."""
        return [np.nonzero(self.colors == c)[0] for c in np.unique(self.colors)]

    def core_to_exterior_distance(self, i):
        """Distance from core cell i to the domain part outside its extension.

        Returns +inf when the extension covers the whole domain.  The
        minimum over unclipped sides equals overlap_cells * h.
        """
        h = self.mesh.h
        n = self.mesh.n
        core = self.subdomains[i].core
        ext = self.subdomains[i].extended
        gaps = []
        for c, e, clip in ((core[0], ext[0], 0), (core[2], ext[2], 0)):
            if e > clip:
                gaps.append((c - e) * h)
        for c, e, clip in ((core[1], ext[1], n), (core[3], ext[3], n)):
            if e < clip:
                gaps.append((e - c) * h)
        return min(gaps) if gaps else np.inf


def build_decomposition(mesh, m, overlap_cells):
    """Build the overlapping two-level decomposition.

    Parameters
    ----------
    mesh : UniformMesh
    m : int
        Coarse cells per axis; must divide mesh.n.
    overlap_cells : int
        Extension width k in fine cells, 1 <= k < n/m; the overlap is
        delta = k*h.

    Returns
    -------
    TwoLevelDecomposition
    """
    return TwoLevelDecomposition(mesh, m, overlap_cells)


def coarse_prolongation(mesh, m):
    """Interpolation matrix from the coarse space into the fine space.

    Column J holds the fine-nodal values of interior coarse hat J; exact
    because the coarse hats are piecewise linear on the fine triangulation
    of the same diagonal orientation.

    Parameters
    ----------
    mesh : UniformMesh
    m : int
        Coarse cells per axis; must divide mesh.n.

    Returns
    -------
    scipy.sparse.csr_matrix, shape ((n-1)**2, (m-1)**2)
    """
    n = mesh.n
    if n % m != 0:
        raise ValueError(f"coarse count m={m} must divide n={n}")
    r = n // m
    nf = n - 1
    nc = m - 1
    if nc == 0:
        return sp.csr_matrix((nf * nf, 0))
    rows, cols, vals = [], [], []
    fine_range = np.arange(1, n)
    for J in range(1, m):
        for I in range(1, m):
            col = (J - 1) * nc + (I - 1)
            ix = fine_range[np.abs(fine_range - r * I) < r]
            iy = fine_range[np.abs(fine_range - r * J) < r]
            jj, ii = np.meshgrid(iy, ix, indexing="ij")
            w = hat_value((ii - r * I) / r, (jj - r * J) / r).ravel()
            keep = w > 0.0
            rows.append(mesh.dof_index(ii.ravel()[keep], jj.ravel()[keep]))
            cols.append(np.full(keep.sum(), col))
            vals.append(w[keep])
    P = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nf * nf, nc * nc))
    return P
