"""Two-level additive Schwarz preconditioner in matrix form.

The preconditioner applies one dense solve per overlapped subdomain block
plus one coarse Galerkin solve and sums the prolonged results:

    z = P0 A0^{-1} P0^T r  +  sum_i R_i^T A_i^{-1} R_i r,

where R_i selects the residual entries of subdomain i's DOF set.  The
blocks are dense because the operator is nonlocal; congruent subdomains
share one factorization and are solved as a single multi-RHS batch.
"""

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .operators import build_coarse, extract_local

__all__ = ["SchwarzPreconditioner", "build_preconditioner"]


class SchwarzPreconditioner:
    """Built preconditioner: factorized local blocks plus the coarse solve.

    Attributes
    ----------
    dof_sets : list of ndarray
        Per-subdomain interior DOF index sets.
    local_factors : list
        Per-subdomain Cholesky factor, shared between congruent subdomains.
    coarse : CoarseOperator or None
    colors : ndarray
        Color id per subdomain (scheduling metadata; the additive sum does
        not depend on it).
    """

    def __init__(self, op, decomp, coarse):
        self.op = op
        self.decomp = decomp
        self.coarse = coarse
        self.colors = decomp.colors
        self.dof_sets = [sub.dofs for sub in decomp.subdomains]
        self._groups = {}
        self.local_factors = []
        self.local_blocks = []
        for sub in decomp.subdomains:
            lo_x, hi_x, lo_y, hi_y = sub.extended
            shape = (hi_x - lo_x, hi_y - lo_y)
            if shape not in self._groups:
                block = extract_local(op, sub.dofs)
                try:
                    factor = scipy.linalg.cho_factor(block)
                except scipy.linalg.LinAlgError as exc:
                    raise NumericalError(
                        "subdomain block is not positive definite") from exc
                self._groups[shape] = (block, factor)
            block, factor = self._groups[shape]
            if block.shape[0] != sub.dofs.size:
                raise NumericalError("congruent subdomains disagree in size")
            self.local_blocks.append(block)
            self.local_factors.append(factor)

    @property
    def dim(self):
        return self.op.dim

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if r.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {r.shape}")
        return r

    def apply_one_level(self, r):
        """Sum of the local subdomain solves only (no coarse term).

        Subdomain contributions are accumulated in subdomain index order,
        which fixes the floating-point reduction order.
        """
        r = self._check(r)
        z = np.zeros_like(r)
        solutions = [None] * len(self.dof_sets)
        by_factor = {}
        for i, (dofs, factor) in enumerate(zip(self.dof_sets, self.local_factors)):
            by_factor.setdefault(id(factor), (factor, []))[1].append(i)
        for factor, members in by_factor.values():
            rhs = np.stack([r[self.dof_sets[i]] for i in members], axis=1)
            sol = scipy.linalg.cho_solve(factor, rhs)
            for col, i in enumerate(members):
                solutions[i] = sol[:, col]
        for i, dofs in enumerate(self.dof_sets):
            z[dofs] += solutions[i]
        return z

    def apply(self, r):
        """Full two-level application: local solves plus the coarse solve."""
        z = self.apply_one_level(r)
        if self.coarse is not None and self.coarse.dim > 0:
            rc = self.coarse.P0.T @ r
            z = z + self.coarse.P0 @ self.coarse.solve(rc)
        return z


def build_preconditioner(op, decomp, P0=None, coarse=None):
    """Build the two-level additive Schwarz preconditioner.

    Parameters
    ----------
    op : FractionalOperator
    decomp : TwoLevelDecomposition
        Must come from the same mesh as ``op``.
    P0 : sparse matrix or None
        Coarse prolongation; None (or zero coarse columns) drops the
        coarse level.
    coarse : CoarseOperator, optional
        Reuse a coarse operator already built for the same (op, P0) pair
        instead of rebuilding it.

    Returns
    -------
    SchwarzPreconditioner
    """
    if decomp.mesh.n != op.n:
        raise ValueError("decomposition and operator use different meshes")
    if coarse is None and P0 is not None and P0.shape[1] > 0:
        coarse = build_coarse(op, P0)
    return SchwarzPreconditioner(op, decomp, coarse)
