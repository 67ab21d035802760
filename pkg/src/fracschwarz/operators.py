"""Fast application of the assembled operator and its restrictions.

The operator is translation invariant on the interior DOF lattice, i.e. a
block-Toeplitz matrix with Toeplitz blocks, fully described by its symbol
window (entry value per lattice offset).  Matvecs embed the symbol in a
2D circulant and go through real FFTs; principal submatrices and the
coarse Galerkin operator are materialized densely.
"""

import struct

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import NumericalError

__all__ = [
    "FractionalOperator",
    "CoarseOperator",
    "extract_local",
    "build_coarse",
    "save_symbol_cache",
    "load_symbol_cache",
]

DENSE_DIM_LIMIT = 20_000

_FSYM_MAGIC = b"FSYM"
_FSYM_VERSION = 1


class FractionalOperator:
    """Assembled operator in symbol form.

    Parameters
    ----------
    n : int
        Fine cells per axis; the DOF lattice is (n-1) x (n-1).
    h : float
        Mesh size.
    alpha, c : float
        Fractional order and reaction coefficient (metadata).
    measure : DirectionalMeasure
    window : ndarray, shape (2n-3, 2n-3)
        Symbol values, window[C+dj, C+di] for offset (di, dj) with
        C = n-2.  Must be even: window[Delta] == window[-Delta].
    """

    def __init__(self, n, h, alpha, c, measure, window):
        nf = n - 1
        if window.shape != (2 * nf - 1, 2 * nf - 1):
            raise ValueError("symbol window has the wrong shape for n")
        if not np.allclose(window, window[::-1, ::-1],
                           rtol=1e-13, atol=1e-13 * np.abs(window).max()):
            raise NumericalError("operator symbol is not even in the offset")
        self.n = n
        self.h = h
        self.alpha = alpha
        self.c = c
        self.measure = measure
        self.window = window
        self.dim = nf * nf
        self._spectrum = None
        self._fft_size = None
        self._dense = None
        self._matvecs = 0

    def symbol(self, di, dj):
        """Symbol value at lattice offset (di, dj); 0 outside the window."""
        C = self.n - 2
        if abs(di) > C or abs(dj) > C:
            return 0.0
        return float(self.window[C + dj, C + di])

    def _ensure_spectrum(self):
        if self._spectrum is None:
            nf = self.n - 1
            L = scipy.fft.next_fast_len(2 * nf - 1, real=True)
            kern = np.zeros((L, L))
            kern[: 2 * nf - 1, : 2 * nf - 1] = self.window
            kern = np.roll(kern, -(nf - 1), axis=0)
            kern = np.roll(kern, -(nf - 1), axis=1)
            self._spectrum = scipy.fft.rfft2(kern)
            self._fft_size = L
        return self._spectrum, self._fft_size

    def matvec(self, x):
        """Apply the operator through the circulant embedding.

        Parameters
        ----------
        x : array, length (n-1)**2

        Returns
        -------
        ndarray
            y = A x, identical to the dense product up to rounding.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        spec, L = self._ensure_spectrum()
        nf = self.n - 1
        pad = np.zeros((L, L))
        pad[:nf, :nf] = x.reshape(nf, nf)
        y = scipy.fft.irfft2(spec * scipy.fft.rfft2(pad), s=(L, L))
        self._matvecs += 1
        return y[:nf, :nf].ravel().copy()

    def to_dense(self):
        """Materialize the dense matrix (cached); refuses above
        DENSE_DIM_LIMIT rows."""
        if self._dense is None:
            if self.dim > DENSE_DIM_LIMIT:
                raise ValueError(
                    f"dense materialization above {DENSE_DIM_LIMIT} DOFs refused")
            idx = np.arange(self.dim)
            ix = idx % (self.n - 1)
            iy = idx // (self.n - 1)
            C = self.n - 2
            self._dense = self.window[(iy[None, :] - iy[:, None]) + C,
                                      (ix[None, :] - ix[:, None]) + C]
        return self._dense

    def matvec_dense(self, x):
        """Reference matvec through the dense materialization."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        return self.to_dense() @ x

    def check_spd(self):
        """Symmetry plus dense-factorization positive-definiteness check.

        Raises
        ------
        NumericalError
            If the materialized matrix is not symmetric positive definite.
        """
        A = self.to_dense()
        scale = np.abs(A).max()
        if np.abs(A - A.T).max() > 1e-13 * scale:
            raise NumericalError("assembled operator is not symmetric")
        try:
            scipy.linalg.cholesky(A, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalError("assembled operator is not positive definite") from exc
        return True


class CoarseOperator:
    """Galerkin restriction A0 = P0^T A P0 with its factorization."""

    def __init__(self, P0, A0):
        self.P0 = P0
        self.A0 = A0
        try:
            self.factor = scipy.linalg.cho_factor(A0)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalError("coarse operator is not positive definite") from exc

    @property
    def dim(self):
        return self.A0.shape[0]

    def solve(self, r):
        return scipy.linalg.cho_solve(self.factor, r)


def extract_local(op, dof_set):
    """Dense principal submatrix of the operator on a DOF index set.

    Entries come straight from the symbol table (translation invariance),
    so congruent index sets yield identical matrices.

    Parameters
    ----------
    op : FractionalOperator
    dof_set : array of int
        Interior DOF indices.

    Returns
    -------
    ndarray, shape (len(dof_set), len(dof_set))
    """
    dof_set = np.asarray(dof_set)
    if dof_set.size and (dof_set.min() < 0 or dof_set.max() >= op.dim):
        raise IndexError("dof_set contains out-of-range indices")
    nf = op.n - 1
    ix = dof_set % nf
    iy = dof_set // nf
    C = op.n - 2
    return op.window[(iy[None, :] - iy[:, None]) + C,
                     (ix[None, :] - ix[:, None]) + C]


def build_coarse(op, P0):
    """Build the coarse Galerkin operator column by column via matvecs.

    Parameters
    ----------
    op : FractionalOperator
    P0 : sparse matrix, shape (dim, dim_coarse)
        Coarse prolongation from the same mesh pair.

    Returns
    -------
    CoarseOperator
    """
    if P0.shape[0] != op.dim:
        raise ValueError("prolongation does not match the operator dimension")
    nc = P0.shape[1]
    A0 = np.empty((nc, nc))
    for j in range(nc):
        col = np.asarray(P0[:, [j]].todense()).ravel()
        A0[:, j] = P0.T @ op.matvec(col)
    A0 = 0.5 * (A0 + A0.T)
    return CoarseOperator(P0, A0)


def save_symbol_cache(op, path):
    """Write the operator symbol to the binary cache format.

    Layout (little-endian): magic "FSYM", version uint32, n uint32,
    direction count uint32, alpha float64, c float64, the direction list
    as (theta float64, weight float64) pairs, then one (di int32,
    dj int32, value float64) record per stored offset.
    """
    C = op.n - 2
    jj, ii = np.nonzero(op.window)
    with open(path, "wb") as f:
        f.write(_FSYM_MAGIC)
        f.write(struct.pack("<III", _FSYM_VERSION, op.n, len(op.measure)))
        f.write(struct.pack("<dd", op.alpha, op.c))
        for t, p in zip(op.measure.thetas, op.measure.weights):
            f.write(struct.pack("<dd", t, p))
        recs = np.empty(len(ii), dtype=[("di", "<i4"), ("dj", "<i4"), ("v", "<f8")])
        recs["di"] = ii - C
        recs["dj"] = jj - C
        recs["v"] = op.window[jj, ii]
        f.write(recs.tobytes())


def load_symbol_cache(path):
    """Load an operator from the binary symbol cache.

    Validates the magic bytes, the format version and the evenness of the
    stored symbol.  The domain is the canonical [0, 2] x [0, 2] square, so
    the mesh size is 2/n.

    Returns
    -------
    FractionalOperator
    """
    from .assembly import DirectionalMeasure

    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _FSYM_MAGIC:
            raise ValueError(f"not a symbol cache (bad magic {magic!r})")
        version, n, ndir = struct.unpack("<III", f.read(12))
        if version != _FSYM_VERSION:
            raise ValueError(f"unsupported symbol cache version {version}")
        alpha, c = struct.unpack("<dd", f.read(16))
        dirs = np.frombuffer(f.read(16 * ndir), dtype="<f8").reshape(ndir, 2)
        raw = f.read()
    recs = np.frombuffer(raw, dtype=[("di", "<i4"), ("dj", "<i4"), ("v", "<f8")])
    nf = n - 1
    C = n - 2
    if recs.size and (np.abs(recs["di"]).max() > C or np.abs(recs["dj"]).max() > C):
        raise ValueError("symbol cache contains offsets outside the DOF window")
    window = np.zeros((2 * nf - 1, 2 * nf - 1))
    window[recs["dj"] + C, recs["di"] + C] = recs["v"]
    measure = DirectionalMeasure(dirs[:, 0], dirs[:, 1])
    return FractionalOperator(n=int(n), h=2.0 / n, alpha=alpha, c=c,
                              measure=measure, window=window)
