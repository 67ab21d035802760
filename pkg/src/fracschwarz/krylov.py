"""Preconditioned conjugate gradients with the sup-norm increment stopping
rule, plus extreme-eigenvalue estimation from the CG coefficients.

The default stopping rule is ||u^k - u^(k-1)||_inf <= tol with u^0 = 0,
checked after every step; a relative-residual rule is available as an
alternative (used for condition estimation, where the run should continue
until the Krylov space stops improving).
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import NumericalError

__all__ = [
    "SolveConfig",
    "PcgReport",
    "pcg",
    "cg_unpreconditioned",
    "estimate_condition",
]


@dataclass(frozen=True)
class SolveConfig:
    """Stopping configuration for PCG.

    Attributes
    ----------
    tol_infty : float
        Threshold on the sup norm of the iterate increment (default rule).
    max_iter : int
        Iteration cap; hitting it flags the report instead of raising.
    record_history : bool
        Keep a copy of every iterate in the report.
    stop_rule : str
        "increment" (default) or "relative_residual".
    tol_rel_resid : float
        Threshold for the alternative rule, on ||r_k|| / ||r_0||.
    """

    tol_infty: float = 1e-6
    max_iter: int = 1000
    record_history: bool = False
    stop_rule: str = "increment"
    tol_rel_resid: float = 1e-12

    def __post_init__(self):
        if self.tol_infty <= 0:
            raise ValueError("tol_infty must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.stop_rule not in ("increment", "relative_residual"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")


@dataclass
class PcgReport:
    """Outcome of one PCG run.

    ``alphas``/``betas`` are the CG recurrence coefficients, from which the
    Lanczos tridiagonal matrix of the preconditioned operator is formed.
    """

    iterations: int
    solution: np.ndarray
    du_history: list
    residual_norms: list
    alphas: list
    betas: list
    wall_seconds: float
    converged: bool
    iterates: list = field(default_factory=list)
    directions: list = field(default_factory=list)

    def lanczos_matrix(self, keep=None):
        """Diagonal and off-diagonal of the Lanczos tridiagonal matrix.

        Parameters
        ----------
        keep : int, optional
            Use only the first ``keep`` CG steps (trailing steps taken
            after stagnation carry no spectral information).
        """
        a = self.alphas if keep is None else self.alphas[:keep]
        b = self.betas if keep is None else self.betas[: max(0, keep - 1)]
        if not a:
            return np.array([]), np.array([])
        diag = np.array([1.0 / a[0]] +
                        [1.0 / a[j] + b[j - 1] / a[j - 1] for j in range(1, len(a))])
        off = np.array([np.sqrt(max(b[j], 0.0)) / a[j] for j in range(len(a) - 1)])
        return diag, off


def _run_pcg(matvec, precond, f, cfg):
    dim = f.shape[0]
    start = time.perf_counter()
    u = np.zeros(dim)
    r = f.astype(float).copy()
    r0_norm = float(np.linalg.norm(r))
    z = precond(r) if precond is not None else r.copy()
    p = z.copy()
    rz = float(r @ z)
    du_hist, res_hist, alphas, betas, iterates, directions = [], [], [], [], [], []
    converged = False
    iterations = 0
    for k in range(1, cfg.max_iter + 1):
        if cfg.record_history:
            directions.append(p.copy())
        q = matvec(p)
        pq = float(p @ q)
        alpha = rz / pq if pq != 0.0 else 0.0
        u += alpha * p
        r -= alpha * q
        if not np.all(np.isfinite(u)):
            raise NumericalError(f"PCG produced non-finite values at step {k}")
        du = abs(alpha) * float(np.max(np.abs(p))) if dim else 0.0
        du_hist.append(du)
        rnorm = float(np.linalg.norm(r))
        res_hist.append(rnorm)
        alphas.append(alpha)
        iterations = k
        if cfg.record_history:
            iterates.append(u.copy())
        if cfg.stop_rule == "increment":
            stop = du <= cfg.tol_infty
        else:
            stop = rnorm <= cfg.tol_rel_resid * r0_norm
        if stop:
            converged = True
            break
        z = precond(r) if precond is not None else r.copy()
        rz_new = float(r @ z)
        beta = rz_new / rz if rz != 0.0 else 0.0
        betas.append(beta)
        rz = rz_new
        p = z + beta * p
    return PcgReport(iterations=iterations, solution=u, du_history=du_hist,
                     residual_norms=res_hist, alphas=alphas, betas=betas,
                     wall_seconds=time.perf_counter() - start,
                     converged=converged, iterates=iterates,
                     directions=directions)


def pcg(op, pre, f, cfg=None):
    """Preconditioned CG for A u = f from the zero initial iterate.

    Parameters
    ----------
    op : FractionalOperator
    pre : SchwarzPreconditioner or None
        None runs plain CG.
    f : array
        Load vector.
    cfg : SolveConfig, optional

    Returns
    -------
    PcgReport
        ``iterations`` is the first step k whose increment (or relative
        residual) met the tolerance; ``converged`` is False when the cap
        was hit instead.
    """
    cfg = cfg or SolveConfig()
    f = np.asarray(f, dtype=float)
    if f.shape != (op.dim,):
        raise ValueError(f"expected vector of length {op.dim}, got {f.shape}")
    precond = pre.apply if pre is not None else None
    return _run_pcg(op.matvec, precond, f, cfg)


def cg_unpreconditioned(op, f, cfg=None):
    """Plain CG baseline (identity preconditioner)."""
    return pcg(op, None, f, cfg)


def estimate_condition(op, pre, probes=5, seed=0, max_steps=300):
    """Estimate the extreme eigenvalues and condition number of the
    preconditioned operator from CG-Lanczos tridiagonal matrices.

    Runs CG on ``probes`` random right-hand sides under the
    relative-residual rule, forms each run's Lanczos matrix (truncated to
    the steps before residual stagnation), and takes the min/max of the
    Ritz extremes over all probes.

    Parameters
    ----------
    op : FractionalOperator
    pre : SchwarzPreconditioner or None
        None estimates the condition number of the operator itself.
    probes : int
    seed : int
        RNG seed for the probe right-hand sides.
    max_steps : int
        CG step cap per probe.

    Returns
    -------
    (lambda_min, lambda_max, cond)
    """
    rng = np.random.default_rng(seed)
    cfg = SolveConfig(tol_infty=1e-300, max_iter=min(op.dim, max_steps),
                      stop_rule="relative_residual", tol_rel_resid=1e-13)
    lam_min = np.inf
    lam_max = -np.inf
    got = 0
    attempts = 0
    while got < probes and attempts < 4 * probes:
        attempts += 1
        f = rng.standard_normal(op.dim)
        report = pcg(op, pre, f, cfg)
        r0 = np.linalg.norm(f)
        keep = sum(1 for r in report.residual_norms if r > 1e-12 * r0)
        keep = min(keep + 1, len(report.alphas))
        diag, off = report.lanczos_matrix(keep=keep)
        if diag.size == 0:
            continue
        ritz = (eigvalsh_tridiagonal(diag, off) if off.size else diag.copy())
        got += 1
        lam_min = min(lam_min, float(ritz.min()))
        lam_max = max(lam_max, float(ritz.max()))
    if got == 0:
        raise NumericalError("condition estimation failed: all probes broke down")
    return lam_min, lam_max, lam_max / lam_min
