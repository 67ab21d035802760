"""Manufactured solutions, load vectors, and the experiment driver that
reproduces the iteration-count tables and the condition-scaling study.

Example 1 uses the four-axis measure with weights 1/4 and the separable
solution u = ((2x - x^2)(2y - y^2))^4 on [0, 2]^2, whose right-hand side
follows from the fractional power rule applied to the monomial expansion.
Example 2 replaces the measure by the constant density 1 on [0, 2*pi)
(discretized with a midpoint rule) and keeps the same right-hand side, so
it reports iterations and condition numbers only.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .assembly import build_operator, discretize_measure
from .errors import ConfigError
from .fraccalc import frac_deriv_polynomial
from .krylov import SolveConfig, estimate_condition, pcg
from .mesh import build_decomposition, build_mesh, coarse_prolongation
from .operators import build_coarse, load_symbol_cache, save_symbol_cache
from .schwarz import build_preconditioner

__all__ = [
    "ExperimentSpec",
    "ResultRow",
    "manufactured_u",
    "manufactured_f_example1",
    "load_vector",
    "l2_error",
    "run_experiment",
    "run_table",
    "parse_measure",
    "DEFAULT_GRID",
]

# (2t - t^2)^4 expanded in monomials t^4 .. t^8.
_G_COEFFS = (0.0, 0.0, 0.0, 0.0, 16.0, -32.0, 24.0, -8.0, 1.0)

# Degree-4 triangle rule: 6 points, barycentric weights summing to 1.
_TRI_W = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)
_TRI_L = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])

DEFAULT_GRID = ((64, 8), (128, 16), (256, 32))
_DELTAS = (1, 2, 4)


def _poly(coeffs, t):
    out = np.zeros_like(np.asarray(t, dtype=float))
    for p, a in enumerate(coeffs):
        if a:
            out = out + a * np.asarray(t, dtype=float) ** p
    return out


def manufactured_u(x, y):
    """Exact solution ((2x - x^2)(2y - y^2))^4 on [0, 2]^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = ((2.0 * x - x ** 2) * (2.0 * y - y ** 2)) ** 4
    return out if out.ndim else float(out)


def manufactured_f_example1(x, y, alpha=0.75):
    """Right-hand side matching ``manufactured_u`` for the four-axis
    operator of order 2*alpha with weights 1/4.

    With g(t) = (2t - t^2)^4 the solution separates as u = g(x) g(y), and
    left/right derivatives reduce to the power rule on g's monomials; g is
    symmetric about t = 1, so the right derivative is the left one
    evaluated at 2 - t.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mu = 2.0 * alpha
    gx = _poly(_G_COEFFS, x)
    gy = _poly(_G_COEFFS, y)
    dx = frac_deriv_polynomial(_G_COEFFS, mu, x) + frac_deriv_polynomial(_G_COEFFS, mu, 2.0 - x)
    dy = frac_deriv_polynomial(_G_COEFFS, mu, y) + frac_deriv_polynomial(_G_COEFFS, mu, 2.0 - y)
    out = -0.25 * (dx * gy + gx * dy)
    return out if out.ndim else float(out)


def _grid_to_vec(mesh, grid):
    """Interior part of a nodal (n+1)x(n+1) grid (indexed [i, j]) in DOF order."""
    n = mesh.n
    return grid[1:n, 1:n].T.ravel().copy()


def _vec_to_grid(mesh, vec):
    """DOF vector as a full nodal grid with zero boundary, indexed [i, j]."""
    n = mesh.n
    grid = np.zeros((n + 1, n + 1))
    grid[1:n, 1:n] = vec.reshape(n - 1, n - 1).T
    return grid


def load_vector(mesh, f):
    """Load vector with entries int f phi_j, by the degree-4 rule per
    triangle (6 points).

    Parameters
    ----------
    mesh : UniformMesh
    f : callable
        Accepts coordinate arrays (x, y).

    Returns
    -------
    ndarray, length (n-1)**2
    """
    tri = mesh.triangles()
    lat = mesh.triangle_vertex_lattice()
    area = 0.5 * mesh.h ** 2
    accum = np.zeros((mesh.n + 1, mesh.n + 1))
    for lam, w in zip(_TRI_L, _TRI_W):
        pts = np.einsum("k,tkd->td", lam, tri)
        fv = f(pts[:, 0], pts[:, 1])
        for v in range(3):
            np.add.at(accum, (lat[:, v, 0], lat[:, v, 1]), w * area * lam[v] * fv)
    return _grid_to_vec(mesh, accum)


def l2_error(mesh, u_vec, u_exact):
    """L2 norm of the difference between a FE coefficient vector and an
    exact solution, by the same degree-4 triangle rule."""
    tri = mesh.triangles()
    lat = mesh.triangle_vertex_lattice()
    grid = _vec_to_grid(mesh, u_vec)
    nodal = grid[lat[..., 0], lat[..., 1]]
    area = 0.5 * mesh.h ** 2
    total = 0.0
    for lam, w in zip(_TRI_L, _TRI_W):
        pts = np.einsum("k,tkd->td", lam, tri)
        fe = nodal @ lam
        diff = fe - u_exact(pts[:, 0], pts[:, 1])
        total += w * area * float(diff @ diff)
    return np.sqrt(total)


def parse_measure(spec):
    """Parse a measure spec string: "axes4" or "uniform:L"."""
    if spec == "axes4":
        return discretize_measure("axes4")
    if spec.startswith("uniform:"):
        try:
            L = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad direction count in measure spec {spec!r}") from exc
        return discretize_measure("uniform", L)
    raise ConfigError(f"unknown measure spec {spec!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: discretization, measure, decomposition and solver
    settings.  Mirrors the JSON config document field for field."""

    n: int
    m: int
    overlap_cells: int
    example: int = 1
    measure: str = ""
    alpha: float = 0.75
    c: float = 0.0
    bounds: tuple = ((0.0, 2.0), (0.0, 2.0))
    tol_infty: float = 1e-6
    max_iter: int = 1000
    probes: int = 5
    cache: str = ""
    out: str = ""

    def __post_init__(self):
        if self.example not in (1, 2):
            raise ConfigError(f"example must be 1 or 2, got {self.example}")
        if not self.measure:
            object.__setattr__(self, "measure",
                               "axes4" if self.example == 1 else "uniform:16")

    @classmethod
    def from_json(cls, doc):
        """Build from a parsed JSON object, rejecting unknown keys."""
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        allowed = set(cls.__dataclass_fields__)
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("n", "m", "overlap_cells"):
            if key not in doc:
                raise ConfigError(f"config is missing required key {key!r}")
        doc = dict(doc)
        if "bounds" in doc:
            doc["bounds"] = tuple(tuple(map(float, b)) for b in doc["bounds"])
        try:
            return cls(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self):
        d = asdict(self)
        d["bounds"] = [list(b) for b in self.bounds]
        return d


@dataclass
class ResultRow:
    """One experiment outcome; ``l2_error`` is None for Example 2."""

    h: float
    H: float
    delta: float
    iters: int
    cond_est: float
    l2_error: float
    seconds: float
    converged: bool = True

    CSV_COLUMNS = ("h", "H", "delta", "iters", "cond_est", "l2_error", "seconds")

    def csv_values(self):
        def fmt(x):
            return "" if x is None else format(float(x), ".17g")

        return [fmt(self.h), fmt(self.H), fmt(self.delta), str(self.iters),
                fmt(self.cond_est), fmt(self.l2_error), fmt(self.seconds)]


def _load_or_build_operator(spec, mesh, measure):
    """Reuse a cached symbol when it matches the spec; (re)build and
    refresh the cache otherwise."""
    want = (mesh.n, spec.alpha, spec.c)
    if spec.cache:
        try:
            op = load_symbol_cache(spec.cache)
            same_dirs = (len(op.measure) == len(measure)
                         and np.allclose(op.measure.thetas, measure.thetas)
                         and np.allclose(op.measure.weights, measure.weights))
            if ((op.n, op.alpha, op.c) == want and same_dirs
                    and abs(op.h - mesh.h) < 1e-12
                    and np.allclose(mesh.bounds, [[0.0, 2.0], [0.0, 2.0]])):
                return op
        except (OSError, ValueError):
            pass
    op = build_operator(mesh, spec.alpha, spec.c, measure)
    if spec.cache:
        save_symbol_cache(op, spec.cache)
    return op


def run_experiment(spec, op=None, coarse=None):
    """Run one experiment row: assemble (or reuse), precondition, solve,
    estimate the condition number, and measure the L2 error for Example 1.

    Parameters
    ----------
    spec : ExperimentSpec
    op, coarse : optional
        Pre-built operator and coarse Galerkin operator, reused when
        several rows share the same mesh, operator and coarse space.

    Returns
    -------
    ResultRow
    """
    start = time.perf_counter()
    mesh = build_mesh(spec.bounds, spec.n)
    measure = parse_measure(spec.measure)
    if op is None:
        op = _load_or_build_operator(spec, mesh, measure)
    decomp = build_decomposition(mesh, spec.m, spec.overlap_cells)
    P0 = coarse_prolongation(mesh, spec.m) if coarse is None else None
    pre = build_preconditioner(op, decomp, P0, coarse=coarse)
    f = load_vector(mesh, lambda x, y: manufactured_f_example1(x, y, spec.alpha))
    report = pcg(op, pre, f, SolveConfig(tol_infty=spec.tol_infty,
                                         max_iter=spec.max_iter))
    _, _, cond = estimate_condition(op, pre, probes=spec.probes)
    err = None
    if spec.example == 1:
        err = l2_error(mesh, report.solution, manufactured_u)
    return ResultRow(h=mesh.h, H=mesh.side / spec.m, delta=decomp.delta,
                     iters=report.iterations, cond_est=cond, l2_error=err,
                     seconds=time.perf_counter() - start,
                     converged=report.converged)


def _row_specs(table, rows=None, **overrides):
    if rows is None:
        rows = [(n, m, k) for (n, m) in DEFAULT_GRID for k in _DELTAS]
    specs = []
    for n, m, k in rows:
        specs.append(ExperimentSpec(n=n, m=m, overlap_cells=k, example=table,
                                    **overrides))
    return specs


def run_table(table, rows=None, out=None, jobs=1, **overrides):
    """Run a table of experiments and write the CSV.

    Parameters
    ----------
    table : int
        1 (four-axis measure) or 2 (uniform measure); fixes the example.
    rows : sequence of (n, m, overlap_cells), optional
        Defaults to the three-mesh grid with H/h = 8 and overlaps 1, 2, 4.
    out : path, optional
        CSV destination; omitted rows only returned.
    jobs : int
        Worker processes; rows stay in input order regardless.
    overrides : additional ExperimentSpec fields.

    Returns
    -------
    (rows, spread)
        Result rows in input order and the max-min iteration spread.
    """
    specs = _row_specs(table, rows, **overrides)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_experiment, specs))
    else:
        results = []
        shared = {}
        for spec in specs:
            key = (spec.n, spec.m, spec.measure, spec.alpha, spec.c)
            if key not in shared:
                mesh = build_mesh(spec.bounds, spec.n)
                measure = parse_measure(spec.measure)
                op = _load_or_build_operator(spec, mesh, measure)
                P0 = coarse_prolongation(mesh, spec.m)
                coarse = build_coarse(op, P0) if P0.shape[1] > 0 else None
                shared[key] = (op, coarse)
            op, coarse = shared[key]
            results.append(run_experiment(spec, op=op, coarse=coarse))
    if out is not None:
        write_csv(out, results)
    iters = [r.iters for r in results]
    spread = (max(iters) - min(iters)) if iters else 0
    return results, spread


def write_csv(path, rows):
    """Write result rows with the fixed column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ResultRow.CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_values())


def read_grid_file(path):
    """Read a JSON grid file: a list of {n, m, overlap_cells} objects."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ConfigError("grid file must hold a JSON list")
    rows = []
    for item in doc:
        if not isinstance(item, dict) or set(item) != {"n", "m", "overlap_cells"}:
            raise ConfigError("grid rows must be {n, m, overlap_cells} objects")
        rows.append((int(item["n"]), int(item["m"]), int(item["overlap_cells"])))
    return rows
