"""Assembly of the directional fractional stiffness tables, the mass
table, and the combined translation-invariant operator symbol.

For one direction, a stiffness entry is the plane integral of the product
of the left fractional derivative of one hat and the right fractional
derivative of another, taken along lines in the given direction.  On a
line, each hat restricts to a piecewise-linear trace whose slope jumps sit
at mesh-edge crossings; the derivative of a clamped ramp is a single
clamped power, and

    int (x - s)_+^(1-a) (e - x)_+^(1-a) dx = B(2-a, 2-a) (e - s)_+^(3-2a).

Crossing positions are affine in the transverse line offset while the jump
coefficients stay constant, so the transverse integration of every
edge-pair term reduces to an elementary antiderivative of a clamped power
of an affine function.  Entries therefore come out in closed form, exact
up to rounding.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .fraccalc import PiecewiseLinearTrace
from .mesh import hat_value

__all__ = [
    "DirectionalMeasure",
    "StiffnessEntryTable",
    "discretize_measure",
    "hat_line_trace",
    "directional_entry",
    "pair_entry",
    "assemble_directional_stiffness",
    "assemble_mass",
    "build_operator",
]

_HEX_VERTS = np.array([(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)], dtype=float)


def _support_triangles():
    """The 6 triangles around the origin node with the hat gradient on each
    (lattice units)."""
    tris = [
        ((0, 0), (1, 0), (1, 1)),
        ((0, 0), (1, 1), (0, 1)),
        ((-1, 0), (0, 0), (0, 1)),
        ((0, -1), (1, 0), (0, 0)),
        ((-1, -1), (0, -1), (0, 0)),
        ((-1, -1), (0, 0), (-1, 0)),
    ]
    out = []
    for verts in tris:
        p = np.array(verts, dtype=float)
        z = np.array([1.0 if v == (0, 0) else 0.0 for v in verts])
        mat = np.column_stack([p[1] - p[0], p[2] - p[0]]).T
        grad = np.linalg.solve(mat, [z[1] - z[0], z[2] - z[0]])
        out.append((p, grad))
    return out


def _hat_edges():
    """Unique edges of the hat support with the jump of the normal
    derivative across each: list of (P, Q, normal, jump)."""
    tris = _support_triangles()
    seen = {}
    for p, grad in tris:
        for i in range(3):
            key = frozenset((tuple(p[i]), tuple(p[(i + 1) % 3])))
            seen.setdefault(key, []).append(grad)
    edges = []
    for key, grads in seen.items():
        P, Q = (np.array(v, dtype=float) for v in sorted(key))
        d = Q - P
        nu = np.array([-d[1], d[0]]) / np.hypot(*d)
        mid = 0.5 * (P + Q)
        pos = np.zeros(2)
        neg = np.zeros(2)
        for p, grad in tris:
            centroid = p.mean(axis=0)
            if {tuple(P), tuple(Q)} <= {tuple(v) for v in p}:
                if (centroid - mid) @ nu > 0:
                    pos = grad
                else:
                    neg = grad
        edges.append((P, Q, nu, float((pos - neg) @ nu)))
    return edges


_EDGES = _hat_edges()


def _edge_table(theta, h):
    """Crossing data of the hat's slope-jump edges for slicing direction
    ``theta``, in physical units for mesh size ``h``.

    Returns arrays (t_lo, t_hi, c0, c1, gam): edge crossed for transverse
    offsets t in (t_lo, t_hi) at the line coordinate c0 + c1*t, where the
    trace slope jumps by gam.  Edges parallel to the direction are dropped
    (they are never crossed transversally).
    """
    e = np.array([np.cos(theta), np.sin(theta)])
    nv = np.array([-e[1], e[0]])
    rows = []
    for P, Q, nu, jump in _EDGES:
        pn, qn = P @ nv, Q @ nv
        dn = qn - pn
        if abs(dn) < 1e-12:
            continue
        pe, qe = P @ e, Q @ e
        slope = (qe - pe) / dn
        gam = jump * abs(e @ nu) / h
        rows.append((min(pn, qn) * h, max(pn, qn) * h,
                     (pe - pn * slope) * h, slope, gam))
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4]


def _pair_sum(alpha, table, sig, tau, sig2=0.0, tau2=0.0):
    """Sum over edge pairs of the transverse integrals for hats shifted by
    (sig, tau) and (sig2, tau2) along/across the slicing direction.

    The first hat carries the left derivative, the second the right one;
    ``sig``/``tau`` broadcast (vectorized over offsets).
    """
    t_lo, t_hi, c0, c1, gam = table
    q3 = 3.0 - 2.0 * alpha
    q4 = q3 + 1.0
    sig = np.asarray(sig, dtype=float)
    tau = np.asarray(tau, dtype=float)
    acc = np.zeros(np.broadcast(sig, tau).shape)
    for a in range(len(gam)):
        lo_a = t_lo[a] + tau2
        hi_a = t_hi[a] + tau2
        base_a = c0[a] - c1[a] * tau2 + sig2
        for b in range(len(gam)):
            lo = np.maximum(lo_a, t_lo[b] + tau)
            hi = np.minimum(hi_a, t_hi[b] + tau)
            w = hi - lo
            act = w > 0.0
            if not np.any(act):
                continue
            u0 = (c0[b] - c1[b] * tau + sig) - base_a
            u1 = c1[b] - c1[a]
            if u1 == 0.0:
                contrib = w * np.maximum(u0, 0.0) ** q3
            else:
                ulo = u0 + u1 * lo
                uhi = u0 + u1 * hi
                contrib = (np.maximum(uhi, 0.0) ** q4
                           - np.maximum(ulo, 0.0) ** q4) / (u1 * q4)
                um = 0.5 * (ulo + uhi)
                close = (ulo > 0.0) & (uhi > 0.0) & (np.abs(uhi - ulo) < 1e-4 * um)
                if np.any(close):
                    ums = np.where(close, um, 1.0)
                    taylor = w * (ums ** q3 + q3 * (q3 - 1.0) * ums ** (q3 - 2.0)
                                  * (uhi - ulo) ** 2 / 24.0)
                    contrib = np.where(close, taylor, contrib)
            acc += gam[a] * gam[b] * np.where(act, contrib, 0.0)
    return acc / gamma(q4)


def _strip_mask(theta, di, dj):
    """Offsets (lattice units) at which the directional entry can be
    nonzero: the transverse hat projections must overlap and the second
    hat must not end before the first begins."""
    e = np.array([np.cos(theta), np.sin(theta)])
    nv = np.array([-e[1], e[0]])
    wn = np.max(np.abs(_HEX_VERTS @ nv))
    we = np.max(np.abs(_HEX_VERTS @ e))
    tau = di * nv[0] + dj * nv[1]
    sig = di * e[0] + dj * e[1]
    return (np.abs(tau) < 2.0 * wn + 1e-9) & (sig > -2.0 * we - 1e-9)


@dataclass(frozen=True, eq=False)
class DirectionalMeasure:
    """Weighted direction set {(theta_k, p_k)} with antipodal symmetry.

    The antipodal pairing (every direction has its opposite with the same
    weight) is what makes the assembled bilinear form symmetric.
    """

    thetas: np.ndarray
    weights: np.ndarray
    name: str = ""

    def __init__(self, thetas, weights, name=""):
        t = np.mod(np.asarray(thetas, dtype=float), 2.0 * np.pi)
        p = np.asarray(weights, dtype=float)
        if t.shape != p.shape or t.ndim != 1 or t.size == 0:
            raise ValueError("thetas and weights must be matching 1D arrays")
        if np.any(p <= 0.0):
            raise ValueError("direction weights must be positive")
        order = np.argsort(t)
        object.__setattr__(self, "thetas", t[order])
        object.__setattr__(self, "weights", p[order])
        object.__setattr__(self, "name", name)
        self._pairing()

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def __len__(self):
        return self.thetas.size

    def _pairing(self):
        """Indices pairing each direction with its antipode; raises if the
        measure is not antipodally symmetric."""
        partner = np.full(len(self), -1)
        for k, (t, p) in enumerate(zip(self.thetas, self.weights)):
            tp = np.mod(t + np.pi, 2.0 * np.pi)
            dist = np.abs(np.mod(self.thetas - tp + np.pi, 2.0 * np.pi) - np.pi)
            j = int(np.argmin(dist))
            if dist[j] > 1e-9 or abs(self.weights[j] - p) > 1e-12 * abs(p):
                raise ValueError(
                    "measure is not antipodally symmetric: no partner for "
                    f"theta={t:.6f}, p={p}")
            partner[k] = j
        return partner

    def half_pairs(self):
        """(theta, weight) for one representative of each antipodal pair,
        with theta in [0, pi)."""
        partner = self._pairing()
        out = []
        for k, j in enumerate(partner):
            if k <= j:
                out.append((float(self.thetas[k]), float(self.weights[k])))
        return out


def discretize_measure(spec, L=None):
    """Build a named directional measure.

    Parameters
    ----------
    spec : str
        "axes4" (weights 1/4 on the four axis directions) or "uniform"
        (midpoint rule for a constant density 1 on [0, 2pi), total mass
        2*pi).
    L : int, optional
        Direction count for "uniform"; must be even so antipodal pairs
        exist.  Ignored for "axes4" (which has L = 4).

    Returns
    -------
    DirectionalMeasure
    """
    if spec == "axes4":
        if L not in (None, 4):
            raise ValueError("axes4 has exactly 4 directions")
        thetas = np.array([0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi])
        return DirectionalMeasure(thetas, np.full(4, 0.25), name="axes4")
    if spec == "uniform":
        if L is None or L < 2 or L % 2 != 0:
            raise ValueError("uniform measure needs an even direction count L >= 2")
        k = np.arange(L)
        thetas = (k + 0.5) * 2.0 * np.pi / L
        return DirectionalMeasure(thetas, np.full(L, 2.0 * np.pi / L),
                                  name=f"uniform:{L}")
    raise ValueError(f"unknown measure spec {spec!r}")


def hat_line_trace(h, center, theta, t):
    """Restriction of the hat at ``center`` to the line x = s*e + t*n.

    e = (cos theta, sin theta) and n is e rotated by +pi/2; the returned
    trace is parameterized by the line coordinate s.  Breakpoints are the
    crossings of the hat support edges, values come from direct hat
    evaluation.  Returns None when the line misses the support.
    """
    e = np.array([np.cos(theta), np.sin(theta)])
    nv = np.array([-e[1], e[0]])
    center = np.asarray(center, dtype=float)
    ss = []
    for P, Q, _, _ in _EDGES:
        a = center + h * P
        b = center + h * Q
        dn = (b - a) @ nv
        if abs(dn) < 1e-14 * h:
            continue
        lam = (t - a @ nv) / dn
        if -1e-12 <= lam <= 1.0 + 1e-12:
            ss.append((a + lam * (b - a)) @ e)
    if len(ss) < 2:
        return None
    ss = np.sort(np.array(ss))
    keep = np.concatenate(([True], np.diff(ss) > 1e-12 * h))
    ss = ss[keep]
    if len(ss) < 2:
        return None
    pts = ss[:, None] * e + t * nv
    vals = hat_value((pts[:, 0] - center[0]) / h, (pts[:, 1] - center[1]) / h)
    if np.max(vals) <= 0.0:
        return None
    vals[0] = 0.0
    vals[-1] = 0.0
    return PiecewiseLinearTrace(ss, vals)


def directional_entry(mesh, theta, alpha, offset):
    """One translation-invariant stiffness entry: the inner product of the
    left order-``alpha`` derivative of the hat at the origin DOF with the
    right derivative of the hat offset by ``offset`` lattice steps.

    Parameters
    ----------
    mesh : UniformMesh
    theta : float
        Slicing direction in radians; the right derivative is taken in
        direction theta + pi.
    alpha : float
        Order in (1/2, 1).
    offset : (int, int)
        DOF lattice offset (di, dj) of the second hat.

    Returns
    -------
    float
        Exactly 0.0 when the hats cannot interact (transverse supports
        disjoint, or the second hat lies entirely behind the first).
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"fractional order alpha must lie in (1/2, 1), got {alpha}")
    di, dj = offset
    if max(abs(int(di)), abs(int(dj))) > mesh.n - 2:
        raise ValueError(f"offset {offset} exceeds the interior DOF window")
    if not bool(_strip_mask(theta, float(di), float(dj))):
        return 0.0
    e = np.array([np.cos(theta), np.sin(theta)])
    nv = np.array([-e[1], e[0]])
    h = mesh.h
    table = _edge_table(theta, h)
    sig = (di * e[0] + dj * e[1]) * h
    tau = (di * nv[0] + dj * nv[1]) * h
    return float(_pair_sum(alpha, table, sig, tau))


def pair_entry(mesh, theta, alpha, node_a, node_b):
    """Same inner product computed at the absolute positions of two
    interior lattice nodes, without reducing to the lattice offset first.

    Useful as a translation-invariance check: up to rounding it equals
    ``directional_entry`` at offset node_b - node_a.
    """
    e = np.array([np.cos(theta), np.sin(theta)])
    nv = np.array([-e[1], e[0]])
    h = mesh.h
    ca = np.array(mesh.node_coords(*node_a))
    cb = np.array(mesh.node_coords(*node_b))
    table = _edge_table(theta, h)
    return float(_pair_sum(alpha, table, cb @ e, cb @ nv,
                           sig2=ca @ e, tau2=ca @ nv))


@dataclass(frozen=True, eq=False)
class StiffnessEntryTable:
    """Translation-invariant entry table for one direction.

    Offsets are lattice steps (di, dj); ``values[k]`` is the entry between
    the origin hat and the hat at ``offsets[k]``.  Offsets whose magnitude
    falls below drop_tol times the (0, 0) entry are omitted and the
    Chebyshev cutoff radius of the kept set is recorded.
    """

    theta: float
    alpha: float
    offsets: np.ndarray
    values: np.ndarray
    drop_tol: float
    cutoff: int

    def to_dict(self):
        return {(int(i), int(j)): float(v)
                for (i, j), v in zip(self.offsets, self.values)}

    def lookup(self, offset):
        """Entry at a lattice offset; 0.0 for anything not stored."""
        if not hasattr(self, "_index"):
            object.__setattr__(self, "_index", self.to_dict())
        return self._index.get((int(offset[0]), int(offset[1])), 0.0)


def assemble_directional_stiffness(mesh, theta, alpha, drop_tol=1e-12):
    """All entries of one direction's stiffness table over the offset
    window of the mesh.

    Each offset is computed once (interior hats are translates); entries
    below ``drop_tol`` times the magnitude of the (0, 0) entry are dropped.

    Returns
    -------
    StiffnessEntryTable
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"fractional order alpha must lie in (1/2, 1), got {alpha}")
    nmax = mesh.n - 2
    rng = np.arange(-nmax, nmax + 1, dtype=float)
    dj, di = np.meshgrid(rng, rng, indexing="ij")
    mask = _strip_mask(theta, di, dj)
    di = di[mask]
    dj = dj[mask]
    e = np.array([np.cos(theta), np.sin(theta)])
    nv = np.array([-e[1], e[0]])
    h = mesh.h
    table = _edge_table(theta, h)
    vals = _pair_sum(alpha, table, (di * e[0] + dj * e[1]) * h,
                     (di * nv[0] + dj * nv[1]) * h)
    base = abs(float(_pair_sum(alpha, table, 0.0, 0.0)))
    keep = np.abs(vals) >= drop_tol * base
    offsets = np.column_stack([di[keep], dj[keep]]).astype(int)
    values = vals[keep]
    cutoff = int(np.max(np.abs(offsets))) if len(offsets) else 0
    return StiffnessEntryTable(theta=float(theta), alpha=float(alpha),
                               offsets=offsets, values=values,
                               drop_tol=float(drop_tol), cutoff=cutoff)


def assemble_mass(mesh):
    """Mass-matrix entries as a translation-invariant offset table.

    On the fixed-diagonal triangulation the couplings are exact rationals
    times h^2: h^2/2 on the diagonal and h^2/12 towards each of the six
    lattice neighbours that share a triangle.
    """
    h2 = mesh.h ** 2
    table = {(0, 0): h2 / 2.0}
    for off in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)):
        table[off] = h2 / 12.0
    return table


def build_operator(mesh, alpha, c, measure, drop_tol=1e-12):
    """Assemble the full operator symbol and wrap it as an applicable
    operator.

    The symbol is minus the measure-weighted sum of directional stiffness
    tables plus ``c`` times the mass table.  Each antipodal pair is
    assembled once: the opposite direction's table is the reversed-offset
    table, which also makes the symbol exactly even.

    Parameters
    ----------
    mesh : UniformMesh
    alpha : float
        Order in (1/2, 1).
    c : float
        Reaction coefficient, >= 0.
    measure : DirectionalMeasure
    drop_tol : float
        Per-direction relative drop tolerance.

    Returns
    -------
    FractionalOperator
    """
    from .operators import FractionalOperator

    if c < 0:
        raise ValueError(f"reaction coefficient must be >= 0, got {c}")
    nf = mesh.n - 1
    C = nf - 1
    window = np.zeros((2 * nf - 1, 2 * nf - 1))
    for theta, p in measure.half_pairs():
        tab = assemble_directional_stiffness(mesh, theta, alpha, drop_tol)
        di = tab.offsets[:, 0]
        dj = tab.offsets[:, 1]
        window[C + dj, C + di] -= p * tab.values
        window[C - dj, C - di] -= p * tab.values
    if c:
        for (di, dj), v in assemble_mass(mesh).items():
            window[C + dj, C + di] += c * v
    return FractionalOperator(n=mesh.n, h=mesh.h, alpha=float(alpha),
                              c=float(c), measure=measure, window=window)
