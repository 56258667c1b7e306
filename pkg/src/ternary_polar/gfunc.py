"""Worst-case capacity of the minus transform, ``g(G1, G2)``.

``g(G1, G2) = 1 - min H[v_b ⋆ v_a]`` over posteriors with ``H[v_a] = 1 - G1``
and ``H[v_b] = 1 - G2``.  The objective is concave in each posterior
separately, so the minimum over the convex superlevel sets
``{H[v] >= 1 - G}`` sits on their boundary.  For ``q = 3`` that boundary is
a closed curve around the simplex centroid, which we parameterize by the
angle of a ray leaving the centroid.  Where the ray exits the simplex before
entropy drops to ``1 - G`` the boundary point is the simplex edge point;
those points are feasible for the inequality form of the problem and never
beat the true level-set points, so the minimum is unchanged.

Both posteriors are invariant (up to an output relabelling) under cyclic
shifts, i.e. rotations by ``2π/3``, so the coarse search covers one sector
per posterior.  Angle 0 points at the vertex ``[1, 0, 0]``; the QSC
posteriors therefore sit exactly on coarse grid nodes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .channel import PosteriorVector, entropy
from .qsc import g_qsc, h_q_inv

SECTOR = 2.0 * math.pi / 3.0
LN3 = math.log(3.0)
_E1 = np.array([2.0, -1.0, -1.0]) / math.sqrt(6.0)
_E2 = np.array([0.0, 1.0, -1.0]) / math.sqrt(2.0)


@dataclass(frozen=True)
class SolverOptions:
    coarse: int = 180          # grid nodes per sector, per posterior
    refine_tol: float = 1e-10  # final golden-section bracket width (radians)
    multistart: int = 5
    max_passes: int = 30

    def __post_init__(self):
        if self.coarse < 3 or self.multistart < 1 or self.max_passes < 1:
            raise ValueError("coarse >= 3, multistart >= 1 and max_passes >= 1 required")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be > 0")

    def to_dict(self) -> dict:
        return {"coarse": self.coarse, "refine_tol": self.refine_tol,
                "multistart": self.multistart, "max_passes": self.max_passes}


# --------------------------------------------------------------------------
# compiled kernels (q = 3)

@njit(cache=True)
def _ent3(a, b, c):
    s = 0.0
    if a > 0.0:
        s -= a * math.log(a)
    if b > 0.0:
        s -= b * math.log(b)
    if c > 0.0:
        s -= c * math.log(c)
    return s / 1.0986122886681098


@njit(cache=True)
def _direction(theta):
    ct = math.cos(theta)
    st = math.sin(theta)
    s6 = 1.0 / math.sqrt(6.0)
    s2 = 1.0 / math.sqrt(2.0)
    return 2.0 * ct * s6, -ct * s6 + st * s2, -ct * s6 - st * s2


@njit(cache=True)
def _level_point(G, theta, out):
    """Boundary point of {H >= 1-G} along the ray at ``theta``; True if H == 1-G there."""
    d0, d1, d2 = _direction(theta)
    third = 1.0 / 3.0
    rmax = 1e300
    k = -1
    if d0 < 0.0 and -third / d0 < rmax:
        rmax = -third / d0
        k = 0
    if d1 < 0.0 and -third / d1 < rmax:
        rmax = -third / d1
        k = 1
    if d2 < 0.0 and -third / d2 < rmax:
        rmax = -third / d2
        k = 2
    target = 1.0 - G
    b0 = third + rmax * d0
    b1 = third + rmax * d1
    b2 = third + rmax * d2
    if k == 0:
        b0 = 0.0
    elif k == 1:
        b1 = 0.0
    else:
        b2 = 0.0
    b0 = max(b0, 0.0)
    b1 = max(b1, 0.0)
    b2 = max(b2, 0.0)
    s = b0 + b1 + b2
    if _ent3(b0 / s, b1 / s, b2 / s) >= target:
        out[0] = b0 / s
        out[1] = b1 / s
        out[2] = b2 / s
        return False
    lo = 0.0
    hi = rmax
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _ent3(third + mid * d0, third + mid * d1, third + mid * d2) > target:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    p0 = max(third + r * d0, 0.0)
    p1 = max(third + r * d1, 0.0)
    p2 = max(third + r * d2, 0.0)
    s = p0 + p1 + p2
    out[0] = p0 / s
    out[1] = p1 / s
    out[2] = p2 / s
    return True


@njit(cache=True)
def _xcorr_ent(a, b):
    # w_u = sum_u' b[u'] a[u + u' mod 3]
    w0 = b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
    w1 = b[0] * a[1] + b[1] * a[2] + b[2] * a[0]
    w2 = b[0] * a[2] + b[1] * a[0] + b[2] * a[1]
    return _ent3(w0, w1, w2)


@njit(cache=True)
def _level_curve(G, thetas):
    n = thetas.size
    pts = np.empty((n, 3))
    tmp = np.empty(3)
    for i in range(n):
        _level_point(G, thetas[i], tmp)
        pts[i, 0] = tmp[0]
        pts[i, 1] = tmp[1]
        pts[i, 2] = tmp[2]
    return pts


@njit(cache=True)
def _pair_entropies(A, B):
    na = A.shape[0]
    nb = B.shape[0]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            out[i, j] = _xcorr_ent(A[i], B[j])
    return out


@njit(cache=True)
def _side_value(G, t, fixed, side, buf):
    _level_point(G, t, buf)
    if side == 0:
        return _xcorr_ent(buf, fixed)
    return _xcorr_ent(fixed, buf)


@njit(cache=True)
def _golden(G, lo, hi, fixed, side, tol):
    """Golden-section search of the objective along one angle in [lo, hi]."""
    buf = np.empty(3)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc = _side_value(G, c, fixed, side, buf)
    fd = _side_value(G, d, fixed, side, buf)
    while hi - lo > tol:
        if fc <= fd:
            hi = d
            d = c
            fd = fc
            c = hi - invphi * (hi - lo)
            fc = _side_value(G, c, fixed, side, buf)
        else:
            lo = c
            c = d
            fc = fd
            d = lo + invphi * (hi - lo)
            fd = _side_value(G, d, fixed, side, buf)
    if fc <= fd:
        return c, fc
    return d, fd


@njit(cache=True)
def _refine(G1, G2, ta, tb, delta, tol, max_passes):
    va = np.empty(3)
    vb = np.empty(3)
    _level_point(G1, ta, va)
    _level_point(G2, tb, vb)
    best = _xcorr_ent(va, vb)
    for _ in range(max_passes):
        moved = 0.0
        t_new, f_new = _golden(G1, ta - delta, ta + delta, vb, 0, tol)
        if f_new < best:
            moved = max(moved, abs(t_new - ta))
            ta = t_new
            best = f_new
            _level_point(G1, ta, va)
        t_new, f_new = _golden(G2, tb - delta, tb + delta, va, 1, tol)
        if f_new < best:
            moved = max(moved, abs(t_new - tb))
            tb = t_new
            best = f_new
            _level_point(G2, tb, vb)
        if moved <= tol:
            break
    return ta, tb, best


# --------------------------------------------------------------------------
# public API

@dataclass(frozen=True)
class LevelCurvePoint:
    """Boundary point of the feasible set ``{H[v] >= 1 - G}`` along a ray.

    ``on_level`` is False when the ray leaves the simplex before entropy
    reaches ``1 - G`` (possible only for ``G > 1 - log_3 2``); ``v`` is then
    the simplex edge point and ``H[v] > 1 - G``.
    """

    theta: float
    v: PosteriorVector
    G: float
    on_level: bool


def _reduce_angle(theta: float) -> float:
    return float(theta) % (2.0 * math.pi)


def _check_G(G: float, name: str = "G") -> float:
    G = float(G)
    if not 0.0 <= G <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {G}")
    return G


def level_curve_point(G: float, theta: float, q: int = 3) -> LevelCurvePoint:
    """Posterior on the entropy level set ``H = 1 - G`` in direction ``theta``.

    For ``q = 2`` the level "curve" is two points; ``theta`` near 0 picks
    ``[1-p, p]`` and ``theta`` near π picks ``[p, 1-p]``.
    """
    G = _check_G(G)
    if G == 0.0:
        v = np.full(q, 1.0 / q)
        return LevelCurvePoint(_reduce_angle(theta), PosteriorVector(v), G, True)
    if q == 2:
        p = h_q_inv(1.0 - G, 2)
        t = _reduce_angle(theta)
        v = [1.0 - p, p] if math.cos(t) >= 0 else [p, 1.0 - p]
        return LevelCurvePoint(0.0 if math.cos(t) >= 0 else math.pi, PosteriorVector(v), G, True)
    if q != 3:
        raise NotImplementedError("level curves are implemented for q in {2, 3}")
    out = np.empty(3)
    on = _level_point(G, float(theta), out)
    return LevelCurvePoint(_reduce_angle(theta), PosteriorVector(out), G, bool(on))


def level_curve(G: float, thetas) -> np.ndarray:
    """Vectorized ``level_curve_point(G, t).v`` for q = 3 (rows are posteriors)."""
    G = _check_G(G)
    thetas = np.ascontiguousarray(thetas, dtype=float)
    if G == 0.0:
        return np.full((thetas.size, 3), 1.0 / 3.0)
    return _level_curve(G, thetas)


def angle_of(v) -> float:
    """Angle of the ray from the centroid through ``v`` (q = 3)."""
    d = np.asarray(v, dtype=float) - 1.0 / 3.0
    return _reduce_angle(math.atan2(float(d @ _E2), float(d @ _E1)))


@dataclass(frozen=True)
class GSolution:
    g: float
    v_a: PosteriorVector
    v_b: PosteriorVector
    theta_a: float = 0.0
    theta_b: float = 0.0

    def __iter__(self):
        # allows ``g, va, vb = solve_g(...)``
        return iter((self.g, self.v_a, self.v_b))


def _solve_q2(G1: float, G2: float) -> GSolution:
    pa = h_q_inv(1.0 - G1, 2)
    pb = h_q_inv(1.0 - G2, 2)
    best = None
    for ta, va in ((0.0, [1 - pa, pa]), (math.pi, [pa, 1 - pa])):
        for tb, vb in ((0.0, [1 - pb, pb]), (math.pi, [pb, 1 - pb])):
            w0 = va[0] * vb[0] + va[1] * vb[1]
            H = entropy([w0, 1.0 - w0])
            if best is None or H < best[0]:
                best = (H, ta, tb, va, vb)
    H, ta, tb, va, vb = best
    return GSolution(1.0 - H, PosteriorVector(va), PosteriorVector(vb), ta, tb)


def solve_g(G1: float, G2: float, opts: SolverOptions | None = None, q: int = 3) -> GSolution:
    """Solve the constrained entropy minimization defining ``g(G1, G2)``.

    Coarse search over one sector per posterior, then coordinate-wise
    golden-section refinement started from the ``multistart`` best coarse
    cells.  Ties go to the lexicographically smallest ``(theta_a, theta_b)``.
    """
    G1 = _check_G(G1, "G1")
    G2 = _check_G(G2, "G2")
    opts = opts or SolverOptions()
    if G1 == 0.0 or G2 == 0.0:
        u = PosteriorVector(np.full(q, 1.0 / q))
        return GSolution(0.0, u, u)
    if q == 2:
        return _solve_q2(G1, G2)
    if q != 3:
        raise NotImplementedError("solve_g is implemented for q in {2, 3}")
    n = opts.coarse
    step = SECTOR / n
    thetas = np.arange(n) * step
    A = _level_curve(G1, thetas)
    B = _level_curve(G2, thetas)
    E = _pair_entropies(A, B)
    flat = np.argsort(E, axis=None, kind="stable")[: opts.multistart]
    best = None
    for idx in flat:
        i, j = divmod(int(idx), n)
        ta, tb, val = _refine(G1, G2, thetas[i], thetas[j], step, opts.refine_tol, opts.max_passes)
        ta, tb = ta % SECTOR, tb % SECTOR
        key = (val, ta, tb)
        if best is None or key < best:
            best = key
    val, ta, tb = best
    va = level_curve_point(G1, ta).v
    vb = level_curve_point(G2, tb).v
    g = min(max(1.0 - val, 0.0), 1.0)
    return GSolution(g, va, vb, ta, tb)


def solve_g_fixed_va(v_a, G2: float, opts: SolverOptions | None = None) -> float:
    """``1 - min H[v_b ⋆ v_a]`` over the level set of ``v_b`` only (q = 3)."""
    G2 = _check_G(G2, "G2")
    opts = opts or SolverOptions()
    va = np.ascontiguousarray(np.asarray(v_a, dtype=float))
    if va.size != 3:
        raise NotImplementedError("solve_g_fixed_va is implemented for q = 3")
    if G2 == 0.0:
        return 0.0
    n = 3 * opts.coarse
    step = 2.0 * math.pi / n
    thetas = np.arange(n) * step
    B = _level_curve(G2, thetas)
    E = _pair_entropies(va[None, :], B)[0]
    best = float(E.min())
    for j in np.argsort(E, kind="stable")[: opts.multistart]:
        _, f = _golden(G2, thetas[j] - step, thetas[j] + step, va, 1, opts.refine_tol)
        best = min(best, f)
    return 1.0 - best


def small_g_approx(G1: float, G2: float) -> float:
    """Small-capacity asymptote ``ln 3 * G1 * G2``."""
    return LN3 * G1 * G2


def large_g_approx(G1: float, G2: float) -> float:
    """Near-noiseless asymptote ``G1 + G2 - 1`` (may be negative)."""
    return G1 + G2 - 1.0


def circulant_lambda2(v_a) -> float:
    """Largest eigenvalue of ``A = sum_i s_i s_i^T`` on the zero-sum subspace.

    ``s_i`` is the cyclic shift of ``v_a`` by ``i``.  Computed from the
    matrix itself, so it serves as a check on the q = 3 closed form.
    """
    va = np.asarray(v_a, dtype=float)
    q = va.size
    S = np.array([np.roll(va, -i) for i in range(q)])
    A = S.T @ S
    # orthonormal basis of the complement of the all-ones vector
    Q, _ = np.linalg.qr(np.column_stack([np.ones(q), np.eye(q)[:, : q - 1]]))
    P = Q[:, 1:]
    return float(np.linalg.eigvalsh(P.T @ A @ P).max())


def small_g_coefficient(v_a) -> float:
    """``sum v_i^2 - sum v_i v_{i+1}`` for q = 3."""
    va = np.asarray(v_a, dtype=float)
    return float(np.dot(va, va) - np.dot(va, np.roll(va, -1)))


def small_g_fixed_va(v_a, G2: float) -> float:
    """Small-``G2`` limit of ``g`` with ``v_a`` held fixed (q = 3)."""
    return G2 * small_g_coefficient(v_a)


# --------------------------------------------------------------------------
# tables

@dataclass(frozen=True)
class GTable:
    """``g`` on the interior grid ``G = k * resolution``, ``k = 1..n-1``.

    ``values[i, j] = g(G[i], G[j])`` with the first index along ``G1``.
    ``d1`` and ``d2`` are central differences in ``G1`` computed on the grid
    padded with the exact edge values ``g(0, G2) = 0`` and ``g(1, G2) = G2``.
    """

    resolution: float
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    argmin_a: np.ndarray | None = None
    argmin_b: np.ndarray | None = None
    q: int = 3
    options: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> np.ndarray:
        n = self.values.shape[0] + 1
        return np.arange(1, n) / n

    @property
    def n(self) -> int:
        return self.values.shape[0] + 1

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid ``0..1`` (inclusive) and g on it, edges filled analytically."""
        n = self.n
        x = np.arange(n + 1) / n
        P = np.zeros((n + 1, n + 1))
        P[1:n, 1:n] = self.values
        P[n, :] = x
        P[:, n] = x
        return x, P

    def index(self, G: float) -> int:
        k = int(round(G * self.n))
        if abs(k / self.n - G) > 1e-9 or not 1 <= k <= self.n - 1:
            raise ValueError(f"{G} is not an interior grid point of resolution {self.resolution}")
        return k - 1

    def __call__(self, G1: float, G2: float) -> float:
        """Bilinear interpolation on the padded grid."""
        x, P = self.padded()
        return float(_bilinear(x, P, G1, G2))

    def diagonal(self) -> tuple[np.ndarray, np.ndarray]:
        x, P = self.padded()
        return x, np.diag(P).copy()


def _bilinear(x: np.ndarray, P: np.ndarray, a: float, b: float) -> float:
    n = x.size - 1
    a = min(max(a, 0.0), 1.0)
    b = min(max(b, 0.0), 1.0)
    i = min(int(a * n), n - 1)
    j = min(int(b * n), n - 1)
    ta = a * n - i
    tb = b * n - j
    return ((1 - ta) * (1 - tb) * P[i, j] + ta * (1 - tb) * P[i + 1, j]
            + (1 - ta) * tb * P[i, j + 1] + ta * tb * P[i + 1, j + 1])


def grid_derivatives(x: np.ndarray, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second central differences along axis 0 of a padded grid.

    Returns arrays for the interior rows ``1..n-1``.
    """
    h = x[1] - x[0]
    d1 = (P[2:, :] - P[:-2, :]) / (2 * h)
    d2 = (P[2:, :] - 2 * P[1:-1, :] + P[:-2, :]) / h ** 2
    return d1, d2


def _grid_count(resolution: float) -> int:
    n = int(round(1.0 / resolution))
    if n < 2 or abs(n * resolution - 1.0) > 1e-9:
        raise ValueError(f"resolution must divide 1 evenly, got {resolution}")
    return n


def table_diagnostics(values: np.ndarray, q: int = 3, qsc_gap: float = 1e-5) -> dict:
    """Measured slack of every table invariant."""
    n = values.shape[0] + 1
    G = np.arange(1, n) / n
    gq = np.array([[g_qsc(a, b, q) for b in G] for a in G])
    mins = np.minimum.outer(G, G)
    rows = np.diff(values, axis=0)
    cols = np.diff(values, axis=1)
    above = np.argwhere(values - gq > qsc_gap)
    return {
        "max_asymmetry": float(np.max(np.abs(values - values.T))),
        "max_monotonicity_violation": float(max(0.0, -rows.min(), -cols.min())),
        "max_above_min": float(np.max(values - mins)),
        "max_below_qsc": float(np.max(gq - values)),
        "max_above_qsc": float(np.max(values - gq)),
        "cells_above_qsc": [[round(float(G[i]), 12), round(float(G[j]), 12)] for i, j in above],
    }


def _solve_row(args):
    i, G, opts, q = args
    return [solve_g(G[i], G[j], opts, q) for j in range(i, G.size)]


def build_gtable(resolution: float = 0.01, opts: SolverOptions | None = None, q: int = 3,
                 workers: int = 1, progress=None) -> GTable:
    """Fill the interior grid with ``solve_g`` (upper triangle, then mirror).

    Rows are independent; with ``workers > 1`` they are farmed out to a
    process pool and reassembled by index, so the result does not depend on
    the worker count.
    """
    opts = opts or SolverOptions()
    n = _grid_count(resolution)
    G = np.arange(1, n) / n
    m = n - 1
    vals = np.zeros((m, m))
    arg_a = np.zeros((m, m, q))
    arg_b = np.zeros((m, m, q))
    jobs = [(i, G, opts, q) for i in range(m)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = pool.map(_solve_row, jobs)
    else:
        rows = map(_solve_row, jobs)
    for i, row in enumerate(rows):
        for j, sol in enumerate(row, start=i):
            vals[i, j] = vals[j, i] = sol.g
            arg_a[i, j] = sol.v_a.v
            arg_b[i, j] = sol.v_b.v
            # swapping the channels reverses the output index of the optimum
            arg_a[j, i] = sol.v_b.v
            arg_b[j, i] = sol.v_a.v
        if progress is not None:
            progress(i + 1, m)
    return table_from_values(resolution, vals, q, opts.to_dict(), arg_a, arg_b)


def table_from_values(resolution: float, vals: np.ndarray, q: int = 3, options: dict | None = None,
                      arg_a=None, arg_b=None) -> GTable:
    n = _grid_count(resolution)
    if vals.shape != (n - 1, n - 1):
        raise ValueError(f"expected a {(n - 1, n - 1)} table, got {vals.shape}")
    x = np.arange(n + 1) / n
    P = np.zeros((n + 1, n + 1))
    P[1:n, 1:n] = vals
    P[n, :] = x
    P[:, n] = x
    d1, d2 = grid_derivatives(x, P)
    return GTable(resolution, vals, d1[:, 1:n], d2[:, 1:n], arg_a, arg_b, q,
                  dict(options or {}), table_diagnostics(vals, q))


def compute_diagonal(step: float = 0.001, opts: SolverOptions | None = None,
                     q: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """``g(x, x)`` solved directly on ``x = 0, step, ..., 1``."""
    n = _grid_count(step)
    x = np.arange(n + 1) / n
    g = np.empty_like(x)
    g[0], g[-1] = 0.0, 1.0
    for k in range(1, n):
        g[k] = solve_g(x[k], x[k], opts, q).g
    return x, g


# --------------------------------------------------------------------------
# serialization

CSV_HEADER = "G1,G2,g,dg_dG1,d2g_dG1"


class GTableFormatError(ValueError):
    """Raised when a serialized table fails schema validation."""


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def write_gtable(table: GTable, csv_path, meta_path=None) -> None:
    G = table.grid
    lines = [CSV_HEADER]
    for i, a in enumerate(G):
        for j, b in enumerate(G):
            lines.append(",".join(_fmt(t) for t in (a, b, table.values[i, j],
                                                    table.d1[i, j], table.d2[i, j])))
    Path(csv_path).write_text("\n".join(lines) + "\n")
    if meta_path is not None:
        meta = {"resolution": table.resolution, "q": table.q, "rows": G.size ** 2,
                "optimizer": table.options, "diagnostics": table.diagnostics}
        Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_gtable(csv_path, q: int = 3) -> GTable:
    """Load and validate a table written by :func:`write_gtable`."""
    try:
        text = Path(csv_path).read_text()
    except OSError as exc:
        raise GTableFormatError(f"cannot read {csv_path}: {exc}") from None
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise GTableFormatError(f"bad header, expected {CSV_HEADER!r}")
    rows = lines[1:]
    m = int(round(math.sqrt(len(rows))))
    if m < 1 or m * m != len(rows):
        raise GTableFormatError(f"row count {len(rows)} is not a square grid")
    n = m + 1
    try:
        data = np.array([[float(t) for t in r.split(",")] for r in rows])
    except ValueError as exc:
        raise GTableFormatError(f"non-numeric entry: {exc}") from None
    if data.shape != (len(rows), 5) or not np.all(np.isfinite(data)):
        raise GTableFormatError("every row needs 5 finite numbers")
    G = np.arange(1, n) / n
    if (np.max(np.abs(data[:, 0] - np.repeat(G, m))) > 1e-9
            or np.max(np.abs(data[:, 1] - np.tile(G, m))) > 1e-9):
        raise GTableFormatError("grid coordinates are not the expected row-major grid")
    vals = data[:, 2].reshape(m, m)
    if np.any(vals < -1e-9) or np.any(vals > 1 + 1e-9):
        raise GTableFormatError("g values must lie in [0, 1]")
    t = table_from_values(1.0 / n, vals, q)
    return GTable(t.resolution, vals, data[:, 3].reshape(m, m), data[:, 4].reshape(m, m),
                  None, None, q, {}, t.diagnostics)


@dataclass(frozen=True)
class ConcavityProfile:
    G2: float
    x_star: float | None
    sign_changes: int
    violations: int


def concavity_profile(table: GTable, G2: float, tol: float = 1e-4) -> ConcavityProfile:
    """Locate the convex-to-concave switch of ``g(., G2)`` along one row.

    Entries with ``|d2| <= tol`` are treated as undecided and skipped.  A row
    obeying the single-crossing shape has at most one ``+ -> -`` change and no
    ``- -> +`` change; every other change counts as a violation.
    """
    j = table.index(G2)
    d2 = table.d2[:, j]
    G = table.grid
    signs = [(G[i], 1 if d2[i] > tol else -1) for i in range(d2.size) if abs(d2[i]) > tol]
    changes = 0
    violations = 0
    x_star = None
    for (x0, s0), (x1, s1) in zip(signs, signs[1:]):
        if s0 == s1:
            continue
        changes += 1
        if s0 > 0 > s1 and x_star is None:
            x_star = 0.5 * (x0 + x1)
        else:
            violations += 1
    if x_star is None and signs and signs[0][1] < 0:
        x_star = 0.0
    return ConcavityProfile(G2, x_star, changes, violations)
