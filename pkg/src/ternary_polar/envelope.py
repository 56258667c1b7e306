"""Concave upper bound ``g*`` of ``g`` and the minimal polarization steps.

``g*(G1, G2) = max_{x1 >= G1, x2 >= G2} G1 G2 / (x1 x2) * g(x1, x2)``
is evaluated on the table grid (edges ``G = 0`` and ``G = 1`` included) by a
2-D suffix maximum of ``g / (x1 x2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .channel import Channel, capacity, minus_transform, plus_transform
from .curve import ScalarCurve
from .gfunc import GTable, _bilinear, grid_derivatives

FINE_STEP = 0.001


def _suffix_max(R: np.ndarray) -> np.ndarray:
    S = R.copy()
    S = np.maximum.accumulate(S[::-1, :], axis=0)[::-1, :]
    S = np.maximum.accumulate(S[:, ::-1], axis=1)[:, ::-1]
    return S


@dataclass(frozen=True)
class EnvelopeTable:
    base: GTable
    gstar_padded: np.ndarray
    eps_l: ScalarCurve
    eps_l_star: ScalarCurve

    @property
    def gstar(self) -> np.ndarray:
        n = self.base.n
        return self.gstar_padded[1:n, 1:n]

    def __call__(self, G1: float, G2: float) -> float:
        x = np.arange(self.base.n + 1) / self.base.n
        return float(_bilinear(x, self.gstar_padded, G1, G2))

    def d2_gstar(self) -> np.ndarray:
        """Second differences of g* along G1 at the interior cells."""
        n = self.base.n
        x = np.arange(n + 1) / n
        _, d2 = grid_derivatives(x, self.gstar_padded)
        return d2[:, 1:n]


def _diag_curve(x: np.ndarray, diag: np.ndarray, step: float) -> ScalarCurve:
    eps = x - diag
    eps[0] = eps[-1] = 0.0
    curve = ScalarCurve(x, eps)
    if abs(x[1] - x[0] - step) > 1e-12:
        curve = curve.resample(int(round(1.0 / step)) + 1)
    return curve


def build_gstar(table: GTable, diagonal: tuple[np.ndarray, np.ndarray] | None = None,
                fine_step: float = FINE_STEP) -> EnvelopeTable:
    """Envelope of ``table`` plus the two step curves on a fine diagonal.

    ``diagonal`` holds ``(x, g(x, x))`` solved directly on a fine grid.  The
    step curves near ``x = 1`` are dominated by the slope of ``g(x, x)``
    there, which linear interpolation of the coarse table gets wrong, so the
    directly solved diagonal is preferred.  Without it the coarse diagonal
    is interpolated onto ``fine_step``.
    """
    x, P = table.padded()
    R = np.zeros_like(P)
    R[1:, 1:] = P[1:, 1:] / np.outer(x[1:], x[1:])
    S = _suffix_max(R)
    # the x1 = G1, x2 = G2 term is g itself; take it verbatim so rounding in
    # the rescaling cannot put g* below g
    gstar = np.maximum(np.outer(x, x) * S, P)
    gstar[0, :] = gstar[:, 0] = 0.0
    if diagonal is None:
        eps_l = _diag_curve(x, np.diag(P).copy(), fine_step)
        eps_l_star = _diag_curve(x, np.diag(gstar).copy(), fine_step)
        return EnvelopeTable(table, gstar, eps_l, eps_l_star)
    xf, gf = (np.asarray(t, dtype=float) for t in diagonal)
    eps_l = _diag_curve(xf, gf.copy(), xf[1] - xf[0])
    # g*(x, x) restricted to the sampled points: table cells and fine diagonal
    n = table.n
    k = np.minimum(np.ceil(xf * n - 1e-9).astype(int), n)
    from_table = xf ** 2 * S[k, k]
    rf = np.zeros_like(xf)
    rf[1:] = gf[1:] / xf[1:] ** 2
    from_diag = xf ** 2 * np.maximum.accumulate(rf[::-1])[::-1]
    gs_diag = np.maximum.reduce([gf, from_table, from_diag])
    eps_l_star = _diag_curve(xf, gs_diag, xf[1] - xf[0])
    return EnvelopeTable(table, gstar, eps_l, eps_l_star)


def eps_l_curve(table: GTable, diagonal=None, fine_step: float = FINE_STEP) -> ScalarCurve:
    """``x - g(x, x)``, from a solved fine diagonal or the interpolated table."""
    if diagonal is not None:
        xf, gf = (np.asarray(t, dtype=float) for t in diagonal)
        return _diag_curve(xf, gf.copy(), xf[1] - xf[0])
    x, P = table.padded()
    return _diag_curve(x, np.diag(P).copy(), fine_step)


def eps_l(env: EnvelopeTable, x):
    return env.eps_l(x)


def eps_l_star(env: EnvelopeTable, x):
    return env.eps_l_star(x)


@dataclass(frozen=True)
class G1Star:
    """Tangent point of the hull from the origin along one row ``G2``.

    ``value`` is the root of ``x dg/dx - g`` in the concave part of the row
    (0 when the row has no convex part), ``argmax`` the grid maximizer of
    ``g(x, G2) / x``.  ``ok`` is False when the sign pattern contradicts a
    single convex-to-concave switch.
    """

    G2: float
    value: float
    argmax: float
    sign_changes: int
    ok: bool


def find_g1_star(table: GTable, G2: float) -> G1Star:
    j = table.index(G2) + 1
    x, P = table.padded()
    row = P[:, j]
    d1, d2 = grid_derivatives(x, P)
    d1, d2 = d1[:, j], d2[:, j]
    xi = x[1:-1]
    f = xi * d1 - row[1:-1]
    ratios = row[1:] / x[1:]
    argmax = float(x[1 + int(np.argmax(ratios))])
    # f(0) = 0 and f -> -G2 at x = 1
    xs = np.concatenate([xi, [1.0]])
    fs = np.concatenate([f, [-G2]])
    down = [k for k in range(xs.size - 1) if fs[k] > 0 >= fs[k + 1]]
    up = [k for k in range(xs.size - 1) if fs[k] <= 0 < fs[k + 1]]
    if not down:
        ok = not up and np.all(fs < 0)
        return G1Star(G2, 0.0, argmax, 0, bool(ok))
    k = down[0]
    root = brentq(lambda t: np.interp(t, xs, fs), xs[k], xs[k + 1], xtol=1e-14)
    ok = len(down) == 1 and not up and d2[min(k + 1, d2.size - 1)] < 0
    return G1Star(G2, float(root), argmax, len(down) + len(up), bool(ok))


def row_hull(table: GTable, G2: float) -> np.ndarray:
    """``max_{x >= G1} (G1 / x) g(x, G2)`` at every interior grid ``G1``."""
    j = table.index(G2) + 1
    x, P = table.padded()
    ratios = P[1:, j] / x[1:]
    suffix = np.maximum.accumulate(ratios[::-1])[::-1]
    return x[1:-1] * suffix[:-1]


def step_inequality_slack(W: Channel, env: EnvelopeTable) -> tuple[float, float]:
    """Slack of ``I(W-) + e*(I) <= I <= I(W+) - e*(I)``; both >= 0 when it holds."""
    I = capacity(W)
    e = float(env.eps_l_star(I))
    lo = I - capacity(minus_transform(W, W)) - e
    hi = capacity(plus_transform(W, W)) - I - e
    return lo, hi
