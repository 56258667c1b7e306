"""Supremum recursion for the polarization potential and the scaling exponent.

Starting from a potential ``f_0`` that vanishes only at 0 and 1,

    f_k(x) = sup_{eps_l(x) <= e <= min(x, 1-x)} (f_{k-1}(x+e) + f_{k-1}(x-e)) / 2.

On a uniform grid with linear interpolation and ``x`` on a node, both
``x + e`` and ``x - e`` cross nodes at the same values of ``e``, so the
objective is piecewise linear in ``e`` with kinks only at node offsets.  The
supremum is therefore attained at the lower endpoint ``eps_l(x)`` or at a
node offset, and scanning those candidates is exact for the interpolant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .curve import ScalarCurve


@dataclass(frozen=True)
class F0Spec:
    """``f_0(x) = (c x^2 + 1) x^a (1 - x)^b``."""

    c: float = 0.26
    a: float = 0.8
    b: float = 0.6

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.c <= -1:
            raise ValueError("need a > 0, b > 0 and c > -1 so that f0 > 0 on (0, 1)")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, 1.0)
        return (self.c * xc ** 2 + 1.0) * xc ** self.a * (1.0 - xc) ** self.b


@njit(cache=True)
def _interp_index(f, s):
    j = int(math.floor(s))
    if j >= f.size - 1:
        return f[f.size - 1]
    if j < 0:
        return f[0]
    t = s - j
    return (1.0 - t) * f[j] + t * f[j + 1]


@njit(cache=True)
def _fk_step(f, lo_eps, h):
    n = f.size
    out = np.empty(n)
    arg = np.empty(n)
    for i in range(n):
        dmax = min(i, n - 1 - i)
        dl = lo_eps[i] / h
        if dl > dmax:
            dl = dmax
        best = 0.5 * (_interp_index(f, i + dl) + _interp_index(f, i - dl))
        best_e = dl * h
        d0 = int(math.ceil(dl))
        for d in range(d0, dmax + 1):
            v = 0.5 * (f[i + d] + f[i - d])
            if v > best:
                best = v
                best_e = d * h
        out[i] = best
        arg[i] = best_e
    return out, arg


class RecursionContractError(ValueError):
    """Raised when the lower step bound exceeds the upper one."""


@dataclass(frozen=True)
class FkResult:
    x: np.ndarray
    f: np.ndarray          # f[k] is f_k on the grid, k = 0..K
    eps_argmax: np.ndarray  # eps_argmax[k-1] is the maximizing step for f_k

    def curve(self, k: int) -> ScalarCurve:
        return ScalarCurve(self.x, self.f[k])


def fk_recursion(f0: F0Spec, eps_l: ScalarCurve, k: int, grid_n: int = 1001) -> FkResult:
    """Iterate the supremum recursion ``k`` times on ``grid_n`` uniform points."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if grid_n < 1000:
        raise ValueError("grid_n must be >= 1000")
    x = np.linspace(0.0, 1.0, grid_n)
    h = x[1] - x[0]
    lo = np.asarray(eps_l(x), dtype=float)
    hi = np.minimum(x, 1.0 - x)
    excess = lo - hi
    if np.any(excess > 1e-9):
        i = int(np.argmax(excess))
        raise RecursionContractError(
            f"eps_l({x[i]:.6g}) = {lo[i]:.6g} exceeds min(x, 1-x) = {hi[i]:.6g}")
    lo = np.clip(lo, 0.0, hi)
    f = np.empty((k + 1, grid_n))
    arg = np.empty((k, grid_n))
    f[0] = f0(x)
    f[0, 0] = f[0, -1] = 0.0
    for it in range(1, k + 1):
        f[it], arg[it - 1] = _fk_step(f[it - 1], lo, h)
    return FkResult(x, f, arg)


def ratio_sup(res: FkResult, f0: F0Spec, k: int, lo: float = 0.001, hi: float = 0.999) -> float:
    """``L_k = sup f_k / f_0`` over ``[lo, hi]``."""
    m = (res.x >= lo - 1e-12) & (res.x <= hi + 1e-12)
    return float(np.max(res.f[k][m] / f0(res.x[m])))


def ratio_curve(res: FkResult, f0: F0Spec, k: int, lo: float = 0.001,
                hi: float = 0.999) -> ScalarCurve:
    m = (res.x >= lo - 1e-12) & (res.x <= hi + 1e-12)
    return ScalarCurve(res.x[m], res.f[k][m] / f0(res.x[m]))


@dataclass(frozen=True)
class ScalingReport:
    L1: float
    Lk_root: float
    k: int
    rho: float
    exponent: float
    grid_n: int
    f0: F0Spec
    per_k: dict = field(default_factory=dict)  # k -> (1/k) log2 L_k
    result: FkResult | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "L1": self.L1,
            "log2_L1": math.log2(self.L1),
            "Lk_root": self.Lk_root,
            "log2_Lk_root": math.log2(self.Lk_root),
            "k": self.k,
            "rho": self.rho,
            "exponent": self.exponent,
            "grid_n": self.grid_n,
            "f0": {"c": self.f0.c, "a": self.f0.a, "b": self.f0.b},
            "per_k": {str(key): val for key, val in sorted(self.per_k.items())},
        }


def scaling_report(eps_l: ScalarCurve, f0: F0Spec | None = None, k: int = 100,
                   grid_n: int = 1001, ks=(1, 2, 5, 10, 20, 50, 100)) -> ScalingReport:
    f0 = f0 or F0Spec()
    res = fk_recursion(f0, eps_l, k, grid_n)
    per_k = {kk: math.log2(ratio_sup(res, f0, kk)) / kk for kk in sorted(set(ks) | {1, k}) if kk <= k}
    L1 = ratio_sup(res, f0, 1)
    Lk_root = ratio_sup(res, f0, k) ** (1.0 / k)
    rho = -math.log2(Lk_root)
    if rho <= 0:
        raise ValueError(f"no contraction: rho = {rho}")
    return ScalingReport(L1, Lk_root, k, rho, 1.0 + 1.0 / rho, grid_n, f0, per_k, res)


def expected_f0_bound(report: ScalingReport, n: int, k: int, I_W: float) -> float:
    """Upper bound on ``E[f_0(I_n)]`` after ``n`` polarization levels."""
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    return ((report.L1 / report.Lk_root) ** (k - 1) * report.Lk_root ** n
            * float(report.f0(I_W)))


def jn_tail_bound(n: int, delta: float, alpha1: float, rho: float) -> float:
    """Bound on ``P(min(I_n, 1 - I_n) > delta)``."""
    if not 0 < delta < 1.0 / 3.0:
        raise ValueError(f"delta must be in (0, 1/3), got {delta}")
    if alpha1 <= 0:
        raise ValueError("alpha1 must be > 0")
    return min(1.0, alpha1 / (2.0 * delta) * 2.0 ** (-rho * n))


class InfeasibleRateError(ValueError):
    pass


def blocklength(I_W: float, R: float, beta: float, exponent: float, q: int = 3,
                raw: bool = False):
    """Sufficient blocklength ``beta / (I_W - R)^exponent``.

    Rounded up to the next power of ``q`` unless ``raw`` is set.
    """
    if not 0 < I_W <= 1:
        raise ValueError(f"I_W must be in (0, 1], got {I_W}")
    if R >= I_W:
        raise InfeasibleRateError(f"rate {R} is not below capacity {I_W}")
    if R < 0 or beta <= 0:
        raise ValueError("need R >= 0 and beta > 0")
    N = beta / (I_W - R) ** exponent
    if raw:
        return N
    n = 0
    while q ** n < N * (1 - 1e-12):
        n += 1
    return q ** n
