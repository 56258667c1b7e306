"""Closed forms for the q-ary symmetric channel (QSC).

The minus transform of two QSCs is again a QSC, so the capacity map
``g_qsc`` has a closed form in terms of the q-ary entropy function.  This
module also carries the derivative of ``g_qsc`` and the Lagrange-multiplier
check showing that QSC posteriors are a critical point of the constrained
entropy minimization that defines ``g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelError


def _check_q(q: int) -> None:
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")


def _xlogy_q(x: float, y: float, q: int) -> float:
    return 0.0 if x == 0.0 else x * math.log(y) / math.log(q)


def h_q(p: float, q: int = 3) -> float:
    """q-ary entropy ``-(1-p) log_q(1-p) - p log_q(p/(q-1))``."""
    _check_q(q)
    if not -1e-15 <= p <= 1 + 1e-15:
        raise ValueError(f"p must be in [0, 1], got {p}")
    p = min(max(p, 0.0), 1.0)
    return -_xlogy_q(1.0 - p, 1.0 - p, q) - _xlogy_q(p, p / (q - 1), q)


def h_q_inv(u: float, q: int = 3, width: float = 1e-15) -> float:
    """Inverse of ``h_q`` on the branch ``[0, (q-1)/q]``, by bisection.

    Newton is avoided on purpose: ``h_q'`` vanishes at ``(q-1)/q``.
    """
    _check_q(q)
    if not -1e-12 <= u <= 1 + 1e-12:
        raise ValueError(f"u must be in [0, 1], got {u}")
    top = (q - 1) / q
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return top
    lo, hi = 0.0, top
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h_q(mid, q) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class QscChannel:
    p: float
    q: int = 3

    def __post_init__(self):
        _check_q(self.q)
        if not 0.0 <= self.p <= (self.q - 1) / self.q + 1e-15:
            raise ChannelError(f"QSC error probability must be in [0, (q-1)/q], got {self.p}")

    @property
    def capacity(self) -> float:
        return 1.0 - h_q(self.p, self.q)

    def posterior(self) -> np.ndarray:
        v = np.full(self.q, self.p / (self.q - 1))
        v[0] = 1.0 - self.p
        return v

    @classmethod
    def from_capacity(cls, G: float, q: int = 3) -> "QscChannel":
        return cls(h_q_inv(1.0 - G, q), q)


def compose_p(p_a: float, p_b: float, q: int = 3) -> float:
    """Error probability of the minus transform of QSC(p_a) and QSC(p_b)."""
    _check_q(q)
    p = p_a + p_b - q * (p_a * p_b) / (q - 1)
    return min(max(p, 0.0), (q - 1) / q)


def g_qsc(G1: float, G2: float, q: int = 3) -> float:
    """Capacity of the minus transform of two QSCs with capacities G1, G2."""
    for G in (G1, G2):
        if not -1e-12 <= G <= 1 + 1e-12:
            raise ValueError(f"capacities must be in [0, 1], got {G}")
    pt = compose_p(h_q_inv(1.0 - G1, q), h_q_inv(1.0 - G2, q), q)
    return 1.0 - h_q(pt, q)


def _h_prime(p: float, q: int) -> float:
    # d h_q / dp = log_q((q-1)(1/p - 1))
    return math.log((q - 1) * (1.0 / p - 1.0)) / math.log(q)


def dgqsc_dG1(G1: float, G2: float, q: int = 3) -> float:
    """Closed-form partial derivative of ``g_qsc`` in its first argument."""
    if not (0.0 < G1 < 1.0 and 0.0 < G2 < 1.0):
        raise ValueError(f"dgqsc_dG1 needs G1, G2 in (0, 1), got ({G1}, {G2})")
    y = h_q_inv(1.0 - G1, q)
    v = h_q_inv(1.0 - G2, q)
    z = y * (1.0 - v) + v * (1.0 - y / (q - 1))
    return _h_prime(z, q) * (1.0 - q * v / (q - 1)) / _h_prime(y, q)


def eps_l_qsc(x: float, q: int = 3) -> float:
    """Minimal one-step capacity drop ``x - g_qsc(x, x)`` in closed form."""
    if not -1e-12 <= x <= 1 + 1e-12:
        raise ValueError(f"x must be in [0, 1], got {x}")
    y = h_q_inv(1.0 - x, q)
    return x + h_q(y * (2.0 - q / (q - 1) * y), q) - 1.0


@dataclass(frozen=True)
class QscStationarity:
    """Multipliers of the QSC critical point and the largest gradient entry."""

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    residual: float
    grad_a: tuple[float, ...]
    grad_b: tuple[float, ...]


def _log_q(x: float, q: int) -> float:
    return math.log(x) / math.log(q)


def _multipliers(p_self: float, p_other: float, p_t: float, q: int) -> tuple[float, float]:
    """(lambda_entropy, lambda_sum) for the side with error probability ``p_self``."""
    lnq = math.log(q)
    A = _log_q(p_self / (q - 1), q)
    B = _log_q(1.0 - p_self, q)
    lam = ((1.0 - q * p_other / (q - 1))
           * _log_q(p_t / ((q - 1) * (1.0 - p_t)), q)
           / _log_q(p_self / ((q - 1) * (1.0 - p_self)), q))
    T1 = (p_other / (q - 1)) * _log_q(1.0 - p_t, q) + (1.0 - p_other / (q - 1)) * _log_q(p_t / (q - 1), q)
    T0 = (1.0 - p_other) * _log_q(1.0 - p_t, q) + p_other * _log_q(p_t / (q - 1), q)
    mu = T1 * B / (A - B) - A * T0 / (A - B) + (lam - 1.0) / lnq
    return lam, mu


def lagrangian_gradient(va: np.ndarray, vb: np.ndarray, lam1: float, lam2: float,
                        lam3: float, lam4: float) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the Lagrangian in ``v_a`` and ``v_b``.

    Uses ``v_t[i] = sum_j v_a[j] v_b[j - i]`` and base-q logarithms, with a
    ``1/ln q`` additive term on both multiplier brackets.
    """
    va = np.asarray(va, dtype=float)
    vb = np.asarray(vb, dtype=float)
    q = va.size
    lnq = math.log(q)
    i = np.arange(q)
    vt = np.array([np.dot(va, vb[(i - k) % q]) for k in range(q)])
    logt = np.log(vt) / lnq
    grad_a = np.empty(q)
    grad_b = np.empty(q)
    for j in range(q):
        grad_a[j] = (-1.0 / lnq - np.dot(vb[(j - i) % q], logt)
                     + lam1 * (math.log(va[j]) / lnq + 1.0 / lnq) - lam3)
        grad_b[j] = (-1.0 / lnq - np.dot(va[(j + i) % q], logt)
                     + lam2 * (math.log(vb[j]) / lnq + 1.0 / lnq) - lam4)
    return grad_a, grad_b


def qsc_stationarity(p_a: float, p_b: float, q: int = 3) -> QscStationarity:
    """Evaluate the closed-form multipliers at a QSC pair and the residual."""
    top = (q - 1) / q
    for p in (p_a, p_b):
        if not 0.0 < p < top:
            raise ValueError(f"stationarity check needs p in (0, (q-1)/q), got {p}")
    p_t = compose_p(p_a, p_b, q)
    lam1, lam3 = _multipliers(p_a, p_b, p_t, q)
    lam2, lam4 = _multipliers(p_b, p_a, p_t, q)
    va = QscChannel(p_a, q).posterior()
    vb = QscChannel(p_b, q).posterior()
    ga, gb = lagrangian_gradient(va, vb, lam1, lam2, lam3, lam4)
    res = float(max(np.max(np.abs(ga)), np.max(np.abs(gb))))
    return QscStationarity(lam1, lam2, lam3, lam4, res, tuple(ga), tuple(gb))
