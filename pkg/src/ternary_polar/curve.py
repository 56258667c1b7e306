from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalarCurve:
    """A sampled function on [0, 1], evaluated by linear interpolation."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1 or x.size < 2:
            raise ValueError("x and y must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __call__(self, t):
        return np.interp(t, self.x, self.y)

    def resample(self, n: int) -> "ScalarCurve":
        """Linear resampling onto ``n`` uniform points spanning the same range."""
        t = np.linspace(self.x[0], self.x[-1], n)
        return ScalarCurve(t, self(t))
