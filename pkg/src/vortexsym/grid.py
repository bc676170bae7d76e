"""Logarithmic radial grid ``v = log r`` shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid in ``v = log r`` with trapezoid weights for dv, dr and r dr."""

    v_min: float
    v_max: float
    n: int
    v: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    w_v: np.ndarray = field(repr=False)
    w_dr: np.ndarray = field(repr=False)
    w_rdr: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return (self.v_max - self.v_min) / (self.n - 1)

    def index_of(self, v: float) -> int:
        """Nearest node index to ``v``."""
        return int(np.clip(round((v - self.v_min) / self.h), 0, self.n - 1))

    def integrate(self, f, measure: str = "rdr"):
        weights = {"dv": self.w_v, "dr": self.w_dr, "rdr": self.w_rdr}[measure]
        return np.sum(np.asarray(f) * weights, axis=-1)

    def subgrid(self, stride: int) -> "RadialGrid":
        """Every ``stride``-th node; requires ``(n - 1) % stride == 0``."""
        if (self.n - 1) % stride:
            raise ValueError(f"stride {stride} does not divide n-1={self.n - 1}")
        return make_grid(self.v_min, self.v_max, (self.n - 1) // stride + 1)


def make_grid(v_min: float = -9.0, v_max: float = 9.0, n: int = 4097) -> RadialGrid:
    if n < 33:
        raise ValueError(f"grid needs n >= 33 nodes, got {n}")
    if not v_min < v_max:
        raise ValueError(f"need v_min < v_max, got {v_min} >= {v_max}")
    if not v_min < 0.0 < v_max:
        raise ValueError("grid must straddle v = 0 (r = 1)")
    v = np.linspace(v_min, v_max, n)
    h = (v_max - v_min) / (n - 1)
    w_v = np.full(n, h)
    w_v[0] = w_v[-1] = h / 2
    r = np.exp(v)
    for a in (v, r, w_v):
        a.setflags(write=False)
    w_dr = w_v * r
    w_rdr = w_v * r * r
    w_dr.setflags(write=False)
    w_rdr.setflags(write=False)
    return RadialGrid(float(v_min), float(v_max), int(n), v, r, w_v, w_dr, w_rdr)


def dvw(v: float, w: float) -> float:
    """Length of ``[min(v,w), max(v,w)] ∩ [min(w,0), 0]``."""
    lo, hi = min(v, w), max(v, w)
    a, b = min(w, 0.0), 0.0
    return max(0.0, min(hi, b) - max(lo, a))
