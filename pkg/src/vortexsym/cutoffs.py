"""Smooth cutoff functions built from the standard ``exp(-1/s)`` transition.

``smoothstep(s)`` rises from 0 (s <= 0) to 1 (s >= 1); all derivatives vanish
at both ends. The derivative helpers are exact, not finite differences.
"""

from __future__ import annotations

import numpy as np


def smoothstep(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    m = (s > 0.0) & (s < 1.0)
    sm = s[m]
    # logistic form avoids 0/0 when both exponentials underflow
    z = np.clip(1.0 / sm - 1.0 / (1.0 - sm), -700.0, 700.0)
    out[m] = 1.0 / (1.0 + np.exp(z))
    return out


def smoothstep_d1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > 0.0) & (s < 1.0)
    sm = s[m]
    x = smoothstep(sm)
    out[m] = x * (1 - x) * (1 / sm**2 + 1 / (1 - sm) ** 2)
    return out


def smoothstep_d2(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > 0.0) & (s < 1.0)
    sm = s[m]
    x = smoothstep(sm)
    q = 1 / sm**2 + 1 / (1 - sm) ** 2
    dq = -2 / sm**3 + 2 / (1 - sm) ** 3
    out[m] = x * (1 - x) * (1 - 2 * x) * q * q + x * (1 - x) * dq
    return out


def c2_smoothstep(s):
    """Quintic C^2 smoothstep; an alternative window for cutoff-independence checks."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s)


def phi0(v, deriv: int = 0):
    """Cutoff equal to 1 on (-inf, -2] and 0 on [-1, inf)."""
    s = -1.0 - np.asarray(v, dtype=float)
    if deriv == 0:
        return smoothstep(s)
    if deriv == 1:
        return -smoothstep_d1(s)
    if deriv == 2:
        return smoothstep_d2(s)
    raise ValueError("deriv must be 0, 1 or 2")


def phi_star(u, step=smoothstep):
    """Even window equal to 1 on [-2, 2] and supported in (-4, 4)."""
    a = np.abs(np.asarray(u, dtype=float))
    return step((4.0 - a) / 2.0)


def varrho(r, deriv: int = 0, r_in: float = 0.125, r_out: float = 4.0):
    """Radial cutoff equal to 1 on [0, r_in], vanishing for r >= r_out."""
    L = r_out - r_in
    s = (np.asarray(r, dtype=float) - r_in) / L
    if deriv == 0:
        return 1.0 - smoothstep(s)
    if deriv == 1:
        return -smoothstep_d1(s) / L
    if deriv == 2:
        return -smoothstep_d2(s) / L**2
    raise ValueError("deriv must be 0, 1 or 2")
