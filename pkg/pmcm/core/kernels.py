"""
Standard mollifier rho(t) = c*exp(-1/(1-t^2)) and its cumulative integral
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.optimize import bisect

from pmcm.core.geometry import composite_rule, gauss_legendre

# Panels of the composite rule that both normalizes the bump and lays out
# the kernel pieces of mollified measures, so their masses agree to rounding.
BUMP_PANELS = 16
BUMP_DEGREE = 8
_TABLE_PANELS = 2048


def bump(t) -> np.ndarray:
    """Unnormalized bump exp(-1/(1-t^2)) on (-1, 1), zero outside"""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    safe = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


@lru_cache(maxsize=None)
def bump_normalizer() -> float:
    """Integral of the bump under the BUMP_PANELS composite rule"""
    x, w = composite_rule(-1.0, 1.0, BUMP_PANELS, BUMP_DEGREE)
    return float(np.sum(w * bump(x)))


def mollifier(t) -> np.ndarray:
    return bump(t) / bump_normalizer()


@lru_cache(maxsize=None)
def _cumulative_table() -> Tuple[np.ndarray, np.ndarray, float]:
    edges = np.linspace(-1.0, 1.0, _TABLE_PANELS + 1)
    x, w = composite_rule(-1.0, 1.0, _TABLE_PANELS, BUMP_DEGREE)
    panel_mass = (w * bump(x)).reshape(_TABLE_PANELS, BUMP_DEGREE).sum(axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(panel_mass)])
    total = float(cumulative[-1])
    edges.setflags(write=False)
    cumulative.setflags(write=False)
    return edges, cumulative, total


def cumulative_bump(t) -> np.ndarray:
    """Phi(t) = int_{-1}^t rho, with Phi(-1) = 0, Phi(0) = 1/2, Phi(1) = 1"""
    edges, cumulative, total = _cumulative_table()
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    width = edges[1] - edges[0]
    k = np.clip(np.floor((t + 1.0) / width).astype(int), 0, _TABLE_PANELS - 1)
    left = np.asarray(edges[k])
    nodes, weights = gauss_legendre(BUMP_DEGREE)
    half = np.asarray(0.5 * (t - left))
    x = left[..., None] + half[..., None] * (nodes + 1.0)
    partial = np.sum(weights * bump(x), axis=-1) * half
    return (cumulative[k] + partial) / total


def bump_density(t) -> np.ndarray:
    """Derivative of cumulative_bump, normalized with the same table"""
    return bump(t) / _cumulative_table()[2]


def inverse_cumulative_bump(p: float, xtol: float = 1e-14) -> float:
    """Solve Phi(tau) = p on [-1, 1] by monotone bisection"""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0:
        return -1.0
    if p == 1.0:
        return 1.0
    if p == 0.5:
        return 0.0
    return float(bisect(lambda t: float(cumulative_bump(t)) - p, -1.0, 1.0, xtol=xtol, maxiter=200))


def smooth_step(s) -> np.ndarray:
    """C-infinity ramp: 0 for s <= 0, 1 for s >= 1"""
    return cumulative_bump(2.0 * np.asarray(s, dtype=float) - 1.0)


def smooth_step_derivative(s) -> np.ndarray:
    return 2.0 * bump_density(2.0 * np.asarray(s, dtype=float) - 1.0)
