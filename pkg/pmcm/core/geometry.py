"""
Sphere and ball measures, spherical caps and Gauss-Legendre rules
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import beta, betainc, gamma


@lru_cache(maxsize=None)
def unit_sphere_area(n: int) -> float:
    """(n-1)-dimensional area n*omega_n of the unit sphere in R^n"""
    return float(2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0))


@lru_cache(maxsize=None)
def unit_ball_volume(n: int) -> float:
    """Volume omega_n of the unit ball in R^n"""
    return float(np.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0))


def sphere_area(n: int, r):
    return unit_sphere_area(n) * np.asarray(r, dtype=float) ** (n - 1)


@lru_cache(maxsize=None)
def gauss_legendre(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], cached and read-only"""
    nodes, weights = leggauss(degree)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def composite_rule(lo: float, hi: float, panels: int, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss-Legendre rule on [lo, hi]

    Args:
        lo: Left end
        hi: Right end
        panels: Number of equal panels
        degree: Points per panel

    Returns:
        Flattened nodes and weights
    """
    nodes, weights = gauss_legendre(degree)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def segment_rule(edges: np.ndarray, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on every segment of a sorted edge array, shape (segments, degree)"""
    nodes, weights = gauss_legendre(degree)
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return mid[:, None] + half[:, None] * nodes[None, :], half[:, None] * weights[None, :]


def _sin_power_integral(n: int, alpha: np.ndarray) -> np.ndarray:
    # int_0^alpha sin^(n-2)(t) dt through the regularized incomplete beta function
    a, b = (n - 1) / 2.0, 0.5
    full = beta(a, b)
    half_value = 0.5 * full * betainc(a, b, np.sin(alpha) ** 2)
    return np.where(alpha <= 0.5 * np.pi, half_value, full - half_value)


def cap_area(n: int, sphere_radius, center_distance: float, ball_radius: float) -> np.ndarray:
    """
    Area of the part of the sphere |y| = R lying inside the ball B_r(x), |x| = d

    Args:
        n: Ambient dimension
        sphere_radius: R, scalar or array
        center_distance: d = |x| > 0
        ball_radius: r > 0

    Returns:
        H^(n-1) measure of the spherical cap, same shape as sphere_radius
    """
    R = np.asarray(sphere_radius, dtype=float)
    d, r = float(center_distance), float(ball_radius)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_alpha = (R ** 2 + d ** 2 - r ** 2) / (2.0 * R * d)
    cos_alpha = np.where(np.isfinite(cos_alpha), cos_alpha, 1.0)
    alpha = np.arccos(np.clip(cos_alpha, -1.0, 1.0))
    lower_sphere = unit_sphere_area(n - 1) if n > 2 else 2.0
    area = lower_sphere * R ** (n - 1) * _sin_power_integral(n, alpha)
    area = np.where(cos_alpha >= 1.0, 0.0, area)
    return np.where(cos_alpha <= -1.0, unit_sphere_area(n) * R ** (n - 1), area)
