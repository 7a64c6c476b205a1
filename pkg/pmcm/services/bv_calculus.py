"""
Total variation, area functional, representatives and truncation of radial profiles
"""

from typing import Union

import numpy as np

from pmcm.core.errors import InvalidInputError
from pmcm.models.profile import GridFunction2D, JumpRecord, RadialProfile


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"lambda must lie in [0, 1], got {lam}")


def _check_order(u_plus: float, u_minus: float) -> None:
    if u_plus < u_minus:
        raise InvalidInputError(f"expected u_plus >= u_minus, got ({u_plus}, {u_minus})")


def jump_mass(p: RadialProfile) -> float:
    """sum_j (u+ - u-) r_j^(n-1), without the n*omega_n factor"""
    n = p.domain.n
    return float(sum(j.height * j.radius ** (n - 1) for j in p.jumps))


def total_variation(p: Union[RadialProfile, GridFunction2D]) -> float:
    """
    Total variation of the radially symmetric extension of a profile

    The volume weight r^(n-1) is taken at cell midpoints. A GridFunction2D
    gets the isotropic forward-difference variation.
    """
    if isinstance(p, GridFunction2D):
        gx, gy = p.forward_gradient()
        return float(np.sum(np.hypot(gx, gy)) * p.h ** 2)
    n = p.domain.n
    cells = np.sum(np.abs(p.increments) * p.midpoints ** (n - 1))
    return p.domain.sphere_coefficient * float(cells + jump_mass(p))


def area_functional(p: Union[RadialProfile, GridFunction2D]) -> float:
    """
    Relaxed graph area over the annulus

    Absolutely continuous part sqrt(1 + u'^2) per cell plus the jump mass,
    which is the same singular part that total_variation counts.
    """
    if isinstance(p, GridFunction2D):
        gx, gy = p.forward_gradient()
        return float(np.sum(np.sqrt(1.0 + gx ** 2 + gy ** 2)) * p.h ** 2)
    n = p.domain.n
    cells = np.sum(np.hypot(p.widths, p.increments) * p.midpoints ** (n - 1))
    return p.domain.sphere_coefficient * float(cells + jump_mass(p))


def profile_volume(p: RadialProfile) -> float:
    """|Omega| with the midpoint weight used by area_functional"""
    return p.domain.sphere_coefficient * float(np.sum(p.widths * p.midpoints ** (p.domain.n - 1)))


def lambda_representative(u_plus: float, u_minus: float, lam: float) -> float:
    """u^lambda = lambda u+ + (1 - lambda) u-; lambda = 1/2 gives u*"""
    _check_lambda(lam)
    _check_order(u_plus, u_minus)
    return lam * u_plus + (1.0 - lam) * u_minus


def m_bound(u_plus: float, u_minus: float, lam: float) -> float:
    """Bound M[u, lambda] on |T_k(u)^lambda| valid for every truncation level k"""
    _check_lambda(lam)
    _check_order(u_plus, u_minus)
    convex = lam * abs(u_plus) + (1.0 - lam) * abs(u_minus)
    centered = abs(0.5 * (u_plus + u_minus)) + abs(lam - 0.5) * (abs(u_plus) + abs(u_minus))
    return min(convex, centered)


def truncate_value(value, k: float):
    return np.clip(value, -k, k)


def truncate(p: RadialProfile, k: float) -> RadialProfile:
    """
    Apply T_k(s) = max(-k, min(k, s)) to node values and to both jump traces

    Jumps whose truncated traces coincide disappear; the others keep their
    orientation.
    """
    if not k > 0.0:
        raise InvalidInputError(f"truncation level must be positive, got {k}")
    values = truncate_value(p.values, k)
    jumps = []
    for jump in p.jumps:
        lower, upper = float(truncate_value(jump.u_minus, k)), float(truncate_value(jump.u_plus, k))
        if upper > lower:
            jumps.append(JumpRecord(jump.radius, lower, upper, jump.orientation))
    return RadialProfile(p.domain, p.grid, values, tuple(jumps))


def truncated_representative(jump: JumpRecord, k: float, lam: float) -> float:
    """T_k(u)^lambda at a jump; traces collapse to a single value when the jump is truncated away"""
    return lambda_representative(float(truncate_value(jump.u_plus, k)), float(truncate_value(jump.u_minus, k)), lam)


def l1_distance(p: RadialProfile, q: RadialProfile, samples_per_cell: int = 4) -> float:
    """
    n omega_n int |p - q| r^(n-1) dr by the midpoint rule on the merged grids

    Every merged cell is split into samples_per_cell parts, so no sample
    lands on a jump radius.
    """
    if p.domain != q.domain:
        raise InvalidInputError("profiles live on different domains")
    grid = np.union1d(p.grid, q.grid)
    parts = np.linspace(0.0, 1.0, samples_per_cell + 1)
    lo, width = grid[:-1, None], np.diff(grid)[:, None]
    points = (lo + width * 0.5 * (parts[:-1] + parts[1:])).ravel()
    weights = np.repeat(np.diff(grid) / samples_per_cell, samples_per_cell)
    diff = np.abs(p.evaluate(points) - q.evaluate(points))
    return p.domain.sphere_coefficient * float(np.sum(diff * weights * points ** (p.domain.n - 1)))
