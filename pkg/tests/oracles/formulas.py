"""Closed-form references for distance values, the exploration schedule and rho."""

import math


def unit_value(d, D):
    return 0.05 if d > D else 1.0 - 0.95 * (d / D)


def terrain_value(d, D):
    return 0.0 if d > D else 1.0 - d / D


def epsilon(k, e0=0.5):
    return e0 / math.sqrt(1 + k)


def rho(enemy_hp, own_hp):
    return sum(enemy_hp) / sum(own_hp)


def sector_deg(dx, dy):
    """Sector by bearing in degrees; sector 0 spans [-22.5, 22.5)."""
    if dx == 0 and dy == 0:
        return 0
    # no wrap to [0, 360): the modulo can round a bearing onto a boundary
    deg = math.degrees(math.atan2(dy, dx))
    return int((deg + 22.5) // 45.0) % 8


def near_sector_boundary(dx, dy, tol=1e-9):
    """True when the bearing is within ``tol`` degrees of a sector edge."""
    if dx == 0 and dy == 0:
        return False
    r = (math.degrees(math.atan2(dy, dx)) + 22.5) / 45.0
    return abs(r - round(r)) * 45.0 < tol
