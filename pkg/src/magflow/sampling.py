"""Seeded random instances for property checks and CLI sweeps."""

from __future__ import annotations

import numpy as np

from .chars import char_data, value_gap
from .errors import MagflowError
from .fields import FieldPoint, Jet
from .trigpoly import TrigPoly, is_hyperbolic


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hyperbolic_poly(rng, N: int, max_tries: int = 10000) -> TrigPoly:
    """Random Hermitian coefficients with a_N = 1 whose critical set is strictly hyperbolic."""
    rng = rng_from(rng)
    for _ in range(max_tries):
        c = np.empty(N + 1, dtype=complex)
        c[0] = rng.normal()
        c[1:N] = (rng.normal(size=N - 1) + 1j * rng.normal(size=N - 1)) * 0.5
        c[N] = 1.0
        F = TrigPoly(c)
        if is_hyperbolic(F):
            return F
    raise MagflowError("could not draw a strictly hyperbolic polynomial")


def random_point(rng, N: int, lam=(0.5, 2.0), spread: float = 1.0, min_cos: float = 0.05,
                 min_speed_gap: float = 0.0, min_value_gap: float = 0.0,
                 max_tries: int = 100000) -> FieldPoint:
    """Random strictly hyperbolic FieldPoint.

    Filters: every |cos phi_k| above ``min_cos``, speeds tan(phi_k) pairwise
    further apart than ``min_speed_gap`` (antipodal critical points share a
    speed), and neighbouring critical values apart by ``min_value_gap``.
    """
    rng = rng_from(rng)
    for _ in range(max_tries):
        U = np.concatenate([[rng.uniform(*lam)], spread * rng.normal(size=2 * N - 1)])
        p = FieldPoint.from_vector(N, U)
        if not is_hyperbolic(p.poly()):
            continue
        cd = char_data(p)
        if np.any(np.abs(cd.cos) <= min_cos):
            continue
        if min_speed_gap > 0 and np.min(np.diff(np.sort(cd.speeds))) <= min_speed_gap:
            continue
        if min_value_gap > 0 and value_gap(cd) <= min_value_gap:
            continue
        return p
    raise MagflowError("could not draw a point satisfying the filters")


def random_chart_point(rng, N: int = 2) -> FieldPoint:
    """Point suited to a Riemann chart: well separated speeds and critical values."""
    return random_point(rng, N, min_cos=0.2, min_speed_gap=0.1, min_value_gap=0.2)


def random_jet(rng, point: FieldPoint) -> Jet:
    rng = rng_from(rng)
    n = 2 * point.N
    return Jet(point, rng.normal(size=n), rng.normal(size=n))
