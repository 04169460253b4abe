"""Diagnostics of the diagonal form (r_i)_x + lambda_i(r) (r_i)_y = 0.

lambda(r) has no closed form, so it is evaluated by inverting r(U) with
Newton's method inside a chart around a base point, and all r-derivatives
are nested central differences. Every residual comes with a Richardson
noise floor (the same quantity at steps h and h/2), which is what makes a
claim "residual = 0" falsifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from .chars import char_data, invariant_gradients_exact, value_gap
from .claws import n2_laws, validity_check
from .errors import (
    BranchCrossing, NearVerticalCritical, NewtonDivergence, NotHyperbolic, SpeedCollision,
    ValidationError,
)
from .fields import FieldPoint

TOL_GAP = 1e-8
EPS_MACH = np.finfo(float).eps


class DiagonalChart:
    """Local coordinates r (Riemann invariants) around a strictly hyperbolic point."""

    def __init__(self, point: FieldPoint, h: float | None = None, tol_vertical: float = 1e-2,
                 newton_tol: float = 1e-13, max_iter: int = 50):
        cd = char_data(point)
        if np.any(np.abs(cd.cos) <= tol_vertical):
            raise NearVerticalCritical("a characteristic direction is vertical at the chart centre")
        self.base = point
        self.N = point.N
        self.dim = 2 * point.N
        self.reference = cd.angles
        self.r0 = cd.invariants
        self.mu0 = point.vector()
        lam = np.sort(cd.speeds)
        self.speed_gap = float(np.min(np.diff(lam)))
        # 10% of the smallest critical-value gap keeps the branch labels well defined
        self.radius = 0.1 * value_gap(cd)
        self.h = h if h is not None else 0.05 * self.radius
        self.newton_tol = newton_tol
        self.max_iter = max_iter
        self.last_iterations = 0
        self._speeds = lru_cache(maxsize=65536)(self._speeds_uncached)

    def _r_and_angles(self, U):
        pt = FieldPoint.from_vector(self.N, U)
        cd = char_data(pt, self.reference)
        return cd.invariants, cd.angles, pt

    def mu_from_r(self, r: Sequence[float], start=None) -> FieldPoint:
        """Field point with Riemann invariants ``r`` (Newton, analytic Jacobian)."""
        r = np.asarray(r, dtype=float)
        U = np.array(self.mu0 if start is None else start, dtype=float)
        scale = 1.0 + np.max(np.abs(r))
        for it in range(self.max_iter + 1):
            try:
                cur, angles, pt = self._r_and_angles(U)
            except (NotHyperbolic, BranchCrossing, ValidationError) as exc:
                raise NewtonDivergence(f"lost the hyperbolic chart: {exc}") from exc
            res = cur - r
            if np.max(np.abs(res)) <= self.newton_tol * scale:
                self.last_iterations = it
                return pt
            J = invariant_gradients_exact(pt, angles)
            U = U - np.linalg.solve(J, res)
        raise NewtonDivergence(f"no convergence in {self.max_iter} iterations")

    def _speeds_uncached(self, key):
        pt = self.mu_from_r(np.array(key))
        cd = char_data(pt, self.reference)
        return np.tan(cd.angles)

    def speeds(self, r) -> np.ndarray:
        return self._speeds(tuple(float(x) for x in r))


@dataclass
class SyntheticChart:
    """A diagonal system given directly by lambda(r); used for calibration."""

    fn: Callable[[np.ndarray], np.ndarray]
    r0: np.ndarray
    h: float = 1e-3
    dim: int = field(init=False)

    def __post_init__(self):
        self.r0 = np.asarray(self.r0, dtype=float)
        self.dim = self.r0.size

    def speeds(self, r) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(r, dtype=float)), dtype=float)


def lambda_of_r(chart, r) -> np.ndarray:
    return chart.speeds(r)


def _shift(r, i, d):
    r = np.array(r, dtype=float)
    r[i] += d
    return r


def dlambda(chart, r, i, k, h=None) -> float:
    """Central difference d lambda_k / d r_i."""
    h = chart.h if h is None else h
    return (chart.speeds(_shift(r, i, h))[k] - chart.speeds(_shift(r, i, -h))[k]) / (2 * h)


def gamma(chart, r, i: int, k: int, h=None, tol_gap: float = TOL_GAP) -> float:
    """Gamma^k_{ki} = (d_i lambda_k) / (lambda_i - lambda_k)."""
    if i == k:
        raise ValueError("gamma needs i != k")
    lam = chart.speeds(r)
    gap = lam[i] - lam[k]
    if abs(gap) <= tol_gap * (1 + abs(lam[i]) + abs(lam[k])):
        raise SpeedCollision(f"lambda_{i} and lambda_{k} coincide")
    return dlambda(chart, r, i, k, h) / gap


def _dgamma(chart, r, j, i, k, h):
    """d_j Gamma^k_{ki} by a central difference wrapped around the inner one."""
    return (gamma(chart, _shift(r, j, h), i, k, h)
            - gamma(chart, _shift(r, j, -h), i, k, h)) / (2 * h)


@dataclass(frozen=True)
class SemiHamResult:
    i: int
    j: int
    k: int
    residual: float  # |d_j G^k_ki - d_i G^k_kj| at step h/2
    coarse: float  # the same at step h
    floor: float  # Richardson difference plus a rounding estimate
    scale: float  # size of the Gamma derivatives themselves

    @property
    def passed(self) -> bool:
        return self.residual <= self.floor


def semiham_residual(chart, r, i: int, j: int, k: int, h=None,
                     speed_tol: float | None = None) -> SemiHamResult:
    if len({i, j, k}) != 3:
        raise ValueError("i, j, k must be pairwise distinct")
    h = chart.h if h is None else h
    vals = []
    scale = 0.0
    for step in (h, h / 2):
        a = _dgamma(chart, r, j, i, k, step)
        b = _dgamma(chart, r, i, j, k, step)
        vals.append(a - b)
        scale = max(scale, abs(a), abs(b))
    coarse, fine = vals
    lam = chart.speeds(r)
    # speeds come out of the Newton solve accurate to a few ulps (measured)
    tol = speed_tol if speed_tol is not None else 16 * EPS_MACH * (1 + np.max(np.abs(lam)))
    gap = min(abs(lam[i] - lam[k]), abs(lam[j] - lam[k]))
    rounding = 4 * tol / ((h / 2) ** 2 * gap)
    return SemiHamResult(i, j, k, abs(fine), abs(coarse), abs(coarse - fine) + rounding, scale)


def chart_scale(results: Sequence[SemiHamResult]) -> float:
    """Largest Gamma derivative seen over a sweep; the yardstick for the floors."""
    return max(s.scale for s in results)


def all_semiham_residuals(chart, r=None, h=None) -> list[SemiHamResult]:
    r = chart.r0 if r is None else r
    out = []
    for k in range(chart.dim):
        others = [s for s in range(chart.dim) if s != k]
        for i, j in combinations(others, 2):
            out.append(semiham_residual(chart, r, i, j, k, h))
    return out


# ---------------------------------------------------------------------------
# Lame coefficients


def lame_integrate(chart, path: Sequence[Sequence[float]], i: int, nodes: int = 9,
                   h=None) -> np.ndarray:
    """ln H_i at the vertices of an axis-parallel polygonal path.

    Integrates d_k ln H_i = Gamma^i_{ik} with composite Simpson on each
    segment; gauge H_i = 1 at the first vertex, no motion along r_i.
    """
    path = [np.asarray(p, dtype=float) for p in path]
    out = [0.0]
    for a, b in zip(path[:-1], path[1:]):
        moved = np.flatnonzero(a != b)
        if moved.size != 1:
            raise ValueError("path segments must be parallel to one coordinate axis")
        d = int(moved[0])
        if d == i:
            raise ValueError("the gauge fixes d_i ln H_i; paths may not move along r_i")
        t = np.linspace(a[d], b[d], nodes)
        vals = [gamma(chart, _shift(a, d, s - a[d]), d, i, h) for s in t]
        out.append(out[-1] + simpson(vals, x=t))
    return np.array(out)


def lame_two_path(chart, i: int, j: int, k: int, delta: float, r=None,
                  nodes: int = 9) -> float:
    """Relative disagreement of H_i along the two staircases r0 -> r0 + delta(e_j + e_k)."""
    r = chart.r0 if r is None else np.asarray(r, dtype=float)
    end = _shift(_shift(r, j, delta), k, delta)
    la = lame_integrate(chart, [r, _shift(r, j, delta), end], i, nodes)[-1]
    lb = lame_integrate(chart, [r, _shift(r, k, delta), end], i, nodes)[-1]
    return float(abs(np.expm1(la - lb)))


# ---------------------------------------------------------------------------
# N = 2: shared density of the two quadratic laws

EGOROV_MESSAGE = "Egorov structure present (N=2)"


@dataclass(frozen=True)
class PTReport:
    n_points: int
    max_validity_x: float
    max_validity_y: float
    max_shared_density_gap: float
    perturbed_validity: float
    tol: float
    conclusion: str

    @property
    def passed(self) -> bool:
        return self.conclusion == EGOROV_MESSAGE


def pt_pattern_check(points: Sequence[FieldPoint], tol: float = 1e-10) -> PTReport:
    """Do the two quadratic laws read F_y + H_x = 0 and F_x + G_y = 0 with one F?

    The shared density is -fg/2, the y-flux of quad-x and the x-density of quad-y.
    """
    from .claws import DensityPair

    laws = {law.name: law for law in n2_laws()}
    qx, qy = laws["quad-x"], laws["quad-y"]
    vx = vy = shared = 0.0
    for pt in points:
        if pt.N != 2:
            raise ValueError("the pattern check is for N = 2")
        vx = max(vx, validity_check(pt, qx))
        vy = max(vy, validity_check(pt, qy))
        shared = max(shared, abs(qx.Q(pt) - qy.P(pt)),
                     float(np.max(np.abs(qx.grad_Q(pt) - qy.grad_P(pt)))))
    bent = DensityPair("quad-x+0.1L", lambda pt: qx.P(pt) + 0.1 * pt.lam, qx.Q,
                       lambda pt: qx.grad_P(pt) + np.array([0.1, 0, 0, 0]), qx.grad_Q)
    perturbed = min(validity_check(pt, bent) for pt in points)
    ok = max(vx, vy) <= tol and shared <= 1e-12 and perturbed > 1e3 * tol
    return PTReport(len(points), vx, vy, shared, perturbed, tol,
                    EGOROV_MESSAGE if ok else "pattern check failed")
