"""Magnetic geodesic flow on the unit energy level, in angle form.

With p = sqrt(L) (cos phi, sin phi) the energy H = |p|^2 / (2L) is 1/2 by
construction, and the equations of motion read

    x'   = cos(phi) / sqrt(L)
    y'   = sin(phi) / sqrt(L)
    phi' = (L_y cos(phi) - L_x sin(phi)) / (2 L sqrt(L)) - Omega.

Field sources are anything with ``N``, ``periods`` and
``evaluate(x, y) -> (values, d/dx, d/dy)`` in the canonical unknown order:
``FourierFieldSpec``, ``PowerSource`` or ``GridSource``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BlowUp
from .fields import FieldGrid, FieldPoint, Jet, grid_derivatives
from .system import omega as omega_of_jet
from .trigpoly import eval_poly

OmegaFn = Callable[[float, float], float]


@dataclass(frozen=True)
class FlowState:
    x: float
    y: float
    phi: float


class GridSource:
    """Bilinear interpolation of grid values and of 4th-order derivative fields."""

    def __init__(self, grid: FieldGrid):
        self.grid = grid
        self.N = grid.N
        self.periods = grid.periods
        dx, dy = grid_derivatives(grid)
        # stack values and derivatives so one interpolation serves all three
        self._stack = np.concatenate([grid.data, dx, dy], axis=-1)

    def evaluate(self, x, y):
        g = self.grid
        sx = (float(x) / g.hx) % g.NX
        sy = (float(y) / g.hy) % g.NY
        i0, j0 = int(sx) % g.NX, int(sy) % g.NY
        tx, ty = sx - int(sx), sy - int(sy)
        i1, j1 = (i0 + 1) % g.NX, (j0 + 1) % g.NY
        s = self._stack
        v = ((1 - tx) * (1 - ty) * s[j0, i0] + tx * (1 - ty) * s[j0, i1]
             + (1 - tx) * ty * s[j1, i0] + tx * ty * s[j1, i1])
        n = 2 * self.N
        return v[:n], v[n:2 * n], v[2 * n:]


def source_jet(source, x: float, y: float) -> Jet:
    vals, dx, dy = source.evaluate(x, y)
    return Jet(FieldPoint.from_vector(source.N, vals), dx, dy)


def derived_omega(source) -> OmegaFn:
    """Omega read off the top mode of the invariance equations at each point."""
    return lambda x, y: omega_of_jet(source_jet(source, x, y))[0]


def _metric(source, x, y):
    if hasattr(source, "metric"):
        return source.metric(x, y)
    vals, dx, dy = source.evaluate(x, y)
    return float(vals[0]), float(dx[0]), float(dy[0])


def rhs(state: FlowState, source, omega: OmegaFn) -> tuple[float, float, float]:
    x, y, phi = state.x, state.y, state.phi
    lam, lx, ly = _metric(source, x, y)
    if not lam > 0:
        raise BlowUp(f"Lambda = {lam} at ({x}, {y})")
    s = math.sqrt(lam)
    c, sn = math.cos(phi), math.sin(phi)
    return (c / s, sn / s, (ly * c - lx * sn) / (2 * lam * s) - omega(x, y))


def _resolve_omega(source, omega):
    if isinstance(omega, str):
        if omega != "derive":
            raise ValueError(f"omega must be a callable, a number or 'derive', not {omega!r}")
        return derived_omega(source)
    if callable(omega):
        return omega
    w = float(omega)
    return lambda x, y: w


def first_integral(source, x: float, y: float, phi: float) -> float:
    vals, _, _ = source.evaluate(x, y)
    return float(eval_poly(FieldPoint.from_vector(source.N, vals).poly(), phi))


def integral_values(source, x, y, phi) -> np.ndarray:
    """F(x, y, phi) for arrays of samples."""
    if hasattr(source, "integral_values"):
        return source.integral_values(x, y, phi)
    x, y, phi = (np.asarray(a, dtype=float) for a in (x, y, phi))
    if isinstance(source, GridSource):
        return np.array([first_integral(source, *s) for s in zip(x, y, phi)])
    vals, _, _ = source.evaluate(x, y)
    N = source.N
    F = vals[..., 1] + 2 * vals[..., 0] ** (N / 2) * np.cos(N * phi)
    for k in range(1, N):
        F = F + 2 * (vals[..., 2 * k] * np.cos(k * phi) - vals[..., 2 * k + 1] * np.sin(k * phi))
    return F


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # unwrapped; reduced modulo the periods on export
    y: np.ndarray
    phi: np.ndarray
    F: np.ndarray
    dt: float
    periods: tuple[float, float]
    method: str = "rk4"

    def __len__(self):
        return self.t.size

    def wrapped(self):
        Lx, Ly = self.periods
        return np.mod(self.x, Lx), np.mod(self.y, Ly), np.mod(self.phi, 2 * np.pi)

    def to_csv(self, path) -> None:
        x, y, phi = self.wrapped()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "phi", "F"])
            for row in zip(self.t, x, y, phi, self.F):
                w.writerow([format(float(v), ".17g") for v in row])


def integrate(state0: FlowState, source, omega, T: float, dt: float,
              record_F: bool = True) -> Trajectory:
    """Classical fixed-step RK4; F recorded at every sample."""
    if not dt > 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    om = _resolve_omega(source, omega)
    n = int(round(T / dt))
    out = np.empty((n + 1, 3))
    x, y, p = float(state0.x), float(state0.y), float(state0.phi)
    out[0] = x, y, p
    f = lambda a, b, c: rhs(FlowState(a, b, c), source, om)
    h2, h6 = 0.5 * dt, dt / 6
    # scalar arithmetic: the state has three components, numpy overhead dominates otherwise
    for step in range(n):
        a1, b1, c1 = f(x, y, p)
        a2, b2, c2 = f(x + h2 * a1, y + h2 * b1, p + h2 * c1)
        a3, b3, c3 = f(x + h2 * a2, y + h2 * b2, p + h2 * c2)
        a4, b4, c4 = f(x + dt * a3, y + dt * b3, p + dt * c3)
        x += h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        y += h6 * (b1 + 2 * b2 + 2 * b3 + b4)
        p += h6 * (c1 + 2 * c2 + 2 * c3 + c4)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(p)):
            raise BlowUp(f"non-finite state at step {step + 1}")
        out[step + 1] = x, y, p
    t = np.arange(n + 1) * dt
    F = (integral_values(source, out[:, 0], out[:, 1], out[:, 2]) if record_F
         else np.full(n + 1, np.nan))
    return Trajectory(t, out[:, 0], out[:, 1], out[:, 2], F, dt, tuple(source.periods))


def drift(traj: Trajectory, F: Callable[[float, float, float], float] | None = None):
    """(max |F(t) - F(0)|, F(t) - F(0)); F defaults to the recorded values."""
    series = traj.F if F is None else np.array([F(a, b, c) for a, b, c in
                                                zip(traj.x, traj.y, traj.phi)])
    d = series - series[0]
    return float(np.max(np.abs(d))), d



def order_ratio(state0: FlowState, source, omega, T: float, dt: float) -> float:
    """Self-convergence ratio e(dt) / e(dt/2), about 16 for a 4th-order method.

    e(h) is the largest state difference between the runs with steps h and
    h/2, taken over the common sample times.
    """
    runs = []
    for k in range(3):
        tr = integrate(state0, source, omega, T, dt / 2 ** k, record_F=False)
        s = np.column_stack([tr.x, tr.y, tr.phi])
        runs.append(s[::2 ** k])
    e1 = np.max(np.linalg.norm(runs[0] - runs[1], axis=1))
    e2 = np.max(np.linalg.norm(runs[1] - runs[2], axis=1))
    return float(e1 / e2)
