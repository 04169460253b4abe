"""Field configurations on the torus and their first-derivative jets.

The 2N unknowns are always ordered as

    U = (Lambda, u_0, u_1, v_1, u_2, v_2, ..., u_{N-1}, v_{N-1})

with ``a_k = u_k + i v_k`` (``v_0 = 0``) and ``a_N = Lambda**(N/2)`` derived.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import GridTooSmall, ValidationError
from .trigpoly import TrigPoly


def unknown_names(N: int) -> list[str]:
    names = ["LAMBDA", "U0"]
    for k in range(1, N):
        names += [f"U{k}", f"V{k}"]
    return names


def _ro(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FieldPoint:
    """Values of the 2N unknowns at one torus point."""

    N: int
    lam: float
    u: np.ndarray  # u_0 .. u_{N-1}
    v: np.ndarray  # v_1 .. v_{N-1}

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float)) if self.N > 1 else np.zeros(0)
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if u.size != self.N or v.size != self.N - 1:
            raise ValidationError(
                f"expected {self.N} u-values and {self.N - 1} v-values, "
                f"got {u.size} and {v.size}")
        if not (self.lam > 0):
            raise ValidationError(f"Lambda must be positive, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "u", _ro(u))
        object.__setattr__(self, "v", _ro(v))

    @classmethod
    def from_vector(cls, N: int, U) -> "FieldPoint":
        U = np.asarray(U, dtype=float)
        if U.size != 2 * N:
            raise ValidationError(f"expected {2 * N} components, got {U.size}")
        return cls(N, U[0], np.concatenate([[U[1]], U[2::2]]), U[3::2])

    def vector(self) -> np.ndarray:
        out = np.empty(2 * self.N)
        out[0] = self.lam
        out[1] = self.u[0]
        out[2::2] = self.u[1:]
        out[3::2] = self.v
        return out

    def a(self, k: int) -> complex:
        return coeff_a(self, k)

    def coefficients(self) -> np.ndarray:
        """a_0 .. a_N."""
        a = np.empty(self.N + 1, dtype=complex)
        a[0] = self.u[0]
        a[1:self.N] = self.u[1:] + 1j * self.v
        a[self.N] = self.lam ** (self.N / 2)
        return a

    def poly(self) -> TrigPoly:
        return TrigPoly(self.coefficients())


def coeff_a(point: FieldPoint, k: int) -> complex:
    """Fourier coefficient a_k of F for any integer k."""
    N = point.N
    if abs(k) > N:
        return 0j
    if abs(k) == N:
        return complex(point.lam ** (N / 2))
    if k == 0:
        return complex(point.u[0])
    a = complex(point.u[abs(k)], point.v[abs(k) - 1])
    return a if k > 0 else a.conjugate()


@dataclass(frozen=True)
class Jet:
    """A field point plus the x- and y-derivatives of all 2N unknowns."""

    point: FieldPoint
    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        n = 2 * self.point.N
        dx = np.asarray(self.dx, dtype=float).ravel()
        dy = np.asarray(self.dy, dtype=float).ravel()
        if dx.size != n or dy.size != n:
            raise ValidationError(f"jet derivatives must have {n} components")
        object.__setattr__(self, "dx", _ro(dx))
        object.__setattr__(self, "dy", _ro(dy))

    @property
    def N(self) -> int:
        return self.point.N

    def coeff_derivs(self, k: int) -> tuple[complex, complex]:
        """((a_k)_x, (a_k)_y), including a_N = Lambda^{N/2} by the chain rule."""
        N = self.N
        if abs(k) > N:
            return 0j, 0j
        if abs(k) == N:
            c = (N / 2) * self.point.lam ** (N / 2 - 1)
            return complex(c * self.dx[0]), complex(c * self.dy[0])
        if k == 0:
            return complex(self.dx[1]), complex(self.dy[1])
        j = abs(k)
        ax = complex(self.dx[2 * j], self.dx[2 * j + 1])
        ay = complex(self.dy[2 * j], self.dy[2 * j + 1])
        if k < 0:
            return ax.conjugate(), ay.conjugate()
        return ax, ay


def constant_jet(point: FieldPoint) -> Jet:
    z = np.zeros(2 * point.N)
    return Jet(point, z, z)


# ---------------------------------------------------------------------------
# Fourier-mode fields


def hermitian_modes(modes) -> np.ndarray:
    """Complete a mode list (m, n, c) with the conjugate partners (-m, -n, conj c)."""
    table: dict[tuple[int, int], complex] = {}
    for m, n, c in modes:
        m, n, c = int(np.real(m)), int(np.real(n)), complex(c)
        table[(m, n)] = table.get((m, n), 0j) + c
    out = dict(table)
    for (m, n), c in table.items():
        if (-m, -n) not in table:
            out[(-m, -n)] = c.conjugate()
    return np.array([(m, n, c) for (m, n), c in sorted(out.items())], dtype=complex).reshape(-1, 3)


def _check_hermitian(name, modes, tol=1e-12):
    table = {(int(m.real), int(n.real)): c for m, n, c in modes}
    for (m, n), c in table.items():
        partner = table.get((-m, -n))
        if partner is None or abs(partner - c.conjugate()) > tol * max(1.0, abs(c)):
            raise ValidationError(
                f"field {name}: mode ({m}, {n}) lacks its conjugate partner ({-m}, {-n})")


@dataclass(frozen=True)
class FourierFieldSpec:
    """Unknowns given as finite real Fourier series on [0, Lx) x [0, Ly).

    ``modes`` maps a field name (``LOGLAMBDA``, ``U0``, ``U1``, ``V1``, ...)
    to an array of rows ``(m, n, c)``. Lambda is ``exp`` of the LOGLAMBDA
    series, so it is positive everywhere.
    """

    N: int
    Lx: float = 1.0
    Ly: float = 1.0
    modes: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValidationError("periods must be positive")
        allowed = set(self.field_names())
        clean = {}
        for name, rows in self.modes.items():
            if name not in allowed:
                raise ValidationError(f"unknown field {name!r} for N={self.N}")
            rows = np.asarray(rows, dtype=complex).reshape(-1, 3)
            _check_hermitian(name, rows)
            rows.setflags(write=False)
            clean[name] = rows
        object.__setattr__(self, "modes", clean)
        compiled = {}
        for name, rows in clean.items():
            compiled[name] = tuple((2 * math.pi * r[0].real / self.Lx,
                                    2 * math.pi * r[1].real / self.Ly, complex(r[2])) for r in rows)
        object.__setattr__(self, "_compiled", compiled)

    def scalar_series(self, name: str, x: float, y: float) -> tuple[float, float, float]:
        """Value and first derivatives of one series at a single point."""
        v = vx = vy = 0.0
        for kx, ky, c in self._compiled.get(name, ()):
            e = c * cmath.exp(1j * (kx * x + ky * y))
            v += e.real
            vx -= kx * e.imag
            vy -= ky * e.imag
        return v, vx, vy

    def field_names(self) -> list[str]:
        return ["LOGLAMBDA"] + unknown_names(self.N)[1:]

    @property
    def periods(self) -> tuple[float, float]:
        return self.Lx, self.Ly

    def _series(self, name, x, y):
        rows = self.modes.get(name)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if rows is None or rows.size == 0:
            z = np.zeros(np.broadcast(x, y).shape)
            return z, z, z
        kx = 2 * np.pi * rows[:, 0].real / self.Lx
        ky = 2 * np.pi * rows[:, 1].real / self.Ly
        c = rows[:, 2]
        e = c * np.exp(1j * (np.multiply.outer(x, kx) + np.multiply.outer(y, ky)))
        val = e.real.sum(axis=-1)
        ddx = (1j * kx * e).real.sum(axis=-1)
        ddy = (1j * ky * e).real.sum(axis=-1)
        return val, ddx, ddy

    def evaluate(self, x, y):
        """Values, x-derivatives and y-derivatives; each of shape (..., 2N)."""
        names = self.field_names()
        vals, dxs, dys = [], [], []
        for name in names:
            v, vx, vy = self._series(name, x, y)
            if name == "LOGLAMBDA":
                lam = np.exp(v)
                v, vx, vy = lam, lam * vx, lam * vy
            vals.append(v)
            dxs.append(vx)
            dys.append(vy)
        return np.stack(vals, -1), np.stack(dxs, -1), np.stack(dys, -1)

    def metric(self, x: float, y: float) -> tuple[float, float, float]:
        """(L, L_x, L_y) at one point; the cheap path used by the flow."""
        v, vx, vy = self.scalar_series("LOGLAMBDA", x, y)
        lam = math.exp(v)
        return lam, lam * vx, lam * vy

    def jet(self, x: float, y: float) -> Jet:
        return eval_jet(self, x, y)

    def point(self, x: float, y: float) -> FieldPoint:
        vals, _, _ = self.evaluate(x, y)
        return FieldPoint.from_vector(self.N, vals)


def eval_jet(spec, x: float, y: float) -> Jet:
    """Values and exact first derivatives of every unknown at (x, y)."""
    vals, dx, dy = spec.evaluate(float(x), float(y))
    return Jet(FieldPoint.from_vector(spec.N, vals), dx, dy)


# ---------------------------------------------------------------------------
# Periodic grids

MIN_GRID = 8


@dataclass(frozen=True)
class FieldGrid:
    """Samples on x_i = i Lx/NX, y_j = j Ly/NY; ``data[j, i]`` is the U-vector."""

    N: int
    NX: int
    NY: int
    Lx: float
    Ly: float
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != (self.NY, self.NX, 2 * self.N):
            raise ValidationError(
                f"grid data has shape {data.shape}, expected {(self.NY, self.NX, 2 * self.N)}")
        bad = np.argwhere(~(data[..., 0] > 0))
        if bad.size:
            j, i = bad[0]
            raise ValidationError(f"Lambda <= 0 at site i={i}, j={j}")
        data = np.array(data, copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def periods(self) -> tuple[float, float]:
        return self.Lx, self.Ly

    @property
    def hx(self) -> float:
        return self.Lx / self.NX

    @property
    def hy(self) -> float:
        return self.Ly / self.NY

    def coords(self):
        x = np.arange(self.NX) * self.hx
        y = np.arange(self.NY) * self.hy
        return x, y

    def point(self, i: int, j: int) -> FieldPoint:
        return FieldPoint.from_vector(self.N, self.data[j, i])

    @classmethod
    def sample(cls, spec, NX: int, NY: int) -> "FieldGrid":
        Lx, Ly = spec.periods
        x = np.arange(NX) * Lx / NX
        y = np.arange(NY) * Ly / NY
        X, Y = np.meshgrid(x, y)
        vals, _, _ = spec.evaluate(X, Y)
        return cls(spec.N, NX, NY, Lx, Ly, vals)


def periodic_d4(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order central difference with periodic wraparound."""
    r = lambda s: np.roll(f, -s, axis=axis)
    return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12.0 * h)


def grid_derivatives(grid: FieldGrid):
    """x- and y-derivative arrays with the same layout as ``grid.data``."""
    if grid.NX < MIN_GRID or grid.NY < MIN_GRID:
        raise GridTooSmall(f"grid must be at least {MIN_GRID}x{MIN_GRID}")
    return periodic_d4(grid.data, grid.hx, 1), periodic_d4(grid.data, grid.hy, 0)


def grid_jet(grid: FieldGrid, i: int, j: int) -> Jet:
    if grid.NX < MIN_GRID or grid.NY < MIN_GRID:
        raise GridTooSmall(f"grid must be at least {MIN_GRID}x{MIN_GRID}")
    d = grid.data
    NX, NY = grid.NX, grid.NY
    col = lambda s: d[j, (i + s) % NX]
    row = lambda s: d[(j + s) % NY, i]
    dx = (-col(2) + 8 * col(1) - 8 * col(-1) + col(-2)) / (12.0 * grid.hx)
    dy = (-row(2) + 8 * row(1) - 8 * row(-1) + row(-2)) / (12.0 * grid.hy)
    return Jet(grid.point(i, j), dx, dy)
