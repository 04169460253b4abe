"""Exact solution families with analytic jets.

``n1_family`` is the degree-one integral F = 2 sqrt(L) cos(phi) + w with
L = L(y), w = w(y), which is conserved for the magnetic field
Omega = -w'(y) / (2 L). Powers F**m of a conserved F are conserved for the
same field, which gives exact solutions of every higher-degree system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FieldPoint, FourierFieldSpec, Jet
from .trigpoly import TrigPoly, multiply, power


def n1_family(log_amp: float = 0.3, u_amp: float = 0.2, Lx: float = 1.0,
              Ly: float = 1.0) -> FourierFieldSpec:
    """L = exp(log_amp sin(2 pi y/Ly)), u_0 = u_amp cos(2 pi y/Ly)."""
    return FourierFieldSpec(
        N=1, Lx=Lx, Ly=Ly,
        modes={
            "LOGLAMBDA": [(0, 1, -0.5j * log_amp), (0, -1, 0.5j * log_amp)],
            "U0": [(0, 1, 0.5 * u_amp), (0, -1, 0.5 * u_amp)],
        },
    )


def n1_family_omega(spec: FourierFieldSpec):
    """Closed-form Omega(x, y) = -u_0'(y) / (2 L) for a y-only N = 1 spec."""
    def om(x, y):
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            lam = spec.metric(x, y)[0]
            return -spec.scalar_series("U0", x, y)[2] / (2 * lam)
        vals, _, dy = spec.evaluate(x, y)
        return -dy[..., 1] / (2 * vals[..., 0])
    return om


def _deriv_poly(jet: Jet, axis: int) -> TrigPoly:
    N = jet.N
    c = np.array([jet.coeff_derivs(k)[axis] for k in range(N + 1)])
    c[0] = c[0].real
    return TrigPoly(c)


def _point_from_poly(G: TrigPoly, lam: float) -> FieldPoint:
    a = G.coeffs
    M = G.degree
    return FieldPoint(M, lam, a[:M].real, a[1:M].imag)


def _vector_from_dpoly(dG: TrigPoly, dlam: float) -> np.ndarray:
    a = dG.coeffs
    M = dG.degree
    out = np.empty(2 * M)
    out[0] = dlam
    out[1] = a[0].real
    out[2::2] = a[1:M].real
    out[3::2] = a[1:M].imag
    return out


@dataclass(frozen=True)
class PowerSource:
    """Fields of F**m for a base field source F; analytic jets by the chain rule."""

    base: object
    m: int

    @property
    def N(self) -> int:
        return self.base.N * self.m

    @property
    def periods(self):
        return self.base.periods

    def jet(self, x: float, y: float) -> Jet:
        bj = self.base.jet(x, y)
        F = bj.point.poly()
        G = power(F, self.m)
        lam = bj.point.lam
        if self.m == 1:
            dGx, dGy = _deriv_poly(bj, 0), _deriv_poly(bj, 1)
        else:
            Fm1 = power(F, self.m - 1)
            scale = lambda P: TrigPoly(self.m * P.coeffs)
            dGx = scale(multiply(Fm1, _deriv_poly(bj, 0)))
            dGy = scale(multiply(Fm1, _deriv_poly(bj, 1)))
        return Jet(_point_from_poly(G, lam),
                   _vector_from_dpoly(dGx, bj.dx[0]),
                   _vector_from_dpoly(dGy, bj.dy[0]))

    def point(self, x: float, y: float) -> FieldPoint:
        return self.jet(x, y).point

    def metric(self, x: float, y: float):
        return self.base.metric(x, y)  # the conformal factor is shared with the base

    def integral_values(self, x, y, phi):
        from .flow import integral_values
        return integral_values(self.base, x, y, phi) ** self.m

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        xs, ys = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        n = 2 * self.N
        vals = np.empty((xs.size, n))
        dx = np.empty((xs.size, n))
        dy = np.empty((xs.size, n))
        for i, (xi, yi) in enumerate(zip(xs, ys)):
            j = self.jet(xi, yi)
            vals[i], dx[i], dy[i] = j.point.vector(), j.dx, j.dy
        return vals.reshape(shape + (n,)), dx.reshape(shape + (n,)), dy.reshape(shape + (n,))


def squared_family(**kw) -> PowerSource:
    """N = 2 exact family: a_2 = L, u_1 = 2 sqrt(L) w, v_1 = 0, a_0 = w**2 + 2 L."""
    return PowerSource(n1_family(**kw), 2)
