"""Conservation laws (P)_x + (Q)_y = 0 of the quasi-linear system.

A law with densities P(U), Q(U) holds modulo the system at a point iff
grad P . xi + grad Q . eta = 0 for every (xi, eta) with A xi + B eta = 0;
``validity_check`` measures exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chars import (
    CharData, char_data, complex_to_real_columns, invariant_gradients_exact, mu_real,
    point_from_mu_real, value_gap,
)
from .errors import (
    BranchCrossing, EpsilonTooLarge, GridMismatch, NearVerticalCritical, NewtonFailure,
    NotHyperbolic, StepTooLarge,
)
from .fields import FieldGrid, FieldPoint, periodic_d4
from .system import kernel_basis
from .trigpoly import TWO_PI, TrigPoly, eval_dphi, eval_poly, multiply, power

Density = Callable[[FieldPoint], float]
Gradient = Callable[[FieldPoint], np.ndarray]


@dataclass(frozen=True)
class DensityPair:
    """Densities of the law (P)_x + (Q)_y = 0, as functions of the field point."""

    name: str
    P: Density
    Q: Density
    grad_P: Optional[Gradient] = None
    grad_Q: Optional[Gradient] = None
    fd_order: int = 2
    fd_step: Optional[float] = None  # default FD step when the densities need a special one

    @property
    def analytic(self) -> bool:
        return self.grad_P is not None and self.grad_Q is not None

    def gradients(self, point: FieldPoint, h: float | None = None, fd: bool = False):
        """(grad P, grad Q) in the canonical unknowns."""
        if self.analytic and not fd:
            return np.asarray(self.grad_P(point)), np.asarray(self.grad_Q(point))
        if h is None:
            h = self.fd_step or 1e-6
        return (fd_gradient(self.P, point, h, self.fd_order),
                fd_gradient(self.Q, point, h, self.fd_order))

    def divergence(self, jet, **kw) -> float:
        gp, gq = self.gradients(jet.point, **kw)
        return float(gp @ jet.dx + gq @ jet.dy)


_STENCILS = {
    2: ((1, 0.5), (-1, -0.5)),
    4: ((2, -1 / 12), (1, 8 / 12), (-1, -8 / 12), (-2, 1 / 12)),
}


def fd_derivative(fn, x0: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    """Central differences of a scalar- or vector-valued fn; one column per variable."""
    stencil = _STENCILS[order]
    x0 = np.asarray(x0, dtype=float)
    cols = []
    for s in range(x0.size):
        step = h * (1 + abs(x0[s]))
        acc = 0.0
        for m, w in stencil:
            e = np.zeros_like(x0)
            e[s] = m * step
            acc = acc + w * np.asarray(fn(x0 + e))
        cols.append(acc / step)
    return np.stack(cols, axis=-1)


def fd_gradient(fn: Density, point: FieldPoint, h: float = 1e-6, order: int = 2) -> np.ndarray:
    return fd_derivative(lambda U: fn(FieldPoint.from_vector(point.N, U)),
                         point.vector(), h, order)


def validity_check(point: FieldPoint, law: DensityPair, method: str = "svd",
                   fd: bool = False, h: float | None = None) -> float:
    """Largest divergence of ``law`` over unit solution jets at ``point``.

    Zero iff the law holds modulo the system; independent of the choice of
    orthonormal kernel basis.
    """
    K = kernel_basis(point, method)
    gp, gq = law.gradients(point, h=h, fd=fd)
    return float(np.linalg.norm(np.concatenate([gp, gq]) @ K))


# ---------------------------------------------------------------------------
# Explicit laws


def _e(N, s):
    e = np.zeros(2 * N)
    e[s] = 1.0
    return e


def _top_index(N):
    """Positions of u_{N-1} and v_{N-1} in U (v absent for N = 1)."""
    if N == 1:
        return 1, None
    return 2 * (N - 1), 2 * (N - 1) + 1


def explicit_laws(N: int) -> list[DensityPair]:
    """L1 = (u_{N-1} L^{(1-N)/2}, v_{N-1} L^{(1-N)/2}) and L2 = (sqrt(L) u_1, -sqrt(L) v_1)."""
    iu, iv = _top_index(N)
    p = (1 - N) / 2

    def l1p(pt):
        return pt.vector()[iu] * pt.lam ** p

    def l1q(pt):
        return 0.0 if iv is None else pt.vector()[iv] * pt.lam ** p

    def l1gp(pt):
        U = pt.vector()
        return p * U[iu] * pt.lam ** (p - 1) * _e(N, 0) + pt.lam ** p * _e(N, iu)

    def l1gq(pt):
        if iv is None:
            return np.zeros(2 * N)
        U = pt.vector()
        return p * U[iv] * pt.lam ** (p - 1) * _e(N, 0) + pt.lam ** p * _e(N, iv)

    def a1(pt):
        return pt.a(1)

    def l2p(pt):
        return np.sqrt(pt.lam) * a1(pt).real

    def l2q(pt):
        return -np.sqrt(pt.lam) * a1(pt).imag

    def l2gp(pt):
        if N == 1:
            return _e(N, 0)
        s = np.sqrt(pt.lam)
        return pt.u[1] / (2 * s) * _e(N, 0) + s * _e(N, 2)

    def l2gq(pt):
        if N == 1:
            return np.zeros(2 * N)
        s = np.sqrt(pt.lam)
        return -(pt.v[0] / (2 * s) * _e(N, 0) + s * _e(N, 3))

    return [DensityPair("L1", l1p, l1q, l1gp, l1gq),
            DensityPair("L2", l2p, l2q, l2gp, l2gq)]


def _dpoly(point: FieldPoint, s: int) -> TrigPoly:
    """dF/dU_s as a trigonometric polynomial."""
    N = point.N
    c = np.zeros(N + 1, dtype=complex)
    if s == 0:
        c[N] = (N / 2) * point.lam ** (N / 2 - 1)
    elif s == 1:
        c[0] = 1.0
    else:
        c[s // 2] = 1.0 if s % 2 == 0 else 1j
    return TrigPoly(c)


def power_coefficient(point: FieldPoint, m: int, k: int = 1) -> complex:
    return power(point.poly(), m).coeff(k)


def power_law(N: int, m: int) -> DensityPair:
    """(sqrt(L) u_1^{(m)}, -sqrt(L) v_1^{(m)}) from the k = 1 coefficient of F**m."""
    if m < 1:
        raise ValueError("m >= 1")

    def a1m(pt):
        return power_coefficient(pt, m)

    def grad_a1m(pt):
        F = pt.poly()
        Fm1 = power(F, m - 1) if m > 1 else None
        out = np.empty(2 * N, dtype=complex)
        for s in range(2 * N):
            d = _dpoly(pt, s)
            if Fm1 is not None:
                d = multiply(Fm1, d)
            out[s] = m * d.coeff(1)
        return out

    def P(pt):
        return np.sqrt(pt.lam) * a1m(pt).real

    def Q(pt):
        return -np.sqrt(pt.lam) * a1m(pt).imag

    def gP(pt):
        s = np.sqrt(pt.lam)
        return s * grad_a1m(pt).real + a1m(pt).real / (2 * s) * _e(N, 0)

    def gQ(pt):
        s = np.sqrt(pt.lam)
        return -(s * grad_a1m(pt).imag + a1m(pt).imag / (2 * s) * _e(N, 0))

    return DensityPair(f"power{m}", P, Q, gP, gQ)


def n2_laws() -> list[DensityPair]:
    """The four N = 2 laws in f = u_1/sqrt(L), g = v_1/sqrt(L)."""

    def fg(pt):
        s = np.sqrt(pt.lam)
        f, g = pt.u[1] / s, pt.v[0] / s
        df = np.array([-f / (2 * pt.lam), 0.0, 1 / s, 0.0])
        dg = np.array([-g / (2 * pt.lam), 0.0, 0.0, 1 / s])
        return f, g, df, dg

    e0, e1 = _e(2, 0), _e(2, 1)

    def law(name, P, Q, gP, gQ):
        return DensityPair(name, lambda pt: P(pt, *fg(pt)), lambda pt: Q(pt, *fg(pt)),
                           lambda pt: gP(pt, *fg(pt)), lambda pt: gQ(pt, *fg(pt)))

    return [
        law("f-g", lambda pt, f, g, df, dg: f, lambda pt, f, g, df, dg: g,
            lambda pt, f, g, df, dg: df, lambda pt, f, g, df, dg: dg),
        law("fL-gL",
            lambda pt, f, g, df, dg: f * pt.lam,
            lambda pt, f, g, df, dg: -g * pt.lam,
            lambda pt, f, g, df, dg: pt.lam * df + f * e0,
            lambda pt, f, g, df, dg: -(pt.lam * dg + g * e0)),
        law("quad-x",
            lambda pt, f, g, df, dg: pt.u[0] + 2 * pt.lam + (g * g - f * f) / 4,
            lambda pt, f, g, df, dg: -f * g / 2,
            lambda pt, f, g, df, dg: e1 + 2 * e0 + (g * dg - f * df) / 2,
            lambda pt, f, g, df, dg: -(g * df + f * dg) / 2),
        law("quad-y",
            lambda pt, f, g, df, dg: -f * g / 2,
            lambda pt, f, g, df, dg: -pt.u[0] + 2 * pt.lam - (g * g - f * f) / 4,
            lambda pt, f, g, df, dg: -(g * df + f * dg) / 2,
            lambda pt, f, g, df, dg: -e1 + 2 * e0 - (g * dg - f * df) / 2),
    ]


def fake_law(N: int) -> DensityPair:
    """(L, 0): not a conservation law; used as a negative control."""
    return DensityPair("fake", lambda pt: pt.lam, lambda pt: 0.0,
                       lambda pt: _e(N, 0), lambda pt: np.zeros(2 * N))


def catalog(N: int, powers=(2, 3)) -> list[DensityPair]:
    laws = explicit_laws(N) + [power_law(N, m) for m in powers]
    if N == 2:
        laws += n2_laws()
    return laws


def density_rank(point: FieldPoint, laws, rtol: float = 1e-8) -> int:
    """Numerical rank of the Jacobian of the P densities of ``laws`` at ``point``.

    A measurement only: full rank at one point is evidence of functional
    independence, not a proof of it.
    """
    J = np.array([law.gradients(point)[0] for law in laws])
    sv = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0


# ---------------------------------------------------------------------------
# Invariant surfaces phi = f(x, y)


def _top_density(point: FieldPoint) -> complex:
    """a_{N-1} L^{(1-N)/2} / (2N)."""
    N = point.N
    return point.a(N - 1) * point.lam ** ((1 - N) / 2) / (2 * N)


def surface_law(f: Callable[[FieldPoint], float], name: str = "surface",
                fd_order: int = 2, fd_step: float | None = None) -> DensityPair:
    """Law of an invariant surface phi = f(U):

    (sqrt(L) sin f + Im c)_x + (-sqrt(L) cos f - Re c)_y = 0, c = a_{N-1} L^{(1-N)/2}/(2N).
    """
    def P(pt):
        return np.sqrt(pt.lam) * np.sin(f(pt)) + _top_density(pt).imag

    def Q(pt):
        return -np.sqrt(pt.lam) * np.cos(f(pt)) - _top_density(pt).real

    return DensityPair(name, P, Q, fd_order=fd_order, fd_step=fd_step)


def _check_shape(grid: FieldGrid, *arrays):
    for a in arrays:
        if np.shape(a) != (grid.NY, grid.NX):
            raise GridMismatch(f"array shape {np.shape(a)} does not match grid {(grid.NY, grid.NX)}")


def grid_divergence(P: np.ndarray, Q: np.ndarray, grid: FieldGrid) -> np.ndarray:
    _check_shape(grid, P, Q)
    return periodic_d4(P, grid.hx, 1) + periodic_d4(Q, grid.hy, 0)


def invariance_residual(f: np.ndarray, grid: FieldGrid, omega: np.ndarray) -> np.ndarray:
    """(sqrt(L) sin f)_x - (sqrt(L) cos f)_y + Omega L on the grid."""
    _check_shape(grid, f, omega)
    s = np.sqrt(grid.data[..., 0])
    return (periodic_d4(s * np.sin(f), grid.hx, 1) - periodic_d4(s * np.cos(f), grid.hy, 0)
            + omega * grid.data[..., 0])


def _grid_top_density(grid: FieldGrid) -> np.ndarray:
    N = grid.N
    d = grid.data
    scale = d[..., 0] ** ((1 - N) / 2) / (2 * N)
    if N == 1:
        return d[..., 1] * scale + 0j
    return (d[..., 2 * (N - 1)] + 1j * d[..., 2 * (N - 1) + 1]) * scale


def omega_divergence_grid(grid: FieldGrid) -> np.ndarray:
    """Omega from the divergence identity, with grid differences."""
    c = _grid_top_density(grid)
    return (periodic_d4(c.imag, grid.hx, 1) - periodic_d4(c.real, grid.hy, 0)) / grid.data[..., 0]


def surface_law_grid(f: np.ndarray, grid: FieldGrid):
    """(P, Q) arrays of the invariant-surface law for a sampled angle field f."""
    _check_shape(grid, f)
    s = np.sqrt(grid.data[..., 0])
    c = _grid_top_density(grid)
    return s * np.sin(f) + c.imag, -s * np.cos(f) - c.real


# ---------------------------------------------------------------------------
# Level points and the G_k laws


@dataclass(frozen=True)
class LevelPoints:
    eps: float
    levels: np.ndarray  # target values of F
    signs: np.ndarray  # -1 at maxima, +1 at minima
    angles: np.ndarray
    points: np.ndarray
    critical_angles: np.ndarray


def epsilon_max(cd: CharData) -> float:
    return value_gap(cd) / 4


def _solve_on_arc(F: TrigPoly, c: float, lo: float, hi: float, seed: float,
                  tol: float = 1e-15, maxiter: int = 100) -> float:
    """Root of F(phi) = c in (lo, hi), bracketed Newton."""
    g = lambda t: float(eval_poly(F, t)) - c
    glo = g(lo)
    if glo * g(hi) > 0:
        raise NewtonFailure("level is not bracketed on the arc")
    x = min(max(seed, lo), hi)
    for _ in range(maxiter):
        gx = g(x)
        if gx == 0:
            return x
        if (gx < 0) == (glo < 0):
            lo, glo = x, gx
        else:
            hi = x
        d = float(eval_dphi(F, x))
        step = gx / d if d != 0 else np.inf
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * (1 + abs(x)):
            return xn
        x = xn
    raise NewtonFailure("no convergence for the level point")


def level_points(point: FieldPoint, eps: float, levels=None,
                 reference: np.ndarray | None = None) -> LevelPoints:
    """One point z_k per critical point with F(z_k) = r_k - eps (maxima) or r_k + eps (minima).

    z_k is taken on the counterclockwise side of x_k. Passing ``levels``
    (and the ``reference`` critical angles they came from) keeps the target
    values fixed while the field point moves, as needed for differentiation.
    """
    cd = char_data(point, reference)
    signs = np.where(cd.maxima, -1.0, 1.0)
    if levels is None:
        if not eps > 0:
            raise EpsilonTooLarge("eps must be positive")
        if eps >= epsilon_max(cd):
            raise EpsilonTooLarge(f"eps={eps:.3e} exceeds gap/4={epsilon_max(cd):.3e}")
        levels = cd.invariants + signs * eps
    levels = np.asarray(levels, dtype=float)
    F = point.poly()
    sorted_angles = np.sort(cd.angles)
    out = np.empty(cd.angles.size)
    for k, phi in enumerate(cd.angles):
        i = int(np.searchsorted(sorted_angles, phi))
        nxt = sorted_angles[(i + 1) % sorted_angles.size]
        hi = phi + np.mod(nxt - phi, TWO_PI)
        gap = abs(levels[k] - cd.invariants[k])
        curv = abs(float(eval_dphi(F, phi + 1e-3) - eval_dphi(F, phi - 1e-3))) / 2e-3
        seed = phi + np.sqrt(2 * gap / curv) if curv > 0 else 0.5 * (phi + hi)
        out[k] = np.mod(_solve_on_arc(F, levels[k], phi, hi, seed), TWO_PI)
    ro = lambda a: (a.setflags(write=False), a)[1]
    return LevelPoints(float(eps), ro(levels.copy()), ro(signs), ro(out),
                       ro(np.exp(1j * out)), cd.angles)


def _level_angle_fn(k: int, levels: np.ndarray, reference: np.ndarray):
    def f(pt):
        return level_points(pt, 0.0, levels=levels, reference=reference).angles[k]
    return f


def g_densities(point: FieldPoint, eps: float | None = None) -> list[DensityPair]:
    """The 2N laws with G_k = Im[sqrt(L) z_k + a_{N-1} L^{(1-N)/2}/(2N)].

    Levels r_k -+ eps are frozen at ``point``; moving the field point moves
    z_k along the fixed level set, so each pair is the invariant-surface law
    of a genuine level set of F.
    """
    cd = char_data(point)
    if eps is None:
        eps = 1e-3 * value_gap(cd)
    lp = level_points(point, eps)
    # z_k moves like sqrt(level - r_k): high derivatives grow as eps shrinks, so use a
    # 4th-order stencil with a step tied to eps
    return [surface_law(_level_angle_fn(k, lp.levels, cd.angles), name=f"G{k + 1}", fd_order=4,
                        fd_step=g_fd_step(eps))
            for k in range(lp.angles.size)]


def g_fd_step(eps: float) -> float:
    """FD step for densities built on level points at distance eps from a critical value."""
    return min(1e-6, 3e-3 * eps)


def g_gradients_exact(point: FieldPoint, lp: LevelPoints) -> np.ndarray:
    """Implicit-function gradients dG_k/dU (rows k), used as an FD oracle."""
    N = point.N
    th = lp.angles
    F = point.poly()
    dF = invariant_gradients_exact(point, th)
    dth = -dF / eval_dphi(F, th)[:, None]
    s = np.sqrt(point.lam)
    G = (s * np.cos(th))[:, None] * dth
    G[:, 0] += np.sin(th) / (2 * s)
    p = (1 - N) / 2
    iu, iv = _top_index(N)
    if iv is not None:
        v = point.vector()[iv]
        G[:, 0] += p * v * point.lam ** (p - 1) / (2 * N)
        G[:, iv] += point.lam ** p / (2 * N)
    return G


def _vertical_check(cd: CharData, tol: float):
    if np.any(np.abs(np.cos(cd.angles)) <= tol):
        raise NearVerticalCritical("a critical point lies at +-i")


def g_jacobian(point: FieldPoint, eps: float, h: float | None = None) -> np.ndarray:
    """FD d(G_1..G_2N)/d(L^{N/2}, a_0, u_1.., v_1..) with levels frozen at ``point``.

    The default step shrinks with ``eps`` so the stencil stays inside the
    neighbourhood where the frozen levels remain regular values.
    """
    N = point.N
    cd = char_data(point)
    lp = level_points(point, eps)
    mu0 = mu_real(point)
    if h is None:
        h = g_fd_step(eps)

    def G(mu):
        pt = point_from_mu_real(N, mu)
        try:
            th = level_points(pt, 0.0, levels=lp.levels, reference=cd.angles).angles
        except (NewtonFailure, BranchCrossing, NotHyperbolic) as exc:
            raise StepTooLarge(f"FD stencil left the level-set neighbourhood: {exc}") from exc
        return np.sqrt(pt.lam) * np.sin(th) + _top_density(pt).imag

    return fd_derivative(G, mu0, h, order=4)


def g_independence(point: FieldPoint, eps: float | None = None, h: float | None = None,
                   tol_vertical: float = 1e-3) -> float:
    """det d(G_1..G_2N)/d(field variables); nonzero means 2N independent laws."""
    cd = char_data(point)
    _vertical_check(cd, tol_vertical)
    if eps is None:
        eps = 1e-3 * value_gap(cd)
    return float(np.linalg.det(g_jacobian(point, eps, h)))


def bracket_determinant(point: FieldPoint, eps: float, h: float | None = None,
                        tol_vertical: float = 1e-3) -> complex:
    """det of the matrix dF/dmu(z_k) - R_kl F_phi(z_k)/(sqrt(L) cos theta_k).

    Obtained from dG/dmu by removing the row factors -sqrt(L) cos theta_k / F_phi(z_k)
    and mapped to the complex coordinates of ``jacobian_complex``; tends to
    det M as eps -> 0.
    """
    N = point.N
    cd = char_data(point)
    _vertical_check(cd, tol_vertical)
    lp = level_points(point, eps)
    J = g_jacobian(point, eps, h)
    F = point.poly()
    th = lp.angles
    rows = -eval_dphi(F, th) / (np.sqrt(point.lam) * np.cos(th))
    Bm = rows[:, None] * J
    return complex(np.linalg.det(Bm) / np.linalg.det(complex_to_real_columns(N)))
