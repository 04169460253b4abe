"""Riemann invariants, characteristic speeds and the Jacobian identity.

At a strictly hyperbolic point the critical values r_k = F(x_k) of F on
the circle are Riemann invariants, advected with speed tan(phi_k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchCrossing, NotHyperbolic, RootFindingFailure, StepTooLarge
from .fields import FieldPoint, Jet
from .system import build_matrices, kernel_basis
from .trigpoly import (
    MAXIMUM, STRICTLY_HYPERBOLIC, TWO_PI, CriticalSet, circular_gaps, classify,
    critical_points, eval_poly,
)

TOL_VERTICAL = 1e-3
TOL_COLLISION = 1e-9


@dataclass(frozen=True)
class CharData:
    angles: np.ndarray
    points: np.ndarray
    invariants: np.ndarray
    speeds: np.ndarray  # nan where the characteristic is (nearly) vertical
    valid: np.ndarray
    kinds: tuple
    value_collision: bool

    @property
    def cos(self):
        return np.cos(self.angles)

    @property
    def sin(self):
        return np.sin(self.angles)

    @property
    def maxima(self) -> np.ndarray:
        return np.array([k == MAXIMUM for k in self.kinds])


def _hyperbolic_set(point: FieldPoint) -> CriticalSet:
    F = point.poly()
    try:
        verdict = classify(F)
    except RootFindingFailure as exc:
        raise NotHyperbolic(str(exc)) from exc
    if verdict != STRICTLY_HYPERBOLIC:
        raise NotHyperbolic("critical points of F are not 2N distinct simple points")
    return critical_points(F)


def circular_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def match_branches(angles: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Permutation p with angles[p[k]] the branch continuing reference[k]."""
    if angles.size != reference.size:
        raise BranchCrossing("number of critical points changed")
    dist = circular_distance(angles[None, :], reference[:, None])
    perm = np.argmin(dist, axis=1)
    half_gap = 0.5 * np.min(circular_gaps(np.sort(reference)))
    if len(set(perm.tolist())) != perm.size or np.max(dist[np.arange(perm.size), perm]) >= half_gap:
        raise BranchCrossing("critical points moved by more than half their separation")
    return perm


def char_data(point: FieldPoint, reference: np.ndarray | None = None,
              tol_vertical: float = TOL_VERTICAL) -> CharData:
    """Riemann invariants and speeds, sorted by angle (or matched to ``reference``)."""
    cs = _hyperbolic_set(point)
    angles = cs.angles
    kinds = cs.kinds
    if reference is not None:
        perm = match_branches(angles, np.asarray(reference))
        angles = angles[perm]
        kinds = tuple(kinds[i] for i in perm)
    F = point.poly()
    r = eval_poly(F, angles)
    c = np.cos(angles)
    valid = np.abs(c) > tol_vertical
    speeds = np.where(valid, np.tan(angles), np.nan)
    rs = np.sort(r)
    collision = bool(np.any(np.diff(rs) <= TOL_COLLISION * max(1.0, np.max(np.abs(r)))))
    ro = lambda a: (a.setflags(write=False), a)[1]
    return CharData(ro(angles), ro(np.exp(1j * angles)), ro(r), ro(speeds), ro(valid),
                    kinds, collision)


def invariants(point: FieldPoint, reference: np.ndarray | None = None) -> np.ndarray:
    return char_data(point, reference).invariants


def value_gap(cd: CharData) -> float:
    """Smallest |r_k - r_{k+1}| over neighbouring critical points around the circle."""
    order = np.argsort(cd.angles)
    r = cd.invariants[order]
    return float(np.min(np.abs(r - np.roll(r, -1))))


# ---------------------------------------------------------------------------
# Jacobians


def jacobian_complex(point: FieldPoint):
    """(M, det M, (-1)^{N+1} 2 V) for mu = (L^{N/2}, a_{N-1}, ..., a_{1-N}).

    Row k of M is (x_k^N + x_k^{-N}, x_k^{N-1}, ..., x_k^{1-N}); V is the
    determinant with rows (x_k^{2N-1}, ..., x_k, 1), rows in angle order.
    """
    N = point.N
    x = char_data(point).points
    powers = np.arange(N - 1, -N, -1)
    M = np.empty((2 * N, 2 * N), dtype=complex)
    M[:, 0] = x ** N + x ** (-N)
    M[:, 1:] = x[:, None] ** powers[None, :]
    V = np.linalg.det(np.vander(x, 2 * N))
    rhs = (-1) ** (N + 1) * 2 * V
    return M, complex(np.linalg.det(M)), complex(rhs)


def vandermonde_modulus(x: np.ndarray) -> float:
    x = np.asarray(x)
    i, j = np.triu_indices(x.size, 1)
    return float(np.prod(np.abs(x[j] - x[i])))


def mu_real(point: FieldPoint) -> np.ndarray:
    """Real field coordinates (L^{N/2}, a_0, u_1..u_{N-1}, v_1..v_{N-1})."""
    N = point.N
    return np.concatenate([[point.lam ** (N / 2), point.u[0]], point.u[1:], point.v])


def point_from_mu_real(N: int, mu: np.ndarray) -> FieldPoint:
    if mu[0] <= 0:
        raise StepTooLarge("L^{N/2} became non-positive")
    return FieldPoint(N, mu[0] ** (2 / N), mu[1:N + 1], mu[N + 1:])


def _fd_jacobian(fn, x0, h):
    x0 = np.asarray(x0, dtype=float)
    cols = []
    for s in range(x0.size):
        step = h * (1 + abs(x0[s]))
        e = np.zeros_like(x0)
        e[s] = step
        cols.append((fn(x0 + e) - fn(x0 - e)) / (2 * step))
    return np.column_stack(cols)


def _tracked(N, to_point, reference):
    def r_of(x):
        try:
            return invariants(to_point(N, x), reference)
        except (NotHyperbolic, BranchCrossing) as exc:
            raise StepTooLarge(f"stencil left the hyperbolic chart: {exc}") from exc
    return r_of


def jacobian_real_matrix(point: FieldPoint, h: float = 1e-5) -> np.ndarray:
    """Central-difference d(r_1..r_2N)/d(L^{N/2}, a_0, u_1.., v_1..)."""
    ref = char_data(point).angles
    return _fd_jacobian(_tracked(point.N, point_from_mu_real, ref), mu_real(point), h)


def jacobian_real(point: FieldPoint, h: float = 1e-5) -> float:
    return float(np.linalg.det(jacobian_real_matrix(point, h)))


def invariant_gradients(point: FieldPoint, h: float = 1e-5,
                        reference: np.ndarray | None = None) -> np.ndarray:
    """Central-difference d r_k / d U in the canonical unknowns (rows k)."""
    if reference is None:
        reference = char_data(point).angles
    return _fd_jacobian(_tracked(point.N, FieldPoint.from_vector, reference), point.vector(), h)


def invariant_gradients_exact(point: FieldPoint, angles: np.ndarray | None = None) -> np.ndarray:
    """d r_k / d U from dF/dU at the critical point (F_phi vanishes there)."""
    N = point.N
    if angles is None:
        angles = char_data(point).angles
    phi = np.asarray(angles)
    G = np.empty((phi.size, 2 * N))
    G[:, 0] = N * point.lam ** (N / 2 - 1) * np.cos(N * phi)
    G[:, 1] = 1.0
    for j in range(1, N):
        G[:, 2 * j] = 2 * np.cos(j * phi)
        G[:, 2 * j + 1] = -2 * np.sin(j * phi)
    return G


def complex_to_real_columns(N: int) -> np.ndarray:
    """C with (d/d mu_real) = (d/d mu_complex) C for the column orders used here."""
    C = np.zeros((2 * N, 2 * N), dtype=complex)
    C[0, 0] = 1.0
    # complex columns: 0 -> L^{N/2}, 1..2N-1 -> a_{N-1}, ..., a_{1-N}
    col = lambda s: N - s  # index of a_s
    C[col(0), 1] = 1.0
    for j in range(1, N):
        C[col(j), 1 + j] = 1.0
        C[col(-j), 1 + j] = 1.0
        C[col(j), N + j] = 1j
        C[col(-j), N + j] = -1j
    return C


# ---------------------------------------------------------------------------
# Advection of the invariants


def _speed_rows(point: FieldPoint, h: float):
    cd = char_data(point)
    if not np.all(cd.valid):
        raise NotHyperbolic("a characteristic is vertical; tan(phi_k) undefined")
    G = invariant_gradients(point, h, cd.angles)
    return cd, G


def advection_check(jet: Jet, h: float = 1e-5, method: str = "svd") -> float:
    """max_k of the norm of (grad r_k, lambda_k grad r_k) projected on the jet kernel.

    Equivalently the largest |grad r_k . xi + lambda_k grad r_k . eta| over
    unit vectors (xi, eta) solving A xi + B eta = 0 at ``jet.point``.
    """
    cd, G = _speed_rows(jet.point, h)
    K = kernel_basis(jet.point, method)
    rows = np.hstack([G, cd.speeds[:, None] * G])
    return float(np.max(np.linalg.norm(rows @ K, axis=1)))


def advection_residual(jet: Jet, h: float = 1e-5) -> float:
    """max_k |(r_k)_x + lambda_k (r_k)_y| for the derivatives carried by ``jet``."""
    cd, G = _speed_rows(jet.point, h)
    return float(np.max(np.abs(G @ jet.dx + cd.speeds * (G @ jet.dy))))
