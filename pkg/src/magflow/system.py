"""The quasi-linear system A(U) U_x + B(U) U_y = 0 on the 2N unknowns.

Residual components, in order:

    0            sqrt(L) * Q_0                                  (k = 0 equation)
    2k-1, 2k     Re, Im of 2 Q_k - (2k/N) L^{-N/2} a_k Q_N       (k = 1..N-1)
    2N-1         Re(Q_N) * L^{(1-N)/2}

where L is the conformal factor Lambda. Every scaling is positive, so the
solution set is that of the unscaled equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import KernelDimensionUnexpected
from .fields import FieldPoint, Jet


def q_residual(jet: Jet, k: int) -> complex:
    """Q_k: the magnetic-field-free part of the k-th Fourier mode of dF/dt."""
    p = jet.point
    lam = p.lam
    lx, ly = jet.dx[0], jet.dy[0]
    am, ap = p.a(k - 1), p.a(k + 1)
    amx, amy = jet.coeff_derivs(k - 1)
    apx, apy = jet.coeff_derivs(k + 1)
    return ((amx + apx) / 2
            + (amy - apy) / 2j
            + ly / (2 * lam) * 1j * ((k - 1) * am + (k + 1) * ap) / 2
            - lx / (2 * lam) * ((k - 1) * am - (k + 1) * ap) / 2)


def omega(jet: Jet) -> tuple[float, float]:
    """(magnetic field, consistency residual Re(Q_N) L^{(1-N)/2})."""
    N = jet.N
    lam = jet.point.lam
    qn = q_residual(jet, N)
    om = qn.imag / (N * np.sqrt(lam) * lam ** (N / 2))
    return float(om), float(qn.real * lam ** ((1 - N) / 2))


def omega_divergence(jet: Jet) -> float:
    """Magnetic field from the divergence identity

        Omega L = [(v_{N-1} L^{(1-N)/2})_x - (u_{N-1} L^{(1-N)/2})_y] / (2N).
    """
    N = jet.N
    p = jet.point
    lam = p.lam
    s = lam ** ((1 - N) / 2)
    ds = (1 - N) / 2 * lam ** ((-1 - N) / 2)
    a = p.a(N - 1)
    ax, ay = jet.coeff_derivs(N - 1)
    bx = ax * s + a * ds * jet.dx[0]
    by = ay * s + a * ds * jet.dy[0]
    return float((bx.imag - by.real) / (2 * N * lam))


def system_residual(jet: Jet) -> np.ndarray:
    N = jet.N
    lam = jet.point.lam
    out = np.empty(2 * N)
    out[0] = np.sqrt(lam) * q_residual(jet, 0).real
    qn = q_residual(jet, N)
    for k in range(1, N):
        e = 2 * q_residual(jet, k) - (2 * k / N) * lam ** (-N / 2) * jet.point.a(k) * qn
        out[2 * k - 1] = e.real
        out[2 * k] = e.imag
    out[2 * N - 1] = qn.real * lam ** ((1 - N) / 2)
    return out


def mode_equation(jet: Jet, k: int, om: float | None = None) -> complex:
    """Left-hand side Q_k - i k Omega sqrt(L) a_k of the k-th mode equation."""
    if om is None:
        om = omega(jet)[0]
    return q_residual(jet, k) - 1j * k * om * np.sqrt(jet.point.lam) * jet.point.a(k)


@dataclass(frozen=True)
class SystemMatrices:
    A: np.ndarray
    B: np.ndarray


def build_matrices(point: FieldPoint) -> SystemMatrices:
    """A, B with A dx + B dy = system_residual(jet) for every jet at ``point``."""
    n = 2 * point.N
    A = np.empty((n, n))
    B = np.empty((n, n))
    zero = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        A[:, j] = system_residual(Jet(point, e, zero))
        B[:, j] = system_residual(Jet(point, zero, e))
    A.setflags(write=False)
    B.setflags(write=False)
    return SystemMatrices(A, B)


def characteristic_speeds(point: FieldPoint) -> np.ndarray:
    """Roots lambda of det(A lambda - B) = 0, sorted (complex if not hyperbolic)."""
    m = build_matrices(point)
    lam = scipy.linalg.eigvals(m.B, m.A)
    return np.sort_complex(lam)


def kernel_basis(point: FieldPoint, method: str = "svd", rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of K = {(xi, eta): A xi + B eta = 0}.

    Vectors are stacked as (xi, eta), length 4N; K has dimension 2N when
    [A B] has full row rank.
    """
    m = build_matrices(point)
    M = np.hstack([m.A, m.B])
    n = M.shape[0]
    if method == "svd":
        _, s, vt = np.linalg.svd(M)
        rank = int(np.sum(s > rtol * s[0]))
        basis = vt[n:].T
    elif method == "qr":
        q, r = scipy.linalg.qr(M.T)
        d = np.abs(np.diag(r))
        rank = int(np.sum(d > rtol * d.max()))
        basis = q[:, n:]
    else:
        raise ValueError(f"unknown method {method!r}")
    if rank != n:
        raise KernelDimensionUnexpected(
            f"[A B] has rank {rank}, kernel dimension {M.shape[1] - rank} != {n}")
    return basis


# ---------------------------------------------------------------------------
# N = 2 in the variables (Lambda, u_0, f, g), f = u_1/sqrt(L), g = v_1/sqrt(L)


def n2_display_matrices(point: FieldPoint) -> SystemMatrices:
    """Closed-form A, B of the N = 2 system in the unknowns (Lambda, u_0, f, g)."""
    if point.N != 2:
        raise ValueError("N = 2 only")
    lam = point.lam
    f = point.u[1] / np.sqrt(lam)
    g = point.v[0] / np.sqrt(lam)
    A = np.array([[0, 0, 1, 0],
                  [f, 0, lam, 0],
                  [2, 1, 0, g / 2],
                  [0, 0, 0, -f / 2]], dtype=float)
    B = np.array([[0, 0, 0, 1],
                  [-g, 0, 0, -lam],
                  [0, 0, -g / 2, 0],
                  [2, -1, f / 2, 0]], dtype=float)
    return SystemMatrices(A, B)


def n2_transformed_matrices(point: FieldPoint) -> SystemMatrices:
    """``build_matrices`` rewritten in the (Lambda, u_0, f, g) unknowns.

    Columns change by the chain rule U_x = J V_x; rows are recombined as
    [2 e_3, e_0, e_1 + f e_3, e_2 + g e_3] so the rows line up with the
    conservation-form equations f_x + g_y = 0, (f L)_x - (g L)_y = 0 and the
    two u_0 equations.
    """
    if point.N != 2:
        raise ValueError("N = 2 only")
    lam = point.lam
    s = np.sqrt(lam)
    f = point.u[1] / s
    g = point.v[0] / s
    J = np.array([[1, 0, 0, 0],
                  [0, 1, 0, 0],
                  [f / (2 * s), 0, s, 0],
                  [g / (2 * s), 0, 0, s]])
    T = np.array([[0, 0, 0, 2],
                  [1, 0, 0, 0],
                  [0, 1, 0, f],
                  [0, 0, 1, g]])
    m = build_matrices(point)
    return SystemMatrices(T @ m.A @ J, T @ m.B @ J)


# ---------------------------------------------------------------------------
# Geodesic (non-magnetic) case in semi-geodesic coordinates

HYPERBOLIC = "Hyperbolic"
ELLIPTIC = "Elliptic"
BORDERLINE = "Borderline"


def geodesic_matrix(a, tol: float = 1e-9):
    """Matrix of U_t + A(U) U_x = 0 for the degree-n geodesic integral.

    ``a`` holds a_0 .. a_n with a_n = 1 (a_{n-1} plays the role of the
    semi-geodesic metric coefficient g). Returns
    ``(A, eigenvalues, classification)``.
    """
    a = np.asarray(a, dtype=float).ravel()
    n = a.size - 1
    if n < 2:
        raise ValueError("need a_0 .. a_n with n >= 2")
    if a[n] != 1.0:
        raise ValueError("a_n must equal 1")
    get = lambda s: a[s] if 0 <= s <= n else 0.0
    A = np.zeros((n, n))
    A[0, n - 1] = get(1)
    for i in range(1, n):
        A[i, i - 1] = get(n - 1)
        A[i, n - 1] = (i + 1) * get(i + 1) - (n - i + 1) * get(i - 1)
    ev = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.any(np.abs(ev.imag) > tol * scale):
        kind = ELLIPTIC
    else:
        r = np.sort(ev.real)
        kind = BORDERLINE if np.any(np.diff(r) <= tol * scale) else HYPERBOLIC
    return A, ev, kind
