"""Real trigonometric polynomials on the unit circle and their critical points.

A polynomial of degree N is stored through its non-negative Fourier
coefficients ``a_0 .. a_N``; negative ones follow from ``a_{-k} = conj(a_k)``
so that

    F(phi) = sum_{k=-N}^{N} a_k exp(i k phi)

is real for real ``phi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RootFindingFailure, WrongCount

TOL_ROOT = 1e-9
TOL_SEP = 1e-6
# eigenvalues of the companion matrix drift off the circle by O(sqrt(eps))
# near clustered roots, hence the looser membership test
TOL_CIRCLE = 1e-6

MAXIMUM = "maximum"
MINIMUM = "minimum"
DEGENERATE = "degenerate"

STRICTLY_HYPERBOLIC = "StrictlyHyperbolic"
DEGENERATE_POLY = "Degenerate"

TWO_PI = 2.0 * np.pi


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrigPoly:
    """F(phi) = sum_k a_k e^{ik phi} with Hermitian symmetry.

    ``coeffs[k]`` holds ``a_k`` for ``k = 0..N``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.size < 2:
            raise ValueError("degree must be at least 1")
        if c[0].imag != 0.0:
            if abs(c[0].imag) > 1e-12 * max(1.0, abs(c[0])):
                raise ValueError("a_0 must be real")
            c[0] = c[0].real
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def full(self) -> np.ndarray:
        """Coefficients a_{-N} .. a_N."""
        a = self.coeffs
        return np.concatenate([np.conj(a[:0:-1]), a])

    def coeff(self, k: int) -> complex:
        if abs(k) > self.degree:
            return 0j
        return self.coeffs[k] if k >= 0 else np.conj(self.coeffs[-k])

    def __call__(self, phi):
        return eval_poly(self, phi)


def eval_poly(F: TrigPoly, phi):
    """Value of F at angle(s) ``phi`` (exactly real)."""
    phi = np.asarray(phi, dtype=float)
    k = np.arange(1, F.degree + 1)
    terms = F.coeffs[1:] * np.exp(1j * np.multiply.outer(phi, k))
    return F.coeffs[0].real + 2.0 * terms.real.sum(axis=-1)


def eval_dphi(F: TrigPoly, phi):
    """dF/dphi at ``phi``."""
    phi = np.asarray(phi, dtype=float)
    k = np.arange(1, F.degree + 1)
    terms = F.coeffs[1:] * np.exp(1j * np.multiply.outer(phi, k))
    return -2.0 * (k * terms.imag).sum(axis=-1)


def eval_d2phi(F: TrigPoly, phi):
    phi = np.asarray(phi, dtype=float)
    k = np.arange(1, F.degree + 1)
    terms = F.coeffs[1:] * np.exp(1j * np.multiply.outer(phi, k))
    return -2.0 * (k * k * terms.real).sum(axis=-1)


def eval_dphi_n(F: TrigPoly, phi, n: int):
    """n-th angular derivative of F."""
    phi = np.asarray(phi, dtype=float)
    k = np.arange(1, F.degree + 1)
    terms = F.coeffs[1:] * (1j * k) ** n * np.exp(1j * np.multiply.outer(phi, k))
    out = 2.0 * terms.real.sum(axis=-1)
    if n == 0:
        out = out + F.coeffs[0].real
    return out


def derivative_polynomial(F: TrigPoly) -> np.ndarray:
    """Coefficients of P(z) = z^N * z F'(z), highest degree first (degree 2N)."""
    N = F.degree
    k = np.arange(-N, N + 1)
    c = k * F.full()  # coefficient of z^{k+N}
    return c[::-1]


@dataclass(frozen=True)
class CriticalSet:
    angles: np.ndarray
    points: np.ndarray
    kinds: tuple

    def __len__(self):
        return self.angles.size

    @property
    def degenerate(self) -> bool:
        return DEGENERATE in self.kinds


def _polish(coeffs, z, steps=2):
    dcoeffs = np.polyder(coeffs)
    for _ in range(steps):
        d = np.polyval(dcoeffs, z)
        if d == 0:
            break
        z = z - np.polyval(coeffs, z) / d
    return z


def all_roots(F: TrigPoly) -> np.ndarray:
    """All 2N roots of z^N * zF'(z), from companion-matrix eigenvalues."""
    coeffs = derivative_polynomial(F)
    if coeffs[0] == 0:
        raise RootFindingFailure("leading coefficient a_N vanishes")
    try:
        z = np.roots(coeffs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RootFindingFailure(str(exc)) from exc
    if z.size != coeffs.size - 1 or not np.all(np.isfinite(z)):
        raise RootFindingFailure("companion eigenvalues are not finite")
    return np.array([_polish(coeffs, zi, steps=1) for zi in z])


def critical_points(F: TrigPoly, tol_root: float = TOL_ROOT,
                    tol_circle: float = TOL_CIRCLE) -> CriticalSet:
    """Critical points of F on the unit circle, sorted by angle in [0, 2pi)."""
    z = all_roots(F)
    on_circle = z[np.abs(np.abs(z) - 1.0) <= tol_circle]
    angles = np.mod(np.angle(on_circle), TWO_PI)
    scale = max(1.0, float(np.sum(np.arange(F.degree + 1) ** 2 * np.abs(F.coeffs))))
    # Newton on the real equation F'(phi) = 0 restores full accuracy
    for _ in range(3):
        d2 = eval_d2phi(F, angles)
        d1 = eval_dphi(F, angles)
        ok = np.abs(d2) > tol_root * scale
        angles = np.where(ok, angles - d1 / np.where(ok, d2, 1.0), angles)
    angles = np.sort(np.mod(angles, TWO_PI))
    d1 = eval_dphi(F, angles)
    if np.any(np.abs(d1) > tol_root * scale):
        raise RootFindingFailure(
            f"critical point residual {np.max(np.abs(d1)):.3e} exceeds tolerance")
    d2 = eval_d2phi(F, angles)
    kinds = tuple(
        DEGENERATE if abs(s) <= tol_root * scale else (MAXIMUM if s < 0 else MINIMUM)
        for s in d2
    )
    return CriticalSet(_frozen(angles), _frozen(np.exp(1j * angles)), kinds)


def vieta_product(cs: CriticalSet, degree: int | None = None) -> complex:
    """Product of the critical points x_k; equals -1 on the hyperbolic region."""
    if degree is not None and len(cs) != 2 * degree:
        raise WrongCount(f"expected {2 * degree} critical points, got {len(cs)}")
    return complex(np.prod(cs.points))


def circular_gaps(angles: np.ndarray) -> np.ndarray:
    """Gaps between consecutive sorted angles, including the wrap-around gap."""
    if angles.size == 0:
        return np.array([])
    return np.diff(np.concatenate([angles, [angles[0] + TWO_PI]]))


def classify(F: TrigPoly, tol_root: float = TOL_ROOT, tol_sep: float = TOL_SEP) -> str:
    cs = critical_points(F, tol_root)
    if len(cs) != 2 * F.degree or cs.degenerate:
        return DEGENERATE_POLY
    if np.min(circular_gaps(cs.angles)) <= tol_sep:
        return DEGENERATE_POLY
    return STRICTLY_HYPERBOLIC


def is_hyperbolic(F: TrigPoly, **kw) -> bool:
    try:
        return classify(F, **kw) == STRICTLY_HYPERBOLIC
    except RootFindingFailure:
        return False


def multiply(F: TrigPoly, G: TrigPoly) -> TrigPoly:
    """Product of two trigonometric polynomials (full coefficient convolution)."""
    prod = np.convolve(F.full(), G.full())
    n = F.degree + G.degree
    return TrigPoly(prod[n:])


def power(F: TrigPoly, m: int) -> TrigPoly:
    """F**m by repeated convolution; degree m*N."""
    if m < 1:
        raise ValueError("power requires m >= 1")
    out = F
    for _ in range(m - 1):
        out = multiply(out, F)
    return out


def from_sequence(coeffs: Sequence[complex]) -> TrigPoly:
    return TrigPoly(np.asarray(coeffs, dtype=complex))
