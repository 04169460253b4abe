import numpy as np
import pytest

from magflow.chars import char_data, jacobian_complex, value_gap
from magflow.claws import (
    bracket_determinant, catalog, density_rank, epsilon_max, explicit_laws, fake_law,
    fd_gradient, g_densities, g_gradients_exact, g_independence, grid_divergence,
    invariance_residual, level_points, n2_laws, omega_divergence_grid, power_coefficient,
    power_law, surface_law, surface_law_grid, validity_check,
)
from magflow.errors import EpsilonTooLarge, GridMismatch, NearVerticalCritical
from magflow.families import n1_family, squared_family
from magflow.fields import FieldGrid, FieldPoint, FourierFieldSpec
from magflow.sampling import random_jet, random_point
from magflow.system import omega_divergence
from magflow.trigpoly import eval_dphi, eval_poly


def flat(N):
    return FieldPoint(N, 1.0, np.zeros(N), np.zeros(N - 1))


def conv_power_coeff(coeffs_full, m, k):
    """k-th coefficient of F**m by repeated full convolution of the two-sided sequence."""
    out = np.array([1.0 + 0j])
    for _ in range(m):
        out = np.convolve(out, coeffs_full)
    centre = (out.size - 1) // 2
    return out[centre + k]


def two_sided(point):
    a = point.poly().coeffs
    return np.concatenate([np.conj(a[:0:-1]), a])


class TestExplicitLaws:
    def test_n2_l1_is_f_g(self, rng):
        p = random_point(rng, 2)
        L1 = explicit_laws(2)[0]
        fg = n2_laws()[0]
        s = np.sqrt(p.lam)
        assert L1.P(p) == pytest.approx(p.u[1] / s, rel=1e-14)
        assert L1.Q(p) == pytest.approx(p.v[0] / s, rel=1e-14)
        assert L1.P(p) == pytest.approx(fg.P(p), rel=1e-14)
        assert L1.Q(p) == pytest.approx(fg.Q(p), rel=1e-14)

    def test_n2_l2(self, rng):
        p = random_point(rng, 2)
        L2 = explicit_laws(2)[1]
        s = np.sqrt(p.lam)
        assert L2.P(p) == pytest.approx(s * p.u[1], rel=1e-14)
        assert L2.Q(p) == pytest.approx(-s * p.v[0], rel=1e-14)

    def test_n1_l1(self):
        p = FieldPoint(1, 1.7, [0.4], [])
        L1 = explicit_laws(1)[0]
        assert L1.P(p) == pytest.approx(0.4)
        assert L1.Q(p) == 0.0

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_analytic_gradients_match_fd(self, rng, N):
        p = random_point(rng, N)
        for law in catalog(N):
            ga, gb = law.gradients(p)
            fa, fb = law.gradients(p, fd=True)
            assert np.allclose(ga, fa, atol=1e-7)
            assert np.allclose(gb, fb, atol=1e-7)


class TestPowerLaw:
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_m1_is_l2(self, rng, N):
        p = random_point(rng, N)
        L2, P1 = explicit_laws(N)[1], power_law(N, 1)
        assert P1.P(p) == pytest.approx(L2.P(p), rel=1e-13, abs=1e-14)
        assert P1.Q(p) == pytest.approx(L2.Q(p), rel=1e-13, abs=1e-14)

    def test_n1_square_closed_form(self):
        lam, u0 = 1.3, 0.45
        p = FieldPoint(1, lam, [u0], [])
        # F = 2 sqrt(L) cos(phi) + u0: the e^{i phi} coefficient of F**2 is 2 u0 sqrt(L)
        assert power_coefficient(p, 2) == pytest.approx(2 * u0 * np.sqrt(lam), rel=1e-14)

    @pytest.mark.parametrize("N,m", [(1, 3), (2, 2), (3, 3), (4, 2)])
    def test_convolution_oracle(self, rng, N, m):
        p = random_point(rng, N)
        expect = conv_power_coeff(two_sided(p), m, 1)
        assert power_coefficient(p, m) == pytest.approx(expect, rel=1e-12)

    def test_validity_on_exact_family(self):
        src = squared_family()
        for y in np.linspace(0.05, 0.95, 7):
            p = src.point(0.3, y)
            for m in (1, 2, 3):
                assert validity_check(p, power_law(2, m)) <= 1e-8

    def test_rejects_m0(self):
        with pytest.raises(ValueError):
            power_law(2, 0)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_density_rank_of_powers(self, rng, N):
        p = random_point(rng, N)
        laws = [power_law(N, m) for m in range(1, 2 * N + 2)]
        r = density_rank(p, laws)
        assert 1 <= r <= 2 * N


class TestValidity:
    def test_catalog_at_random_points(self):
        r = np.random.default_rng(5)
        worst = 0.0
        for _ in range(100):
            p = random_point(r, 2)
            for law in catalog(2):
                worst = max(worst, validity_check(p, law))
        assert worst <= 1e-10

    @pytest.mark.parametrize("N", [1, 3, 4])
    def test_catalog_other_degrees(self, rng, N):
        for _ in range(10):
            p = random_point(rng, N)
            for law in catalog(N):
                assert validity_check(p, law) <= 1e-10
                assert validity_check(p, law, fd=True) <= 1e-6

    def test_fake_law_fails(self, n2_points):
        for p in n2_points:
            assert validity_check(p, fake_law(2)) >= 1e-3

    def test_svd_and_qr_agree(self, n2_points):
        for p in n2_points:
            for law in catalog(2) + [fake_law(2)]:
                a = validity_check(p, law, method="svd")
                b = validity_check(p, law, method="qr")
                assert abs(a - b) <= 1e-12

    def test_flat_point_laws_vanish(self):
        for law in catalog(2):
            assert validity_check(flat(2), law) <= 1e-14

    def test_quadratic_law_expansion(self, rng):
        law = n2_laws()[2]
        for _ in range(20):
            jet = random_jet(rng, random_point(rng, 2))
            p = jet.point
            s = np.sqrt(p.lam)
            f, g = p.u[1] / s, p.v[0] / s
            # chain rule for f = u_1 / sqrt(L), g = v_1 / sqrt(L)
            d = lambda num, D: D[2 if num == "f" else 3] / s - (f if num == "f" else g) * D[0] / (2 * p.lam)
            fx, fy, gx, gy = d("f", jet.dx), d("f", jet.dy), d("g", jet.dx), d("g", jet.dy)
            expanded = (jet.dx[1] + 2 * jet.dx[0] + 0.5 * (g * gx - f * fx)
                        - 0.5 * (fy * g + f * gy))
            assert law.divergence(jet) == pytest.approx(expanded, abs=1e-12)


class TestInvariantSurfaces:
    def test_flat_constant_angle(self):
        spec = n1_family(log_amp=0.0, u_amp=0.0)
        grid = FieldGrid.sample(spec, 16, 16)
        f = np.full((16, 16), 0.7)
        res = invariance_residual(f, grid, np.zeros((16, 16)))
        assert np.max(np.abs(res)) <= 1e-14
        P, Q = surface_law_grid(f, grid)
        assert np.ptp(P) <= 1e-15 and np.ptp(Q) <= 1e-15

    def _branch(self, NY=64):
        L = 2 * np.pi
        spec = n1_family(Lx=L, Ly=L)
        grid = FieldGrid.sample(spec, 16, NY)
        X, Y = np.meshgrid(*grid.coords())
        vals, _, dy = spec.evaluate(X, Y)
        lam, u0 = vals[..., 0], vals[..., 1]
        om = -dy[..., 1] / (2 * lam)
        f = np.arccos((0.5 - u0) / (2 * np.sqrt(lam)))
        return grid, f, om

    def test_level_branch_is_invariant(self):
        grid, f, om = self._branch()
        assert np.max(np.abs(invariance_residual(f, grid, om))) <= 1e-6
        assert np.max(np.abs(grid_divergence(*surface_law_grid(f, grid), grid))) <= 1e-6

    def test_random_angle_is_not(self, rng):
        grid, f, om = self._branch()
        g = rng.uniform(0, 2 * np.pi, size=f.shape)
        assert np.max(np.abs(invariance_residual(g, grid, om))) >= 1e-1

    def test_grid_divergence_identity(self, rng):
        # any field will do: the identity is algebraic
        spec = FourierFieldSpec(2, modes={
            "LOGLAMBDA": [(0, 1, -0.1j), (0, -1, 0.1j)],
            "U0": [(1, 0, 0.15), (-1, 0, 0.15)],
            "U1": [(0, 0, 1.2), (1, 1, 0.1), (-1, -1, 0.1)],
            "V1": [(0, 0, 0.7), (1, -1, 0.2j), (-1, 1, -0.2j)],
        })
        grid = FieldGrid.sample(spec, 32, 32)
        f = rng.uniform(0, 2 * np.pi, size=(32, 32))
        lhs = grid_divergence(*surface_law_grid(f, grid), grid)
        rhs = invariance_residual(f, grid, omega_divergence_grid(grid))
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))

    def test_jet_divergence_identity(self, rng):
        w = np.array([0.3, -0.2, 0.5, 0.1])
        fn = lambda pt: float(w @ pt.vector())
        law = surface_law(fn)
        for _ in range(20):
            jet = random_jet(rng, random_point(rng, 2))
            p = jet.point
            s = np.sqrt(p.lam)
            f = fn(p)
            fx, fy = w @ jet.dx, w @ jet.dy
            lx, ly = jet.dx[0], jet.dy[0]
            expect = (s * np.cos(f) * fx + np.sin(f) * lx / (2 * s)
                      + s * np.sin(f) * fy - np.cos(f) * ly / (2 * s)
                      + omega_divergence(jet) * p.lam)
            assert law.divergence(jet) == pytest.approx(expect, abs=1e-7)

    def test_shape_mismatch(self):
        grid = FieldGrid.sample(n1_family(), 16, 16)
        with pytest.raises(GridMismatch):
            invariance_residual(np.zeros((8, 8)), grid, np.zeros((16, 16)))
        with pytest.raises(GridMismatch):
            grid_divergence(np.zeros((16, 16)), np.zeros((16, 8)), grid)


class TestLevelPoints:
    def test_closed_form(self):
        lp = level_points(flat(2), 0.1)
        k = int(np.argmin(np.abs(np.angle(np.exp(1j * lp.critical_angles)))))
        assert lp.signs[k] == -1
        assert lp.angles[k] == pytest.approx(np.arccos(0.95) / 2, abs=1e-13)

    def test_levels_hit(self, rng):
        for N in (1, 2, 3):
            p = random_point(rng, N, min_value_gap=0.1)
            cd = char_data(p)
            eps = 0.1 * epsilon_max(cd)
            lp = level_points(p, eps)
            assert np.allclose(eval_poly(p.poly(), lp.angles), lp.levels, atol=1e-12)
            assert np.allclose(lp.levels, cd.invariants + lp.signs * eps)

    def test_sqrt_rate(self, rng):
        p = random_point(rng, 2, min_value_gap=0.2)
        cd = char_data(p)
        F = p.poly()
        h = 1e-4
        curv = np.abs((eval_dphi(F, cd.angles + h) - eval_dphi(F, cd.angles - h)) / (2 * h))
        expect = np.sqrt(2 / curv)
        for frac in (1e-4, 1e-6, 1e-8):
            eps = frac * value_gap(cd)
            lp = level_points(p, eps)
            dist = np.abs(np.angle(np.exp(1j * (lp.angles - cd.angles))))
            assert np.allclose(dist / np.sqrt(eps), expect, rtol=10 * np.sqrt(eps) + 1e-4)

    def test_epsilon_too_large(self, rng):
        p = random_point(rng, 2)
        with pytest.raises(EpsilonTooLarge):
            level_points(p, epsilon_max(char_data(p)) * 1.01)
        with pytest.raises(EpsilonTooLarge):
            level_points(p, 0.0)


class TestGLaws:
    def test_flat_values(self):
        lp = level_points(flat(3), 0.05)
        laws = g_densities(flat(3), 0.05)
        for k, law in enumerate(laws):
            assert law.P(flat(3)) == pytest.approx(np.sin(lp.angles[k]), abs=1e-14)
            assert law.Q(flat(3)) == pytest.approx(-np.cos(lp.angles[k]), abs=1e-14)

    def test_values_random_point(self, rng):
        p = random_point(rng, 2, min_value_gap=0.1)
        eps = 1e-3 * value_gap(char_data(p))
        lp = level_points(p, eps)
        c = p.a(1) / (4 * np.sqrt(p.lam))
        for k, law in enumerate(g_densities(p, eps)):
            assert law.P(p) == pytest.approx(np.sqrt(p.lam) * np.sin(lp.angles[k]) + c.imag,
                                             rel=1e-13)

    def test_valid_on_exact_family(self):
        src = squared_family()
        for y in (0.1, 0.37, 0.8):
            p = src.point(0.2, y)
            for law in g_densities(p):
                assert validity_check(p, law, fd=True) <= 1e-6

    def test_valid_at_random_points(self, rng):
        for _ in range(5):
            p = random_point(rng, 2, min_value_gap=0.2)
            for law in g_densities(p):
                assert validity_check(p, law, fd=True) <= 1e-6

    def test_fd_gradient_matches_implicit(self, rng):
        p = random_point(rng, 2, min_value_gap=0.2)
        eps = 1e-2 * value_gap(char_data(p))
        lp = level_points(p, eps)
        exact = g_gradients_exact(p, lp)
        for k, law in enumerate(g_densities(p, eps)):
            assert np.allclose(fd_gradient(law.P, p, order=4), exact[k], atol=1e-6)

    def test_smooth_in_eps(self, rng):
        p = random_point(rng, 2, min_value_gap=0.2)
        gap = value_gap(char_data(p))
        G = lambda e: np.array([law.P(p) for law in g_densities(p, e)])
        e0, de = 0.01 * gap, 1e-4 * gap
        d1 = (G(e0 + de) - G(e0 - de)) / (2 * de)
        d2 = (G(e0 + de / 2) - G(e0 - de / 2)) / de
        assert np.all(np.isfinite(d1))
        assert np.allclose(d1, d2, rtol=1e-3)

    def test_independent(self, n2_points):
        for p in n2_points[:5]:
            if np.any(np.abs(char_data(p).cos) <= 1e-2):
                continue
            assert abs(g_independence(p)) > 1e-10

    def test_vertical_critical_point_rejected(self):
        # 2cos2phi has critical points at +-pi/2
        with pytest.raises(NearVerticalCritical):
            g_independence(flat(2), eps=0.1)

    def test_bracket_tends_to_det_m(self, rng):
        p = random_point(rng, 2, min_cos=0.2, min_value_gap=0.2)
        gap = value_gap(char_data(p))
        detM = jacobian_complex(p)[1]
        gaps = [abs(bracket_determinant(p, f * gap) - detM) / abs(detM)
                for f in (1e-2, 1e-3, 1e-4)]
        assert gaps[0] > gaps[1] > gaps[2]
        # square-root rate in eps once eps is small (sqrt(10) per decade)
        assert 2 < gaps[1] / gaps[2] < 5
