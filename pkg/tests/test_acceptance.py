"""End-to-end acceptance checks, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary)
before asserting, so a failing criterion still reports its numbers.
"""

import io
import time

import numpy as np

from magflow.chars import char_data, jacobian_complex, jacobian_real, value_gap
from magflow.claws import (
    bracket_determinant, explicit_laws, fake_law, g_densities, g_independence, n2_laws,
    power_law, validity_check,
)
from magflow.cli import main
from magflow.families import n1_family, n1_family_omega, squared_family
from magflow.fields import FieldGrid, FourierFieldSpec, hermitian_modes
from magflow.fileio import format_grid, format_spec, parse_grid, parse_spec
from magflow.flow import FlowState, drift, integrate, order_ratio
from magflow.sampling import random_chart_point, random_hyperbolic_poly, random_jet, random_point
from magflow.semiham import (
    DiagonalChart, SyntheticChart, all_semiham_residuals, chart_scale, lame_two_path,
)
from magflow.system import (
    build_matrices, characteristic_speeds, n2_display_matrices, n2_transformed_matrices,
    system_residual,
)
from magflow.trigpoly import critical_points, vieta_product


def test_criterion_1_vieta(record):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(200):
        N = 1 + n % 5
        cs = critical_points(random_hyperbolic_poly(rng, N))
        worst = max(worst, abs(vieta_product(cs, N) + 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 5
    record(1, ok, f"max |prod x_k + 1| = {worst:.2e} (tol 1e-9), {dt:.2f} s (limit 5 s)")
    assert ok


def test_criterion_2_jacobian_identity(record):
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst_rel, min_real = 0.0, np.inf
    for N in (1, 2, 3):
        for _ in range(50):
            p = random_point(rng, N)
            _, dM, rhs = jacobian_complex(p)
            worst_rel = max(worst_rel, abs(dM - rhs) / abs(dM))
            min_real = min(min_real, abs(jacobian_real(p)))
    dt = time.perf_counter() - t0
    ok = worst_rel <= 1e-8 and min_real > 1e-8 and dt < 30
    record(2, ok, f"max rel gap {worst_rel:.2e} (tol 1e-8), min |det real| {min_real:.2e} "
                  f"(> 1e-8), {dt:.2f} s (limit 30 s)")
    assert ok


def test_criterion_3_exact_family_closure(record):
    src = squared_family()
    rng = np.random.default_rng(303)
    res = lin = disp = 0.0
    for x, y in rng.uniform(0, 1, size=(50, 2)):
        jet = src.jet(x, y)
        r = system_residual(jet)
        m = build_matrices(jet.point)
        res = max(res, float(np.max(np.abs(r))))
        lin = max(lin, float(np.max(np.abs(m.A @ jet.dx + m.B @ jet.dy - r))))
        # the same linearity on arbitrary jets at the same point
        rj = random_jet(rng, jet.point)
        lin = max(lin, float(np.max(np.abs(m.A @ rj.dx + m.B @ rj.dy - system_residual(rj)))))
        t, d = n2_transformed_matrices(jet.point), n2_display_matrices(jet.point)
        disp = max(disp, float(np.max(np.abs(t.A - d.A))), float(np.max(np.abs(t.B - d.B))))
    ok = res <= 1e-12 and lin <= 1e-12 and disp <= 1e-12
    record(3, ok, f"residual {res:.2e}, linearity gap {lin:.2e}, f,g matrix gap {disp:.2e} "
                  f"(tol 1e-12 each)")
    assert ok


def test_criterion_4_law_validity(record):
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    laws = explicit_laws(2) + [power_law(2, 2), power_law(2, 3)] + n2_laws()
    analytic = fd = g_worst = 0.0
    fake_min = np.inf
    for _ in range(100):
        p = random_point(rng, 2)
        for law in laws:
            analytic = max(analytic, validity_check(p, law))
            fd = max(fd, validity_check(p, law, fd=True))
        for law in g_densities(p):
            g_worst = max(g_worst, validity_check(p, law, fd=True))
        fake_min = min(fake_min, validity_check(p, fake_law(2)))
    dt = time.perf_counter() - t0
    ok = analytic <= 1e-10 and fd <= 1e-6 and g_worst <= 1e-6 and fake_min >= 1e-3 and dt < 60
    record(4, ok, f"analytic {analytic:.2e} (1e-10), FD {fd:.2e} (1e-6), G_k FD {g_worst:.2e} "
                  f"(1e-6), fake min {fake_min:.2e} (>= 1e-3), {dt:.1f} s (limit 60 s)")
    assert ok


def test_criterion_5_independence(record):
    rng = np.random.default_rng(505)
    min_det = np.inf
    monotone = 0
    worst_final = 0.0
    for _ in range(20):
        p = random_point(rng, 2, min_cos=0.05)
        gap = value_gap(char_data(p))
        min_det = min(min_det, abs(g_independence(p, 1e-3 * gap)))
        dM = jacobian_complex(p)[1]
        gaps = [abs(bracket_determinant(p, f * gap) - dM) / abs(dM) for f in (1e-2, 1e-3, 1e-4)]
        monotone += gaps[0] > gaps[1] > gaps[2]
        worst_final = max(worst_final, gaps[2])
    ok = min_det > 1e-10 and monotone == 20 and worst_final <= 1e-3
    record(5, ok, f"min |det dG| {min_det:.2e} (> 1e-10), monotone at {monotone}/20 points, "
                  f"worst final rel gap {worst_final:.2e} (tol 1e-3; approach is O(sqrt(eps)))")
    assert ok


def test_criterion_6_semi_hamiltonian(record):
    rng = np.random.default_rng(606)
    t0 = time.perf_counter()
    ok_floor = True
    worst_ratio = worst_floor = worst_lame = 0.0
    for _ in range(20):
        ch = DiagonalChart(random_chart_point(rng))
        res = all_semiham_residuals(ch)
        S = chart_scale(res)
        for s in res:
            ok_floor &= s.residual <= s.floor and s.floor <= 1e-4 * S
            worst_ratio = max(worst_ratio, s.residual / s.floor)
            worst_floor = max(worst_floor, s.floor / S)
        for i, j, k in [(0, 1, 2), (1, 2, 3), (2, 3, 0), (3, 0, 1)]:
            worst_lame = max(worst_lame, lame_two_path(ch, i, j, k, 0.5 * ch.radius))
    bad = SyntheticChart(lambda r: np.array([r[1] * r[2], r[0], r[0] + r[1]]), [0.5, 1.0, 1.0])
    control = max(s.residual / s.floor for s in all_semiham_residuals(bad))
    dt = time.perf_counter() - t0
    ok = ok_floor and control >= 100 and worst_lame <= 1e-3 and dt < 180
    record(6, ok, f"max residual/floor {worst_ratio:.2f} (<= 1), max floor/scale "
                  f"{worst_floor:.2e} (<= 1e-4), control {control:.2e} (>= 100), "
                  f"Lame {worst_lame:.2e} (<= 1e-3), {dt:.1f} s (limit 180 s)")
    assert ok


def test_criterion_7_flow(record):
    t0 = time.perf_counter()
    spec = n1_family()
    om = n1_family_omega(spec)
    s0 = FlowState(0.0, 0.0, 0.3)
    d1 = drift(integrate(s0, spec, om, T=50.0, dt=1e-3))[0]
    dc = drift(integrate(s0, spec, lambda x, y: 1.1 * om(x, y), T=50.0, dt=1e-3))[0]
    d2 = drift(integrate(s0, squared_family(), om, T=50.0, dt=1e-3))[0]
    ratio = order_ratio(s0, spec, om, T=10.0, dt=0.05)
    dt = time.perf_counter() - t0
    ok = d1 <= 1e-8 and dc >= 1e-3 and d2 <= 1e-8 and abs(ratio - 16) <= 0.3 * 16 and dt < 60
    record(7, ok, f"N=1 drift {d1:.2e} (1e-8), control {dc:.2e} (>= 1e-3), squared {d2:.2e} "
                  f"(1e-8), order ratio {ratio:.2f} (16 +- 30%), {dt:.1f} s (limit 60 s)")
    assert ok


def test_criterion_8_characteristics(record):
    rng = np.random.default_rng(808)
    worst = 0.0
    for n in range(50):
        p = random_point(rng, 1 + n % 3, min_cos=1e-3)
        tan = np.sort(char_data(p).speeds)
        lam = characteristic_speeds(p)
        if np.max(np.abs(lam.imag)) > 1e-6 * np.max(np.abs(lam.real) + 1):
            worst = np.inf
        rel = np.abs(np.sort(lam.real) - tan) / np.maximum(np.abs(tan), 1.0)
        worst = max(worst, float(np.max(rel)))
    ok = worst <= 1e-6
    record(8, ok, f"max relative speed gap {worst:.2e} over 50 points (tol 1e-6)")
    assert ok


def _cli(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out, stderr=io.StringIO())
    return code, out.getvalue()


def test_criterion_9_determinism_and_formats(record, tmp_path):
    runs = [
        ("jacobian", "--N", "3", "--points", "5", "--seed", "3"),
        ("check-laws", "--points", "5", "--seed", "3"),
        ("check-semiham", "--points", "1", "--seed", "3"),
        ("egorov", "--points", "10", "--seed", "3"),
    ]
    same = all(_cli(*a) == _cli(*a) for a in runs)
    spec_file = tmp_path / "f.spec"
    spec_file.write_text(format_spec(n1_family()))
    csvs = []
    for name in ("a.csv", "b.csv"):
        code, _ = _cli("simulate", "--spec", str(spec_file), "--T", "1", "--dt", "0.01",
                       "--out", str(tmp_path / name))
        csvs.append((tmp_path / name).read_bytes())
    same &= csvs[0] == csvs[1]

    rng = np.random.default_rng(909)
    c = rng.normal(size=6)
    spec = FourierFieldSpec(2, 1.5, 2.5, {
        "LOGLAMBDA": hermitian_modes([(1, -1, complex(c[0], c[1]))]),
        "U1": hermitian_modes([(0, 0, c[2]), (2, 1, complex(c[3], c[4]))]),
        "V1": hermitian_modes([(0, 3, complex(c[5], np.pi))]),
    })
    text = format_spec(spec)
    back = parse_spec(text)
    spec_exact = format_spec(back) == text and all(
        np.array_equal(spec.modes[k], back.modes[k]) for k in spec.modes)
    grid = FieldGrid(2, 8, 4, np.pi, np.e,
                     np.concatenate([rng.uniform(0.1, 3, size=(4, 8, 1)),
                                     rng.normal(size=(4, 8, 3)) * 10.0 ** rng.integers(-300, 300, size=(4, 8, 3))],
                                    axis=-1))
    gtext = format_grid(grid)
    gback = parse_grid(gtext)
    grid_exact = np.array_equal(gback.data, grid.data) and format_grid(gback) == gtext
    ok = same and spec_exact and grid_exact
    record(9, ok, f"byte-identical reruns {same}, spec round trip {spec_exact}, "
                  f"grid round trip {grid_exact}")
    assert ok
