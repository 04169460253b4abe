"""Command-line front end: ``magflow <subcommand> [flags]``.

Exit codes: 0 success, 1 validation error or bad usage, 2 numerical
failure, 3 I/O error. Reports are plain text on stdout; tables go to CSV
when ``--out`` is given. Seeded sampling makes every report replayable.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .chars import char_data, jacobian_complex, jacobian_real, value_gap
from .claws import (
    bracket_determinant, catalog, fake_law, g_densities, g_independence, validity_check,
)
from .errors import MagflowError, NumericalFailure
from .fields import FieldGrid, FourierFieldSpec, eval_jet, grid_jet
from .fileio import load_any
from .flow import FlowState, GridSource, drift, integrate, source_jet
from .sampling import random_chart_point, random_point
from .semiham import (
    DiagonalChart, all_semiham_residuals, chart_scale, lame_two_path, pt_pattern_check,
)
from .system import geodesic_matrix, omega, system_residual


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def g(x) -> str:
    return format(float(x), ".17g")


def e(x) -> str:
    return format(float(x), ".6e")


def threads_from_env() -> int:
    raw = os.environ.get("MAGFLOW_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"MAGFLOW_THREADS must be a positive integer, got {raw!r}")
    return n


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from None
    return a, b


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _write_table(out: io.TextIOBase, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _emit_table(args, header, rows, stdout):
    if getattr(args, "out", None):
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            _write_table(fh, header, rows)
        print(f"# table written to {args.out}", file=stdout)
    else:
        _write_table(stdout, header, rows)


# ---------------------------------------------------------------------------
# inputs


def _load_source(args):
    path = args.spec or args.grid
    if path is None:
        return None
    src = load_any(path)
    if args.spec and not isinstance(src, FourierFieldSpec):
        raise UsageError(f"{path} is not a MAGFLOW-SPEC file")
    if args.grid and not isinstance(src, FieldGrid):
        raise UsageError(f"{path} is not a MAGFLOW-GRID file")
    return src


def _as_flow_source(src):
    return GridSource(src) if isinstance(src, FieldGrid) else src


def _point_at(src, at):
    return source_jet(_as_flow_source(src), *at).point


def _sample_points(args, src, n, stdout, chart=False):
    """``n`` seeded points: from the field at random (x, y) or from U-space."""
    rng = np.random.default_rng(args.seed)
    print(f"# seed {args.seed}", file=stdout)
    if src is None:
        draw = (lambda: random_chart_point(rng, args.N)) if chart else (lambda: random_point(rng, args.N))
        return [(None, draw()) for _ in range(n)]
    fs = _as_flow_source(src)
    Lx, Ly = fs.periods
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > 1000 * n:
            raise NumericalFailure("too few usable points in the field")
        xy = (rng.uniform(0, Lx), rng.uniform(0, Ly))
        pt = source_jet(fs, *xy).point
        try:
            if chart:
                DiagonalChart(pt)
                cd = char_data(pt)
                if np.min(np.diff(np.sort(cd.speeds))) <= 0.1 or value_gap(cd) <= 0.2:
                    continue
            else:
                char_data(pt)
        except NumericalFailure:
            continue
        out.append((xy, pt))
    if tries > n:
        print(f"# {tries - n} sampled sites skipped (outside the usable region)", file=stdout)
    return out


def _add_input(p, required=False):
    grp = p.add_mutually_exclusive_group(required=required)
    grp.add_argument("--spec", help="MAGFLOW-SPEC v1 file")
    grp.add_argument("--grid", help="MAGFLOW-GRID v1 file")


def _add_sampling(p, points=20):
    p.add_argument("--N", type=int, default=2, help="degree for U-space sampling (default 2)")
    p.add_argument("--points", type=int, default=points, help="number of sample points")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (logged in the report)")


# ---------------------------------------------------------------------------
# subcommands


def cmd_derive(args, stdout):
    src = _load_source(args)
    if isinstance(src, FieldGrid):
        x, y = src.coords()
        jets = [((x[i], y[j]), grid_jet(src, i, j)) for j in range(src.NY) for i in range(src.NX)]
    else:
        xs = np.arange(args.nx) * src.Lx / args.nx
        ys = np.arange(args.ny) * src.Ly / args.ny
        jets = [((xv, yv), eval_jet(src, xv, yv)) for yv in ys for xv in xs]
    N = src.N
    rows = []
    worst = cons = 0.0
    for (xv, yv), jet in jets:
        om, c = omega(jet)
        res = system_residual(jet)
        worst = max(worst, float(np.max(np.abs(res))))
        cons = max(cons, abs(c))
        rows.append([g(xv), g(yv), g(om), g(c)] + [g(r) for r in res])
    print(f"# N {N} sites {len(rows)} max|residual| {e(worst)} max|consistency| {e(cons)}", file=stdout)
    header = ["x", "y", "omega", "consistency"] + [f"res{k}" for k in range(2 * N)]
    _emit_table(args, header, rows, stdout)
    return 0


def cmd_chars(args, stdout):
    src = _load_source(args)
    pt = _point_at(src, args.at)
    cd = char_data(pt)
    print(f"# N {pt.N} at {g(args.at[0])},{g(args.at[1])}", file=stdout)
    rows = []
    for k in range(cd.angles.size):
        lam = g(cd.speeds[k]) if cd.valid[k] else "invalid"
        rows.append([k + 1, g(cd.angles[k]), cd.kinds[k], g(cd.invariants[k]), lam])
    _emit_table(args, ["k", "phi", "kind", "r", "lambda"], rows, stdout)
    return 0


def cmd_jacobian(args, stdout):
    src = _load_source(args)
    if src is not None and args.at is not None:
        pts = [(args.at, _point_at(src, args.at))]
    else:
        pts = _sample_points(args, src, args.points, stdout)
    rows = []
    ok = True
    for idx, (_, pt) in enumerate(pts):
        _, dM, rhs = jacobian_complex(pt)
        rel = abs(dM - rhs) / abs(dM)
        dr = jacobian_real(pt)
        ok &= rel <= 1e-8 and abs(dr) > 1e-8
        rows.append([idx, pt.N, e(abs(dM)), e(abs(rhs)), e(rel), e(dr)])
    _emit_table(args, ["point", "N", "|detM|", "|rhs|", "rel_err", "det_real"], rows, stdout)
    print(f"verdict {'PASS' if ok else 'FAIL'}", file=stdout)
    return 0


def cmd_check_laws(args, stdout):
    src = _load_source(args)
    pts = _sample_points(args, src, args.points, stdout)
    tol = 1e-6 if args.fd else 1e-10
    worst: dict[str, float] = {}
    rows = []
    for idx, (_, pt) in enumerate(pts):
        laws = catalog(pt.N)
        if args.glaws:
            laws = laws + g_densities(pt)
        vals = {law.name: validity_check(pt, law, fd=args.fd or law.name.startswith("G"))
                for law in laws}
        vals["fake"] = validity_check(pt, fake_law(pt.N))
        for k, v in vals.items():
            worst[k] = max(worst.get(k, 0.0), v)
        rows.append([idx] + [f"{k}={e(v)}" for k, v in vals.items()])
    for name, v in worst.items():
        status = "control" if name == "fake" else ("ok" if v <= tol else "FAIL")
        print(f"{name:>8s} max {e(v)} {status}", file=stdout)
    fake_min = min(validity_check(pt, fake_law(pt.N)) for _, pt in pts)
    ok = all(v <= tol for k, v in worst.items() if k != "fake") and fake_min >= 1e-3
    if args.out:
        _emit_table(args, ["point", "values"], rows, stdout)
    print(f"verdict {'PASS' if ok else 'FAIL'}", file=stdout)
    return 0


def cmd_glaws(args, stdout):
    src = _load_source(args)
    if src is not None and args.at is not None:
        pts = [(args.at, _point_at(src, args.at))]
    else:
        pts = _sample_points(args, src, args.points, stdout)
    rows = []
    for idx, (_, pt) in enumerate(pts):
        gap = value_gap(char_data(pt))
        dM = jacobian_complex(pt)[1]
        for f in args.eps:
            eps = f * gap
            dG = g_independence(pt, eps)
            b = bracket_determinant(pt, eps)
            rows.append([idx, e(f), e(eps), e(dG), e(abs(b)), e(abs(dM)), e(abs(b - dM) / abs(dM))])
    _emit_table(args, ["point", "eps/gap", "eps", "detG", "|bracket|", "|detM|", "rel_gap"],
                rows, stdout)
    return 0


def cmd_check_semiham(args, stdout):
    src = _load_source(args)
    pts = _sample_points(args, src, args.points, stdout, chart=True)
    rows = []
    ok = True
    worst_ratio = worst_floor = worst_lame = 0.0
    for idx, (xy, pt) in enumerate(pts):
        ch = DiagonalChart(pt)
        res = all_semiham_residuals(ch)
        S = chart_scale(res)
        for s in res:
            ok &= s.residual <= s.floor and s.floor <= 1e-4 * S
            worst_ratio = max(worst_ratio, s.residual / s.floor)
            worst_floor = max(worst_floor, s.floor / S)
            rows.append([idx, s.i + 1, s.j + 1, s.k + 1, e(s.residual), e(s.floor), e(S)])
        n = ch.dim
        for i in range(n):
            j, k = [q for q in range(n) if q != i][:2]
            worst_lame = max(worst_lame, lame_two_path(ch, i, j, k, 0.5 * ch.radius))
    ok &= worst_lame <= 1e-3
    _emit_table(args, ["point", "i", "j", "k", "residual", "floor", "scale"], rows, stdout)
    print(f"max residual/floor {e(worst_ratio)}", file=stdout)
    print(f"max floor/scale {e(worst_floor)}", file=stdout)
    print(f"max lame two-path disagreement {e(worst_lame)}", file=stdout)
    print(f"verdict {'PASS' if ok else 'FAIL'}", file=stdout)
    return 0


def cmd_egorov(args, stdout):
    args.N = 2
    src = _load_source(args)
    pts = [pt for _, pt in _sample_points(args, src, args.points, stdout)]
    rep = pt_pattern_check(pts)
    print(f"points {rep.n_points}", file=stdout)
    print(f"max validity quad-x {e(rep.max_validity_x)}", file=stdout)
    print(f"max validity quad-y {e(rep.max_validity_y)}", file=stdout)
    print(f"shared density gap {e(rep.max_shared_density_gap)}", file=stdout)
    print(f"perturbed control {e(rep.perturbed_validity)}", file=stdout)
    print(rep.conclusion, file=stdout)
    return 0


def cmd_simulate(args, stdout):
    src = _as_flow_source(_load_source(args))
    om = args.omega
    if om != "derive":
        try:
            om = float(om)
        except ValueError:
            raise UsageError("--omega takes a number or 'derive'") from None
    tr = integrate(FlowState(args.x0, args.y0, args.phi0), src, om, args.T, args.dt)
    md, _ = drift(tr)
    if args.out:
        tr.to_csv(args.out)
        print(f"# trajectory written to {args.out}", file=stdout)
    print(f"samples {len(tr)}", file=stdout)
    print(f"F0 {g(tr.F[0])}", file=stdout)
    print(f"maxDrift {e(md)}", file=stdout)
    return 0


def cmd_geodesic_matrix(args, stdout):
    A, ev, kind = geodesic_matrix(args.coeffs, args.tol)
    print(f"n {A.shape[0]}", file=stdout)
    for row in A:
        print(" ".join(g(v) for v in row), file=stdout)
    for lam in sorted(ev, key=lambda z: (z.real, z.imag)):
        print(f"eigenvalue {g(lam.real)} {g(lam.imag)}", file=stdout)
    print(kind, file=stdout)
    return 0


def cmd_validate(args, stdout):
    for path in args.paths:
        obj = load_any(path)
        if isinstance(obj, FieldGrid):
            print(f"{path}: OK MAGFLOW-GRID v1 N={obj.N} NX={obj.NX} NY={obj.NY}", file=stdout)
        else:
            print(f"{path}: OK MAGFLOW-SPEC v1 N={obj.N} fields={','.join(obj.modes)}",
                  file=stdout)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="magflow", description="Integrals of magnetic geodesic flows on the torus.")
    p.add_argument("--version", action="version", version=f"magflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("derive", help="magnetic field and system residual on a grid of sites")
    _add_input(s, required=True)
    s.add_argument("--nx", type=int, default=16, help="sites in x for spec input")
    s.add_argument("--ny", type=int, default=16, help="sites in y for spec input")
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_derive)

    s = sub.add_parser("chars", help="critical angles, invariants and speeds at a point")
    _add_input(s, required=True)
    s.add_argument("--at", type=_pair, required=True, metavar="X,Y")
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_chars)

    s = sub.add_parser("jacobian", help="Jacobian identity report")
    _add_input(s)
    s.add_argument("--at", type=_pair, metavar="X,Y")
    _add_sampling(s, points=10)
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_jacobian)

    s = sub.add_parser("check-laws", help="validity of the conservation-law catalog")
    _add_input(s)
    _add_sampling(s, points=20)
    s.add_argument("--fd", action="store_true", help="finite-difference gradients")
    s.add_argument("--glaws", action="store_true", help="include the G_k laws")
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_check_laws)

    s = sub.add_parser("glaws", help="G_k independence determinant against eps")
    _add_input(s)
    s.add_argument("--at", type=_pair, metavar="X,Y")
    _add_sampling(s, points=3)
    s.add_argument("--eps", type=_floats, default=[1e-2, 1e-3, 1e-4],
                   help="eps as fractions of the critical-value gap")
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_glaws)

    s = sub.add_parser("check-semiham", help="semi-Hamiltonian residuals with noise floors")
    _add_input(s)
    _add_sampling(s, points=20)
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_check_semiham)

    s = sub.add_parser("egorov", help="N = 2 shared-density pattern report")
    _add_input(s)
    _add_sampling(s, points=100)
    s.set_defaults(func=cmd_egorov)

    s = sub.add_parser("simulate", help="integrate the flow and report first-integral drift")
    _add_input(s, required=True)
    s.add_argument("--omega", default="derive", help="'derive' or a constant")
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--y0", type=float, default=0.0)
    s.add_argument("--phi0", type=float, default=0.0)
    s.add_argument("--T", type=_positive, default=10.0)
    s.add_argument("--dt", type=_positive, default=1e-3)
    s.add_argument("--out", help="trajectory CSV path")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("geodesic-matrix", help="eigen report of the non-magnetic system")
    s.add_argument("--coeffs", type=_floats, required=True, metavar="A0,...,AN",
                   help="a_0..a_n with a_n = 1")
    s.add_argument("--tol", type=_positive, default=1e-9)
    s.set_defaults(func=cmd_geodesic_matrix)

    s = sub.add_parser("validate", help="check MAGFLOW files")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        threads_from_env()
        args = build_parser().parse_args(argv)
        return args.func(args, stdout)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"magflow: error: {exc}", file=stderr)
        return 1
    except NumericalFailure as exc:
        print(f"magflow: numerical failure: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"magflow: I/O error: {exc}", file=stderr)
        return 3
    except (MagflowError, ValueError) as exc:
        print(f"magflow: invalid input: {exc}", file=stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
