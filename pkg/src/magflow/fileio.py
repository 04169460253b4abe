"""MAGFLOW-GRID v1 and MAGFLOW-SPEC v1 text formats.

Numbers are written with 17 significant digits, which round-trips every
double exactly. Lines whose first non-blank character is ``#`` and blank
lines are ignored by both readers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .fields import FieldGrid, FourierFieldSpec, hermitian_modes

GRID_MAGIC = "MAGFLOW-GRID v1"
SPEC_MAGIC = "MAGFLOW-SPEC v1"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _content_lines(text: str):
    """(line number, stripped text) for lines that carry content."""
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            yield no, s


def _number(tok: str, no: int, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(f"cannot read {tok!r} as a number", no) from None


def _expect_magic(lines, magic):
    try:
        no, s = next(lines)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if s != magic:
        raise ParseError(f"expected {magic!r}, found {s!r}", no)


# ---------------------------------------------------------------------------
# grids


def _parse_header(no, s):
    tok = s.split()
    keys = ["N", "NX", "NY", "LX", "LY"]
    if len(tok) != 10 or tok[0::2] != keys:
        raise ParseError("header must read 'N <n> NX <nx> NY <ny> LX <lx> LY <ly>'", no)
    vals = dict(zip(tok[0::2], tok[1::2]))
    N, NX, NY = (_number(vals[k], no, int) for k in ("N", "NX", "NY"))
    Lx, Ly = (_number(vals[k], no) for k in ("LX", "LY"))
    if N < 1 or NX < 1 or NY < 1:
        raise ParseError("N, NX and NY must be positive", no)
    if not (Lx > 0 and Ly > 0):
        raise ParseError("periods must be positive", no)
    return N, NX, NY, Lx, Ly


def parse_grid(text: str) -> FieldGrid:
    lines = _content_lines(text)
    _expect_magic(lines, GRID_MAGIC)
    try:
        no, s = next(lines)
    except StopIteration:
        raise ParseError("missing header line", 2) from None
    N, NX, NY, Lx, Ly = _parse_header(no, s)
    width = 2 * N
    data = np.empty((NX * NY, width))
    count = 0
    last = no
    for no, s in lines:
        last = no
        tok = s.split()
        if len(tok) != width:
            raise ParseError(f"expected {width} values for N={N}, found {len(tok)}", no)
        if count == NX * NY:
            raise ParseError(f"more than NX*NY = {NX * NY} data lines", no)
        data[count] = [_number(t, no) for t in tok]
        count += 1
    if count != NX * NY:
        raise ParseError(f"expected {NX * NY} data lines, found {count}", last)
    return FieldGrid(N, NX, NY, Lx, Ly, data.reshape(NY, NX, width))


def format_grid(grid: FieldGrid) -> str:
    out = [GRID_MAGIC,
           f"N {grid.N} NX {grid.NX} NY {grid.NY} LX {fmt(grid.Lx)} LY {fmt(grid.Ly)}"]
    for row in grid.data.reshape(-1, 2 * grid.N):
        out.append(" ".join(fmt(v) for v in row))
    return "\n".join(out) + "\n"


def load_grid(path) -> FieldGrid:
    return parse_grid(Path(path).read_text(encoding="utf-8"))


def save_grid(grid: FieldGrid, path) -> None:
    Path(path).write_text(format_grid(grid), encoding="utf-8")


# ---------------------------------------------------------------------------
# Fourier specs


def parse_spec(text: str) -> FourierFieldSpec:
    """Read a spec; modes missing their conjugate partner are completed."""
    lines = _content_lines(text)
    _expect_magic(lines, SPEC_MAGIC)
    header = {}
    for key, nargs in (("N", 1), ("PERIOD", 2)):
        try:
            no, s = next(lines)
        except StopIteration:
            raise ParseError(f"missing {key} line", None) from None
        tok = s.split()
        if tok[0] != key or len(tok) != nargs + 1:
            raise ParseError(f"expected '{key}' with {nargs} value(s)", no)
        kind = int if key == "N" else float
        header[key] = [_number(t, no, kind) for t in tok[1:]]
    N = header["N"][0]
    Lx, Ly = header["PERIOD"]
    modes: dict[str, list] = {}
    current = None
    ended = False
    for no, s in lines:
        if ended:
            raise ParseError("content after END", no)
        tok = s.split()
        if tok[0] == "END" and len(tok) == 1:
            ended = True
        elif tok[0] == "FIELD":
            if len(tok) != 2:
                raise ParseError("expected 'FIELD <NAME>'", no)
            current = tok[1]
            if current in modes:
                raise ParseError(f"field {current} declared twice", no)
            modes[current] = []
        else:
            if current is None:
                raise ParseError("mode line outside a FIELD block", no)
            if len(tok) != 4:
                raise ParseError("mode lines read 'm n re im'", no)
            m, n = (_number(t, no, int) for t in tok[:2])
            re, im = (_number(t, no) for t in tok[2:])
            modes[current].append((m, n, complex(re, im)))
    if not ended:
        raise ParseError("missing END", None)
    try:
        return FourierFieldSpec(N, Lx, Ly, {k: hermitian_modes(v) for k, v in modes.items()})
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def format_spec(spec: FourierFieldSpec) -> str:
    out = [SPEC_MAGIC, f"N {spec.N}", f"PERIOD {fmt(spec.Lx)} {fmt(spec.Ly)}"]
    for name in spec.field_names():
        rows = spec.modes.get(name)
        if rows is None:
            continue
        out.append(f"FIELD {name}")
        for m, n, c in hermitian_modes(rows):  # canonical (m, n) order
            out.append(f"{int(m.real)} {int(n.real)} {fmt(c.real)} {fmt(c.imag)}")
    out.append("END")
    return "\n".join(out) + "\n"


def load_spec(path) -> FourierFieldSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def save_spec(spec: FourierFieldSpec, path) -> None:
    Path(path).write_text(format_spec(spec), encoding="utf-8")


def load_any(path):
    """Spec or grid, chosen by the first content line."""
    text = Path(path).read_text(encoding="utf-8")
    first = next(_content_lines(text), (1, ""))[1]
    if first == SPEC_MAGIC:
        return parse_spec(text)
    if first == GRID_MAGIC:
        return parse_grid(text)
    raise ParseError(f"unknown format {first!r}", 1)
