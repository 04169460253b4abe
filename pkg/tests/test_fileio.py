import numpy as np
import pytest

from magflow.errors import ParseError, ValidationError
from magflow.families import n1_family
from magflow.fields import FieldGrid, FourierFieldSpec
from magflow.fileio import (
    format_grid, format_spec, load_any, load_grid, load_spec, parse_grid, parse_spec, save_grid,
    save_spec,
)


def random_grid(rng, N=2, NX=8, NY=9):
    d = rng.normal(size=(NY, NX, 2 * N))
    d[..., 0] = np.exp(d[..., 0])
    return FieldGrid(N, NX, NY, 1.7, np.pi, d)


class TestGridFormat:
    def test_round_trip_is_bit_exact(self, rng, tmp_path):
        g = random_grid(rng)
        save_grid(g, tmp_path / "g.grid")
        back = load_grid(tmp_path / "g.grid")
        assert np.array_equal(back.data, g.data)
        assert (back.N, back.NX, back.NY, back.Lx, back.Ly) == (g.N, g.NX, g.NY, g.Lx, g.Ly)

    def test_comments_and_blank_lines(self, rng):
        g = random_grid(rng, N=1)
        lines = format_grid(g).splitlines()
        text = "# produced by hand\n" + "\n".join(lines[:3] + ["", "  # note"] + lines[3:])
        assert np.array_equal(parse_grid(text).data, g.data)

    def test_nonpositive_lambda(self, rng):
        lines = format_grid(random_grid(rng, N=1)).splitlines()
        lines[2 + 10] = "-1 0.5"
        with pytest.raises(ValidationError, match="i=2, j=1"):
            parse_grid("\n".join(lines))

    def test_row_width_mismatch(self):
        text = "MAGFLOW-GRID v1\nN 2 NX 8 NY 8 LX 1 LY 1\n1 2 3\n"
        with pytest.raises(ParseError, match="line 3"):
            parse_grid(text)

    def test_short_file(self, rng):
        lines = format_grid(random_grid(rng, N=1)).splitlines()
        with pytest.raises(ParseError, match="data lines"):
            parse_grid("\n".join(lines[:-1]))

    def test_bad_magic(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_grid("MAGFLOW-GRID v2\n")

    def test_bad_number(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_grid("MAGFLOW-GRID v1\nN two NX 8 NY 8 LX 1 LY 1\n")


class TestSpecFormat:
    def test_round_trip(self, tmp_path):
        spec = n1_family()
        save_spec(spec, tmp_path / "a.spec")
        back = load_spec(tmp_path / "a.spec")
        assert format_spec(back) == format_spec(spec)
        x, y = 0.31, 0.77
        assert np.array_equal(back.evaluate(x, y)[0], spec.evaluate(x, y)[0])

    def test_conjugate_partner_completed(self):
        text = "MAGFLOW-SPEC v1\nN 1\nPERIOD 1 1\nFIELD U0\n1 0 0.5 0.25\nEND\n"
        spec = parse_spec(text)
        assert spec.evaluate(0.1, 0.0)[0][1] == pytest.approx(np.cos(0.2 * np.pi) - 0.5 * np.sin(0.2 * np.pi))

    def test_inconsistent_partner(self):
        text = "MAGFLOW-SPEC v1\nN 1\nPERIOD 1 1\nFIELD U0\n1 0 1 0\n-1 0 2 0\nEND\n"
        with pytest.raises(ValidationError):
            parse_spec(text)

    def test_missing_end(self):
        with pytest.raises(ParseError, match="END"):
            parse_spec("MAGFLOW-SPEC v1\nN 1\nPERIOD 1 1\nFIELD U0\n0 0 1 0\n")

    def test_content_after_end(self):
        with pytest.raises(ParseError, match="line 5"):
            parse_spec("MAGFLOW-SPEC v1\nN 1\nPERIOD 1 1\nEND\nFIELD U0\n")

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            parse_spec("MAGFLOW-SPEC v1\nN 1\nPERIOD 1 1\nFIELD V1\n0 0 1 0\nEND\n")

    def test_mode_outside_block(self):
        with pytest.raises(ParseError, match="line 4"):
            parse_spec("MAGFLOW-SPEC v1\nN 1\nPERIOD 1 1\n0 0 1 0\nEND\n")

    def test_load_any_dispatch(self, tmp_path, rng):
        save_spec(FourierFieldSpec(2), tmp_path / "s")
        save_grid(random_grid(rng), tmp_path / "g")
        assert isinstance(load_any(tmp_path / "s"), FourierFieldSpec)
        assert isinstance(load_any(tmp_path / "g"), FieldGrid)
