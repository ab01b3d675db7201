"""
Tests for the fitting, sampling and report helpers
"""
import csv
import hashlib
import math
from fractions import Fraction

import numpy as np
import pytest

from model.grid import fourier, make_grid
from utils.fitting import convergence_order, growth_factor, loglog_slope, richardson
from utils.report_writer import Manifest, format_parameters, format_value, read_csv, write_csv
from utils.sampling import make_rng, random_band_limited_field, random_smooth_field


def test_loglog_slope():
    """A power law is fitted exactly; non-positive samples give NaN."""
    assert loglog_slope([1, 2, 4], [1, 0.25, 0.0625]) == pytest.approx(-2.0)
    assert math.isnan(loglog_slope([1, 2], [1.0, 0.0]))
    with pytest.raises(ValueError):
        loglog_slope([1], [1.0])
    with pytest.raises(ValueError):
        loglog_slope([-1, 2], [1.0, 2.0])


def test_growth_factor_and_orders():
    """Growth is relative to the first value; orders follow the refinement ratio."""
    assert growth_factor([2.0, 3.0, 1.0]) == 1.5
    assert growth_factor([0.0, 0.0]) == 1.0
    assert growth_factor([0.0, 1.0]) == math.inf
    assert convergence_order([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0])


def test_richardson_removes_power_term():
    """An estimate A + c lambda^(-delta) extrapolates to A."""
    def est(lam):
        return 1.0 + 3.0 * lam ** -0.5

    assert richardson(est(4.0), 4.0, est(16.0), 16.0, 0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        richardson(1.0, 2.0, 1.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        richardson(1.0, 2.0, 1.0, 4.0, 0.0)


def test_rng_is_keyed_by_seed():
    """The same seed gives the same stream; seeds outside 64 bits are refused."""
    assert np.array_equal(make_rng(7).standard_normal(4), make_rng(7).standard_normal(4))
    assert not np.array_equal(make_rng(7).standard_normal(4), make_rng(8).standard_normal(4))
    for seed in (-1, 2 ** 64):
        with pytest.raises(ValueError):
            make_rng(seed)


def test_random_fields():
    """Smooth draws repeat under a seed; band-limited draws have no Nyquist content."""
    grid = make_grid(2, 32, 8 * math.pi)
    a = random_smooth_field(grid, make_rng(3))
    b = random_smooth_field(grid, make_rng(3))
    assert np.array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        random_smooth_field(grid, make_rng(3), bumps=0)
    spectrum = np.abs(fourier(random_band_limited_field(grid, make_rng(3))).values)
    assert spectrum[grid.nyquist_mask].max() < 1e-10 * spectrum.max()


def test_format_value():
    """Cells use 17 significant digits and fixed spellings."""
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(float("nan")) == "nan"
    assert format_value(-math.inf) == "-inf"
    assert format_value(True) == "true"
    assert format_value(Fraction(3, 2)) == "3/2"
    assert format_value((1, 2.5)) == "1,2.5"
    assert format_value(np.int64(3)) == "3"
    assert format_parameters({"seed": 3, "q": Fraction(3, 2)}) == "q=3/2;seed=3"


def test_write_csv_checks_row_width(tmp_path):
    """Rows must match the header."""
    path = write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 0.5)])
    assert path.read_text() == "a,b\n1,0.5\n"
    with pytest.raises(ValueError):
        write_csv(tmp_path / "u.csv", ("a", "b"), [(1,)])


def test_read_csv_keys_rows_by_header(tmp_path):
    """Rows come back as dicts; a missing file raises."""
    path = write_csv(tmp_path / "t.csv", ("input", "T"), [("a.cfld", 0.5), ("b.cfld", 0.5)])
    assert read_csv(path) == [{"input": "a.cfld", "T": "0.5"}, {"input": "b.cfld", "T": "0.5"}]
    with pytest.raises(FileNotFoundError):
        read_csv(tmp_path / "missing.csv")


def test_manifest_lists_sorted_files_with_digests(tmp_path):
    """Manifest rows are sorted by file name and carry SHA-256 digests."""
    manifest = Manifest(tmp_path, "evolve", {"seed": 0, "T": 1.0})
    for name in ("b.csv", "a.csv"):
        (tmp_path / name).write_text(name)
        manifest.add(tmp_path / name)
    with open(manifest.write(), newline="") as fh:
        rows = list(csv.reader(fh))
    assert [row[0] for row in rows[1:]] == ["a.csv", "b.csv"]
    assert rows[1][2] == "T=1;seed=0"
    assert rows[1][3] == hashlib.sha256(b"a.csv").hexdigest()
