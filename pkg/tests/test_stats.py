import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anosovlab.errors import InvalidInputError
from anosovlab.generator import fill, seed_state
from anosovlab.matrix_core import build_mixmax
from anosovlab.stats import (
    BatteryConfig, GeneratorConfig, chi_square_uniformity, compare_generators,
    serial_correlation, star_discrepancy, star_discrepancy_1d,
)


@pytest.fixture(scope="module")
def mixmax_stream():
    u, _ = fill(seed_state(256, b"\x01"), 10 ** 6, build_mixmax(256, -1))
    return u


def brute_1d(x):
    """sup_t |#{x_i < t}/n - t| over t in [0,1], scanning both sides of every point."""
    xs = [Fraction(float(v)) for v in x]
    n = len(xs)
    best = Fraction(0)
    for t in xs:
        below = sum(1 for v in xs if v < t)
        upto = sum(1 for v in xs if v <= t)
        best = max(best, abs(Fraction(below, n) - t), abs(Fraction(upto, n) - t))
    return best


def brute_nd(pts):
    """Exact star discrepancy over the critical grid of point coordinates."""
    n, dim = pts.shape
    axes = [sorted(set(pts[:, k]) | {1.0}) for k in range(dim)]
    best = 0.0
    for corner in itertools.product(*axes):
        c = np.array(corner)
        vol = float(np.prod(c))
        open_ = np.sum(np.all(pts < c, axis=1)) / n
        closed = np.sum(np.all(pts <= c, axis=1)) / n
        best = max(best, vol - open_, closed - vol)
    return best


def test_chi_square_equal_counts():
    x = (np.arange(10000) + 0.5) / 10000
    rep = chi_square_uniformity(x, bins=10)
    assert rep.statistic == 0
    assert rep.p_value == 1.0
    # two-sided: a perfect fit is rejected
    assert not rep.passed


def test_chi_square_one_bin():
    rep = chi_square_uniformity(np.full(1000, 0.05), bins=10)
    assert rep.statistic == pytest.approx(9000)
    assert not rep.passed


def test_chi_square_rejects_small_sample():
    with pytest.raises(InvalidInputError):
        chi_square_uniformity(np.random.default_rng(0).random(50), bins=10)


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(10))), st.integers(0, 10 ** 6))
def test_chi_square_invariant_under_bin_relabeling(perm, seed):
    x = np.random.default_rng(seed).random(2000)
    b = np.minimum((x * 10).astype(int), 9)
    y = (np.array(perm)[b] + (x * 10 - b)) / 10
    assert chi_square_uniformity(y, bins=10).statistic == pytest.approx(
        chi_square_uniformity(x, bins=10).statistic, rel=1e-12)


def test_chi_square_mixmax(mixmax_stream):
    rep = chi_square_uniformity(mixmax_stream, bins=1000)
    assert 0.001 < rep.p_value < 0.999


def test_serial_alternating():
    rep = serial_correlation(np.tile([0.0, 1.0], 500), lag=1)
    assert rep.statistic == pytest.approx(-1.0, abs=1e-12)
    assert not rep.passed


def test_serial_lag_zero():
    rep = serial_correlation(np.random.default_rng(0).random(100), lag=0)
    assert rep.statistic == 1.0


def test_serial_rejects_constant():
    with pytest.raises(InvalidInputError):
        serial_correlation(np.ones(100), lag=1)


def test_serial_mixmax(mixmax_stream):
    rep = serial_correlation(mixmax_stream, lag=1)
    assert abs(rep.statistic) < 0.005
    assert rep.passed


def test_serial_matches_numpy_corrcoef():
    x = np.random.default_rng(4).random(5000)
    assert serial_correlation(x, 3).statistic == pytest.approx(np.corrcoef(x[:-3], x[3:])[0, 1], abs=1e-12)


def test_discrepancy_single_point():
    assert star_discrepancy_1d([0.5]) == 0.5


@pytest.mark.parametrize("n", [1, 5, 64, 200])
def test_discrepancy_centered_grid(n):
    x = (2 * np.arange(n) + 1) / (2 * n)
    assert star_discrepancy_1d(x) == pytest.approx(1 / (2 * n), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=200))
def test_discrepancy_1d_brute_force(x):
    got = star_discrepancy_1d(x)
    assert abs(got - float(brute_1d(x))) <= 4 * np.finfo(float).eps


def test_discrepancy_random_uniform_report():
    d = star_discrepancy(np.random.default_rng(7).random(10 ** 4))
    assert d.exact and d.lower == d.upper
    assert d.upper < 0.03


@pytest.mark.parametrize("dim,grid", [(2, 32), (3, 12)])
def test_discrepancy_bounds_bracket_exact(dim, grid):
    pts = np.random.default_rng(dim).random((25, dim))
    exact = brute_nd(pts)
    d = star_discrepancy(pts, grid)
    assert d.lower <= exact + 1e-12
    assert exact <= d.upper + 1e-12


def test_discrepancy_bounds_tighten_with_grid():
    pts = np.random.default_rng(11).random((500, 2))
    coarse, fine = star_discrepancy(pts, 16), star_discrepancy(pts, 256)
    assert fine.upper - fine.lower < coarse.upper - coarse.lower


def test_discrepancy_errors():
    with pytest.raises(InvalidInputError):
        star_discrepancy(np.empty((0, 2)))
    with pytest.raises(InvalidInputError):
        star_discrepancy(np.zeros((4, 4)))


@pytest.fixture(scope="module")
def small_battery():
    return BatteryConfig(samples=20000, bins=100, discrepancy_points=1024)


def test_compare_orders_by_entropy(small_battery):
    rows = compare_generators([GeneratorConfig("cat", 2, 0, "02"),
                               GeneratorConfig("mixmax", 256, -1, "02")], small_battery)
    assert [r["generator"] for r in rows] == ["mixmax(256,-1)", "cat"]
    assert rows[0]["h"] == pytest.approx(164.5, abs=0.1)
    assert rows[1]["h"] == pytest.approx(0.9624236501, abs=1e-9)


def test_compare_identical_configs(small_battery):
    cfg = GeneratorConfig("mixmax", 16, 0, "ab")
    a, b = compare_generators([cfg, cfg], small_battery)
    assert a == b


def test_compare_rcarry_entropy(small_battery):
    rows = compare_generators([GeneratorConfig("rcarry", seed="03"),
                               GeneratorConfig("cat", seed="03")], small_battery)
    rc = next(r for r in rows if r["generator"] == "rcarry")
    assert rc["h"] == pytest.approx(0.32, abs=0.05)


def test_compare_needs_two():
    with pytest.raises(InvalidInputError):
        compare_generators([GeneratorConfig("cat")])


def test_unknown_family():
    with pytest.raises(InvalidInputError):
        GeneratorConfig("lcg").matrix()
