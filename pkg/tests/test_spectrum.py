import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from echoloc.geometry import FlatKleinSpec, FlatTorusSpec, Point
from echoloc.spectrum import (Family, NotAnEigenvalue, is_degenerate_klein, klein_modes, klein_table,
                              level_groups, level_sum, mode_density, pointwise_weyl, torus_modes,
                              weyl_sweep)
import oracles

TWO_PI = 2 * math.pi


def test_klein_lowest_modes():
    modes = klein_modes(FlatKleinSpec(2, 1), 1.0)
    assert [(m.family, m.m, m.n, m.lam) for m in modes] == [(Family.KLEIN_CONST, 0, 0, 0.0)]


def test_klein_row_constraints():
    modes = klein_modes(FlatKleinSpec(2, 1), 6.5)
    idx = {(m.m, m.n) for m in modes}
    assert (0, 1) in idx and (2, 0) in idx
    assert (1, 0) not in idx
    lam = {(m.m, m.n): m.lam for m in modes}
    assert lam[(0, 1)] == pytest.approx(TWO_PI)
    assert lam[(2, 0)] == pytest.approx(TWO_PI)
    for m in modes:
        if m.m % 2 == 1:
            assert m.family is Family.KLEIN_ODD and m.n >= 1
        elif m.m > 0:
            assert m.family is Family.KLEIN_EVEN


@pytest.mark.parametrize("a, b, lam_max", [(2, 2, 40), (2, 1, 60), (3, 1, 33.3), (1.5, 0.7, 50)])
def test_klein_count_matches_brute_force(a, b, lam_max):
    assert len(klein_modes(FlatKleinSpec(a, b), lam_max)) == oracles.klein_mode_count(a, b, lam_max)


@pytest.mark.parametrize("a, b, lam_max", [(1, 1, 7), (1, 1, 80), (2, 1, 45.5)])
def test_torus_count_matches_lattice(a, b, lam_max):
    assert len(torus_modes(FlatTorusSpec(a, b), lam_max)) == oracles.torus_lattice_count(a, b, lam_max)


def test_torus_multiplicities():
    modes = torus_modes(FlatTorusSpec(1, 1), 7)
    assert sum(1 for m in modes if math.isclose(m.lam, TWO_PI)) == 4
    top = TWO_PI * math.sqrt(5)
    modes = torus_modes(FlatTorusSpec(1, 1), top + 0.1)
    assert sum(1 for m in modes if math.isclose(m.lam, top)) == oracles.sum_of_two_squares(5) == 8


def test_negative_cutoff_is_empty():
    assert klein_modes(FlatKleinSpec(2, 1), -1) == []
    assert torus_modes(FlatTorusSpec(1, 1), -1) == []
    assert pointwise_weyl(FlatKleinSpec(2, 1), Point(0, 0), -1) == 0.0


def test_eigenvalue_equals_rational():
    for m in klein_modes(FlatKleinSpec(3, 1), 30):
        assert m.lam == pytest.approx(TWO_PI * math.sqrt(m.lambda_sq_rational), rel=1e-14)
        assert m.lambda_sq_rational == Fraction(m.m, 3) ** 2 + Fraction(m.n, 1) ** 2


# densities against the midpoint-rule quadrature oracle (2048 x 2048 grid)

KLEIN_CASES = [(2, 1), (2, 2), (3, 1)]


@pytest.mark.parametrize("a, b", KLEIN_CASES)
def test_mode_density_matches_quadrature(a, b):
    spec = FlatKleinSpec(a, b)
    modes = {(md.m, md.n, md.part): md for md in klein_modes(spec, 9.0)}
    pts = [(0.0, 0.0), (0.17, 0.23), (0.4 * a, 0.71 * b)]
    for m, n, lam, f in oracles.klein_functions(a, b, 9.0):
        # identify cos/sin in x1 by evaluation at x1 = 0
        part = "" if m == 0 else ("cos" if abs(f(np.array(0.0), np.array(0.1 * b))) > 1e-12
                                  or abs(f(np.array(0.0), np.array(0.3 * b))) > 1e-12 else "sin")
        mode = modes[(m, n, part)]
        want = oracles.normalized_density(f, a, b, pts)
        got = [mode_density(mode, Point(*p), spec) for p in pts]
        assert got == pytest.approx(want, abs=1e-10), (m, n, part)


def test_constant_mode_density():
    spec = FlatKleinSpec(2, 1)
    const = klein_modes(spec, 0.5)[0]
    assert mode_density(const, Point(0.3, 0.4), spec) == pytest.approx(1.0)
    f = lambda x1, x2: np.ones_like(x1 + x2)
    assert oracles.normalized_density(f, 2, 1, (0.3, 0.4)) == pytest.approx(1.0, abs=1e-12)


def test_mode_density_examples():
    spec = FlatKleinSpec(2, 2)
    m01 = next(m for m in klein_modes(spec, 4) if (m.m, m.n) == (0, 1))
    assert mode_density(m01, Point(0, 0), spec) == pytest.approx(1.0)
    for a, b in [(2, 1), (3, 1), (1.3, 0.6)]:
        s = FlatKleinSpec(a, b)
        for m in klein_modes(s, 2 * TWO_PI * max(1 / a, 1 / b)):
            if (m.m, m.n) == (1, 1):
                assert mode_density(m, Point(0.37, 0.0), s) == pytest.approx(0.0, abs=1e-15)
    t = FlatTorusSpec(2, 1)
    assert mode_density(torus_modes(t, 7)[3], Point(0.1, 0.2), t) == 0.5


def test_mode_density_rejects_mismatched_spec():
    k = next(m for m in klein_modes(FlatKleinSpec(2, 1), 7) if (m.m, m.n) == (2, 0))
    with pytest.raises(ValueError):
        mode_density(k, Point(0, 0), FlatTorusSpec(2, 1))
    with pytest.raises(ValueError):
        mode_density(k, Point(0, 0), FlatKleinSpec(3, 1))


@pytest.mark.parametrize("a, b", KLEIN_CASES)
def test_level_sums_match_quadrature(a, b):
    spec = FlatKleinSpec(a, b)
    for g in level_groups(spec, 13.0)[:6]:
        pts = [(0.0, 0.0), (0.21, 0.13 * b), (0.05, 0.3 * b)]
        want = oracles.klein_level_sum_quadrature(a, b, g.lam, pts)
        assert [level_sum(spec, Point(*p), g.lam) for p in pts] == pytest.approx(want, abs=1e-9)


def test_normalization_average_is_inverse_area():
    # midpoint rule on a 64 x 64 grid is exact for these trigonometric polynomials
    for spec in (FlatKleinSpec(2, 1), FlatKleinSpec(3, 1), FlatKleinSpec(2, 2)):
        table = klein_table(spec, 12.0)
        n = 64
        x1 = (np.arange(n) + 0.5) * spec.a / 2 / n
        x2 = (np.arange(n) + 0.5) * spec.b / n
        acc = np.zeros(len(table))
        for u in x1:
            for v in x2:
                acc += table.densities(Point(u, v))
        assert np.allclose(acc / n**2, 1 / spec.area, atol=1e-8)


# pointwise Weyl function

def test_weyl_at_zero():
    assert pointwise_weyl(FlatKleinSpec(2, 1), Point(0.2, 0.7), 0.0) == pytest.approx(1.0)


def test_weyl_torus_local_law():
    v = pointwise_weyl(FlatTorusSpec(1, 1), Point(0.3, 0.1), 200)
    assert abs(v - 200**2 / (4 * math.pi)) <= 64


@pytest.mark.parametrize("spec", [FlatTorusSpec(1, 1), FlatTorusSpec(2, 1), FlatKleinSpec(2, 1),
                                  FlatKleinSpec(2, 2), FlatKleinSpec(3, 1)])
def test_weyl_local_law_ratio(spec):
    rng = np.random.default_rng(11)
    for _ in range(4):
        x = Point(rng.uniform(0, spec.a / 2), rng.uniform(0, spec.b))
        ratio = pointwise_weyl(spec, x, 200) * 4 * math.pi / 200**2
        assert 0.95 <= ratio <= 1.05


def test_weyl_klein_difference_across_points():
    spec = FlatKleinSpec(2, 2)
    d = pointwise_weyl(spec, Point(0, 0), math.pi + 0.01) - pointwise_weyl(spec, Point(0, 0.5), math.pi + 0.01)
    assert d == pytest.approx(1.0, abs=1e-12)


def test_weyl_sweep_matches_pointwise():
    spec = FlatKleinSpec(3, 1)
    x = Point(0.4, 0.33)
    grid = np.linspace(0, 30, 301)
    sweep = weyl_sweep(spec, x, grid)
    assert sweep == pytest.approx([pointwise_weyl(spec, x, l) for l in grid], abs=1e-11)
    assert np.all(np.diff(sweep) >= 0)


def test_weyl_is_right_continuous():
    spec = FlatTorusSpec(1, 1)
    x = Point(0, 0)
    assert pointwise_weyl(spec, x, TWO_PI) == 5.0
    assert pointwise_weyl(spec, x, TWO_PI * (1 - 1e-9)) == 1.0


def test_torus_weyl_is_independent_of_point():
    spec = FlatTorusSpec(2, 1)
    vals = {pointwise_weyl(spec, Point(u, v), 40) for u, v in [(0, 0), (0.3, 0.7), (1.9, 0.01)]}
    assert len(vals) == 1


def test_klein_weyl_depends_on_point():
    spec = FlatKleinSpec(2, 1)
    lam = TWO_PI / spec.b
    assert pointwise_weyl(spec, Point(0, 0), lam) != pointwise_weyl(spec, Point(0, spec.b / 4), lam)


# level sums

def test_level_sum_examples():
    assert level_sum(FlatKleinSpec(2, 2), Point(0, 0), math.pi) == pytest.approx(1.0, abs=1e-14)
    assert level_sum(FlatTorusSpec(1, 1), Point(0.3, 0.9), TWO_PI) == pytest.approx(4.0)


def test_degenerate_level_sum_matches_quadrature():
    # 1/b = 2/a: the level 2 pi / b holds (0, 1) and the (2, 0) pair
    spec = FlatKleinSpec(2, 1)
    got = level_sum(spec, Point(0, 0), TWO_PI)
    want = oracles.klein_level_sum_quadrature(2, 1, TWO_PI, (0, 0))
    assert got == pytest.approx(want, abs=1e-9)
    assert got == pytest.approx(4 / 2 + 4 / 2, abs=1e-14)


def test_level_sum_not_an_eigenvalue():
    with pytest.raises(NotAnEigenvalue):
        level_sum(FlatKleinSpec(2, 2), Point(0, 0), 3.0)


def test_degeneracy_detection():
    assert is_degenerate_klein(FlatKleinSpec(2, 1))
    assert is_degenerate_klein(FlatKleinSpec(4, 1))
    assert not is_degenerate_klein(FlatKleinSpec(2, 2))
    assert not is_degenerate_klein(FlatKleinSpec(3, 1))


def test_exact_grouping_with_rational_periods():
    spec = FlatKleinSpec(Fraction(3, 2), Fraction(1, 3))
    groups = level_groups(spec, 120)
    for g in groups:
        assert len({m.lambda_sq_rational for m in g.modes}) == 1
    keys = [g.modes[0].lambda_sq_rational for g in groups]
    assert keys == sorted(set(keys))


def test_irrational_periods_fall_back_with_warning(caplog):
    spec = FlatTorusSpec(math.sqrt(2), math.pi)
    with caplog.at_level("WARNING"):
        groups = level_groups(spec, 20)
    assert "not recognizably rational" in caplog.text
    assert sum(len(g.modes) for g in groups) == oracles.torus_lattice_count(math.sqrt(2), math.pi, 20)
