import math

import numpy as np
import pytest

from echoloc.geometry import DomainError, FlatKleinSpec, FlatTorusSpec, Point
from echoloc.loops import geometric_side_flat
from echoloc.spectrum import mode_table
from echoloc.traces import (GAUSS_RATE, SpectralRangeError, Profile, Weight, Window, curvature_estimate, heat_trace, smoothed_sum,
                            smoothed_wave_spectral, spectral_cutoff, transform_envelope, window_transform)
import oracles

TORUS = FlatTorusSpec(1, 1)


# heat trace

def test_heat_unit_torus_small_time():
    h = heat_trace(TORUS, Point(0.3, 0.6), 0.01)
    assert 4 * math.pi * 0.01 * h.value == pytest.approx(1.0, abs=1e-9)
    assert h.value == pytest.approx(oracles.poisson_heat_torus(1, 1, 0.01), rel=1e-12)
    assert h.truncation_bound < 1e-12


@pytest.mark.parametrize("a, b, t", [(1, 1, 0.05), (2, 1, 0.3), (1, 1, 1.0), (2, 1, 0.002)])
def test_heat_torus_matches_poisson(a, b, t):
    h = heat_trace(FlatTorusSpec(a, b), Point(0, 0), t)
    assert h.value == pytest.approx(oracles.poisson_heat_torus(a, b, t), rel=1e-11)


@pytest.mark.parametrize("x2", [0.0, 0.1, 0.3])
def test_heat_klein_matches_image_sum(x2):
    a, b, t = 2.0, 1.0, 0.05
    dists = oracles.klein_orbit_distances(a, b, (0.0, x2), R=6.0, span=10)
    images = 1.0 + sum(math.exp(-d * d / (4 * t)) for d in dists)
    want = images / (4 * math.pi * t)
    assert heat_trace(FlatKleinSpec(a, b), Point(0.0, x2), t).value == pytest.approx(want, rel=1e-11)


def test_heat_first_order_coefficient_vanishes_on_torus():
    seq = [3 * (4 * math.pi * t * heat_trace(TORUS, Point(0, 0), t).value - 1) / t for t in (0.02, 0.01, 0.005)]
    assert seq[0] > seq[1] > seq[2] >= 0
    assert seq[2] < 1e-12


def test_heat_large_time_constant_mode():
    h = heat_trace(FlatKleinSpec(2, 1), Point(0, 0), 10)
    assert h.value == pytest.approx(1.0, abs=1e-12)


def test_heat_positive_and_decreasing():
    spec = FlatKleinSpec(3, 1)
    vals = [heat_trace(spec, Point(0.2, 0.4), t).value for t in (0.05, 0.1, 0.5, 1, 2, 5)]
    assert all(v > 0 for v in vals)
    assert all(u > v for u, v in zip(vals, vals[1:]))


def test_heat_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        heat_trace(TORUS, Point(0, 0), 0)


def test_curvature_examples():
    assert abs(curvature_estimate(TORUS, Point(0.1, 0.2))) < 1e-6
    assert abs(curvature_estimate(FlatKleinSpec(2, 1), Point(0, 0.3))) < 1e-6


def test_curvature_constant_across_points():
    spec = FlatKleinSpec(2, 1)
    rng = np.random.default_rng(5)
    vals = [curvature_estimate(spec, Point(rng.uniform(0, 1), rng.uniform(0, 1))) for _ in range(5)]
    assert max(vals) - min(vals) < 1e-6


def test_curvature_coarse_schedule_sees_loops():
    # at t ~ 0.01 the loop terms exp(-1/4t) are not negligible on the unit torus
    assert curvature_estimate(TORUS, Point(0, 0), times=(0.02, 0.01, 0.005)) > 1e-4


# windows

@pytest.mark.parametrize("profile", list(Profile))
@pytest.mark.parametrize("weight", list(Weight))
@pytest.mark.parametrize("mu", [0.0, 3.7, -12.0, 55.0])
def test_window_transform_matches_quad(profile, weight, mu):
    w = Window(1.3, 0.25, profile, weight)
    want = oracles.transform_by_quad(lambda t: float(w.chi_hat(t)), w.t_lo, w.t_hi, mu)
    assert window_transform(w, mu) == pytest.approx(want, abs=1e-10)


def test_compact_bump_integral():
    for r, eps in [(1, 0.2), (3, 0.5), (0.8, 0.75)]:
        w = Window(r, eps, Profile.COMPACT, Weight.NONE)
        assert window_transform(w, 0.0) == pytest.approx(eps * oracles.bump_integral(), abs=1e-12)


def test_gaussian_closed_form():
    w = Window(3, 0.5, Profile.GAUSSIAN)
    assert window_transform(w, 0.0).real == pytest.approx(0.5 * math.sqrt(math.pi / GAUSS_RATE), rel=1e-14)
    assert abs(window_transform(w, 400.0)) < 1e-10 * abs(window_transform(w, 0.0))


@pytest.mark.parametrize("profile", list(Profile))
def test_window_conjugate_symmetry(profile):
    w = Window(2.0, 0.3, profile, Weight.SQRT_SINH)
    mu = np.linspace(0, 80, 41)
    assert window_transform(w, -mu) == pytest.approx(np.conj(window_transform(w, mu)), abs=1e-12)


def test_window_validation():
    with pytest.raises(DomainError):
        Window(1, 0)
    with pytest.raises(DomainError):
        Window(0.1, 0.2)


def test_window_array_and_scalar_agree():
    w = Window(1, 0.2, Profile.COMPACT, Weight.SQRT_T)
    arr = window_transform(w, np.array([1.0, 7.0]))
    assert arr[1] == pytest.approx(window_transform(w, 7.0), abs=1e-14)


def test_envelope_dominates_samples():
    for w in (Window(1, 0.2, Profile.GAUSSIAN, Weight.SQRT_T), Window(1, 0.2, Profile.COMPACT)):
        s, env = transform_envelope(w, 300)
        assert np.all(np.diff(env) <= 0)
        mag = np.abs(window_transform(w, s))
        assert np.all(env >= mag - 1e-14)


def test_spectral_cutoff_tail_small():
    w = Window(1, 0.2, Profile.GAUSSIAN, Weight.SQRT_T)
    cut, bound = spectral_cutoff(w, 100.0, lambda mu: 1.0 + mu * mu)
    assert cut > 100 and bound < 1e-8


# smoothed wave traces

# error * sqrt(lam) measured for r = 1, eps = 0.2: 3.99 at 50, 2.00 at 100, 0.89 at 200, 0.50 at 400;
# below lam ~ 100 the smooth part of the kernel near t = 0 still leaks through the window
CALIBRATED = {50.0: 4.5, 100.0: 3.0, 200.0: 3.0, 400.0: 3.0}


@pytest.mark.parametrize("lam", sorted(CALIBRATED))
def test_wave_trace_matches_loop_sum_unit_torus(lam):
    w = Window(1, 0.2, Profile.GAUSSIAN, Weight.SQRT_T)
    x = Point(0.25, 0.5)
    spec_v = smoothed_wave_spectral(TORUS, x, lam, w).value
    geo = geometric_side_flat(TORUS, x, lam, w).value
    assert abs(spec_v - geo) <= CALIBRATED[lam] * lam**-0.5


def test_wave_trace_error_shrinks_on_doubling():
    w = Window(1, 0.2, Profile.GAUSSIAN, Weight.SQRT_T)
    x = Point(0, 0)
    err = [abs(smoothed_wave_spectral(TORUS, x, l, w).value - geometric_side_flat(TORUS, x, l, w).value)
           for l in (100.0, 200.0)]
    assert err[0] / err[1] >= 1.7


@pytest.mark.parametrize("spec, x, r, eps", [
    (TORUS, Point(0, 0), 1.2, 0.15),
    (FlatKleinSpec(2, 1), Point(0, 0.2), 0.3, 0.2),
    (FlatTorusSpec(2, 1), Point(0.4, 0.1), 1.5, 0.4),
])
def test_wave_trace_without_loops_is_small(spec, x, r, eps):
    w = Window(r, eps, Profile.GAUSSIAN, Weight.SQRT_T)
    assert geometric_side_flat(spec, x, 100.0, w).value == 0
    for lam in (400.0, 800.0):
        assert abs(smoothed_wave_spectral(spec, x, lam, w).value) <= 1e-6 * math.sqrt(lam)


def test_smoothed_sum_conjugate_under_negation():
    table = mode_table(FlatKleinSpec(2, 1), 300)
    lams, dens = table.level_sums(Point(0.1, 0.2))
    w = Window(1, 0.2, Profile.COMPACT, Weight.SQRT_T)
    for lam in (20.0, 77.0):
        assert smoothed_sum(lams, dens, -lam, w) == pytest.approx(np.conj(smoothed_sum(lams, dens, lam, w)),
                                                                  abs=1e-12)


def test_partition_independence():
    table = mode_table(FlatKleinSpec(3, 1), 250)
    x = Point(0.3, 0.45)
    lams, dens = table.lam, table.densities(x)
    w = Window(1.4, 0.3, Profile.GAUSSIAN, Weight.SQRT_T)
    whole = smoothed_sum(lams, dens, 120.0, w)
    rng = np.random.default_rng(2)
    perm = rng.permutation(len(lams))
    cuts = np.sort(rng.choice(len(lams), 7, replace=False))
    parts = sum(smoothed_sum(lams[p], dens[p], 120.0, w) for p in np.split(perm, cuts))
    assert abs(parts - whole) < 1e-12
    levels, sums = table.level_sums(x)
    assert abs(smoothed_sum(levels, sums, 120.0, w) - whole) < 1e-12


def test_slow_transform_decay_reports_range_error():
    # a narrow compact bump decays like exp(-sqrt(eps mu)); no affordable cutoff meets the tail tolerance
    w = Window(1.2, 0.15, Profile.COMPACT, Weight.SQRT_T)
    with pytest.raises(SpectralRangeError, match="tail bound violated"):
        smoothed_wave_spectral(TORUS, Point(0, 0), 100.0, w)


def test_wave_trace_rejects_nonpositive_frequency():
    with pytest.raises(DomainError):
        smoothed_wave_spectral(TORUS, Point(0, 0), 0.0, Window(1, 0.2))
