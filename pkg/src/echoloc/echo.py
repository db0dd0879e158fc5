"""Hearing geometry from spectral data.

Multiplicity detection from smoothed wave traces, curvature classification,
constancy of N_x across points, and recovering a point on a Klein bottle from
one level sum.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .geometry import FlatKleinSpec, FlatSpec, HPoint, HyperbolicSurfaceSpec, Point, klein_canonicalize
from .loops import LEADING_COEFF, LENGTH_TOL, FlatDeckSpec, LoopTable, enumerate_deck, flat_orbit, loop_sum
from .spectrum import is_degenerate_klein, level_sum, mode_table, weyl_upper
from .traces import (Profile, SpectralRangeError, TraceValue, Weight, Window, smoothed_sum,
                     spectral_cutoff)

STABILITY_TOL = 0.05
INTEGER_TOL = 0.1
LEVEL_MATCH_RTOL = 1e-12


class Source(str, Enum):
    EXACT = "ExactFlat"
    SYNTHETIC = "SyntheticFromGeometric"


class Curvature(str, Enum):
    SPHERE = "SpherePP"
    FLAT = "FlatTorusKlein"
    HYPERBOLIC = "HyperbolicQuotient"


class InconsistentSpectralData(ValueError):
    pass


@dataclass
class SpectralData:
    """Spectral information at one point.

    Exact data holds (eigenvalue, density) pairs, complete up to
    ``lambda_max``; levels may be merged into a single pair carrying the level
    sum.  Synthetic data holds precomputed smoothed-trace values keyed by
    (frequency, window) and answers nothing else.
    """

    source: Source
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    densities: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lambda_max: float = math.inf
    surface: Optional[FlatSpec] = None
    point: Optional[Union[Point, HPoint]] = None
    traces: dict = field(default_factory=dict)

    def __post_init__(self):
        self.source = Source(self.source)
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.densities = np.asarray(self.densities, dtype=float)
        if self.lambdas.shape != self.densities.shape:
            raise ValueError("eigenvalues and densities differ in length")
        if np.any(np.diff(self.lambdas) < 0):
            raise ValueError("eigenvalues must be nondecreasing")
        if np.any(self.densities < 0):
            raise ValueError("densities must be nonnegative")

    @classmethod
    def from_flat(cls, spec: FlatSpec, x: Point, lambda_max: float) -> "SpectralData":
        lams, sums = mode_table(spec, lambda_max).level_sums(x)
        return cls(Source.EXACT, lams, sums, lambda_max, spec, x)

    def smoothed_trace(self, lam: float, w: Window) -> TraceValue:
        if self.source is Source.SYNTHETIC:
            try:
                return TraceValue(self.traces[(float(lam), w)], 0.0)
            except KeyError:
                raise KeyError(f"no synthetic trace at lambda={lam} for {w}") from None
        if self.surface is None:
            return TraceValue(smoothed_sum(self.lambdas, self.densities, lam, w), math.nan)
        cutoff, bound = spectral_cutoff(w, lam, lambda mu: weyl_upper(self.surface, mu))
        if cutoff > self.lambda_max:
            raise SpectralRangeError(f"tail bound violated: need eigenvalues up to {cutoff:.6g}, "
                                     f"data stops at {self.lambda_max:.6g}")
        n = int(np.searchsorted(self.lambdas, cutoff, side="right"))
        return TraceValue(smoothed_sum(self.lambdas[:n], self.densities[:n], lam, w), bound)

    def level_sum_at(self, lam0: float) -> float:
        hit = np.isclose(self.lambdas, lam0, rtol=LEVEL_MATCH_RTOL, atol=0.0)
        if not hit.any():
            raise InconsistentSpectralData(f"no eigenvalue at {lam0}")
        return float(np.sum(self.densities[hit]))

    def loop_lengths(self, lo: float, hi: float) -> Optional[list]:
        if self.surface is None or self.point is None:
            return None
        deck = FlatDeckSpec.of(self.surface)
        return [d for _, d in flat_orbit(deck, self.point, hi) if d >= lo]


@dataclass(frozen=True)
class DetectionResult:
    r: float
    estimate: float
    lambda_max: float
    eps: float
    converged: bool
    estimates: tuple = ()
    warning: str = ""

    def to_record(self) -> dict:
        return {"r": self.r, "estimate": self.estimate, "lambda_max": self.lambda_max,
                "eps": self.eps, "converged": self.converged}


def detector_output(value: complex, lam: float, r: float) -> complex:
    """Normalize a smoothed trace so that a single loop cluster at r reads as its multiplicity."""
    return value * cmath.exp(1j * (lam * r - math.pi / 4)) / (LEADING_COEFF * math.sqrt(lam))


def _isolation_warning(lengths, r, eps) -> str:
    if lengths is None:
        return ""
    clusters = []
    for d in sorted(lengths):
        if not clusters or d - clusters[-1] > LENGTH_TOL:
            clusters.append(d)
    if len(clusters) > 1:
        return f"window [{r - eps:.6g}, {r + eps:.6g}] meets {len(clusters)} length clusters"
    if clusters and abs(clusters[0] - r) > LENGTH_TOL:
        return f"nearest loop length {clusters[0]!r} is not at the window centre {r!r}"
    return ""


def detect_multiplicity(data: SpectralData, r: float, eps: float, lambda_schedule: Sequence[float],
                        weight=Weight.SQRT_T, profile=Profile.GAUSSIAN) -> DetectionResult:
    """Estimate m_x(r) from smoothed wave traces at increasing frequencies.

    Each frequency gives Re of ``detector_output``; the estimate is the mean
    over the top half of the sorted schedule.  It counts as converged when
    those values agree within 0.05 and the mean is within 0.1 of an integer.
    """
    w = Window(r, eps, profile, weight)
    sched = sorted(float(l) for l in lambda_schedule)
    ests = [detector_output(data.smoothed_trace(lam, w).value, lam, r).real for lam in sched]
    top = ests[len(ests) // 2:]
    estimate = float(np.mean(top)) if top else math.nan
    stable = len(top) >= 2 and max(top) - min(top) <= STABILITY_TOL
    converged = bool(stable and abs(estimate - round(estimate)) < INTEGER_TOL)
    warning = _isolation_warning(data.loop_lengths(w.t_lo, w.t_hi), r, eps)
    return DetectionResult(r, estimate, sched[-1] if sched else math.nan, eps, converged,
                           tuple(ests), warning)


def isolating_windows(table: LoopTable, weight=Weight.SQRT_SINH, eps_max: float = 0.1,
                      profile=Profile.GAUSSIAN, fraction: float = 0.45, upto: Optional[float] = None) -> list:
    """One window per tabulated length, narrow enough to see no neighbouring cluster.

    The table says nothing about lengths beyond its radius, so the last window
    also stays inside it; tabulate somewhat past ``upto`` (default: the table
    radius) to give the lengths of interest room on both sides.
    """
    rs = table.lengths
    out = []
    for i, r in enumerate(rs):
        if upto is not None and r > upto:
            break
        gaps = [r]
        if i > 0:
            gaps.append(r - rs[i - 1])
        gaps.append(rs[i + 1] - r if i + 1 < len(rs) else table.R - r)
        out.append(Window(r, min(eps_max, fraction * min(gaps)), profile, weight))
    return out


def synthesize_spectral_from_geometric(spec: HyperbolicSurfaceSpec, basepoint: Optional[HPoint],
                                       lambda_grid: Sequence[float], windows: Sequence[Window]) -> SpectralData:
    """Stand-in spectral data: smoothed traces equal to the geometric side by construction."""
    x = basepoint or spec.basepoint_lift
    traces = {}
    if windows:
        reach = max(w.t_hi for w in windows)
        dists = [d for _, d in enumerate_deck(spec, reach, basepoint=x)]
        for w in windows:
            for lam in lambda_grid:
                traces[(float(lam), w)] = loop_sum(dists, float(lam), w, hyperbolic=True)
    return SpectralData(Source.SYNTHETIC, point=x, traces=traces)


def classify_curvature(k_hat: float, tol: float = 1e-3) -> Curvature:
    if abs(k_hat) <= tol:
        return Curvature.FLAT
    return Curvature.SPHERE if k_hat > 0 else Curvature.HYPERBOLIC


@dataclass(frozen=True)
class ConstancyResult:
    constant: bool
    witness_level: Optional[float] = None
    points: Optional[tuple] = None

    def __bool__(self):
        return self.constant

    def to_record(self) -> dict:
        pts = None if self.points is None else [[p.x1, p.x2] for p in self.points]
        return {"constant": self.constant, "witness_level": self.witness_level, "points": pts}


def constancy_test(spec: FlatSpec, lambda_max: float, sample_points: Sequence[Point]) -> ConstancyResult:
    """Compare every level sum up to lambda_max across the sample points.

    On failure the witness is the lowest level at which some point disagrees
    with the first one.
    """
    if len(sample_points) < 2:
        raise ValueError("need at least two sample points")
    table = mode_table(spec, lambda_max)
    levels, ref = table.level_sums(sample_points[0])
    tol = 1e-12 * weyl_upper(spec, 0.0) * np.maximum(1.0, np.abs(ref))
    best = None
    for p in sample_points[1:]:
        _, sums = table.level_sums(p)
        bad = np.flatnonzero(np.abs(sums - ref) > tol)
        if bad.size and (best is None or bad[0] < best[0]):
            best = (int(bad[0]), p)
    if best is None:
        return ConstancyResult(True)
    k, p = best
    return ConstancyResult(False, float(levels[k]), (sample_points[0], p))


LevelSource = Union[float, SpectralData, Callable[[float], float]]


def _clean_odd_level(spec: FlatKleinSpec) -> Optional[float]:
    """Eigenvalue of the (1, 1) pair if no other mode shares its level, else None."""
    lam1 = 2 * math.pi * math.hypot(1 / spec.a, 1 / spec.b)
    table = mode_table(spec, lam1)
    starts, _ = table.level_index()
    s = starts[-1]
    if np.all(table.m[s:] == 1) and np.all(table.n[s:] == 1):
        return float(table.lam[s])
    return None


def _level_reader(data: LevelSource):
    if isinstance(data, SpectralData):
        def read(lam):
            if lam > data.lambda_max * (1 + LEVEL_MATCH_RTOL):
                return None
            return data.level_sum_at(lam)
        return read
    if callable(data):
        return lambda lam: float(data(lam))
    return None


def klein_echolocate(spec: FlatKleinSpec, data: LevelSource) -> Point:
    """Recover the canonical position (0, x2*) from level sums.

    ``data`` is the level sum at 2 pi / b itself, exact spectral data at the
    unknown point, or a callable mapping an eigenvalue to its level sum.  The
    level 2 pi / b gives (4/ab) cos^2(2 pi x2 / b).  When the level of the
    (1, 1) pair is available and holds nothing else it gives the matching
    sin^2, and the angle is recovered with atan2, which keeps full precision
    near x2 = 0; a single cos^2 loses about half the digits there.
    """
    lam0 = 2 * math.pi / spec.b
    read = _level_reader(data)
    value = read(lam0) if read else float(data)
    amp = 4.0 / (spec.a * spec.b)
    offset = amp if is_degenerate_klein(spec) else 0.0
    c = (value - offset) / amp
    slack = 1e-12
    if not (-slack <= c <= 1 + slack):
        raise InconsistentSpectralData(
            f"inconsistent spectral data: level sum {value!r} outside [{offset!r}, {offset + amp!r}]")
    c = min(max(c, 0.0), 1.0)
    lam1 = _clean_odd_level(spec) if read else None
    s_val = read(lam1) if lam1 is not None else None
    if s_val is None:
        theta = math.acos(math.sqrt(c))
    else:
        s = s_val / (2 * amp)  # a cos/sin pair: (8/ab) sin^2
        if not (-slack <= s <= 1 + slack) or abs(c + s - 1) > 1e-9:
            raise InconsistentSpectralData(
                f"inconsistent spectral data: level sums at {lam0!r} and {lam1!r} do not fit one point")
        theta = math.atan2(math.sqrt(min(max(s, 0.0), 1.0)), math.sqrt(c))
    x2 = spec.b / (2 * math.pi) * theta
    return klein_canonicalize(Point(0.0, x2), spec)


def echolocate_point(spec: FlatKleinSpec, x: Point) -> Point:
    """Round trip helper: hear the level sums at x, then locate."""
    return klein_echolocate(spec, lambda lam: level_sum(spec, x, lam))
