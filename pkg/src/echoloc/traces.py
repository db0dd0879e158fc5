"""Spectral-side transforms of dN_x: heat trace, curvature, smoothed wave sums.

Fourier convention, used everywhere in the package:

    chi(mu) = integral of chi_hat(t) exp(-i t mu) dt      (no factor 2 pi)

so the smoothed wave trace of dN_x at frequency lam is

    sum_j 1/2 [chi(lam - lam_j) + chi(lam + lam_j)] |e_j(x)|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .geometry import DomainError, FlatSpec, Point
from .spectrum import mode_table, weyl_upper

HEAT_CUTOFF = 40.0  # keep modes with lam_j^2 t <= HEAT_CUTOFF
DEFAULT_HEAT_TIMES = (0.002, 0.001, 0.0005)
TAIL_TOL = 1e-8
QUAD_TOL = 1e-10
GAUSS_RATE = 32.0  # rho(s) = exp(-32 s^2): support |s| <= 1 is 8 standard deviations


class QuadratureError(RuntimeError):
    def __init__(self, msg, achieved):
        super().__init__(f"{msg} (achieved {achieved:.3g})")
        self.achieved = achieved


class SpectralRangeError(RuntimeError):
    pass


class Profile(str, Enum):
    GAUSSIAN = "GaussianBump"
    COMPACT = "CompactBump"


class Weight(str, Enum):
    NONE = "None"
    SQRT_SINH = "SqrtSinh"
    SQRT_T = "SqrtT"


@dataclass(frozen=True)
class TraceValue:
    value: complex
    truncation_bound: float


@dataclass(frozen=True)
class Window:
    """chi_hat(t) = weight(t) * rho((t - r) / eps), supported in [r - eps, r + eps].

    ``CompactBump`` uses rho(s) = exp(1 - 1/(1 - s^2)) on (-1, 1).
    ``GaussianBump`` uses rho(s) = exp(-32 s^2) cut off at |s| = 1, i.e. at
    eight standard deviations; the discarded mass is below 1e-15 * eps.
    Both have rho(0) = 1.
    """

    r: float
    eps: float
    profile: Profile = Profile.GAUSSIAN
    weight: Weight = Weight.NONE

    def __post_init__(self):
        object.__setattr__(self, "profile", Profile(self.profile))
        object.__setattr__(self, "weight", Weight(self.weight))
        if not self.eps > 0:
            raise DomainError(f"window width must be positive, got {self.eps}")
        if not self.t_lo > 0:
            raise DomainError(f"window support must stay in t > 0, got [{self.t_lo}, {self.t_hi}]")

    @property
    def t_lo(self) -> float:
        return self.r - self.eps

    @property
    def t_hi(self) -> float:
        return self.r + self.eps

    def rho(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) < 1
        if self.profile is Profile.GAUSSIAN:
            return np.where(np.abs(s) <= 1, np.exp(-GAUSS_RATE * s * s), 0.0)
        safe = np.where(inside, s, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)

    def weight_fn(self, t):
        t = np.asarray(t, dtype=float)
        if self.weight is Weight.SQRT_T:
            return np.sqrt(np.abs(t))
        if self.weight is Weight.SQRT_SINH:
            return np.sqrt(np.sinh(np.abs(t)))
        return np.ones_like(t)

    def chi_hat(self, t):
        t = np.asarray(t, dtype=float)
        return self.weight_fn(t) * self.rho((t - self.r) / self.eps)


@lru_cache(maxsize=32)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def _gl_transform(w: Window, mu: np.ndarray, n: int) -> np.ndarray:
    x, wq = _leggauss(n)
    t = w.r + w.eps * x
    f = w.eps * wq * w.chi_hat(t)
    out = np.empty(mu.shape, dtype=complex)
    step = max(1, 4_000_000 // n)
    for i in range(0, len(mu), step):
        out[i:i + step] = np.exp(-1j * np.outer(mu[i:i + step], t)) @ f
    return out


def window_transform(w: Window, mu) -> np.ndarray | complex:
    """chi(mu) for the window ``w``; scalar in, scalar out."""
    scalar = np.ndim(mu) == 0
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if w.profile is Profile.GAUSSIAN and w.weight is Weight.NONE:
        out = w.eps * math.sqrt(math.pi / GAUSS_RATE) * np.exp(
            -(mu * w.eps) ** 2 / (4 * GAUSS_RATE)) * np.exp(-1j * w.r * mu)
        return complex(out[0]) if scalar else out
    if mu.size == 0:
        return mu.astype(complex)
    mmax = float(np.max(np.abs(mu)))
    n = int(48 + 0.75 * w.eps * mmax)
    probe = np.unique(np.concatenate([np.linspace(mu.min(), mu.max(), 33), [mu[np.argmax(np.abs(mu))]]]))
    diff = np.inf
    for _ in range(7):
        diff = np.max(np.abs(_gl_transform(w, probe, n) - _gl_transform(w, probe, 2 * n)))
        if diff <= QUAD_TOL / 10:
            out = _gl_transform(w, mu, 2 * n)
            return complex(out[0]) if scalar else out
        n *= 2
    raise QuadratureError("window transform quadrature did not converge", diff)


def _decay(w: Window, s):
    # asymptotic decay law of |chi|, deliberately slower than the true rate
    if w.profile is Profile.GAUSSIAN:
        return np.exp(-0.9 * (s * w.eps) ** 2 / (4 * GAUSS_RATE))
    return np.exp(-np.sqrt(w.eps * s))


def transform_envelope(w: Window, s_max: float, step: float | None = None):
    """Grid s and a nonincreasing envelope E(s) estimating max |chi(mu)| over |mu| >= s.

    |chi| is sampled (spacing 1/(4 eps) by default) while it stays above a
    relative noise floor of 1e-13; past the last reliable sample the envelope
    follows the profile's asymptotic decay, anchored there with a safety
    factor of 10.  This is an estimate, not a proof.
    """
    step = step or 0.25 / w.eps
    s = np.arange(0.0, s_max + step, step)
    if w.profile is Profile.GAUSSIAN:
        n_sample = min(len(s), int(np.searchsorted(s, 100.0 / w.eps)) + 1)
    else:
        n_sample = len(s)
    mag = np.abs(window_transform(w, s[:n_sample]))
    reliable = np.flatnonzero(mag > 1e-13 * mag.max())
    k = int(reliable[-1])
    env = np.empty(len(s))
    env[:k + 1] = np.maximum.accumulate(mag[:k + 1][::-1])[::-1]
    if k + 1 < len(s):
        anchor = 10.0 * env[k] / _decay(w, s[k])
        env[k + 1:] = np.minimum(env[k], anchor * _decay(w, s[k + 1:]))
    return s, env


def _tail_profile(w: Window, lam: float, upper, s_max: float):
    """For each grid offset s_k, a bound on sum_{lam_j > lam + s_k} |chi(lam - lam_j)| d_j."""
    s, env = transform_envelope(w, s_max)
    drop = env[:-1] - env[1:]
    contrib = drop * np.array([upper(lam + v) for v in s[1:]])
    tail = np.concatenate([np.cumsum(contrib[::-1])[::-1], [0.0]])
    tail += env[-1] * upper(lam + s[-1])  # whatever lies past the grid
    return s, tail


def spectral_cutoff(w: Window, lam: float, upper, tol: float = TAIL_TOL, max_pad: float = 5000.0):
    """Smallest sampled cutoff lam + pad whose discarded tail is below ``tol``.

    Returns (cutoff, tail_bound).  Raises SpectralRangeError when no pad up to
    ``max_pad`` suffices.
    """
    s, tail = _tail_profile(w, lam, upper, max_pad)
    ok = np.flatnonzero(tail < tol)
    if ok.size == 0:
        raise SpectralRangeError(f"tail bound violated: best achievable {tail.min():.3g} > {tol:g} "
                                 f"with padding up to {max_pad:g}")
    k = ok[0]
    return lam + s[k], float(tail[k])


def smoothed_sum(lams, dens, lam: float, w: Window) -> complex:
    """sum_j 1/2 [chi(lam - lam_j) + chi(lam + lam_j)] dens_j over the given pairs."""
    lams = np.asarray(lams, dtype=float)
    dens = np.asarray(dens, dtype=float)
    if lams.size == 0:
        return 0j
    vals = 0.5 * (window_transform(w, lam - lams) + window_transform(w, lam + lams))
    return complex(np.sum(vals * dens))


@lru_cache(maxsize=32)
def _levels(spec, x, cutoff):
    table = mode_table(spec, cutoff)
    return table.level_sums(x)


def _rounded_cutoff(c):
    return float(64 * math.ceil(c / 64))


def smoothed_wave_spectral(spec: FlatSpec, x: Point, lam: float, w: Window,
                           tol: float = TAIL_TOL) -> TraceValue:
    """Smoothed wave trace from exact flat eigendata, truncated with a tail estimate."""
    if not lam > 0:
        raise DomainError(f"frequency must be positive, got {lam}")
    cutoff, bound = spectral_cutoff(w, lam, lambda mu: weyl_upper(spec, mu), tol)
    levels, sums = _levels(spec, x, _rounded_cutoff(cutoff))
    return TraceValue(smoothed_sum(levels, sums, lam, w), bound)


def heat_trace(spec: FlatSpec, x: Point, t: float) -> TraceValue:
    """sum_j exp(-t lam_j^2) |e_j(x)|^2 with a bound on the omitted modes."""
    if not t > 0:
        raise DomainError(f"heat time must be positive, got {t}")
    cut = math.sqrt(HEAT_CUTOFF / t)
    table = mode_table(spec, cut)
    terms = np.exp(-t * table.lam**2) * table.densities(x)
    value = math.fsum(terms)
    return TraceValue(value, _heat_tail(spec, t, cut))


def _heat_tail(spec: FlatSpec, t: float, cut: float) -> float:
    # integrate the Weyl upper bound D (1 + c1 mu + c2 mu^2) against -d/dmu exp(-t mu^2)
    dmax = weyl_upper(spec, 0.0)
    c1 = (spec.a + spec.b) / math.pi
    c2 = spec.a * spec.b / math.pi**2
    e = math.exp(-t * cut * cut)
    m0 = e
    m1 = cut * e + math.sqrt(math.pi / t) / 2 * math.erfc(math.sqrt(t) * cut)
    m2 = (cut * cut + 1 / t) * e
    return dmax * (m0 + c1 * m1 + c2 * m2)


def curvature_estimate(spec: FlatSpec, x: Point, times=DEFAULT_HEAT_TIMES, tol: float = 1e-9) -> float:
    """Richardson extrapolation to t = 0 of 3 (4 pi t H(t) - 1) / t.

    The default times sit well below the squared length of the shortest loop on
    the presets; at t of order 0.01 the loop terms exp(-d^2/4t) still dominate
    the extrapolated value for unit-size surfaces.
    """
    times = tuple(float(t) for t in times)
    vals = []
    for t in times:
        h = heat_trace(spec, x, t)
        if 12 * math.pi * h.truncation_bound > tol:
            raise SpectralRangeError(f"insufficient spectral range at t={t}: "
                                     f"tail bound {h.truncation_bound:.3g}")
        vals.append(3.0 * (4 * math.pi * t * h.value - 1.0) / t)
    # value at t = 0 of the interpolating polynomial
    est = 0.0
    for i, (ti, fi) in enumerate(zip(times, vals)):
        li = 1.0
        for j, tj in enumerate(times):
            if j != i:
                li *= (0.0 - tj) / (ti - tj)
        est += li * fi
    return est
