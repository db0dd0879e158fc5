"""Exact Laplace eigendata of rectangular flat tori and flat Klein bottles.

Klein bottle eigenfunctions on [0, a/2] x [0, b] come in three families:

* m = 0, n >= 0:          cos(2 pi n x2 / b)
* m > 0 even, n >= 0:     {cos, sin}(2 pi m x1 / a) cos(2 pi n x2 / b)
* m odd, n >= 1:          {cos, sin}(2 pi m x1 / a) sin(2 pi n x2 / b)

all with eigenvalue 2 pi sqrt(m^2/a^2 + n^2/b^2).  The squared densities below
are the L^2-normalized values on the fundamental domain (area ab/2), per single
function.  They were fixed against a midpoint-rule quadrature of the explicit
functions (see ``tests/oracles.py``): a cos/sin pair with m > 0 and n > 0 sums
to (8/ab) cos^2(2 pi n x2/b) (resp. sin^2), the m = 0, n > 0 function gives
(4/ab) cos^2(2 pi n x2/b), a pair with m > 0 and n = 0 sums to the constant
4/ab and the constant function gives 2/ab.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .geometry import FlatKleinSpec, FlatSpec, FlatTorusSpec, Point

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
# relative slack when comparing an eigenvalue against a user-supplied cutoff
LAMBDA_RTOL = 1e-12
LEVEL_RTOL = 1e-12
_MAX_DENOMINATOR = 10**9


class Family(str, Enum):
    KLEIN_CONST = "KleinConstRow"
    KLEIN_EVEN = "KleinEvenRow"
    KLEIN_ODD = "KleinOddRow"
    TORUS = "TorusMode"


_FAMILY_CODES = list(Family)


class NotAnEigenvalue(ValueError):
    pass


@dataclass(frozen=True)
class EigenMode:
    """One eigenfunction of a flat surface.

    For Klein modes ``part`` says whether the x1 factor is ``"cos"`` or
    ``"sin"`` (``""`` for the m = 0 row).  Torus modes are the complex
    exponentials exp(2 pi i (m x1/a + n x2/b)) with signed m, n.
    """

    family: Family
    m: int
    n: int
    lam: float
    lambda_sq_rational: Optional[Fraction] = None
    part: str = ""


@dataclass(frozen=True)
class LevelGroup:
    lam: float
    modes: tuple = field(default=())


def _rational(x) -> Optional[Fraction]:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    f = Fraction(repr(float(x)))
    return f if f.denominator <= _MAX_DENOMINATOR else None


@lru_cache(maxsize=64)
def _level_scale(a, b):
    """Integers (ca, cb, L) with m^2/a^2 + n^2/b^2 = (ca m^2 + cb n^2) / L, or None."""
    ra, rb = _rational(a), _rational(b)
    if ra is None or rb is None:
        log.warning("periods a=%r, b=%r are not recognizably rational; levels are grouped "
                    "with relative tolerance %g", a, b, LEVEL_RTOL)
        return None
    inv_a2, inv_b2 = 1 / ra**2, 1 / rb**2
    L = math.lcm(inv_a2.denominator, inv_b2.denominator)
    return inv_a2.numerator * (L // inv_a2.denominator), inv_b2.numerator * (L // inv_b2.denominator), L


def is_degenerate_klein(spec: FlatKleinSpec) -> bool:
    """True when 1/b = 2l/a for a positive integer l, decided exactly when possible."""
    ra, rb = _rational(spec.a), _rational(spec.b)
    if ra is not None and rb is not None:
        q = ra / (2 * rb)
        return q.denominator == 1 and q >= 1
    q = spec.a / (2 * spec.b)
    return q >= 1 - LEVEL_RTOL and abs(q - round(q)) <= LEVEL_RTOL * q


@dataclass
class ModeTable:
    """Vectorized form of a mode list: one row per eigenfunction, sorted by eigenvalue."""

    spec: FlatSpec
    family: np.ndarray  # index into Family
    m: np.ndarray
    n: np.ndarray
    sin_part: np.ndarray  # x1 factor is sin
    lam: np.ndarray
    key: np.ndarray  # exact level key (integer) or lam**2 when not rational
    exact: bool

    def __len__(self):
        return len(self.lam)

    def densities(self, x: Point) -> np.ndarray:
        """|e_j(x)|^2 for every mode."""
        spec = self.spec
        if isinstance(spec, FlatTorusSpec):
            return np.full(len(self), 1.0 / spec.area)
        x1, x2 = x
        ab = spec.a * spec.b
        th1 = TWO_PI * self.m * x1 / spec.a
        f1 = np.where(self.sin_part, np.sin(th1) ** 2, np.cos(th1) ** 2)
        th2 = TWO_PI * self.n * x2 / spec.b
        c2 = np.cos(th2) ** 2
        const = self.m == 0
        odd = self.m % 2 == 1
        # sin^2 directly, not 1 - cos^2, to keep relative precision near the nodes
        f2 = np.where(odd, np.sin(th2) ** 2, c2)
        out = np.where(const, np.where(self.n == 0, 2.0 / ab, 4.0 / ab * c2),
                       np.where(self.n == 0, 4.0 / ab * f1, 8.0 / ab * f1 * f2))
        return out

    def pair_densities(self, x: Point) -> np.ndarray:
        """Densities with each cos/sin pair replaced by its x1-free pair average.

        Every level sum is unchanged; values depend on x2 only.
        """
        spec = self.spec
        if isinstance(spec, FlatTorusSpec):
            return np.full(len(self), 1.0 / spec.area)
        ab = spec.a * spec.b
        th2 = TWO_PI * self.n * x.x2 / spec.b
        c2 = np.cos(th2) ** 2
        odd = self.m % 2 == 1
        f2 = np.where(odd, np.sin(th2) ** 2, c2)
        return np.where(self.m == 0, np.where(self.n == 0, 2.0 / ab, 4.0 / ab * c2),
                        np.where(self.n == 0, 2.0 / ab, 4.0 / ab * f2))

    def level_index(self):
        """(starts, keys): row offsets where each exact level begins."""
        if len(self) == 0:
            return np.zeros(0, dtype=int), self.key[:0]
        if self.exact:
            brk = np.flatnonzero(self.key[1:] != self.key[:-1]) + 1
        else:
            brk = np.flatnonzero(np.diff(self.lam) > LEVEL_RTOL * self.lam[1:]) + 1
        starts = np.concatenate([[0], brk])
        return starts, self.key[starts]

    def level_sums(self, x: Point, pairs: bool = True):
        """(level eigenvalues, level sums of the densities at x)."""
        dens = self.pair_densities(x) if pairs else self.densities(x)
        starts, _ = self.level_index()
        return self.lam[starts], np.add.reduceat(dens, starts) if len(starts) else dens[:0]

    def modes(self) -> list:
        out = []
        scale = _level_scale(self.spec.a, self.spec.b) if self.exact else None
        for i in range(len(self)):
            fam = _FAMILY_CODES[self.family[i]]
            rat = Fraction(int(self.key[i]), scale[2]) if scale else None
            part = "" if fam in (Family.KLEIN_CONST, Family.TORUS) else ("sin" if self.sin_part[i] else "cos")
            out.append(EigenMode(fam, int(self.m[i]), int(self.n[i]), float(self.lam[i]), rat, part))
        return out


def _keys(spec: FlatSpec, m: np.ndarray, n: np.ndarray):
    scale = _level_scale(spec.a, spec.b)
    if scale is None:
        q = (m / spec.a) ** 2 + (n / spec.b) ** 2
        return q, TWO_PI * np.sqrt(q), False
    ca, cb, L = scale
    mmax = int(np.max(np.abs(m), initial=0))
    nmax = int(np.max(np.abs(n), initial=0))
    if ca * mmax**2 + cb * nmax**2 < 2**62:
        key = ca * m.astype(np.int64) ** 2 + cb * n.astype(np.int64) ** 2
        lam = TWO_PI * np.sqrt(key / L)
    else:
        key = np.array([ca * int(i) ** 2 + cb * int(j) ** 2 for i, j in zip(m, n)], dtype=object)
        lam = TWO_PI * np.sqrt(np.array([float(Fraction(k, L)) for k in key]))
    return key, lam, True


def _finish(spec, fam, m, n, sin_part, lam_max) -> ModeTable:
    key, lam, exact = _keys(spec, m, n)
    keep = lam <= lam_max * (1 + LAMBDA_RTOL)
    fam, m, n, sin_part, key, lam = fam[keep], m[keep], n[keep], sin_part[keep], key[keep], lam[keep]
    order = np.lexsort((sin_part, n, m, key if exact else lam))
    return ModeTable(spec, fam[order], m[order], n[order], sin_part[order], lam[order], key[order], exact)


def _empty(spec) -> ModeTable:
    z = np.zeros(0, dtype=np.int64)
    return ModeTable(spec, z, z, z, z.astype(bool), z.astype(float), z, True)


def klein_table(spec: FlatKleinSpec, lambda_max: float) -> ModeTable:
    if lambda_max < 0:
        return _empty(spec)
    mmax = int(math.floor(spec.a * lambda_max / TWO_PI * (1 + LAMBDA_RTOL)))
    nmax = int(math.floor(spec.b * lambda_max / TWO_PI * (1 + LAMBDA_RTOL)))
    M, N = np.meshgrid(np.arange(mmax + 1), np.arange(nmax + 1), indexing="ij")
    M, N = M.ravel(), N.ravel()
    allowed = (M == 0) | ((M % 2 == 0)) | ((M % 2 == 1) & (N >= 1))
    M, N = M[allowed], N[allowed]
    paired = M > 0
    m = np.concatenate([M, M[paired]])
    n = np.concatenate([N, N[paired]])
    sin_part = np.concatenate([np.zeros(len(M), bool), np.ones(int(paired.sum()), bool)])
    fam = np.where(m == 0, 0, np.where(m % 2 == 0, 1, 2))
    return _finish(spec, fam, m, n, sin_part, lambda_max)


def torus_table(spec: FlatTorusSpec, lambda_max: float) -> ModeTable:
    if lambda_max < 0:
        return _empty(spec)
    mmax = int(math.floor(spec.a * lambda_max / TWO_PI * (1 + LAMBDA_RTOL)))
    nmax = int(math.floor(spec.b * lambda_max / TWO_PI * (1 + LAMBDA_RTOL)))
    M, N = np.meshgrid(np.arange(-mmax, mmax + 1), np.arange(-nmax, nmax + 1), indexing="ij")
    m, n = M.ravel(), N.ravel()
    fam = np.full(len(m), 3)
    return _finish(spec, fam, m, n, np.zeros(len(m), bool), lambda_max)


def mode_table(spec: FlatSpec, lambda_max: float) -> ModeTable:
    if isinstance(spec, FlatKleinSpec):
        return klein_table(spec, lambda_max)
    if isinstance(spec, FlatTorusSpec):
        return torus_table(spec, lambda_max)
    raise TypeError(f"not a flat surface: {spec!r}")


def klein_modes(spec: FlatKleinSpec, lambda_max: float) -> list:
    return klein_table(spec, lambda_max).modes()


def torus_modes(spec: FlatTorusSpec, lambda_max: float) -> list:
    return torus_table(spec, lambda_max).modes()


def eigenvalue(spec: FlatSpec, m: int, n: int) -> float:
    return TWO_PI * math.sqrt((m / spec.a) ** 2 + (n / spec.b) ** 2)


def mode_density(mode: EigenMode, x: Point, spec: FlatSpec) -> float:
    torus = isinstance(spec, FlatTorusSpec)
    if torus != (mode.family is Family.TORUS):
        raise ValueError(f"mode family {mode.family.value} does not belong to {spec!r}")
    if not math.isclose(eigenvalue(spec, mode.m, mode.n), mode.lam, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError(f"mode ({mode.m}, {mode.n}) has eigenvalue {mode.lam}, inconsistent with {spec!r}")
    if torus:
        return 1.0 / spec.area
    table = ModeTable(spec, np.array([0]), np.array([mode.m]), np.array([mode.n]),
                      np.array([mode.part == "sin"]), np.array([mode.lam]), np.array([0]), True)
    return float(table.densities(x)[0])


def pointwise_weyl(spec: FlatSpec, x: Point, lam: float) -> float:
    """N_x(lam): sum of |e_j(x)|^2 over eigenvalues lam_j <= lam."""
    if lam < 0:
        return 0.0
    table = mode_table(spec, lam)
    return float(np.sum(table.densities(x)))


def weyl_sweep(spec: FlatSpec, x: Point, lambdas) -> np.ndarray:
    """N_x evaluated on an array of frequencies."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        return lambdas.copy()
    table = mode_table(spec, float(lambdas.max()))
    cum = np.concatenate([[0.0], np.cumsum(table.densities(x))])
    idx = np.searchsorted(table.lam, lambdas * (1 + LAMBDA_RTOL), side="right")
    return cum[idx]


def level_groups(spec: FlatSpec, lambda_max: float) -> list:
    table = mode_table(spec, lambda_max)
    modes = table.modes()
    starts, _ = table.level_index()
    bounds = list(starts) + [len(modes)]
    return [LevelGroup(modes[s].lam, tuple(modes[s:e])) for s, e in zip(bounds[:-1], bounds[1:])]


def level_sum(spec: FlatSpec, x: Point, lambda0: float) -> float:
    """Sum of |e_j(x)|^2 over the modes with eigenvalue exactly ``lambda0``."""
    table = mode_table(spec, lambda0)
    if len(table) == 0:
        raise NotAnEigenvalue(f"{lambda0} is not an eigenvalue")
    top = table.lam[-1]
    if not math.isclose(top, lambda0, rel_tol=1e-9, abs_tol=1e-12):
        raise NotAnEigenvalue(f"{lambda0} is not an eigenvalue (nearest below: {top})")
    starts, _ = table.level_index()
    s = starts[-1]
    return float(np.sum(table.pair_densities(x)[s:]))


def weyl_upper(spec: FlatSpec, mu: float) -> float:
    """Upper bound for N_x(mu) valid at every x.

    Counts lattice points (m, n) in Z^2 with 2 pi |(m/a, n/b)| <= mu, which
    dominates the Klein mode count, times the largest single-mode density.
    """
    dmax = 1.0 / (spec.a * spec.b) if isinstance(spec, FlatTorusSpec) else 8.0 / (spec.a * spec.b)
    mu = max(mu, 0.0)
    return dmax * (spec.a * mu / math.pi + 1) * (spec.b * mu / math.pi + 1)
