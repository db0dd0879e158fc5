"""Geodesic loops at a point: deck-group orbits, looping times, geometric trace side."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .geometry import (DomainError, FlatKleinSpec, FlatTorusSpec, HPoint, HyperbolicSurfaceSpec,
                       MobiusElement, Point, hyperbolic_distance, mobius_apply)
from .traces import TraceValue, Window

LENGTH_TOL = 1e-8
NEAR_DEGENERATE = 10 * LENGTH_TOL
# Leading stationary-phase coefficient.  Only the e^{+it mu} half of
# cos(t mu) = (e^{it mu} + e^{-it mu}) / 2 contributes for windows supported in
# t > 0, which is where the 1/2 comes from.
LEADING_COEFF = 0.5 / math.sqrt(2 * math.pi)
_KEY_SCALE = 1e6


class SaturationError(RuntimeError):
    def __init__(self, msg, partial, cap):
        super().__init__(msg)
        self.partial = partial
        self.cap = cap


class NotHyperbolic(ValueError):
    pass


class DeckKind(str, Enum):
    TORUS = "TorusLattice"
    KLEIN = "KleinGlide"


@dataclass(frozen=True)
class FlatDeckSpec:
    kind: DeckKind
    a: float
    b: float

    @classmethod
    def of(cls, spec: Union[FlatTorusSpec, FlatKleinSpec]) -> "FlatDeckSpec":
        kind = DeckKind.TORUS if isinstance(spec, FlatTorusSpec) else DeckKind.KLEIN
        return cls(kind, spec.a, spec.b)


@dataclass(frozen=True)
class LoopEntry:
    r: float
    multiplicity: int
    words: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class LoopTable:
    basepoint: Union[HPoint, Point]
    R: float
    entries: tuple

    @property
    def lengths(self):
        return [e.r for e in self.entries]

    def as_pairs(self):
        return [(e.r, e.multiplicity) for e in self.entries]


def translation_length(g: MobiusElement) -> float:
    tr = abs(g.trace)
    if tr <= 2.0:
        raise NotHyperbolic(f"not hyperbolic: |trace| = {tr}")
    return 2.0 * math.acosh(tr / 2.0)


def _canonical(mats: np.ndarray) -> np.ndarray:
    flat = mats.reshape(-1, 4)
    nz = np.abs(flat) > 1e-9
    first = np.argmax(nz, axis=1)
    sign = np.sign(flat[np.arange(len(flat)), first])
    sign[sign == 0] = 1.0
    return mats * sign[:, None, None]


def _orbit_distances(mats: np.ndarray, z: complex) -> np.ndarray:
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    den = c * z + d
    w = (a * z + b) / den
    im_w = z.imag / np.abs(den) ** 2
    num = np.abs(w - z) ** 2
    return 2.0 * np.arcsinh(np.sqrt(num / (4.0 * z.imag * im_w)))


def enumerate_deck(spec: HyperbolicSurfaceSpec, R: float, max_word_length: int = 60,
                   basepoint: Optional[HPoint] = None) -> list:
    """All deck elements g != id with d(x, g x) <= R, as (MobiusElement, distance) pairs.

    Breadth-first search over freely reduced words, pruning elements that move
    the basepoint farther than R + 2 * (largest generator displacement).
    Enumeration stops once two successive word lengths bring no new orbit
    point within R, or when the search tree is exhausted.
    """
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    x = basepoint or spec.basepoint_lift
    z = x.z
    gens = [g.matrix for g in spec.generators]
    letters = []
    for i, g in enumerate(gens, start=1):
        letters.append((i, g))
        letters.append((-i, np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])))
    letter_ids = np.array([l for l, _ in letters])
    letter_mats = np.array([m for _, m in letters])
    disp = max(hyperbolic_distance(x, mobius_apply(g, x)) for g in spec.generators)
    prune = R + 2.0 * disp

    ident = np.eye(2)
    seen = {_key(ident)}
    found = []
    frontier = ident[None]
    frontier_words = [()]
    quiet = 0
    for length in range(1, max_word_length + 1):
        prod = np.einsum("fij,ljk->flik", frontier, letter_mats).reshape(-1, 2, 2)
        words_l = np.tile(letter_ids, len(frontier))
        parent = np.repeat(np.arange(len(frontier)), len(letters))
        last = np.array([w[-1] if w else 0 for w in frontier_words])[parent]
        ok = words_l != -last
        dist = _orbit_distances(prod, z)
        ok &= dist <= prune
        prod = _canonical(prod)
        new_mats, new_words, added_inside = [], [], 0
        for idx in np.flatnonzero(ok):
            k = _key(prod[idx])
            if k in seen:
                continue
            seen.add(k)
            word = frontier_words[parent[idx]] + (int(words_l[idx]),)
            new_mats.append(prod[idx])
            new_words.append(word)
            if dist[idx] <= R:
                found.append((prod[idx], word, float(dist[idx])))
                added_inside += 1
        if not new_mats:
            break
        quiet = quiet + 1 if added_inside == 0 else 0
        if quiet >= 2:
            break
        frontier = np.array(new_mats)
        frontier_words = new_words
    else:
        partial = _as_elements(found)
        raise SaturationError(f"orbit enumeration within R={R} not saturated by word length "
                              f"{max_word_length}", partial, max_word_length)
    return _as_elements(found)


def _key(m: np.ndarray) -> bytes:
    return np.round(m.ravel() * _KEY_SCALE).astype(np.int64).tobytes()


def _as_elements(found):
    found = sorted(found, key=lambda f: (f[2], f[1]))
    out = []
    for m, word, d in found:
        g = MobiusElement(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]), word)
        out.append((g, d))
    return out


def flat_orbit(deck: FlatDeckSpec, x: Point, R: float) -> list:
    """(word, distance) for deck elements g != id with |g x - x| <= R on the plane.

    Words are ``(k, l)``: torus translation by (k a, l b); Klein glide to the
    power k followed by translation by l b, i.e.
    (x1, x2) -> (x1 + k a/2, (-1)^k x2 + l b).
    """
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    step1 = deck.a if deck.kind is DeckKind.TORUS else deck.a / 2
    kmax = int(math.floor(R / step1))
    out = []
    for k in range(-kmax, kmax + 1):
        dx = k * step1
        rest = R * R - dx * dx
        if rest < 0:
            continue
        shift = -2.0 * x.x2 if (deck.kind is DeckKind.KLEIN and k % 2) else 0.0
        span = math.sqrt(rest) / deck.b
        lo = int(math.floor((-span - shift / deck.b))) - 1
        hi = int(math.ceil((span - shift / deck.b))) + 1
        for l in range(lo, hi + 1):
            if k == 0 and l == 0:
                continue
            dy = shift + l * deck.b
            d = math.hypot(dx, dy)
            if d <= R:
                out.append(((k, l), d))
    out.sort(key=lambda e: (e[1], e[0]))
    return out


def _cluster(items, R, basepoint) -> LoopTable:
    entries = []
    cur = []
    for word, d in items:
        if cur and d - cur[-1][1] > LENGTH_TOL:
            entries.append(cur)
            cur = []
        cur.append((word, d))
    if cur:
        entries.append(cur)
    table = []
    for grp in entries:
        r = float(np.mean([d for _, d in grp]))
        table.append(LoopEntry(r, len(grp), tuple(w for w, _ in grp)))
    for e1, e2 in zip(table, table[1:]):
        if e2.r - e1.r < NEAR_DEGENERATE:
            warnings.warn(f"near-degenerate lengths {e1.r!r} and {e2.r!r}", RuntimeWarning)
    return LoopTable(basepoint, R, tuple(table))


def looping_times(spec, basepoint=None, R: float = 3.0) -> LoopTable:
    """Looping times with multiplicities up to length R.

    ``spec`` is a HyperbolicSurfaceSpec, a FlatDeckSpec, or a flat surface spec.
    """
    if isinstance(spec, (FlatTorusSpec, FlatKleinSpec)):
        spec = FlatDeckSpec.of(spec)
    if isinstance(spec, FlatDeckSpec):
        if basepoint is None:
            raise DomainError("flat loop tables need a basepoint")
        return _cluster(flat_orbit(spec, basepoint, R), R, basepoint)
    x = basepoint or spec.basepoint_lift
    elems = enumerate_deck(spec, R, basepoint=x)
    return _cluster([(g.word, d) for g, d in elems], R, x)


def shortest_loop(spec, basepoint=None, R0: float = 2.0, max_doublings: int = 8) -> float:
    R = R0
    for _ in range(max_doublings):
        table = looping_times(spec, basepoint, R)
        if table.entries:
            return table.entries[0].r
        R *= 2
    raise SaturationError(f"no loop found up to length {R / 2}", None, R / 2)


def loop_sum(dists, lam: float, w: Window, hyperbolic: bool) -> complex:
    """Leading-order loop sum over orbit distances lying in the window's support."""
    terms = []
    for d in dists:
        if not w.t_lo <= d <= w.t_hi:
            continue
        amp = 1.0 / math.sqrt(math.sinh(d)) if hyperbolic else 1.0 / math.sqrt(d)
        terms.append(LEADING_COEFF * math.sqrt(lam) * cmath.exp(1j * (math.pi / 4 - lam * d))
                     * amp * float(w.chi_hat(d)))
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def geometric_side(spec: HyperbolicSurfaceSpec, basepoint: Optional[HPoint], lam: float,
                   w: Window) -> TraceValue:
    """Leading-order loop sum for a compact hyperbolic quotient, amplitude 1/sqrt(sinh d)."""
    x = basepoint or spec.basepoint_lift
    elems = enumerate_deck(spec, w.t_hi, basepoint=x)
    return TraceValue(loop_sum([d for _, d in elems], lam, w, hyperbolic=True), 0.0)


def geometric_side_flat(deck, x: Point, lam: float, w: Window) -> TraceValue:
    """Leading-order loop sum on a flat torus or Klein bottle, amplitude 1/sqrt(d)."""
    if isinstance(deck, (FlatTorusSpec, FlatKleinSpec)):
        deck = FlatDeckSpec.of(deck)
    dists = [d for _, d in flat_orbit(deck, x, w.t_hi)]
    return TraceValue(loop_sum(dists, lam, w, hyperbolic=False), 0.0)
