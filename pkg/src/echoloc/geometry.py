"""Surface descriptions, points, and upper half-plane primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

DET_TOL = 1e-12


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class FlatTorusSpec:
    """Rectangular torus R^2 / (aZ x bZ)."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"torus periods must be positive, got a={self.a}, b={self.b}")

    @property
    def area(self) -> float:
        return self.a * self.b

    def reduce(self, x1: float, x2: float) -> "Point":
        return Point(x1 % self.a, x2 % self.b)


@dataclass(frozen=True)
class FlatKleinSpec:
    """Flat Klein bottle K_{a,b}.

    The fundamental rectangle is [0, a/2] x [0, b]; the deck group on the plane
    is generated by the glide (x1, x2) -> (x1 + a/2, -x2) and the translation
    (x1, x2) -> (x1, x2 + b).
    """

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"Klein bottle periods must be positive, got a={self.a}, b={self.b}")

    @property
    def area(self) -> float:
        return self.a * self.b / 2

    def reduce(self, x1: float, x2: float) -> "Point":
        half = self.a / 2
        k = math.floor(x1 / half)
        x1 = x1 - k * half
        if x1 >= half:  # rounding at the upper edge
            x1 -= half
            k += 1
        if k % 2:
            x2 = -x2
        return Point(x1, x2 % self.b)


FlatSpec = Union[FlatTorusSpec, FlatKleinSpec]


@dataclass(frozen=True)
class Point:
    x1: float
    x2: float

    def __iter__(self):
        yield self.x1
        yield self.x2


@dataclass(frozen=True)
class HPoint:
    """A point of the upper half-plane."""

    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0:
            raise DomainError(f"upper half-plane point needs im > 0, got {self.im}")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(z.real, z.imag)


def _canonical_sign(m: np.ndarray) -> np.ndarray:
    # first entry that is not numerically zero made positive
    for v in m.ravel():
        if abs(v) > 1e-12:
            return m if v > 0 else -m
    return m


@dataclass(frozen=True)
class MobiusElement:
    """An element of PSL(2, R) with the word that produced it.

    ``word`` holds signed, 1-based generator indices (``-2`` is the inverse of
    the second generator).  The stored matrix is sign-normalized so that its
    first nonzero entry is positive.
    """

    a: float
    b: float
    c: float
    d: float
    word: tuple = field(default=(), compare=False)

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        scale = max(1.0, abs(self.a * self.d), abs(self.b * self.c))
        if abs(det - 1.0) > DET_TOL * scale:
            raise DomainError(f"Mobius element must have determinant 1, got {det!r}")
        for v in (self.a, self.b, self.c, self.d):
            if abs(v) > 1e-12:
                if v < 0:
                    for k in "abcd":
                        object.__setattr__(self, k, -getattr(self, k) + 0.0)
                break

    @classmethod
    def from_matrix(cls, m, word: Sequence[int] = ()) -> "MobiusElement":
        m = _canonical_sign(np.asarray(m, dtype=float).reshape(2, 2))
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]), tuple(word))

    @classmethod
    def identity(cls) -> "MobiusElement":
        return cls(1.0, 0.0, 0.0, 1.0, ())

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "MobiusElement") -> "MobiusElement":
        return MobiusElement.from_matrix(self.matrix @ other.matrix, self.word + other.word)

    def inverse(self) -> "MobiusElement":
        return MobiusElement.from_matrix(
            [[self.d, -self.b], [-self.c, self.a]], tuple(-g for g in reversed(self.word))
        )

    def conjugate_by(self, h: "MobiusElement") -> "MobiusElement":
        """Return h g h^-1, keeping the word of g."""
        m = h.matrix @ self.matrix @ h.inverse().matrix
        return MobiusElement.from_matrix(m, self.word)


def hyperbolic_distance(z: HPoint, w: HPoint) -> float:
    if z.im <= 0 or w.im <= 0:
        raise DomainError("hyperbolic distance needs points with positive imaginary part")
    num = (z.re - w.re) ** 2 + (z.im - w.im) ** 2
    # 2 asinh(|z-w| / (2 sqrt(im z im w))) equals the arccosh form but keeps precision near 0
    return 2.0 * math.asinh(math.sqrt(num / (4.0 * z.im * w.im)))


def mobius_apply(g: MobiusElement, z: HPoint) -> HPoint:
    w = (g.a * z.z + g.b) / (g.c * z.z + g.d)
    # im part from the exact formula im(z) / |cz + d|^2 to avoid cancellation
    im = z.im / abs(g.c * z.z + g.d) ** 2
    return HPoint(w.real, im)


def klein_canonicalize(x: Point, spec: FlatKleinSpec) -> Point:
    """Map ``x`` by a Klein-bottle isometry to ``(0, x2*)`` with ``x2*`` in [0, b/4].

    Horizontal translations remove x1; the vertical coordinate is reduced modulo
    the group generated by x2 -> -x2 and x2 -> x2 + b/2.
    """
    half = spec.b / 2
    y = x.x2 % half
    if y > half / 2:
        y = half - y
    return Point(0.0, y)


def disk_to_half_plane(m) -> np.ndarray:
    """Conjugate an SU(1,1) disk matrix to an SL(2,R) half-plane matrix."""
    cayley = np.array([[1, -1j], [1, 1j]])  # z -> (z - i)/(z + i), H -> D
    cinv = np.array([[1j, 1j], [-1, 1]]) / (2j)
    out = cinv @ np.asarray(m, dtype=complex) @ cayley
    if np.max(np.abs(out.imag)) > 1e-12 * max(1.0, np.max(np.abs(out.real))):
        raise DomainError("matrix does not preserve the unit disk")
    return out.real


def disk_translation(length: float, angle: float = 0.0) -> np.ndarray:
    """Disk-model hyperbolic translation of ``length`` along the diameter at ``angle``."""
    ch, sh = math.cosh(length / 2), math.sinh(length / 2)
    t = np.array([[ch, sh], [sh, ch]], dtype=complex)
    rot = np.diag([np.exp(1j * angle / 2), np.exp(-1j * angle / 2)])
    return rot @ t @ rot.conj()


def bolza_generators() -> list:
    """Side pairings of the regular octagon with angles pi/4 (genus 2).

    Each generator translates by 2 arccosh(1 + sqrt 2) along a diameter through
    the octagon's centre, which the half-plane picture places at i.
    """
    length = 2 * math.acosh(1 + math.sqrt(2))
    gens = []
    for k in range(4):
        m = disk_to_half_plane(disk_translation(length, k * math.pi / 4))
        m /= math.sqrt(np.linalg.det(m))
        gens.append(MobiusElement.from_matrix(m, (k + 1,)))
    return gens


@dataclass(frozen=True)
class HyperbolicSurfaceSpec:
    """Compact hyperbolic quotient given by deck-group generators and a basepoint lift.

    Discreteness and cocompactness of the group are the caller's responsibility.
    """

    generators: tuple
    basepoint_lift: HPoint = HPoint(0.0, 1.0)

    def __post_init__(self):
        if not self.generators:
            raise DomainError("need at least one generator")
        object.__setattr__(self, "generators", tuple(self.generators))

    def with_basepoint(self, z: HPoint) -> "HyperbolicSurfaceSpec":
        return HyperbolicSurfaceSpec(self.generators, z)

    def conjugate(self, h: MobiusElement) -> "HyperbolicSurfaceSpec":
        """The same surface seen through the lift change z -> h(z)."""
        gens = tuple(g.conjugate_by(h) for g in self.generators)
        return HyperbolicSurfaceSpec(gens, mobius_apply(h, self.basepoint_lift))


def bolza_surface(basepoint: HPoint = HPoint(0.0, 1.0)) -> HyperbolicSurfaceSpec:
    return HyperbolicSurfaceSpec(tuple(bolza_generators()), basepoint)
