"""The energy conic of the singular SU(3) Toda system.

For masses ``mu1, mu2 > 0`` the curve is

    s1**2 - s1*s2 + s2**2 = 2*mu1*s1 + 2*mu2*s2,    s1, s2 >= 0.

Points carry their coordinates as :class:`~toda_sigma.numeric.RealScalar`
so that intersections with coordinate lines stay exact or certified.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import AmbiguousSign
from .numeric import (
    MAX_PRECISION,
    TAU_EQ,
    Cmp,
    Number,
    RealScalar,
    as_rational,
    real,
    real_cmp,
    real_sqrt,
)


class Axis(str, enum.Enum):
    """Which coordinate a line fixes: ``S1`` is ``s1 = const``."""

    S1 = "s1"
    S2 = "s2"

    @property
    def other(self) -> Axis:
        return Axis.S2 if self is Axis.S1 else Axis.S1


@dataclass(frozen=True)
class Seed:
    index: int

    def __str__(self):
        return f"seed[{self.index}]"


@dataclass(frozen=True)
class Intersection:
    """Point found on the line ``axis = parent.axis + 2*shift``."""

    parent: int | None
    axis: Axis
    shift: int | None

    def __str__(self):
        parent = "?" if self.parent is None else str(self.parent)
        shift = "?" if self.shift is None else str(self.shift)
        return f"p{parent}:{self.axis.value}+2*{shift}"


Provenance = Seed | Intersection


@dataclass(frozen=True)
class SigmaPoint:
    s1: RealScalar
    s2: RealScalar
    provenance: Provenance | None = None

    def coords(self) -> tuple[RealScalar, RealScalar]:
        return self.s1, self.s2

    def coord(self, axis: Axis) -> RealScalar:
        return self.s1 if axis is Axis.S1 else self.s2

    def swapped(self) -> SigmaPoint:
        prov = self.provenance
        if isinstance(prov, Intersection):
            prov = Intersection(prov.parent, prov.axis.other, prov.shift)
        return SigmaPoint(self.s2, self.s1, prov)

    def as_floats(self) -> tuple[float, float]:
        return float(self.s1), float(self.s2)

    def __str__(self):
        return f"({self.s1}, {self.s2})"


def _pair(p) -> tuple[RealScalar, RealScalar]:
    if isinstance(p, SigmaPoint):
        return p.s1, p.s2
    a, b = p
    return real(a), real(b)


@dataclass(frozen=True)
class Conic:
    """The curve for rational masses ``mu_i = 1 + gamma_i > 0``."""

    mu1: Fraction
    mu2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "mu1", as_rational(self.mu1))
        object.__setattr__(self, "mu2", as_rational(self.mu2))
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError(f"masses must be positive, got mu1={self.mu1}, mu2={self.mu2}")

    @classmethod
    def from_gamma(cls, gamma1, gamma2) -> Conic:
        return cls(1 + as_rational(gamma1), 1 + as_rational(gamma2))

    def swapped(self) -> Conic:
        return Conic(self.mu2, self.mu1)

    def _mu(self, axis: Axis) -> Fraction:
        return self.mu1 if axis is Axis.S1 else self.mu2

    def residual(self, p) -> RealScalar:
        """``s1^2 - s1 s2 + s2^2 - 2 mu1 s1 - 2 mu2 s2``; zero exactly on the curve."""
        s1, s2 = _pair(p)
        return s1 * s1 - s1 * s2 + s2 * s2 - 2 * self.mu1 * s1 - 2 * self.mu2 * s2

    def seed_points(self) -> list[SigmaPoint]:
        m1, m2 = self.mu1, self.mu2
        coords = [
            (0, 0),
            (2 * m1, 0),
            (0, 2 * m2),
            (2 * m1, 2 * (m1 + m2)),
            (2 * (m1 + m2), 2 * m2),
            (2 * (m1 + m2), 2 * (m1 + m2)),
        ]
        return [SigmaPoint(real(a), real(b), Seed(i)) for i, (a, b) in enumerate(coords)]

    def bounding_box(self) -> tuple[RealScalar, RealScalar]:
        """Maxima of s1 and of s2 over the curve."""
        m1, m2 = self.mu1, self.mu2
        root = real_sqrt(m1 * m1 + m1 * m2 + m2 * m2)
        s1_max = Fraction(4, 3) * m1 + Fraction(2, 3) * m2 + Fraction(4, 3) * root
        s2_max = Fraction(2, 3) * m1 + Fraction(4, 3) * m2 + Fraction(4, 3) * root
        return s1_max, s2_max

    def discriminant(self, axis: Axis, value: Number) -> RealScalar:
        """Discriminant of the quadratic in the free coordinate on ``axis = value``."""
        c = real(value)
        fixed, free = self._mu(axis), self._mu(axis.other)
        # t^2 - (c + 2 free) t + (c^2 - 2 fixed c) = 0
        return -3 * c * c + (8 * fixed + 4 * free) * c + 4 * free * free

    def intersect_line(
        self,
        axis: Axis,
        value: Number,
        provenance: Provenance | None = None,
        max_precision: int = MAX_PRECISION,
        tau: Fraction = TAU_EQ,
    ) -> list[SigmaPoint]:
        """Points of the curve on the line ``axis = value`` (0, 1 or 2 of them).

        Roots certified negative are dropped.  A root that cannot be
        separated from zero is snapped to 0 when ``(value, 0)`` lies on the
        curve exactly, and raises :class:`AmbiguousSign` otherwise.
        """
        axis = Axis(axis)
        c = real(value)
        if real_cmp(c, 0, max_precision, tau) is Cmp.LT:
            raise ValueError(f"line value must be nonnegative, got {c}")
        free_mu = self._mu(axis.other)
        disc = self.discriminant(axis, c)
        verdict = real_cmp(disc, 0, max_precision, tau)
        if verdict is Cmp.LT:
            return []
        half_b = (c + 2 * free_mu) / 2
        if verdict is Cmp.EQ:
            roots = [half_b]
        else:
            sq = real_sqrt(disc / 4, max_precision)
            roots = [half_b - sq, half_b + sq]

        points = []
        for t in roots:
            sign = real_cmp(t, 0, max_precision, tau)
            if sign is Cmp.LT:
                continue
            if sign is Cmp.EQ and t.exact is None:
                on_axis = (c.exact is not None
                           and c.exact * c.exact - 2 * self._mu(axis) * c.exact == 0)
                if not on_axis:
                    where = "" if provenance is None else f" (intersection {provenance})"
                    raise AmbiguousSign(
                        f"root {t} on line {axis.value} = {c} cannot be separated from 0{where}")
                t = real(0)
            if axis is Axis.S1:
                points.append(SigmaPoint(c, t, provenance))
            else:
                points.append(SigmaPoint(t, c, provenance))
        return points


def residual(conic: Conic, p) -> RealScalar:
    return conic.residual(p)


def seed_points(conic: Conic) -> list[SigmaPoint]:
    return conic.seed_points()


def intersect_line(conic: Conic, axis: Axis, value: Number, **kwargs) -> list[SigmaPoint]:
    return conic.intersect_line(axis, value, **kwargs)


def bounding_box(conic: Conic) -> tuple[RealScalar, RealScalar]:
    return conic.bounding_box()
