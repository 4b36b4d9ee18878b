"""Worklist closure producing the finite set of admissible blowup energies.

Starting from the six seed points, every member ``(a, b)`` spawns the lines
``s1 = a + 2N`` and ``s2 = b + 2N``; intersection points that lie in the
closed upper-right quadrant of ``(a, b)`` join the set.  Iteration stops at
the fixed point.
"""

from __future__ import annotations

import functools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .conic import Axis, Conic, Intersection, Seed, SigmaPoint
from .errors import ClosureBudgetExceeded
from .numeric import (
    MAX_PRECISION,
    TAU_EQ,
    Cmp,
    RealScalar,
    as_rational,
    parse_prefix,
    real,
    real_cmp,
)

DEFAULT_BUDGET = 10**6
# first shift used when generating lines from a member; see README
DEFAULT_MIN_SHIFT = 1
# float prefilter for dedup; 64-bit enclosures are far tighter than this
_NEAR = 1e-6


@dataclass(frozen=True)
class GenerationRecord:
    parent: int
    axis: Axis
    shift: int
    child: int

    def __str__(self):
        return f"p{self.parent} --{self.axis.value}+2*{self.shift}--> p{self.child}"


@dataclass(frozen=True)
class SigmaSet:
    conic: Conic
    points: tuple[SigmaPoint, ...]
    generation_log: tuple[GenerationRecord, ...] = field(default=())

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def as_floats(self) -> list[tuple[float, float]]:
        return [p.as_floats() for p in self.points]

    def to_json(self) -> dict:
        return {
            "mu1": _fmt(self.conic.mu1),
            "mu2": _fmt(self.conic.mu2),
            "count": len(self.points),
            "points": [
                {
                    "s1": p.s1.to_json(),
                    "s2": p.s2.to_json(),
                    "provenance": "" if p.provenance is None else str(p.provenance),
                }
                for p in self.points
            ],
        }

    def dumps(self, **kwargs) -> str:
        return json.dumps(self.to_json(), **kwargs)

    @classmethod
    def from_json(cls, obj: dict | str) -> SigmaSet:
        if isinstance(obj, str):
            obj = json.loads(obj)
        conic = Conic(as_rational(obj["mu1"]), as_rational(obj["mu2"]))
        points = tuple(
            SigmaPoint(parse_prefix(p["s1"]["expr"]), parse_prefix(p["s2"]["expr"]))
            for p in obj["points"]
        )
        if obj.get("count", len(points)) != len(points):
            raise ValueError("point count does not match 'count'")
        return cls(conic, points)


def _fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _ge(x: RealScalar, y: RealScalar, max_precision, tau) -> bool:
    return real_cmp(x, y, max_precision, tau) is not Cmp.LT


def upper_right(p, q, max_precision: int = MAX_PRECISION, tau: Fraction = TAU_EQ) -> bool:
    """True iff ``q`` lies in the closed upper-right quadrant of ``p``."""
    p1, p2 = _coords(p)
    q1, q2 = _coords(q)
    return _ge(q1, p1, max_precision, tau) and _ge(q2, p2, max_precision, tau)


def _coords(p) -> tuple[RealScalar, RealScalar]:
    if isinstance(p, SigmaPoint):
        return p.s1, p.s2
    a, b = p
    return real(a), real(b)


def _point_order(max_precision, tau):
    def compare(p: SigmaPoint, q: SigmaPoint) -> int:
        c = real_cmp(p.s1, q.s1, max_precision, tau)
        if c is Cmp.EQ:
            c = real_cmp(p.s2, q.s2, max_precision, tau)
        return int(c)

    return functools.cmp_to_key(compare)


class _Members:
    """Insertion-ordered point list with certified dedup."""

    def __init__(self, max_precision, tau):
        self.points: list[SigmaPoint] = []
        self._approx: list[tuple[float, float]] = []
        self.max_precision = max_precision
        self.tau = tau

    def find(self, s1, s2) -> int | None:
        f1, f2 = float(s1), float(s2)
        for i, (g1, g2) in enumerate(self._approx):
            if abs(f1 - g1) > _NEAR or abs(f2 - g2) > _NEAR:
                continue
            p = self.points[i]
            if (real_cmp(p.s1, s1, self.max_precision, self.tau) is Cmp.EQ
                    and real_cmp(p.s2, s2, self.max_precision, self.tau) is Cmp.EQ):
                return i
        return None

    def add(self, point: SigmaPoint) -> int:
        self.points.append(point)
        self._approx.append(point.as_floats())
        return len(self.points) - 1


def _shift_limit(coord: RealScalar, bound: RealScalar) -> int:
    # lines beyond the box carry no points; one extra shift absorbs rounding
    span = float(bound) - float(coord)
    return max(0, math.ceil(span / 2)) + 1


def enumerate_sigma(
    conic: Conic,
    budget: int = DEFAULT_BUDGET,
    *,
    initial: Iterable[SigmaPoint] | None = None,
    min_shift: int = DEFAULT_MIN_SHIFT,
    max_precision: int = MAX_PRECISION,
    tau: Fraction = TAU_EQ,
) -> SigmaSet:
    """Close the seed points (or ``initial``) under the line-intersection rule.

    ``budget`` caps the number of line intersections performed.  The result
    is sorted lexicographically by (s1, s2) and its provenance ids refer to
    positions in that sorted order.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if min_shift < 0:
        raise ValueError("min_shift must be >= 0")
    members = _Members(max_precision, tau)
    work: deque[int] = deque()
    start = conic.seed_points()
    if initial is not None:
        start = start + [p for p in initial]
    for p in start:
        if members.find(p.s1, p.s2) is None:
            work.append(members.add(p))

    box = conic.bounding_box()
    log: list[GenerationRecord] = []
    steps = 0
    while work:
        idx = work.popleft()
        parent = members.points[idx]
        for axis in (Axis.S1, Axis.S2):
            base = parent.coord(axis)
            bound = box[0] if axis is Axis.S1 else box[1]
            for n in range(min_shift, _shift_limit(base, bound) + 1):
                value = base + 2 * n
                if real_cmp(value, bound, max_precision, tau) is Cmp.GT:
                    break
                steps += 1
                if steps > budget:
                    raise ClosureBudgetExceeded(
                        f"no fixed point after {budget} line intersections "
                        f"({len(members.points)} points so far)")
                prov = Intersection(idx, axis, n)
                for q in conic.intersect_line(axis, value, prov, max_precision, tau):
                    if not upper_right(parent, q, max_precision, tau):
                        continue
                    if members.find(q.s1, q.s2) is not None:
                        continue
                    child = members.add(q)
                    log.append(GenerationRecord(idx, axis, n, child))
                    work.append(child)

    key = _point_order(max_precision, tau)
    order = sorted(range(len(members.points)), key=lambda i: key(members.points[i]))
    relabel = {old: new for new, old in enumerate(order)}

    def remap(p: SigmaPoint) -> SigmaPoint:
        prov = p.provenance
        if isinstance(prov, Intersection) and prov.parent is not None:
            prov = Intersection(relabel[prov.parent], prov.axis, prov.shift)
        return SigmaPoint(p.s1, p.s2, prov)

    points = tuple(remap(members.points[i]) for i in order)
    records = tuple(GenerationRecord(relabel[r.parent], r.axis, r.shift, relabel[r.child]) for r in log)
    return SigmaSet(conic, points, records)


def is_member(sigma: SigmaSet, p, max_precision: int = MAX_PRECISION, tau: Fraction = TAU_EQ) -> bool:
    s1, s2 = _coords(p)
    return any(
        real_cmp(q.s1, s1, max_precision, tau) is Cmp.EQ
        and real_cmp(q.s2, s2, max_precision, tau) is Cmp.EQ
        for q in sigma.points
    )


def float_oracle_enumerate(conic: Conic, tol: float = 1e-9, min_shift: int = DEFAULT_MIN_SHIFT,
                           budget: int = DEFAULT_BUDGET) -> list[tuple[float, float]]:
    """The same closure in hardware floats with absolute tolerance ``tol``.

    Only meant as an independent cross-check of :func:`enumerate_sigma`.
    """
    m1, m2 = float(conic.mu1), float(conic.mu2)
    root = math.sqrt(m1 * m1 + m1 * m2 + m2 * m2)
    s_max = (4 / 3 * m1 + 2 / 3 * m2 + 4 / 3 * root, 2 / 3 * m1 + 4 / 3 * m2 + 4 / 3 * root)
    seeds = [(0.0, 0.0), (2 * m1, 0.0), (0.0, 2 * m2), (2 * m1, 2 * (m1 + m2)),
             (2 * (m1 + m2), 2 * m2), (2 * (m1 + m2), 2 * (m1 + m2))]
    pts: list[tuple[float, float]] = []
    work: deque[tuple[float, float]] = deque()

    def add(q):
        for p in pts:
            if abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol:
                return
        pts.append(q)
        work.append(q)

    for s in seeds:
        add(s)
    steps = 0
    while work:
        a, b = work.popleft()
        for k, (fixed, free) in enumerate(((m1, m2), (m2, m1))):
            base, other = (a, b) if k == 0 else (b, a)
            n = min_shift
            while base + 2 * n <= s_max[k] + tol:
                steps += 1
                if steps > budget:
                    raise ClosureBudgetExceeded("float oracle exceeded its budget")
                c = base + 2 * n
                disc = -3 * c * c + (8 * fixed + 4 * free) * c + 4 * free * free
                if disc >= -tol:
                    sq = math.sqrt(max(disc, 0.0))
                    roots = [(c + 2 * free) / 2] if abs(disc) <= tol else \
                        [(c + 2 * free - sq) / 2, (c + 2 * free + sq) / 2]
                    for t in roots:
                        if t < -tol or t < other - tol:
                            continue
                        t = max(t, 0.0)
                        add((c, t) if k == 0 else (t, c))
                n += 1
    return sorted(pts)
