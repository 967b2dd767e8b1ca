"""Temporal constraint network: points, distance constraints, intervals, overlays.

Distances are integer ticks.  The network keeps the closed distance matrix
of the bound graph (``D[i, j]`` is the tightest upper bound on
``t_j - t_i``), updated incrementally on every added constraint and
recomputed from scratch on retraction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

import numpy as np

from . import apsp
from .errors import (
    Inconsistent,
    InvalidGrain,
    NoOverlay,
    NotInOverlay,
    ProtectedConstraint,
    UnknownConstraint,
    UnknownInterval,
    UnknownOverlay,
    UnknownPoint,
)

NEG_INF = -math.inf
POS_INF = math.inf

# keeps path sums far below the kernel's INF sentinel
MAX_TICK = 2 ** 52

_INF = apsp.INF


class Range(NamedTuple):
    lo: float | int
    hi: float | int

    def __str__(self):
        return f"[{_fmt(self.lo)}, {_fmt(self.hi)}]"

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi


UNCONSTRAINED = Range(NEG_INF, POS_INF)


def _fmt(v):
    if v == POS_INF:
        return "+inf"
    if v == NEG_INF:
        return "-inf"
    return str(v)


def _check_tick(v, *, allow):
    if isinstance(v, float) and math.isinf(v):
        if v != allow:
            raise ValueError(f"infinite bound {v} on the wrong side")
        return v
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise TypeError(f"tick values must be integers, got {v!r}")
    v = int(v)
    if abs(v) > MAX_TICK:
        raise ValueError(f"tick {v} out of range")
    return v


def as_range(r) -> Range:
    lo, hi = r
    lo = _check_tick(lo, allow=NEG_INF)
    hi = _check_tick(hi, allow=POS_INF)
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    return Range(lo, hi)


def quantize(r: Range, grain: int) -> Range:
    """Round a range outward to multiples of ``grain``."""
    lo, hi = r
    if lo != NEG_INF:
        lo = (lo // grain) * grain
    if hi != POS_INF:
        hi = -((-hi) // grain) * grain
    return Range(lo, hi)


@dataclass
class Overlay:
    id: int
    grain: int
    members: set = field(default_factory=set)


@dataclass(frozen=True)
class TimePoint:
    id: int
    overlays: frozenset
    index: int


@dataclass(frozen=True)
class Constraint:
    id: int
    src: int
    dst: int
    range: Range
    protected: bool = False


@dataclass(frozen=True)
class TimeInterval:
    id: int
    begin: int
    end: int
    ordering: int


class TemporalNetwork:
    """Points and distance constraints with overlay-scoped, grain-quantized queries.

    ``journal``, when not None, receives an undo callable for every
    mutation; the belief store uses it to roll back whole transactions.
    """

    def __init__(self, ids: Callable[[], int] | None = None):
        self._ids = ids or itertools.count(1).__next__
        self.overlays: dict[int, Overlay] = {}
        self.points: dict[int, TimePoint] = {}
        self.constraints: dict[int, Constraint] = {}
        self.intervals: dict[int, TimeInterval] = {}
        self._n = 0
        self._D = self._blank(16)
        self.version = 0
        self.journal: list | None = None

    # -- bookkeeping -------------------------------------------------------

    @staticmethod
    def _blank(cap):
        D = np.full((cap, cap), _INF, dtype=np.int64)
        np.fill_diagonal(D, 0)
        return D

    def _log(self, undo):
        if self.journal is not None:
            self.journal.append(undo)

    def _swap_matrix(self, D, n=None):
        old_D, old_n, old_version = self._D, self._n, self.version
        self._D = D
        if n is not None:
            self._n = n
        self.version += 1

        def undo():
            self._D, self._n, self.version = old_D, old_n, old_version

        self._log(undo)

    def _point(self, pid) -> TimePoint:
        try:
            return self.points[pid]
        except KeyError:
            raise UnknownPoint(pid) from None

    def _overlay(self, oid) -> Overlay:
        try:
            return self.overlays[oid]
        except KeyError:
            raise UnknownOverlay(oid) from None

    # -- overlays and points ----------------------------------------------

    def create_overlay(self, grain: int) -> int:
        if isinstance(grain, bool) or not isinstance(grain, (int, np.integer)) or grain <= 0:
            raise InvalidGrain(f"grain must be a positive integer, got {grain!r}")
        oid = self._ids()
        self.overlays[oid] = Overlay(oid, int(grain))
        self._log(lambda: self.overlays.pop(oid))
        return oid

    def create_point(self, overlays: Iterable[int]) -> int:
        overlays = frozenset(overlays)
        if not overlays:
            raise NoOverlay("a point must belong to at least one overlay")
        for oid in overlays:
            self._overlay(oid)
        pid = self._ids()
        idx = self._n
        cap = self._D.shape[0]
        if idx >= cap:
            D = self._blank(cap * 2)
            D[:cap, :cap] = self._D
        else:
            # the undo of an earlier point may have left stale entries behind
            D = self._D.copy()
            D[idx, :] = _INF
            D[:, idx] = _INF
            D[idx, idx] = 0
        self._swap_matrix(D, idx + 1)
        self.points[pid] = TimePoint(pid, overlays, idx)
        for oid in overlays:
            self.overlays[oid].members.add(pid)

        def undo():
            del self.points[pid]
            for oid in overlays:
                self.overlays[oid].members.discard(pid)

        self._log(undo)
        return pid

    def create_point_at(self, anchor: int, delta: int, overlays=None) -> int:
        """A fresh point exactly ``delta`` ticks after ``anchor``."""
        if overlays is None:
            overlays = self._point(anchor).overlays
        pid = self.create_point(overlays)
        self.add_constraint(anchor, pid, (delta, delta))
        return pid

    # -- constraints -------------------------------------------------------

    def add_constraint(self, src: int, dst: int, rng, *, _protected=False) -> int:
        """Post ``lo <= t_dst - t_src <= hi``.

        Raises Inconsistent, with the network untouched, if the result would
        empty some derived range.
        """
        rng = as_range(rng)
        ps, pd = self._point(src), self._point(dst)
        if not ps.overlays & pd.overlays:
            raise NotInOverlay(f"points {src} and {dst} share no overlay")
        if src == dst and not rng.contains(0):
            raise Inconsistent(f"self-distance of {src} must be 0, not {rng}")
        D = self._D.copy()
        n = self._n
        ok = True
        if src != dst:
            if rng.hi != POS_INF:
                ok = apsp.relax_edge(D, n, ps.index, pd.index, rng.hi)
            if ok and rng.lo != NEG_INF:
                ok = apsp.relax_edge(D, n, pd.index, ps.index, -rng.lo)
        if not ok:
            raise Inconsistent(f"distance({src}, {dst}) in {rng} contradicts the network")
        cid = self._ids()
        self._swap_matrix(D)
        self.constraints[cid] = Constraint(cid, src, dst, rng, _protected)
        self._log(lambda: self.constraints.pop(cid))
        return cid

    def retract_constraint(self, cid: int) -> None:
        c = self.constraints.get(cid)
        if c is None:
            raise UnknownConstraint(cid)
        if c.protected:
            raise ProtectedConstraint(f"constraint {cid} orders an interval")
        del self.constraints[cid]
        self._log(lambda: self.constraints.__setitem__(cid, c))
        self._swap_matrix(self._closure(self.constraints.values()))

    def _closure(self, constraints):
        n = self._n
        D = self._blank(self._D.shape[0])
        for c in constraints:
            i, j = self.points[c.src].index, self.points[c.dst].index
            if i == j:
                continue
            if c.range.hi != POS_INF and c.range.hi < D[i, j]:
                D[i, j] = c.range.hi
            if c.range.lo != NEG_INF and -c.range.lo < D[j, i]:
                D[j, i] = -c.range.lo
        ok = apsp.floyd_warshall(D, n)
        # removing a constraint can never create a cycle
        assert ok
        return D

    # -- intervals ---------------------------------------------------------

    def create_interval(self, begin: int, end: int) -> int:
        self._point(begin)
        self._point(end)
        if not self.consistent_order(begin, end):
            raise Inconsistent(f"point {end} provably precedes {begin}")
        cid = self.add_constraint(begin, end, (0, POS_INF), _protected=True)
        iid = self._ids()
        self.intervals[iid] = TimeInterval(iid, begin, end, cid)
        self._log(lambda: self.intervals.pop(iid))
        return iid

    def retract_interval(self, iid: int) -> None:
        iv = self.intervals.get(iid)
        if iv is None:
            raise UnknownInterval(iid)
        del self.intervals[iid]
        c = self.constraints.pop(iv.ordering)

        def undo():
            self.intervals[iid] = iv
            self.constraints[c.id] = c

        self._log(undo)
        self._swap_matrix(self._closure(self.constraints.values()))

    def span(self, time_id: int) -> tuple[int, int]:
        """``(begin, end)`` of an interval; a point spans itself."""
        if time_id in self.points:
            return time_id, time_id
        iv = self.intervals.get(time_id)
        if iv is None:
            raise UnknownInterval(time_id)
        return iv.begin, iv.end

    def is_time(self, time_id) -> bool:
        return time_id in self.points or time_id in self.intervals

    def time_overlays(self, time_id: int) -> frozenset:
        b, e = self.span(time_id)
        return self.points[b].overlays & self.points[e].overlays

    # -- queries -----------------------------------------------------------

    def upper(self, p: int, q: int):
        """Tight upper bound on ``t_q - t_p``."""
        v = self._D[self._point(p).index, self._point(q).index]
        return POS_INF if v >= _INF else int(v)

    def tight_distance(self, p: int, q: int) -> Range:
        hi = self.upper(p, q)
        back = self.upper(q, p)
        return Range(NEG_INF if back == POS_INF else -back, hi)

    def distance(self, p: int, q: int, overlay: int) -> Range:
        ov = self._overlay(overlay)
        for x in (p, q):
            self._point(x)
            if x not in ov.members:
                raise NotInOverlay(f"point {x} is not in overlay {overlay}")
        return quantize(self.tight_distance(p, q), ov.grain)

    def consistent_order(self, p: int, q: int) -> bool:
        """Could ``q`` be at or after ``p``?"""
        return self.upper(p, q) >= 0

    def possibly_intersects(self, a: int, b: int) -> bool:
        """Could time objects ``a`` and ``b`` share an instant?"""
        a0, a1 = self.span(a)
        b0, b1 = self.span(b)
        # with both spans ordered, the two conditions are jointly consistent
        return self.upper(a0, b1) >= 0 and self.upper(b0, a1) >= 0

    def shared_overlays(self, p: int, q: int) -> frozenset:
        return self._point(p).overlays & self._point(q).overlays
