"""Belief store: instances, monitors, assessors and dependency signalling.

Every mutation runs inside a transaction.  Public operations called outside
one open an implicit transaction of their own.  At commit, new beliefs are
matched against monitors and changes flow through the dependency graph in
topological order; whatever the hooks mutate is handled in follow-up rounds
until nothing is pending.  Any error rolls the store and the network back to
where the transaction started.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .errors import (
    CyclicDependency,
    DuplicateAssessor,
    NestedTransaction,
    NoAssessor,
    NotGround,
    NotInOverlay,
    TimeNotInOverlay,
    UnknownBelief,
    UnknownInterval,
    UnknownMonitor,
    UnknownOverlay,
)
from .network import NEG_INF, Range, TemporalNetwork
from .patterns import head, is_ground, to_str, unify

log = logging.getLogger(__name__)


class Provenance(enum.Enum):
    OBSERVATION = "observation"
    ASSESSMENT = "assessment"


OBSERVATION = Provenance.OBSERVATION
ASSESSMENT = Provenance.ASSESSMENT


@dataclass(eq=False)
class BeliefInstance:
    pattern: tuple
    duration: int
    strength: Any
    provenance: Provenance = ASSESSMENT
    depends_on: set = field(default_factory=set)
    signal: Callable | None = None
    overlays: frozenset = frozenset()
    id: int | None = None
    meta: dict = field(default_factory=dict)

    def __repr__(self):
        return (f"BeliefInstance(id={self.id}, {to_str(self.pattern)} @ {self.duration}, "
                f"{self.strength}, {self.provenance.value})")


@dataclass(eq=False)
class Monitor:
    id: int
    pattern: tuple
    interval: int
    overlays: frozenset
    on_add: Callable | None = None


@dataclass(frozen=True)
class Change:
    """What happened to a node another node depends on."""

    source: int
    kind: str  # strength | monitor | removed | estimate | relay
    old: Any = None
    new: Any = None


@dataclass(eq=False)
class DistanceEstimate:
    id: int
    p: int
    q: int
    overlay: int
    value: Range


class DependencyGraph:
    """Directed acyclic graph with edges dependency -> dependent."""

    def __init__(self, log_undo: Callable):
        self._deps: dict[int, set] = defaultdict(set)
        self._dependents: dict[int, set] = defaultdict(set)
        self._log = log_undo
        self.version = 0

    def dependencies(self, node) -> set:
        return self._deps.get(node, set())

    def dependents(self, node) -> set:
        return self._dependents.get(node, set())

    def reaches(self, src, dst) -> bool:
        """Is ``dst`` downstream of ``src``?"""
        seen, todo = set(), [src]
        while todo:
            n = todo.pop()
            if n == dst:
                return True
            if n in seen:
                continue
            seen.add(n)
            todo.extend(self._dependents.get(n, ()))
        return False

    def add_edge(self, dependency, dependent):
        if dependency in self._deps.get(dependent, ()):
            return
        if dependency == dependent or self.reaches(dependent, dependency):
            raise CyclicDependency(f"{dependent} cannot depend on {dependency}")
        self._deps[dependent].add(dependency)
        self._dependents[dependency].add(dependent)
        self.version += 1
        self._log(lambda: self._unlink(dependency, dependent))

    def remove_edge(self, dependency, dependent):
        if dependency not in self._deps.get(dependent, ()):
            return
        self._unlink(dependency, dependent)
        self._log(lambda: self._link(dependency, dependent))

    def _link(self, a, b):
        self._deps[b].add(a)
        self._dependents[a].add(b)
        self.version += 1

    def _unlink(self, a, b):
        self._deps[b].discard(a)
        self._dependents[a].discard(b)
        self.version += 1

    def topo_index(self) -> dict:
        """Kahn's algorithm; ties broken by node id."""
        nodes = set(self._deps) | set(self._dependents)
        indeg = {n: len(self._deps.get(n, ())) for n in nodes}
        ready = [n for n, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = {}
        while ready:
            n = heapq.heappop(ready)
            order[n] = len(order)
            for m in self._dependents.get(n, ()):
                indeg[m] -= 1
                if indeg[m] == 0:
                    heapq.heappush(ready, m)
        return order


class BeliefStore:
    """The temporal belief manager: network, beliefs, monitors, rules."""

    def __init__(self, network: TemporalNetwork | None = None):
        from .rules import RuleEngine

        if network is None:
            network = TemporalNetwork()
        self.network = network
        self._ids = network._ids
        self.beliefs: dict[int, BeliefInstance] = {}
        self.monitors: dict[int, Monitor] = {}
        self.assessors: dict[Any, Callable] = {}
        self.estimates: dict[int, DistanceEstimate] = {}
        self.graph = DependencyGraph(self._log)
        self.trace: list[tuple] = []
        self._windows: dict[tuple, int] = {}
        self._forever: int | None = None
        self._journal: list | None = None
        self._committing = False
        self._pending_new: list[int] = []
        self._pending_changes: dict[int, list] = defaultdict(list)
        self._fired: set = set()
        self._push = None
        self._estimates_seen = None
        self.rules = RuleEngine(self)

    # -- transactions -------------------------------------------------------

    @property
    def in_transaction(self) -> bool:
        return self._journal is not None

    def _log(self, undo):
        if self._journal is not None:
            self._journal.append(undo)

    def transaction(self, body: Callable[[], Any]):
        """Run ``body`` atomically; hooks fire at commit."""
        if self._journal is not None:
            raise NestedTransaction("transactions do not nest")
        self._journal = []
        self.network.journal = self._journal
        self._estimates_seen = self.network.version
        try:
            result = body()
            self._commit()
        except BaseException:
            journal = self._journal
            self.network.journal = None
            self._journal = None
            for undo in reversed(journal):
                undo()
            raise
        finally:
            self._journal = None
            self.network.journal = None
            self._committing = False
            self._pending_new = []
            self._pending_changes = defaultdict(list)
            self._push = None
        return result

    def _atomic(self, fn, *args, **kwargs):
        journal = self._journal
        if journal is None:
            return self.transaction(lambda: fn(*args, **kwargs))
        mark = len(journal)
        try:
            return fn(*args, **kwargs)
        except BaseException:
            # savepoint: undo this operation's partial writes only
            while len(journal) > mark:
                journal.pop()()
            raise

    def _trace(self, *event):
        self.trace.append(event)
        self._log(self.trace.pop)
        log.debug("%s", event)

    def _commit(self):
        self._committing = True
        while self._pending_new or self._pending_changes or self._estimates_dirty():
            new, self._pending_new = self._pending_new, []
            changes, self._pending_changes = self._pending_changes, defaultdict(list)
            for bid in sorted(new):
                self._match_monitors(bid, changes)
            self._check_estimates(changes)
            self._propagate(changes)

    def _match_monitors(self, bid, changes):
        b = self.beliefs.get(bid)
        if b is None:
            return
        for mid in sorted(self.monitors):
            m = self.monitors.get(mid)
            # monitors never fire for beliefs that predate them
            if m is None or mid > bid or (mid, bid) in self._fired:
                continue
            bindings = self._monitor_match(m, b)
            if bindings is None:
                continue
            self._fired.add((mid, bid))
            self._log(lambda k=(mid, bid): self._fired.discard(k))
            self._trace("MONITOR", mid, bid)
            if m.on_add is not None:
                m.on_add(b, bindings)
            changes[mid].append(Change(mid, "monitor", None, bid))

    def _monitor_match(self, m: Monitor, b: BeliefInstance):
        if not (m.overlays & b.overlays):
            return None
        bindings = unify(m.pattern, b.pattern)
        if bindings is None:
            return None
        if not self.network.possibly_intersects(m.interval, b.duration):
            return None
        return bindings

    def _estimates_dirty(self) -> bool:
        return bool(self.estimates) and self.network.version != self._estimates_seen

    def _check_estimates(self, changes):
        if not self._estimates_dirty():
            return
        self._estimates_seen = self.network.version
        for eid in sorted(self.estimates):
            e = self.estimates[eid]
            now = self.network.distance(e.p, e.q, e.overlay)
            if now != e.value:
                old = e.value
                e.value = now
                self._log(lambda e=e, old=old: setattr(e, "value", old))
                changes[eid].append(Change(eid, "estimate", old, now))

    def _mark_changed(self, node, change: Change):
        if self._push is not None:
            self._push(node, change)
        else:
            self._pending_changes[node].append(change)

    def _propagate(self, changes):
        inbox: dict[int, list] = defaultdict(list)
        heap: list = []
        queued: set = set()
        # once per round: later rounds may bring changes this one could not see
        signaled: set = set()
        state = {"order": self.graph.topo_index(), "version": self.graph.version}

        def push(node, change):
            for d in sorted(self.graph.dependents(node)):
                if d in signaled:
                    continue
                inbox[d].append(change)
                if d not in queued:
                    queued.add(d)
                    heapq.heappush(heap, (state["order"].get(d, len(state["order"]) + d), d))

        self._push = push
        try:
            for node in sorted(changes):
                for c in changes[node]:
                    push(node, c)
            while heap:
                if self.graph.version != state["version"]:
                    state["order"] = self.graph.topo_index()
                    state["version"] = self.graph.version
                    heap[:] = [(state["order"].get(d, len(state["order"]) + d), d) for _, d in heap]
                    heapq.heapify(heap)
                _, node = heapq.heappop(heap)
                queued.discard(node)
                if node in signaled:
                    continue
                signaled.add(node)
                self._signal(node, inbox.pop(node, []))
        finally:
            self._push = None

    def _signal(self, node, changes):
        self._trace("SIGNAL", node)
        b = self.beliefs.get(node)
        if b is not None:
            if b.signal is not None:
                b.signal(b, changes)
            else:
                self._mark_changed(node, Change(node, "relay"))
            return
        if self.rules.owns(node):
            self.rules.on_signal(node, changes)
            return
        self._mark_changed(node, Change(node, "relay"))

    # -- dependency plumbing ------------------------------------------------

    def _known(self, node) -> bool:
        return (node in self.beliefs or node in self.monitors or node in self.estimates
                or node in self.network.constraints or self.rules.owns(node))

    def add_dependency(self, dependent, dependency):
        if not self._known(dependency):
            raise KeyError(f"unknown dependency {dependency}")
        self.graph.add_edge(dependency, dependent)
        b = self.beliefs.get(dependent)
        if b is not None and dependency not in b.depends_on:
            b.depends_on.add(dependency)
            self._log(lambda: b.depends_on.discard(dependency))

    def set_dependencies(self, dependent, deps: Iterable[int]):
        """Replace the dependency set of a node; cycles leave it unchanged."""
        deps = set(deps)
        old = set(self.graph.dependencies(dependent))
        for d in deps - old:
            if d == dependent or self.graph.reaches(dependent, d):
                raise CyclicDependency(f"{dependent} cannot depend on {d}")
        for d in old - deps:
            self.graph.remove_edge(d, dependent)
            b = self.beliefs.get(dependent)
            if b is not None:
                b.depends_on.discard(d)
                self._log(lambda b=b, d=d: b.depends_on.add(d))
        for d in sorted(deps - old):
            self.add_dependency(dependent, d)

    def depends_on(self, a, b) -> bool:
        """Does ``a`` depend, directly or not, on ``b``?"""
        return a != b and self.graph.reaches(b, a)

    # -- beliefs ------------------------------------------------------------

    def _time_overlays(self, at, overlays):
        if not self.network.is_time(at):
            raise UnknownInterval(at)
        have = self.network.time_overlays(at)
        if overlays is None:
            return have
        overlays = frozenset(overlays)
        for oid in overlays:
            if oid not in self.network.overlays:
                raise UnknownOverlay(oid)
            if oid not in have:
                raise TimeNotInOverlay(f"time {at} is not in overlay {oid}")
        return overlays

    def _check_overlays(self, overlays):
        if overlays is None:
            return None
        overlays = frozenset(overlays)
        for oid in overlays:
            if oid not in self.network.overlays:
                raise UnknownOverlay(oid)
        return overlays

    def make_belief(self, pattern, at, strength, *, depends_on=(), signal=None,
                    overlays=None, provenance=ASSESSMENT, **meta) -> BeliefInstance:
        """An unstored instance, as returned by assessors."""
        return BeliefInstance(pattern, at, strength, provenance, set(depends_on), signal,
                              frozenset(overlays) if overlays is not None else frozenset(), meta=meta)

    def _store(self, b: BeliefInstance) -> BeliefInstance:
        if not is_ground(b.pattern):
            raise NotGround(f"{to_str(b.pattern)} contains variables")
        b.overlays = self._time_overlays(b.duration, b.overlays or None)
        deps = set(b.depends_on)
        for d in deps:
            if not self._known(d):
                raise KeyError(f"unknown dependency {d}")
        b.depends_on = set()
        b.id = self._ids()
        self.beliefs[b.id] = b
        self._log(lambda: self.beliefs.pop(b.id))
        for d in sorted(deps):
            self.add_dependency(b.id, d)
        self._pending_new.append(b.id)
        self._trace("ASSERT", b.id, to_str(b.pattern), b.provenance.value)
        return b

    def assert_belief(self, pattern, at, strength, provenance=OBSERVATION, overlays=None, *,
                      depends_on=(), signal=None, **meta) -> int:
        b = self.make_belief(pattern, at, strength, depends_on=depends_on, signal=signal,
                             overlays=overlays, provenance=provenance, **meta)
        return self._atomic(self._store, b).id

    def update_strength(self, bid, strength) -> None:
        self._atomic(self._update_strength, bid, strength)

    def _update_strength(self, bid, strength):
        b = self.beliefs.get(bid)
        if b is None:
            raise UnknownBelief(bid)
        old = b.strength
        b.strength = strength
        self._log(lambda: setattr(b, "strength", old))
        self._mark_changed(bid, Change(bid, "strength", old, strength))

    def belief(self, bid) -> BeliefInstance:
        try:
            return self.beliefs[bid]
        except KeyError:
            raise UnknownBelief(bid) from None

    # -- fetching -----------------------------------------------------------

    def scan(self, pattern, interval, overlays=None):
        """Matching stored instances, without firing any rules."""
        out = []
        for bid in sorted(self.beliefs):
            b = self.beliefs[bid]
            if overlays is not None and not (b.overlays & overlays):
                continue
            bindings = unify(pattern, b.pattern)
            if bindings is None:
                continue
            if self.network.possibly_intersects(b.duration, interval):
                out.append((b, bindings))
        return out

    def fetch(self, pattern, interval, overlays=None):
        """Instances of ``pattern`` possibly intersecting ``interval``.

        Rules whose consequent unifies with the pattern fire first, so their
        consequents are part of the answer.
        """
        if not self.network.is_time(interval):
            raise UnknownInterval(interval)
        overlays = self._check_overlays(overlays)
        if overlays is None:
            overlays = self.network.time_overlays(interval)

        def run():
            self.rules.fire_for_fetch(pattern, interval, overlays)
            return self.scan(pattern, interval, overlays)

        return self._atomic(run)

    # -- assessment ---------------------------------------------------------

    def register_assessor(self, head_symbol, assessor: Callable) -> None:
        if head_symbol in self.assessors:
            raise DuplicateAssessor(head_symbol)
        self.assessors[head_symbol] = assessor
        self._log(lambda: self.assessors.pop(head_symbol))

    def unregister_assessor(self, head_symbol) -> None:
        fn = self.assessors.pop(head_symbol, None)
        if fn is None:
            raise NoAssessor(head_symbol)
        self._log(lambda: self.assessors.__setitem__(head_symbol, fn))

    def assess(self, pattern, at, overlays=None) -> BeliefInstance:
        if not is_ground(pattern):
            raise NotGround(f"{to_str(pattern)} contains variables")
        fn = self.assessors.get(head(pattern))
        if fn is None:
            raise NoAssessor(f"no assessor for {head(pattern)!r}")
        overlays = self._check_overlays(overlays)
        if overlays is None:
            overlays = self.network.time_overlays(at)

        def run():
            self.rules.fire_for_fetch(pattern, at, overlays)
            b = fn(pattern, at, overlays)
            b.provenance = ASSESSMENT
            b.meta.setdefault("assessor", head(pattern))
            if not b.overlays:
                b.overlays = overlays & self.network.time_overlays(b.duration)
            return self._store(b)

        return self._atomic(run)

    # -- monitors -----------------------------------------------------------

    def add_monitor(self, pattern, interval, overlays=None, on_add=None) -> int:
        if not self.network.is_time(interval):
            raise UnknownInterval(interval)
        overlays = self._check_overlays(overlays)
        if overlays is None:
            overlays = self.network.time_overlays(interval)

        def run():
            mid = self._ids()
            self.monitors[mid] = Monitor(mid, pattern, interval, overlays, on_add)
            self._log(lambda: self.monitors.pop(mid))
            return mid

        return self._atomic(run)

    def remove_monitor(self, mid) -> None:
        def run():
            m = self.monitors.pop(mid, None)
            if m is None:
                raise UnknownMonitor(mid)
            self._log(lambda: self.monitors.__setitem__(mid, m))
            self._mark_changed(mid, Change(mid, "removed"))

        self._atomic(run)

    # -- distance beliefs ---------------------------------------------------

    def _estimate_node(self, p, q, overlay) -> DistanceEstimate:
        for e in self.estimates.values():
            if (e.p, e.q, e.overlay) == (p, q, overlay):
                return e
        eid = self._ids()
        e = DistanceEstimate(eid, p, q, overlay, self.network.distance(p, q, overlay))
        self.estimates[eid] = e
        self._log(lambda: self.estimates.pop(eid))
        return e

    def assess_distance_belief(self, p, q, queried, to_strength: Callable, overlays=None,
                               signal=None) -> BeliefInstance:
        """Believe ``t_q - t_p`` lies in ``queried``, and stay told about it.

        ``to_strength(estimate, queried)`` turns the current estimate into a
        strength.  Without a ``signal`` hook the belief recomputes itself
        whenever the estimate moves.
        """
        shared = self.network.shared_overlays(p, q)
        if overlays is not None:
            shared &= frozenset(overlays)
        if not shared:
            raise NotInOverlay(f"points {p} and {q} share no overlay")
        overlay = min(shared, key=lambda o: (self.network.overlays[o].grain, o))
        queried = Range(*queried)

        def recompute(b, changes):
            e = self.estimates[b.meta["estimate"]]
            self._update_strength(b.id, to_strength(e.value, queried))

        def run():
            e = self._estimate_node(p, q, overlay)
            b = self.make_belief(("distance", p, q), p, to_strength(e.value, queried),
                                 depends_on={e.id}, signal=signal or recompute,
                                 overlays={overlay}, estimate=e.id, queried=queried)
            return self._store(b)

        return self._atomic(run)

    # -- time helpers for assessors and rules -------------------------------

    def window(self, time_id, lookback: int) -> int:
        """Interval from ``lookback`` ticks before ``time_id`` to its end."""
        key = (time_id, lookback)
        iid = self._windows.get(key)
        if iid is not None and iid in self.network.intervals:
            return iid
        begin, end = self.network.span(time_id)
        start = self.network.create_point_at(begin, -lookback)
        iid = self.network.create_interval(start, end)
        self._windows[key] = iid
        self._log(lambda: self._windows.pop(key, None))
        return iid

    def between(self, a, b) -> int:
        """Interval from the start of ``a`` to the end of ``b``."""
        key = ("between", a, b)
        iid = self._windows.get(key)
        if iid is not None and iid in self.network.intervals:
            return iid
        iid = self.network.create_interval(self.network.span(a)[0], self.network.span(b)[1])
        self._windows[key] = iid
        self._log(lambda: self._windows.pop(key, None))
        return iid

    def forever(self) -> int:
        """An interval whose endpoints are free, so it may meet anything."""
        if self._forever is None or self._forever not in self.network.intervals:
            overlays = list(self.network.overlays)
            a = self.network.create_point(overlays)
            z = self.network.create_point(overlays)
            self._forever = self.network.create_interval(a, z)
            self._log(lambda: setattr(self, "_forever", None))
        return self._forever

    def elapsed(self, since, at) -> int:
        """Least possible time from the end of ``since`` to the start of ``at``."""
        lo = self.network.tight_distance(self.network.span(since)[1], self.network.span(at)[0]).lo
        return 0 if lo == NEG_INF else max(0, lo)

    # -- plain network passthroughs ----------------------------------------

    def create_overlay(self, grain):
        return self._atomic(self.network.create_overlay, grain)

    def create_point(self, overlays):
        return self._atomic(self.network.create_point, overlays)

    def create_interval(self, begin, end):
        return self._atomic(self.network.create_interval, begin, end)

    def add_constraint(self, src, dst, rng):
        return self._atomic(self.network.add_constraint, src, dst, rng)

    def retract_constraint(self, cid):
        return self._atomic(self.network.retract_constraint, cid)

    def distance(self, p, q, overlay):
        return self.network.distance(p, q, overlay)

    def consistent_order(self, p, q):
        return self.network.consistent_order(p, q)

    def define_rule(self, *args, **kwargs):
        return self._atomic(self.rules.define_rule, *args, **kwargs)


TBM = BeliefStore
