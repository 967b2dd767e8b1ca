"""Temporally scoped causal rules, fired lazily when their consequent is fetched."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import InvalidDuration, UnknownInterval, UnknownOverlay, VariableRestriction
from .patterns import rename, substitute, to_str, unify, unify_patterns, variables


class _Decline:
    def __repr__(self):
        return "DECLINE"


DECLINE = _Decline()


class Outcome(enum.Enum):
    FIRED = "fired"
    DECLINED = "declined"


@dataclass(eq=False)
class CausalRule:
    id: int
    trigger: tuple
    consequent: tuple
    preconditions: tuple
    consequent_duration: int
    active: int
    overlays: frozenset
    generator: Callable
    name: str | None = None

    def __repr__(self):
        return f"CausalRule({self.name or self.id}: {to_str(self.trigger)} => {to_str(self.consequent)})"


@dataclass(eq=False)
class FiringRecord:
    id: int
    rule: int
    trigger: int
    bindings: dict
    outcome: Outcome
    preconditions: list = field(default_factory=list)
    consequent: int | None = None


class RuleEngine:
    def __init__(self, store):
        self.store = store
        self.rules: dict[int, CausalRule] = {}
        self.records: dict[int, FiringRecord] = {}
        self._by_trigger: dict[tuple, int] = {}
        self._watches: dict[tuple, int] = {}
        self._in_progress: set = set()
        self._expanding: set = set()
        # (rule id, trigger belief id) per generator call, for instrumentation
        self.generator_calls: list[tuple] = []

    def owns(self, node) -> bool:
        return node in self.rules or node in self.records

    def define_rule(self, trigger, consequent, *, generator, duration, preconditions=(),
                    active=None, overlays=None, name=None) -> int:
        store = self.store
        if isinstance(duration, bool) or not isinstance(duration, int) or duration <= 0:
            raise InvalidDuration(f"consequent duration must be a positive tick count, got {duration!r}")
        trigger_vars = set(variables(trigger))
        for p in preconditions:
            for v in variables(p):
                if v not in trigger_vars:
                    raise VariableRestriction(v)
        for v in variables(consequent):
            if v not in trigger_vars:
                raise VariableRestriction(v, "consequent")
        if overlays is None:
            overlays = frozenset(store.network.overlays)
        else:
            overlays = frozenset(overlays)
            for oid in overlays:
                if oid not in store.network.overlays:
                    raise UnknownOverlay(oid)
        if active is None:
            active = store.forever()
        elif active not in store.network.intervals:
            raise UnknownInterval(active)
        rid = store._ids()
        self.rules[rid] = CausalRule(rid, trigger, consequent, tuple(preconditions), duration,
                                     active, overlays, generator, name)
        store._log(lambda: self.rules.pop(rid))
        return rid

    # -- firing -------------------------------------------------------------

    def fire_for_fetch(self, query_pattern, query_interval, overlays) -> list[int]:
        """Fire every in-scope rule that could produce ``query_pattern``.

        Returns the ids of consequents added by this call.
        """
        store = self.store
        added = []
        q = rename(query_pattern, "#q")
        for rid in sorted(self.rules):
            r = self.rules[rid]
            # a rule already being expanded further up the stack is not re-entered
            if rid in self._expanding or not (r.overlays & overlays):
                continue
            s = unify_patterns(r.consequent, q)
            if s is None:
                continue
            self._expanding.add(rid)
            try:
                trig = substitute(r.trigger, s)
                window = store.window(query_interval, r.consequent_duration)
                for tb, _ in store.fetch(trig, window, r.overlays):
                    cid = self._consider(r, tb)
                    if cid is not None:
                        added.append(cid)
                self._watch(r, trig, window)
            finally:
                self._expanding.discard(rid)
        return added

    def _in_scope(self, r: CausalRule, tb) -> bool:
        return self.store.network.possibly_intersects(tb.duration, r.active)

    def _consider(self, r: CausalRule, tb) -> int | None:
        store = self.store
        key = (r.id, tb.id)
        # an assessor's summary is not a fresh occurrence of the trigger
        if "assessor" in tb.meta:
            return None
        if key in self._by_trigger or key in self._in_progress or not self._in_scope(r, tb):
            return None
        bindings = unify(r.trigger, tb.pattern)
        if bindings is None:
            return None
        at = store.network.span(tb.duration)[0]
        overlays = (r.overlays & store.network.time_overlays(at)) or store.network.time_overlays(at)
        self._in_progress.add(key)
        try:
            pres = [store.assess(substitute(p, bindings), at, overlays) for p in r.preconditions]
            out = self._generate(r, tb, pres)
        finally:
            self._in_progress.discard(key)
        rec = FiringRecord(store._ids(), r.id, tb.id, bindings, Outcome.DECLINED,
                           [p.id for p in pres])
        self.records[rec.id] = rec
        self._by_trigger[key] = rec.id

        def undo():
            self.records.pop(rec.id)
            self._by_trigger.pop(key)

        store._log(undo)
        if out is DECLINE:
            # retry whenever the trigger or a precondition belief changes
            store.set_dependencies(rec.id, {r.id, tb.id, *rec.preconditions})
            store._trace("DECLINED", r.id, tb.id)
            return None
        return self._fire(rec, out)

    def _generate(self, r, tb, pres):
        self.generator_calls.append((r.id, tb.id))
        self.store._log(self.generator_calls.pop)
        return r.generator(tb, pres)

    def _fire(self, rec: FiringRecord, strength) -> int:
        store = self.store
        r = self.rules[rec.rule]
        tb = store.beliefs[rec.trigger]
        at = store.network.span(tb.duration)[0]
        overlays = (r.overlays & store.network.time_overlays(at)) or store.network.time_overlays(at)

        def adjust(b, changes):
            # a fired consequent follows its inputs; it never re-fires
            pres = [store.beliefs[p] for p in rec.preconditions]
            out = self._generate(r, store.beliefs[rec.trigger], pres)
            if out is not DECLINE and out != b.strength:
                store._update_strength(b.id, out)

        b = store.make_belief(substitute(r.consequent, rec.bindings), at, strength,
                              depends_on={r.id, tb.id, *rec.preconditions}, signal=adjust,
                              overlays=overlays, rule=r.id, record=rec.id)
        store._store(b)
        store.set_dependencies(rec.id, ())
        rec.outcome, rec.consequent = Outcome.FIRED, b.id

        def undo():
            rec.outcome, rec.consequent = Outcome.DECLINED, None

        store._log(undo)
        store._trace("FIRED", r.id, tb.id, b.id)
        return b.id

    def _watch(self, r: CausalRule, trig, window):
        key = (r.id, trig, window)
        if key in self._watches and self._watches[key] in self.store.monitors:
            return
        mid = self.store.add_monitor(trig, window, r.overlays,
                                     on_add=lambda b, bindings, rid=r.id: self._on_trigger(rid, b))
        self._watches[key] = mid
        self.store._log(lambda: self._watches.pop(key, None))

    def _on_trigger(self, rid, tb):
        self._consider(self.rules[rid], tb)

    # -- retries ------------------------------------------------------------

    def on_signal(self, node, changes):
        if node in self.records:
            self.retry(node)

    def retry(self, record_id) -> int | None:
        """Re-run the generator of a declined firing against current beliefs."""
        store = self.store
        rec = self.records[record_id]
        if rec.outcome is not Outcome.DECLINED:
            return None
        r = self.rules[rec.rule]
        pres = [store.beliefs[p] for p in rec.preconditions]
        out = self._generate(r, store.beliefs[rec.trigger], pres)
        if out is DECLINE:
            return None
        return self._fire(rec, out)

    def firing(self, rule_id, trigger_id) -> FiringRecord | None:
        rid = self._by_trigger.get((rule_id, trigger_id))
        return None if rid is None else self.records[rid]
