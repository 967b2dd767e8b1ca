"""Reference belief calculus for the born/load/shoot world.

Strengths are :class:`ShaferStrength` pairs.  Evidence of being alive loses
its supporting component linearly over ``alive_lifetime``; evidence about a
gun being loaded decays toward vacuous over ``loaded_lifetime``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .rules import DECLINE
from .shafer import (
    VACUOUS,
    ShaferStrength,
    combine_all,
    decay_both,
    decay_support,
    dempster_combine,
    strength,
)
from .store import ASSESSMENT, OBSERVATION, BeliefStore

MINUTE = 1
HOUR = 60 * MINUTE
DAY = 24 * HOUR
MONTH = 30 * DAY
YEAR = 365 * DAY


@dataclass(frozen=True)
class CalculusConfig:
    alive_lifetime: int = 6 * MONTH
    loaded_lifetime: int = MONTH
    born_cutoff: int = 70 * YEAR
    born_evidence: ShaferStrength = field(default_factory=lambda: ShaferStrength(0.9, 0.0))
    # add birth evidence even when a prior assessment (which already holds it) is kept
    recount_birth: bool = False

    def __post_init__(self):
        for name in ("alive_lifetime", "loaded_lifetime", "born_cutoff"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise ValueError(f"{name} must be a positive tick count, got {v!r}")
        object.__setattr__(self, "born_evidence", strength(self.born_evidence))

    def with_overrides(self, **kw) -> "CalculusConfig":
        return replace(self, **kw)


class ShaferCalculus:
    """Assessors for ``alive``/``loaded`` and the three rule generators."""

    def __init__(self, store: BeliefStore, config: CalculusConfig | None = None):
        self.store = store
        self.config = config or CalculusConfig()

    def install(self):
        self.store.register_assessor("alive", self.assess_alive)
        self.store.register_assessor("loaded", self.assess_loaded)
        return self

    def generator(self, name: str):
        return {"gen-born": self.gen_copy, "gen-load": self.gen_copy,
                "gen-copy": self.gen_copy, "gen-shoot": self.gen_shoot}[name]

    # -- helpers ------------------------------------------------------------

    def _candidates(self, pattern, window, overlays, self_id):
        store = self.store
        out = []
        for b, _ in store.fetch(pattern, window, overlays):
            if self_id is not None and (b.id == self_id or store.depends_on(b.id, self_id)):
                continue
            out.append(b)
        return out

    def _latest(self, beliefs, at):
        if not beliefs:
            return None
        return min(beliefs, key=lambda b: (self.store.elapsed(b.duration, at), -b.id))

    def _monitor(self, pattern, interval, overlays, old):
        store = self.store
        if old is not None and old in store.monitors and store.monitors[old].interval == interval:
            return old
        return store.add_monitor(pattern, interval, overlays)

    def _assessment(self, pattern, at, overlays, compute):
        store = self.store
        strength_, used, monitors = compute(pattern, at, overlays, None, ())

        def signal(b, changes):
            old_monitors = b.meta["monitors"]
            s, used, monitors = compute(pattern, at, overlays, b.id, old_monitors)
            store.set_dependencies(b.id, {*used, *monitors})
            for mid in old_monitors:
                if mid not in monitors and mid in store.monitors:
                    store.remove_monitor(mid)
            b.meta["monitors"] = monitors
            store._log(lambda: b.meta.__setitem__("monitors", old_monitors))
            if s != b.strength:
                store.update_strength(b.id, s)

        return store.make_belief(pattern, at, strength_, depends_on={*used, *monitors},
                                 signal=signal, overlays=overlays, monitors=monitors)

    # -- assessors ------------------------------------------------------------

    def assess_alive(self, pattern, at, overlays):
        return self._assessment(pattern, at, overlays, self._compute_alive)

    def _compute_alive(self, pattern, at, overlays, self_id, old_monitors):
        store, cfg = self.store, self.config
        who = pattern[1]
        window = store.window(at, cfg.alive_lifetime)
        found = self._candidates(pattern, window, overlays, self_id)
        latest = self._latest([b for b in found if b.provenance is ASSESSMENT], at)
        kept = []
        if latest is not None:
            since = store.elapsed(latest.duration, at)
            kept.append(latest)
            for b in found:
                if b.provenance is OBSERVATION:
                    e = store.elapsed(b.duration, at)
                    if e < since or (e == since and b.id > latest.id):
                        kept.append(b)
        else:
            kept = [b for b in found if b.provenance is OBSERVATION]
        kept.sort(key=lambda b: b.id)
        evidence = [decay_support(b.strength, store.elapsed(b.duration, at), cfg.alive_lifetime)
                    for b in kept]
        used = [b.id for b in kept]

        born_window = store.window(at, cfg.born_cutoff)
        if latest is None or cfg.recount_birth:
            births = self._candidates(("born", who), born_window, overlays, self_id)
            birth = self._latest(births, at)
            if birth is not None and store.elapsed(birth.duration, at) < cfg.born_cutoff:
                evidence.append(cfg.born_evidence)
                used.append(birth.id)

        old = dict(zip(("alive", "born"), old_monitors))
        monitors = (self._monitor(pattern, window, overlays, old.get("alive")),
                    self._monitor(("born", who), born_window, overlays, old.get("born")))
        return combine_all(evidence), used, monitors

    def assess_loaded(self, pattern, at, overlays):
        return self._assessment(pattern, at, overlays, self._compute_loaded)

    def _compute_loaded(self, pattern, at, overlays, self_id, old_monitors):
        store, cfg = self.store, self.config
        window = store.window(at, cfg.loaded_lifetime)
        latest = self._latest(self._candidates(pattern, window, overlays, self_id), at)
        if latest is None:
            s, used, gap = VACUOUS, [], window
        else:
            s = decay_both(latest.strength, store.elapsed(latest.duration, at), cfg.loaded_lifetime)
            used, gap = [latest.id], store.between(latest.duration, at)
        old = old_monitors[0] if old_monitors else None
        return s, used, (self._monitor(pattern, gap, overlays, old),)

    # -- generators ---------------------------------------------------------

    def gen_copy(self, trigger, preconditions):
        return trigger.strength

    def gen_shoot(self, trigger, preconditions):
        """Evidence against the victim being alive, folded into their state at the shot."""
        l1 = preconditions[0].strength.support_for
        if l1 == 0:
            return DECLINE
        s1 = trigger.strength.support_for
        at = self.store.network.span(trigger.duration)[0]
        alive = self.store.assess(("alive", trigger.pattern[1]), at, trigger.overlays)
        return dempster_combine(alive.strength, ShaferStrength(0.0, l1 * s1))
