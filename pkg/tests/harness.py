"""Randomized drivers shared by the rule, store and acceptance tests."""

import random

import oracles
from tbm.rules import DECLINE
from tbm.store import OBSERVATION, BeliefStore

BASE_HEADS = ["e0", "e1", "e2"]


# -- lazy vs eager ------------------------------------------------------------


def random_rule_scenario(rng: random.Random, max_rules=3, max_events=10, max_probes=4):
    events = [((rng.choice(BASE_HEADS), rng.randint(0, 1)), rng.randint(0, 40),
               rng.choice([0.25, 0.5, 1.0])) for _ in range(rng.randint(1, max_events))]
    present = sorted({pat[0] for pat, _, _ in events})
    rules = []
    for k in range(rng.randint(1, max_rules)):
        earlier = [r["consequent"] for r in rules]
        pool = BASE_HEADS + earlier
        pre = rng.sample(pool, rng.randint(0, min(2, len(pool))))
        rules.append({"trigger": rng.choice(present), "pre": pre, "consequent": f"c{k}"})
    probes = [(rng.choice(rules)["consequent"], rng.randint(0, 1), rng.randint(0, 40))
              for _ in range(rng.randint(0, max_probes))]
    return rules, events, probes


class LazyWorld:
    """Drive the real engine with one transaction per event."""

    DURATION = 1000

    def __init__(self, rules, window):
        self.store = s = BeliefStore()
        self.window = window
        self.o = s.create_overlay(1)
        self.origin = s.create_point([self.o])
        self._points = {}
        heads = {h for r in rules for h in r["pre"]}
        for h in sorted(heads):
            s.register_assessor(h, self.assess_max)
        for r in rules:
            s.define_rule((r["trigger"], "?v"), (r["consequent"], "?v"), generator=self.gen,
                          duration=self.DURATION, preconditions=[(h, "?v") for h in r["pre"]])

    def point(self, t):
        if t not in self._points:
            def make():
                p = self.store.create_point([self.o])
                self.store.add_constraint(self.origin, p, (t, t))
                return p
            self._points[t] = self.store.transaction(make) if not self.store.in_transaction else make()
        return self._points[t]

    @staticmethod
    def gen(trigger, pres):
        vals = [p.strength for p in pres]
        if any(v == 0 for v in vals):
            return DECLINE
        return trigger.strength * min(vals, default=1)

    def _max_in(self, pattern, window):
        found = [b for b, _ in self.store.fetch(pattern, window)
                 if b.provenance is OBSERVATION or "rule" in b.meta]
        return max((b.strength for b in found), default=0), [b.id for b in found]

    def assess_max(self, pattern, at, overlays):
        s = self.store
        window = s.window(at, self.window)
        value, used = self._max_in(pattern, window)
        mid = s.add_monitor(pattern, window)

        def signal(b, changes):
            v, used = self._max_in(pattern, window)
            s.set_dependencies(b.id, {mid, *used})
            if v != b.strength:
                s.update_strength(b.id, v)

        return s.make_belief(pattern, at, value, depends_on={mid, *used}, signal=signal)

    def assert_event(self, pattern, t, strength):
        p = self.point(t)
        self.store.transaction(lambda: self.store.assert_belief(pattern, p, strength))

    def probe(self, head, arg, t):
        iv = self.store.transaction(lambda: self.store.create_interval(self.point(t), self.point(t)))
        self.store.fetch((head, arg), iv)

    def cover(self, rules):
        lo, hi = self.point(-1), self.point(100)
        iv = self.store.transaction(lambda: self.store.create_interval(lo, hi))
        for r in rules:
            self.store.fetch((r["consequent"], "?v"), iv)

    def consequents(self):
        net = self.store.network
        out = []
        for b in self.store.beliefs.values():
            if "rule" in b.meta:
                t = net.tight_distance(self.origin, b.duration).lo
                out.append((b.pattern, t, b.strength))
        return sorted(out)


def lazy_vs_eager(seed, window=15):
    """Return ``(lazy, eager)`` consequent sets for one random scenario."""
    rng = random.Random(seed)
    rules, events, probes = random_rule_scenario(rng)
    world = LazyWorld(rules, window)
    steps = [("event", e) for e in events] + [("probe", p) for p in probes]
    rng.shuffle(steps)
    for kind, item in steps:
        if kind == "event":
            world.assert_event(*item)
        else:
            world.probe(*item)
    world.cover(rules)
    return world.consequents(), oracles.eager_consequents(events, rules, window)


# -- monitor completeness -----------------------------------------------------


def monitor_interleaving(seed, max_ops=100):
    """Random monitor/assert interleaving.

    Returns ``(got, want)``: hook counts per (monitor, belief) pair from the
    engine, and the oracle's expectation for every pair.
    """
    rng = random.Random(seed)
    s = BeliefStore()
    o = s.create_overlay(1)
    origin = s.create_point([o])

    def setup():
        times = []
        for _ in range(12):
            p = s.create_point([o])
            a = rng.randint(0, 100)
            s.add_constraint(origin, p, (a, a + rng.choice([0, 0, 5, 30])))
            times.append(p)
        ivs = []
        for _ in range(6):
            a = rng.randint(0, 90)
            b, e = s.create_point([o]), s.create_point([o])
            s.add_constraint(origin, b, (a, a))
            s.add_constraint(origin, e, (a + rng.randint(0, 20), a + rng.randint(20, 30)))
            ivs.append(s.create_interval(b, e))
        return times, ivs

    times, ivs = s.transaction(setup)
    pats = [("p", "?x"), ("p", 1), ("q", "?x"), ("p", "?x", "?x")]
    grounds = [("p", 1), ("p", 2), ("q", 1), ("p", 1, 1), ("p", 1, 2)]
    calls: dict = {}
    monitors, beliefs = [], []
    ops = rng.randint(1, max_ops)
    done = 0
    while done < ops:
        batch = rng.randint(1, 5)

        def body(n=batch):
            for _ in range(n):
                if rng.random() < 0.35:
                    pat, iv = rng.choice(pats), rng.choice(ivs)
                    mid = s.add_monitor(pat, iv, on_add=lambda b, bd, m=None: None)
                    s.monitors[mid].on_add = (lambda b, bd, m=mid:
                                              calls.__setitem__((m, b.id), calls.get((m, b.id), 0) + 1))
                    monitors.append((mid, pat, iv))
                else:
                    g = rng.choice(grounds)
                    at = rng.choice(times + ivs)
                    beliefs.append((s.assert_belief(g, at, 1.0), g, at))

        s.transaction(body)
        done += batch
    net = s.network
    ids = list(net.points)
    cons = [(c.src, c.dst, c.range.lo, c.range.hi) for c in net.constraints.values()]
    want = {}
    for mid, pat, iv in monitors:
        for bid, g, at in beliefs:
            ok = (mid < bid and oracles.unifies(pat, g)
                  and oracles.possibly_intersects(ids, cons, net.span(iv), net.span(at)))
            want[(mid, bid)] = 1 if ok else 0
    got = {k: calls.get(k, 0) for k in want}
    stray = set(calls) - set(want)
    assert not stray, stray
    return got, want
