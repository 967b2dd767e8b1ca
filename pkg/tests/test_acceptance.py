"""The eight acceptance criteria, one test each.

Every test records a one-line verdict; the lines are printed at the end of
the pytest run (see ``conftest.py``) and by ``python tests/test_acceptance.py``.
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import harness
import oracles
from tbm.errors import Inconsistent, TotalConflict
from tbm.network import NEG_INF, POS_INF, TemporalNetwork
from tbm.scenario import bundled, parse_scenario, run
from tbm.shafer import VACUOUS, ShaferStrength, dempster_combine

RESULTS: dict = {}


@contextmanager
def criterion(n, title, limit=None):
    start = time.perf_counter()
    note = {}
    try:
        yield note
        elapsed = time.perf_counter() - start
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    except BaseException as exc:
        RESULTS[n] = f"FAIL criterion {n}: {title} ({exc!s:.120})"
        raise
    detail = ", ".join(f"{k}={v}" for k, v in note.items())
    RESULTS[n] = f"PASS criterion {n}: {title} ({detail}{', ' if detail else ''}{elapsed:.3f}s)"


def shot_oracle():
    # straight-line: decay_both of a certain load over one hour, then Dempster by masses
    l1 = 1.0 * max(0.0, 1 - 60 / 43200)
    return oracles.mass_combine((0.9, 0.0), (0.0, l1 * 1.0))


def test_criterion_1_variant1():
    with criterion(1, "variant 1 reproduction", limit=1.0) as note:
        q = run(parse_scenario(bundled("variant1"))).queries[0]
        want = shot_oracle()[1]
        note["against"] = repr(q.support_against)
        assert q.support_against > 0.9
        assert abs(q.support_against - want) <= 1e-9
        assert abs(q.support_against - 0.98628) < 1e-5


def test_criterion_2_variant2():
    with criterion(2, "variant 2 reproduction", limit=1.0) as note:
        q = run(parse_scenario(bundled("variant2"))).queries[0]
        note["strength"] = f"[{q.support_for!r}, {q.support_against!r}]"
        assert q.support_against == 0.0
        assert q.support_for == 0.9


def test_criterion_3_incremental_chain():
    with criterion(3, "incremental monitor chain", limit=1.0) as note:
        ref = run(parse_scenario(bundled("variant1"))).queries[0]
        rep = run(parse_scenario(bundled("variant2-then-load")), "stepped")
        before, after = rep.queries
        assert (before.support_for, before.support_against) == (0.9, 0.0)
        for q in (before, after):
            got = (q.final.support_for, q.final.support_against)
            assert abs(got[0] - ref.support_for) <= 1e-12
            assert abs(got[1] - ref.support_against) <= 1e-12
        assert abs(after.support_against - ref.support_against) <= 1e-12
        note["revised_against"] = repr(before.final.support_against)


def random_network_case(rng):
    n = rng.randint(2, 12)

    def bound():
        return None if rng.random() < 0.1 else rng.randint(-50, 50)

    cons = []
    for _ in range(rng.randint(0, 30)):
        i, j = rng.randrange(n), rng.randrange(n)
        lo, hi = bound(), bound()
        lo = NEG_INF if lo is None else lo
        hi = POS_INF if hi is None else hi
        if lo > hi:
            lo, hi = hi, lo
        cons.append((i, j, lo, hi))
    return n, cons


def test_criterion_4_network_oracle():
    with criterion(4, "constraint-network oracle equivalence", limit=10.0) as note:
        rng = random.Random(2024)
        rejected = 0
        for _ in range(200):
            n, cons = random_network_case(rng)
            net = TemporalNetwork()
            o = net.create_overlay(1)
            ids = [net.create_point([o]) for _ in range(n)]
            accepted = []
            for i, j, lo, hi in cons:
                trial = accepted + [(ids[i], ids[j], lo, hi)]
                ok = oracles.consistent(ids, trial)
                before = {(p, q): net.distance(p, q, o) for p in ids for q in ids}
                try:
                    net.add_constraint(ids[i], ids[j], (lo, hi))
                except Inconsistent:
                    assert not ok
                    rejected += 1
                    after = {(p, q): net.distance(p, q, o) for p in ids for q in ids}
                    assert after == before
                    continue
                assert ok
                accepted = trial
                _, ub = oracles.all_pairs(ids, accepted)
                for p in ids:
                    for q in ids:
                        assert net.distance(p, q, o) == (-ub[q][p], ub[p][q])
        note["rejected"] = rejected


def test_criterion_5_dempster_suite():
    with criterion(5, "Dempster algebra suite", limit=1.0) as note:
        rng = random.Random(7)
        grid = [0.0, 0.25, 0.5, 1.0]

        def draw():
            if rng.random() < 0.2:
                f = rng.choice(grid)
                return ShaferStrength(f, rng.choice([a for a in grid if a <= 1 - f]))
            f = rng.random()
            return ShaferStrength(f, rng.random() * (1 - f))

        conflicts = assoc = 0
        for _ in range(1000):
            x, y, z = draw(), draw(), draw()
            k = Fraction(x.support_for) * Fraction(y.support_against) + \
                Fraction(x.support_against) * Fraction(y.support_for)
            assert dempster_combine(VACUOUS, x) == x and dempster_combine(x, VACUOUS) == x
            if k == 1:
                conflicts += 1
                for a, b in ((x, y), (y, x)):
                    try:
                        dempster_combine(a, b)
                    except TotalConflict:
                        pass
                    else:
                        raise AssertionError(f"no TotalConflict for {a}, {b}")
                continue
            xy = dempster_combine(x, y)
            assert xy == dempster_combine(y, x)
            ref = oracles.mass_combine(x, y)
            assert abs(xy.support_for - ref[0]) <= 1e-12
            assert abs(xy.support_against - ref[1]) <= 1e-12
            near = 1 - 1e-6
            if oracles.conflict(y, z) >= near or oracles.conflict(xy, z) >= near:
                continue
            yz = dempster_combine(y, z)
            if oracles.conflict(x, yz) >= near:
                continue
            left = dempster_combine(xy, z)
            right = dempster_combine(x, yz)
            assert abs(left.support_for - right.support_for) <= 1e-9
            assert abs(left.support_against - right.support_against) <= 1e-9
            assoc += 1
        assert conflicts > 0
        note["total_conflicts"] = conflicts
        note["triples"] = assoc


def test_criterion_6_lazy_equals_eager():
    with criterion(6, "lazy-vs-eager rule equivalence", limit=10.0) as note:
        produced = 0
        for seed in range(50):
            lazy, eager = harness.lazy_vs_eager(seed)
            assert lazy == eager, f"seed {seed}"
            produced += len(eager)
        note["consequents"] = produced


def test_criterion_7_monitor_completeness():
    with criterion(7, "monitor completeness and soundness") as note:
        pairs = fired = 0
        for seed in range(8):
            got, want = harness.monitor_interleaving(seed)
            assert got == want, f"seed {seed}"
            pairs += len(want)
            fired += sum(want.values())
        note["pairs"] = pairs
        note["fired"] = fired


def test_criterion_8_decay_closed_forms():
    from tbm.calculus import CalculusConfig, ShaferCalculus
    from tbm.store import BeliefStore

    with criterion(8, "assess_loaded decay closed forms") as note:
        for e in (0, 60, 21600, 43200, 50000):
            s = BeliefStore()
            o = s.create_overlay(1)

            def setup():
                a, b = s.create_point([o]), s.create_point([o])
                s.add_constraint(a, b, (e, e))
                return a, b

            a, b = s.transaction(setup)
            ShaferCalculus(s, CalculusConfig()).install()
            s.assert_belief(("loaded", "gun"), a, ShaferStrength(1.0, 0.0))
            got = s.assess(("loaded", "gun"), b).strength
            assert got == ShaferStrength(max(0.0, 1 - e / 43200), 0.0), (e, got)
            note[f"e{e}"] = repr(got.support_for)


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q"]))
