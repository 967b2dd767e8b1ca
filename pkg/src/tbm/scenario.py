"""Scenario files: parse, run against the engine, and report.

A scenario is a sequence of S-expression statements::

    (config :born-evidence (0.9 0))
    (overlay base :grain 1)
    (origin t0)
    (point load :after t0 :delta 10512000 10512000)
    (rule shoot-kills :trigger (shoot ?x ?g) :pre ((loaded ?g))
          :consequent (alive ?x) :duration 525600 :generator gen-shoot)
    (event (shoot fred gun1) :at shot :strength (1 0))
    (query (alive fred) :at shot)
    (expect :for 0.012 :against 0.986 :tol 1e-3)

Times are minutes.  ``event`` (alias ``assert``), ``query`` and ``expect``
form the script; everything else is set up before the script runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .calculus import CalculusConfig, ShaferCalculus
from .errors import DuplicateName, ParseError, ScenarioError, TBMError, UndefinedName
from .network import NEG_INF, POS_INF
from .patterns import SList, read_all, to_pattern, to_str
from .shafer import ShaferStrength
from .store import OBSERVATION, BeliefStore

GENERATORS = ("gen-born", "gen-load", "gen-shoot", "gen-copy")

_CONFIG_KEYS = {
    ":alive-lifetime": "alive_lifetime",
    ":loaded-lifetime": "loaded_lifetime",
    ":born-cutoff": "born_cutoff",
    ":born-evidence": "born_evidence",
    ":recount-birth": "recount_birth",
}


@dataclass
class PointDecl:
    name: str
    line: int
    after: str | None = None
    delta: tuple = (0, 0)
    overlays: tuple | None = None


@dataclass
class IntervalDecl:
    name: str
    line: int
    begin: str
    end: str


@dataclass
class RuleDecl:
    name: str
    line: int
    trigger: tuple
    consequent: tuple
    duration: int
    generator: str
    preconditions: tuple = ()
    active: str | None = None
    overlays: tuple | None = None


@dataclass
class Step:
    kind: str  # assert | query | expect
    line: int
    pattern: tuple | None = None
    at: str | None = None
    strength: ShaferStrength | None = None
    overlays: tuple | None = None
    expect: dict | None = None


@dataclass
class Scenario:
    config: dict = field(default_factory=dict)
    overlays: dict = field(default_factory=dict)
    origin: str | None = None
    points: list = field(default_factory=list)
    intervals: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    @property
    def events(self):
        return [s for s in self.steps if s.kind == "assert"]

    @property
    def queries(self):
        return [s for s in self.steps if s.kind == "query"]


# -- parsing ------------------------------------------------------------------


def _options(form: SList, start: int, allowed: set) -> dict:
    out = {}
    items = form[start:]
    i = 0
    while i < len(items):
        key = items[i]
        if not (isinstance(key, str) and key.startswith(":")):
            raise ParseError(f"expected a :keyword, found {key!r}", form.line, form.col)
        if key not in allowed:
            raise ParseError(f"unknown option {key} for {form[0]}", form.line, form.col)
        if key in out:
            raise ParseError(f"option {key} given twice", form.line, form.col)
        args = []
        i += 1
        while i < len(items) and not (isinstance(items[i], str) and items[i].startswith(":")):
            args.append(items[i])
            i += 1
        if not args:
            raise ParseError(f"option {key} needs a value", form.line, form.col)
        out[key] = args
    return out


def _one(form, opts, key, kind=None, required=True):
    if key not in opts:
        if required:
            raise ParseError(f"{form[0]} needs {key}", form.line, form.col)
        return None
    args = opts[key]
    if len(args) != 1:
        raise ParseError(f"{key} takes one value", form.line, form.col)
    v = args[0]
    if kind == "name" and not (isinstance(v, str) and not v.startswith(("?", ":"))):
        raise ParseError(f"{key} expects a name, found {v!r}", form.line, form.col)
    if kind == "list" and not isinstance(v, list):
        raise ParseError(f"{key} expects a list", form.line, form.col)
    if kind == "pattern":
        return to_pattern(v)
    return v


def _number(form, v, what):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{what} must be a number, found {v!r}", form.line, form.col)
    return v


def _tick(form, v):
    if v in ("-inf",):
        return NEG_INF
    if v in ("inf", "+inf"):
        return POS_INF
    if not isinstance(v, int) or isinstance(v, bool):
        raise ParseError(f"expected an integer tick count, found {v!r}", form.line, form.col)
    return v


def _strength(form, v):
    if not isinstance(v, list) or len(v) != 2:
        raise ParseError("a strength is a list (for against)", form.line, form.col)
    try:
        return ShaferStrength(float(_number(form, v[0], "strength")), float(_number(form, v[1], "strength")))
    except TBMError as exc:
        raise ParseError(str(exc), form.line, form.col) from None


def _names(form, v):
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise ParseError("expected a list of names", form.line, form.col)
    return tuple(v)


def parse_config(form: SList) -> dict:
    opts = _options(form, 1, set(_CONFIG_KEYS))
    out = {}
    for key, field_name in _CONFIG_KEYS.items():
        if key not in opts:
            continue
        v = _one(form, opts, key)
        if field_name == "born_evidence":
            out[field_name] = _strength(form, v)
        elif field_name == "recount_birth":
            if v not in ("true", "false"):
                raise ParseError(f"{key} is true or false", form.line, form.col)
            out[field_name] = v == "true"
        else:
            if not isinstance(v, int) or v <= 0:
                raise ParseError(f"{key} must be a positive integer", form.line, form.col)
            out[field_name] = v
    return out


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; names must be declared before they are used."""
    sc = Scenario()
    names: dict[str, str] = {}

    def declare(form, name, kind):
        if not isinstance(name, str) or name.startswith((":", "?")):
            raise ParseError(f"expected a name after {form[0]}", form.line, form.col)
        if name in names:
            raise DuplicateName(f"{name} is already declared as {names[name]}", form.line, form.col)
        names[name] = kind

    def use(form, name, *kinds):
        if names.get(name) not in kinds:
            raise UndefinedName(f"undefined {' or '.join(kinds)} {name!r}", form.line, form.col)
        return name

    def overlays_opt(form, opts):
        if ":in" not in opts:
            return None
        v = _names(form, _one(form, opts, ":in"))
        for o in v:
            use(form, o, "overlay")
        return v

    for form in read_all(text):
        if not isinstance(form, SList) or not form or not isinstance(form[0], str):
            line, col = (form.line, form.col) if isinstance(form, SList) else (None, None)
            raise ParseError(f"expected a statement, found {form!r}", line, col)
        kw = form[0]
        if kw == "config":
            sc.config.update(parse_config(form))
        elif kw == "overlay":
            declare(form, form[1] if len(form) > 1 else None, "overlay")
            opts = _options(form, 2, {":grain"})
            grain = _one(form, opts, ":grain")
            if not isinstance(grain, int) or grain <= 0:
                raise ParseError("grain must be a positive integer", form.line, form.col)
            sc.overlays[form[1]] = grain
        elif kw == "origin":
            if sc.origin is not None:
                raise DuplicateName("a scenario has exactly one origin", form.line, form.col)
            declare(form, form[1] if len(form) > 1 else None, "point")
            opts = _options(form, 2, {":in"})
            sc.origin = form[1]
            sc.points.append(PointDecl(form[1], form.line, overlays=overlays_opt(form, opts)))
        elif kw == "point":
            opts = _options(form, 2, {":after", ":delta", ":in"})
            after = use(form, _one(form, opts, ":after", "name"), "point")
            delta = opts.get(":delta")
            if delta is None or len(delta) != 2:
                raise ParseError("point needs :delta LO HI", form.line, form.col)
            lo, hi = _tick(form, delta[0]), _tick(form, delta[1])
            if lo > hi:
                raise ParseError(f"empty delta [{lo}, {hi}]", form.line, form.col)
            ovs = overlays_opt(form, opts)
            declare(form, form[1] if len(form) > 1 else None, "point")
            sc.points.append(PointDecl(form[1], form.line, after, (lo, hi), ovs))
        elif kw == "interval":
            opts = _options(form, 2, {":from", ":to"})
            b = use(form, _one(form, opts, ":from", "name"), "point")
            e = use(form, _one(form, opts, ":to", "name"), "point")
            declare(form, form[1] if len(form) > 1 else None, "interval")
            sc.intervals.append(IntervalDecl(form[1], form.line, b, e))
        elif kw == "rule":
            opts = _options(form, 2, {":trigger", ":pre", ":consequent", ":duration",
                                      ":generator", ":active", ":in"})
            pre = _one(form, opts, ":pre", "list", required=False) or []
            if not all(isinstance(p, list) for p in pre):
                raise ParseError(":pre expects a list of patterns", form.line, form.col)
            duration = _one(form, opts, ":duration")
            if not isinstance(duration, int) or isinstance(duration, bool):
                raise ParseError(":duration must be an integer", form.line, form.col)
            gen = _one(form, opts, ":generator", "name")
            if gen not in GENERATORS:
                raise UndefinedName(f"unknown generator {gen!r}", form.line, form.col)
            active = _one(form, opts, ":active", "name", required=False)
            if active is not None:
                use(form, active, "interval")
            ovs = overlays_opt(form, opts)
            declare(form, form[1] if len(form) > 1 else None, "rule")
            sc.rules.append(RuleDecl(form[1], form.line, _one(form, opts, ":trigger", "pattern"),
                                     _one(form, opts, ":consequent", "pattern"), duration, gen,
                                     tuple(to_pattern(p) for p in pre), active, ovs))
        elif kw in ("event", "assert"):
            if len(form) < 2 or not isinstance(form[1], list):
                raise ParseError(f"{kw} needs a pattern", form.line, form.col)
            opts = _options(form, 2, {":at", ":strength", ":in"})
            at = use(form, _one(form, opts, ":at", "name"), "point", "interval")
            s = _strength(form, _one(form, opts, ":strength"))
            sc.steps.append(Step("assert", form.line, to_pattern(form[1]), at, s,
                                 overlays_opt(form, opts)))
        elif kw == "query":
            if len(form) < 2 or not isinstance(form[1], list):
                raise ParseError("query needs a pattern", form.line, form.col)
            opts = _options(form, 2, {":at", ":in"})
            at = use(form, _one(form, opts, ":at", "name"), "point")
            sc.steps.append(Step("query", form.line, to_pattern(form[1]), at,
                                 overlays=overlays_opt(form, opts)))
        elif kw == "expect":
            if not sc.queries:
                raise ParseError("expect must follow a query", form.line, form.col)
            opts = _options(form, 1, {":for", ":against", ":tol"})
            exp = {k[1:]: float(_number(form, _one(form, opts, k, required=False), k))
                   for k in (":for", ":against", ":tol") if k in opts}
            if "for" not in exp and "against" not in exp:
                raise ParseError("expect needs :for or :against", form.line, form.col)
            exp.setdefault("tol", 0.0)
            sc.steps.append(Step("expect", form.line, expect=exp))
        else:
            raise ParseError(f"unknown statement {kw!r}", form.line, form.col)
    if sc.origin is None:
        raise ParseError("a scenario needs an (origin NAME) statement")
    if not sc.overlays:
        raise ParseError("a scenario needs at least one overlay")
    return sc


def load_config(text: str) -> dict:
    forms = read_all(text)
    out = {}
    for form in forms:
        if not (isinstance(form, SList) and form and form[0] == "config"):
            raise ParseError("a config file holds (config ...) statements only",
                             getattr(form, "line", None), getattr(form, "col", None))
        out.update(parse_config(form))
    return out


def bundled(name: str) -> str:
    """Text of a scenario shipped with the package, e.g. ``variant1``."""
    if not name.endswith(".tbm"):
        name += ".tbm"
    return resources.files("tbm").joinpath("scenarios").joinpath(name).read_text(encoding="utf-8")


def bundled_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("tbm").joinpath("scenarios").iterdir()
                  if p.name.endswith(".tbm"))


# -- running ------------------------------------------------------------------


class StepFailed(ScenarioError):
    pass


@dataclass
class QueryResult:
    index: int
    line: int
    pattern: str
    at: Any
    belief: int
    support_for: float
    support_against: float
    depends_on: list
    final: ShaferStrength | None = None

    def as_dict(self):
        return {
            "pattern": self.pattern,
            "at": self.at,
            "line": self.line,
            "belief": self.belief,
            "for": self.support_for,
            "against": self.support_against,
            "final_for": self.final.support_for,
            "final_against": self.final.support_against,
            "depends_on": self.depends_on,
        }


@dataclass
class ExpectResult:
    line: int
    query: int
    expected: dict
    passed: bool

    def as_dict(self):
        return {"line": self.line, "query": self.query, "expected": self.expected,
                "passed": self.passed}


@dataclass
class Report:
    mode: str
    queries: list = field(default_factory=list)
    expectations: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.expectations)

    def as_dict(self):
        return {
            "mode": self.mode,
            "queries": [q.as_dict() for q in self.queries],
            "expectations": [e.as_dict() for e in self.expectations],
            "trace": self.trace,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"mode: {self.mode}"]
        for q in self.queries:
            lines.append(f"query {q.index} (line {q.line}): {q.pattern} at {_fmt_at(q.at)}")
            lines.append(f"  for: {q.support_for!r}")
            lines.append(f"  against: {q.support_against!r}")
            lines.append(f"  final for: {q.final.support_for!r}")
            lines.append(f"  final against: {q.final.support_against!r}")
            lines.append(f"  depends on: {' '.join(map(str, q.depends_on)) or '-'}")
        for e in self.expectations:
            want = ", ".join(f"{k} {v!r}" for k, v in e.expected.items())
            lines.append(f"expect (line {e.line}) on query {e.query}: "
                         f"{'ok' if e.passed else 'FAILED'} ({want})")
        lines.extend(self.trace)
        return "\n".join(lines) + "\n"


def _fmt_at(at):
    return str(at) if not isinstance(at, list) else f"[{at[0]}, {at[1]}]"


def _json_tick(v):
    if v == POS_INF:
        return "+inf"
    if v == NEG_INF:
        return "-inf"
    return v


class Runner:
    """Builds an engine for a scenario and executes its script."""

    def __init__(self, scenario: Scenario, config: dict | None = None):
        self.scenario = scenario
        cfg = dict(scenario.config)
        cfg.update(config or {})
        self.config = CalculusConfig(**cfg)
        self.store = BeliefStore()
        self.calculus = ShaferCalculus(self.store, self.config)
        self.ids: dict[str, int] = {}
        self.rule_names: dict[int, str] = {}
        self.store.transaction(self._setup)

    def _overlays(self, names):
        if names is None:
            return None
        return [self.ids[n] for n in names]

    def _setup(self):
        sc, st = self.scenario, self.store
        for name, grain in sc.overlays.items():
            self.ids[name] = st.create_overlay(grain)
        every = [self.ids[n] for n in sc.overlays]
        for p in sc.points:
            ovs = self._overlays(p.overlays) or every
            pid = st.create_point(ovs)
            self.ids[p.name] = pid
            if p.after is not None:
                st.add_constraint(self.ids[p.after], pid, p.delta)
        for iv in sc.intervals:
            self.ids[iv.name] = st.create_interval(self.ids[iv.begin], self.ids[iv.end])
        self.calculus.install()
        for r in sc.rules:
            rid = st.define_rule(r.trigger, r.consequent, preconditions=r.preconditions,
                                 duration=r.duration, generator=self.calculus.generator(r.generator),
                                 active=self.ids.get(r.active) if r.active else None,
                                 overlays=self._overlays(r.overlays), name=r.name)
            self.ids[r.name] = rid
            self.rule_names[rid] = r.name

    def _at(self, point_name):
        origin = self.ids[self.scenario.origin]
        lo, hi = self.store.network.tight_distance(origin, self.ids[point_name])
        return lo if lo == hi else [_json_tick(lo), _json_tick(hi)]

    def run(self, mode: str = "batch", trace: bool = False) -> Report:
        if mode not in ("batch", "stepped"):
            raise ValueError(f"unknown mode {mode!r}")
        st = self.store
        report = Report(mode)
        trace_start = len(st.trace)
        steps = self.scenario.steps
        if mode == "batch":
            asserts = [s for s in steps if s.kind == "assert"]
            self._guard(asserts[0] if asserts else None,
                        lambda: st.transaction(lambda: [self._assert(s) for s in asserts]))
            steps = [s for s in steps if s.kind != "assert"]
        for step in steps:
            if step.kind == "assert":
                self._guard(step, lambda: st.transaction(lambda: self._assert(step)))
            elif step.kind == "query":
                b = self._guard(step, lambda: st.transaction(lambda: self._query(step)))
                report.queries.append(QueryResult(
                    len(report.queries) + 1, step.line, to_str(step.pattern), self._at(step.at),
                    b.id, b.strength.support_for, b.strength.support_against,
                    sorted(b.depends_on)))
            else:
                last = report.queries[-1]
                exp = step.expect
                ok = all(abs(getattr(last, "support_" + k) - exp[k]) <= exp["tol"]
                         for k in ("for", "against") if k in exp)
                report.expectations.append(ExpectResult(step.line, last.index, exp, ok))
        for q in report.queries:
            q.final = st.beliefs[q.belief].strength
        if trace:
            report.trace = [self._trace_line(e) for e in st.trace[trace_start:]]
        return report

    def _guard(self, step, fn):
        try:
            return fn()
        except TBMError as exc:
            where = f"line {step.line}" if step is not None else "setup"
            raise StepFailed(f"{step.kind if step else 'step'} at {where} failed: {exc}",
                             step.line if step else None) from exc

    def _assert(self, step):
        return self.store.assert_belief(step.pattern, self.ids[step.at], step.strength, OBSERVATION,
                                        self._overlays(step.overlays))

    def _query(self, step):
        return self.store.assess(step.pattern, self.ids[step.at], self._overlays(step.overlays))

    def _trace_line(self, event):
        kind, *rest = event
        if kind == "FIRED":
            rid, tid, cid = rest
            return f"FIRED rule={self.rule_names.get(rid, rid)} trigger={tid} consequent={cid}"
        if kind == "DECLINED":
            rid, tid = rest
            return f"DECLINED rule={self.rule_names.get(rid, rid)} trigger={tid}"
        if kind == "MONITOR":
            return f"MONITOR monitor={rest[0]} belief={rest[1]}"
        if kind == "SIGNAL":
            return f"SIGNAL node={rest[0]}"
        if kind == "ASSERT":
            return f"ASSERT belief={rest[0]} {rest[1]} {rest[2]}"
        return " ".join(map(str, event))


def run(scenario: Scenario, mode: str = "batch", *, config: dict | None = None,
        trace: bool = False) -> Report:
    return Runner(scenario, config).run(mode, trace)


def run_file(path: str | Path, mode: str = "batch", **kw) -> Report:
    return run(parse_scenario(Path(path).read_text(encoding="utf-8")), mode, **kw)
