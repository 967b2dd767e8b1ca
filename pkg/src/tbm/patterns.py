"""S-expression patterns: reading, printing and unification.

A pattern is a nested tuple of atoms.  Symbols are ``str``, numbers are
``int``/``float``, and symbols starting with ``?`` are variables.
"""

from __future__ import annotations

import re
from typing import Iterator

from .errors import ParseError

Bindings = dict


def is_var(x) -> bool:
    return isinstance(x, str) and x.startswith("?")


def is_ground(p) -> bool:
    if isinstance(p, tuple):
        return all(is_ground(x) for x in p)
    return not is_var(p)


def variables(p) -> list:
    """Variables of ``p`` in first-occurrence order."""
    out = []

    def walk(x):
        if isinstance(x, tuple):
            for y in x:
                walk(y)
        elif is_var(x) and x not in out:
            out.append(x)

    walk(p)
    return out


def head(p):
    return p[0] if isinstance(p, tuple) and p else p


def unify(pattern, ground, bindings: Bindings | None = None) -> Bindings | None:
    """One-way match of ``pattern`` against a ground term; None on failure."""
    b = dict(bindings) if bindings else {}
    return b if _match(pattern, ground, b) else None


def _match(p, g, b) -> bool:
    if is_var(p):
        if p in b:
            return _same(b[p], g)
        b[p] = g
        return True
    if isinstance(p, tuple):
        if not isinstance(g, tuple) or len(p) != len(g):
            return False
        return all(_match(x, y, b) for x, y in zip(p, g))
    return _same(p, g)


def _same(a, b) -> bool:
    # keep 1 and 1.0 and True apart
    return type(a) is type(b) and a == b


def _walk(t, s):
    while is_var(t) and t in s:
        t = s[t]
    return t


def _occurs(v, t, s) -> bool:
    t = _walk(t, s)
    if t == v:
        return True
    if isinstance(t, tuple):
        return any(_occurs(v, x, s) for x in t)
    return False


def _unify2(a, b, s) -> bool:
    a, b = _walk(a, s), _walk(b, s)
    if is_var(a) and is_var(b) and a == b:
        return True
    if is_var(a):
        if _occurs(a, b, s):
            return False
        s[a] = b
        return True
    if is_var(b):
        return _unify2(b, a, s)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_unify2(x, y, s) for x, y in zip(a, b))
    return _same(a, b)


def rename(p, suffix: str):
    if isinstance(p, tuple):
        return tuple(rename(x, suffix) for x in p)
    return p + suffix if is_var(p) else p


def unify_patterns(a, b) -> Bindings | None:
    """Two-way unification; callers rename apart first.

    The result maps every bound variable to its fully resolved term.
    """
    s: dict = {}
    if not _unify2(a, b, s):
        return None
    return {v: substitute(v, s) for v in s}


def substitute(p, bindings: Bindings):
    if isinstance(p, tuple):
        return tuple(substitute(x, bindings) for x in p)
    if is_var(p) and p in bindings:
        return substitute(bindings[p], bindings)
    return p


def to_str(p) -> str:
    if isinstance(p, tuple):
        return "(" + " ".join(to_str(x) for x in p) + ")"
    if isinstance(p, bool):
        return "true" if p else "false"
    return str(p)


# -- reader -------------------------------------------------------------------


class SList(list):
    """A parsed list that remembers where it started."""

    def __init__(self, items=(), line=0, col=0):
        super().__init__(items)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""\s+|;[^\n]*|\(|\)|[^\s();]+""")
_INT = re.compile(r"[-+]?\d+\Z")
_FLOAT = re.compile(r"[-+]?(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?\Z")


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        tok = m.group()
        col = m.start() - line_start + 1
        if tok[0].isspace():
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rfind("\n") + 1
            continue
        if tok[0] == ";":
            continue
        yield tok, line, col


def atom(tok: str):
    if _INT.match(tok):
        return int(tok)
    if _FLOAT.match(tok):
        return float(tok)
    return tok


def read_all(text: str) -> list:
    """Read every top-level form.  Atoms outside lists are allowed."""
    forms = []
    stack: list[SList] = []
    last = (1, 1)
    for tok, line, col in _tokens(text):
        last = (line, col)
        if tok == "(":
            stack.append(SList(line=line, col=col))
        elif tok == ")":
            if not stack:
                raise ParseError("unexpected ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else forms).append(done)
        else:
            (stack[-1] if stack else forms).append(atom(tok))
    if stack:
        open_ = stack[-1]
        raise ParseError(f"expected ')' to close list opened at {open_.line}:{open_.col}", *last)
    return forms


def to_pattern(form):
    """Convert a read form into an immutable pattern."""
    if isinstance(form, list):
        return tuple(to_pattern(x) for x in form)
    return form


def parse_pattern(text: str):
    forms = read_all(text)
    if len(forms) != 1:
        raise ParseError(f"expected one pattern, found {len(forms)}")
    return to_pattern(forms[0])
