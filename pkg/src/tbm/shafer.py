"""Shafer-interval strengths over the binary frame {P, not P}."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidStrength, NegativeElapsed, TotalConflict

EPS = 1e-9


@dataclass(frozen=True)
class ShaferStrength:
    """Support for and against a proposition; the rest is uncommitted."""

    support_for: float
    support_against: float

    def __post_init__(self):
        f, a = self.support_for, self.support_against
        if not (0.0 <= f <= 1.0 and 0.0 <= a <= 1.0 and f + a <= 1.0 + EPS):
            raise InvalidStrength(f"not a Shafer interval: [{f}, {a}]")

    @property
    def uncommitted(self) -> float:
        return max(0.0, 1.0 - (self.support_for + self.support_against))

    def __iter__(self):
        yield self.support_for
        yield self.support_against

    def __str__(self):
        return f"[{self.support_for!r}, {self.support_against!r}]"


VACUOUS = ShaferStrength(0.0, 0.0)


def strength(x) -> ShaferStrength:
    if isinstance(x, ShaferStrength):
        return x
    f, a = x
    return ShaferStrength(float(f), float(a))


def dempster_combine(x: ShaferStrength, y: ShaferStrength) -> ShaferStrength:
    """Dempster's rule for two independent bodies of evidence."""
    xf, xa = x
    yf, ya = y
    # grouped so that swapping arguments or negating both is exact
    xu, yu = 1.0 - (xf + xa), 1.0 - (yf + ya)
    conflict = xf * ya + xa * yf
    norm = 1.0 - conflict
    if norm <= 0.0:
        raise TotalConflict(f"{x} and {y} are totally conflicting")
    f = (xf * yf + (xf * yu + xu * yf)) / norm
    a = (xa * ya + (xa * yu + xu * ya)) / norm
    # rounding can push a component a hair outside [0, 1]
    return ShaferStrength(min(max(f, 0.0), 1.0), min(max(a, 0.0), 1.0))


def combine_all(items) -> ShaferStrength:
    out = VACUOUS
    for s in items:
        out = dempster_combine(out, s)
    return out


def negate(x: ShaferStrength) -> ShaferStrength:
    return ShaferStrength(x.support_against, x.support_for)


def _factor(elapsed, lifetime) -> float:
    if elapsed < 0:
        raise NegativeElapsed(f"elapsed time {elapsed} is negative")
    if lifetime <= 0:
        raise ValueError(f"lifetime must be positive, got {lifetime}")
    return max(0.0, 1.0 - elapsed / lifetime)


def decay_support(x: ShaferStrength, elapsed: int, lifetime: int) -> ShaferStrength:
    """Linear decay of the supporting component only."""
    return ShaferStrength(x.support_for * _factor(elapsed, lifetime), x.support_against)


def decay_both(x: ShaferStrength, elapsed: int, lifetime: int) -> ShaferStrength:
    k = _factor(elapsed, lifetime)
    return ShaferStrength(x.support_for * k, x.support_against * k)
