"""Well-mixed two-strategy limit: piecewise-exponential flows driven by payoff gaps.

In a large well-mixed population the density u1 of strategy-1 players moves
toward whichever strategy currently earns more.  With the payoff gaps
a1 = a11 - a21 and a2 = a22 - a12, strategy 1 earns more exactly when

    flux(u1) = a1*u1 - a2*(1 - u1) > 0,

and the density then rises at rate proportional to the mass available to
convert (u2 = 1 - u1).  When the flux is negative the density falls at rate
proportional to u1.  On the flux's zero line the flow stops.  Everything here
is exact: regime decisions use Fraction arithmetic on the exact binary value
of the float inputs, and trajectories are closed-form exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .payoffs import DerivedParams

__all__ = [
    "FixedPoints",
    "MeanFieldOutcome",
    "drift",
    "fixed_points",
    "classify_outcome",
    "solve",
    "solve_series",
]


def _flux(dp: DerivedParams, u1: Fraction) -> Fraction:
    return dp.a1 * u1 - dp.a2 * (1 - u1)


def drift(dp: DerivedParams, u1: float, displayed_orientation: bool = False) -> float:
    """du1/dt at density u1.  Exact sign logic, float result."""
    if displayed_orientation:
        return drift(DerivedParams(-dp.a1, -dp.a2), u1)
    u = Fraction(u1)
    s = _flux(dp, u)
    if s > 0:
        return float(1 - u)
    if s < 0:
        return float(-u)
    return 0.0


@dataclass(frozen=True)
class FixedPoints:
    """Rest points of the flow on [0, 1]."""

    endpoints: tuple
    interior: Optional[Fraction]
    interior_stable: Optional[bool]


def fixed_points(dp: DerivedParams, displayed_orientation: bool = False) -> FixedPoints:
    if displayed_orientation:
        return fixed_points(DerivedParams(-dp.a1, -dp.a2))
    denom = dp.a1 + dp.a2
    if denom == 0:
        # constant flux: no isolated interior rest point
        return FixedPoints((Fraction(0), Fraction(1)), None, None)
    e = dp.a2 / denom
    if not (0 < e < 1):
        return FixedPoints((Fraction(0), Fraction(1)), None, None)
    # flux slope is a1 + a2; negative slope means flow converges to e
    return FixedPoints((Fraction(0), Fraction(1)), e, denom < 0)


def _limit(dp: DerivedParams, u0: Fraction) -> Fraction:
    """Terminal value of the flow started at u0 (exact)."""
    s = _flux(dp, u0)
    if s == 0:
        return u0
    denom = dp.a1 + dp.a2
    e = dp.a2 / denom if denom != 0 else None
    if s > 0:
        if e is not None and u0 < e < 1:
            return e
        return Fraction(1)
    if e is not None and 0 < e < u0:
        return e
    return Fraction(0)


@dataclass(frozen=True)
class MeanFieldOutcome:
    kind: str  # strategy-1-wins | strategy-2-wins | coexists-at-e* | stays-at-u0
    limit: Fraction
    boundary: bool


def classify_outcome(
    dp: DerivedParams, u1_0: float, displayed_orientation: bool = False
) -> MeanFieldOutcome:
    """Qualitative fate of the flow from u1_0 in (0, 1)."""
    if displayed_orientation:
        return classify_outcome(DerivedParams(-dp.a1, -dp.a2), u1_0)
    u0 = Fraction(u1_0)
    if not (0 < u0 < 1):
        raise ValueError("u1_0 must lie strictly between 0 and 1")
    lim = _limit(dp, u0)
    boundary = dp.a1 == 0 or dp.a2 == 0
    if lim == 1:
        kind = "strategy-1-wins"
    elif lim == 0:
        kind = "strategy-2-wins"
    else:
        # interior limit: either the flow converged to the attracting rest
        # point, or it started exactly there (flux(u0) == 0).  A negative
        # flux slope a1 + a2 is what makes that rest point attracting.
        if lim != u0 or dp.a1 + dp.a2 < 0:
            kind = "coexists-at-e*"
        else:
            kind = "stays-at-u0"
    return MeanFieldOutcome(kind=kind, limit=lim, boundary=boundary)


def solve(
    dp: DerivedParams,
    u1_0: float,
    t: float,
    displayed_orientation: bool = False,
) -> float:
    """Exact flow value at time t (float in, closed form out)."""
    if displayed_orientation:
        return solve(DerivedParams(-dp.a1, -dp.a2), u1_0, t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    u0 = Fraction(u1_0)
    if not (0 < u0 < 1):
        raise ValueError("u1_0 must lie strictly between 0 and 1")
    if t == 0:
        return float(u0)
    s = _flux(dp, u0)
    if s == 0:
        return float(u0)
    lim = _limit(dp, u0)
    if s > 0:
        # u(t) = 1 - (1 - u0) * exp(-t), clipped at the interior rest point
        if lim < 1:
            t_star = math.log(float((1 - u0) / (1 - lim)))
            if t >= t_star:
                return float(lim)
        return 1.0 - float(1 - u0) * math.exp(-t)
    # s < 0: u(t) = u0 * exp(-t), clipped at the interior rest point
    if lim > 0:
        t_star = math.log(float(u0 / lim))
        if t >= t_star:
            return float(lim)
    return float(u0) * math.exp(-t)


def solve_series(
    dp: DerivedParams,
    u1_0: float,
    t_max: float,
    steps: int,
    displayed_orientation: bool = False,
) -> list:
    """(t, u1) samples of the closed-form flow on [0, t_max]."""
    if steps < 1:
        raise ValueError("steps must be positive")
    return [
        (k * t_max / steps, solve(dp, u1_0, k * t_max / steps, displayed_orientation))
        for k in range(steps + 1)
    ]
