"""Exact payoff calculus for a two-strategy imitation game on the torus.

Players occupy the sites of a d-dimensional periodic lattice and hold
strategy 1 or 2.  A 2x2 matrix assigns the payoff a_ij to a type-i player
per interaction with a type-j neighbor, and each player's payoff is the
matrix entry averaged over its interaction neighborhood.  At rate one a
player looks at the best payoff achieved by a type-1 neighbor and by a
type-2 neighbor and adopts the strictly fitter strategy, tossing a fair
coin on an exact tie.

Everything in this module is computed with `fractions.Fraction`, so payoff
comparisons and the resulting flip rates are exact.  Tie detection feeds
the coin toss, which makes exactness load bearing rather than cosmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "PayoffMatrix",
    "DerivedParams",
    "NeighborhoodSpec",
    "GameClass",
    "RegionFlags",
    "parse_payoffs",
    "derive_params",
    "strategy_nature",
    "classify_game",
    "local_payoff",
    "fittest_payoffs",
    "decide_strategy",
    "flip_rate",
    "region_predicates",
]

RationalLike = int | str | Fraction


def _frac(x: RationalLike) -> Fraction:
    """Coerce ints, Fractions, and 'p/q' strings to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("payoff entries must be rational numbers, not bool")
    if isinstance(x, float):
        raise TypeError(
            "payoff entries must be exact rationals; pass an int, Fraction, "
            "or 'p/q' string instead of a float"
        )
    return Fraction(x)


@dataclass(frozen=True)
class PayoffMatrix:
    """Immutable 2x2 payoff matrix with exact rational entries.

    Entry ``a(i, j)`` is the payoff to a type-i player interacting with a
    type-j player.
    """

    a11: Fraction
    a12: Fraction
    a21: Fraction
    a22: Fraction

    def __init__(self, a11: RationalLike, a12: RationalLike,
                 a21: RationalLike, a22: RationalLike) -> None:
        object.__setattr__(self, "a11", _frac(a11))
        object.__setattr__(self, "a12", _frac(a12))
        object.__setattr__(self, "a21", _frac(a21))
        object.__setattr__(self, "a22", _frac(a22))

    def a(self, i: int, j: int) -> Fraction:
        if i not in (1, 2) or j not in (1, 2):
            raise ValueError("strategy indices must be 1 or 2")
        return (self.a11, self.a12, self.a21, self.a22)[2 * (i - 1) + (j - 1)]

    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a11, self.a12, self.a21, self.a22)

    def swapped(self) -> "PayoffMatrix":
        """The same game with the strategy labels 1 and 2 exchanged."""
        return PayoffMatrix(self.a22, self.a21, self.a12, self.a11)

    def shifted(self, c: RationalLike) -> "PayoffMatrix":
        c = _frac(c)
        return PayoffMatrix(*(e + c for e in self.entries()))

    def scaled(self, k: RationalLike) -> "PayoffMatrix":
        k = _frac(k)
        if k <= 0:
            raise ValueError("scale factor must be positive")
        return PayoffMatrix(*(e * k for e in self.entries()))

    def as_text(self) -> str:
        return " ".join(str(e) for e in self.entries())

    def __str__(self) -> str:  # pragma: no cover - convenience only
        return f"[[{self.a11}, {self.a12}], [{self.a21}, {self.a22}]]"


def parse_payoffs(text: str) -> PayoffMatrix:
    """Parse ``"a11 a12 a21 a22"`` where entries are ints or p/q fractions."""
    parts = text.split()
    if len(parts) != 4:
        raise ValueError(f"expected 4 payoff entries, got {len(parts)}: {text!r}")
    return PayoffMatrix(*parts)


@dataclass(frozen=True)
class DerivedParams:
    """Self-interaction advantages a1 = a11 - a21 and a2 = a22 - a12."""

    a1: Fraction
    a2: Fraction


def derive_params(p: PayoffMatrix) -> DerivedParams:
    return DerivedParams(a1=p.a11 - p.a21, a2=p.a22 - p.a12)


def strategy_nature(p: PayoffMatrix, i: int) -> str:
    """'altruistic', 'selfish', or 'neutral' for strategy i.

    A strategy is altruistic when its presence raises the payoff of the
    opposite type above its own self-interaction payoff (a_i < 0) and
    selfish when the reverse strict inequality holds (a_i > 0).
    """
    dp = derive_params(p)
    a = dp.a1 if i == 1 else dp.a2 if i == 2 else None
    if a is None:
        raise ValueError("strategy index must be 1 or 2")
    if a < 0:
        return "altruistic"
    if a > 0:
        return "selfish"
    return "neutral"


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Interaction range: all sites within Chebyshev distance M, site excluded."""

    d: int
    M: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("dimension d must be >= 1")
        if self.M < 1:
            raise ValueError("range M must be >= 1")

    @property
    def size(self) -> int:
        """Number of neighbors N = (2M+1)^d - 1."""
        return (2 * self.M + 1) ** self.d - 1


# ---------------------------------------------------------------------------
# Game classification
# ---------------------------------------------------------------------------

#: The five payoff comparisons whose sign pattern carves the parameter
#: space into twelve generic regions (plus boundaries).
_COMPARISON_LINES = ("a11=a12", "a11=a21", "a22=a12", "a22=a21", "a11=a22")

# Strict payoff orderings of (a11, a12, a21, a22) that carry a customary
# name, listed under the a12 < a21 convention.  Each key is the tuple of
# entries sorted from largest to smallest, identified by label.
_NAMED_ORDERINGS = {
    ("a21", "a11", "a22", "a12"): "prisoners-dilemma",
    ("a21", "a11", "a12", "a22"): "hawk-dove",
    ("a21", "a12", "a11", "a22"): "leader",
    ("a21", "a12", "a22", "a11"): "battle-of-the-sexes",
    ("a11", "a21", "a22", "a12"): "stag-hunt",
    ("a11", "a21", "a12", "a22"): "harmony",
    ("a21", "a22", "a11", "a12"): "deadlock",
}


@dataclass(frozen=True)
class GameClass:
    """Classification of a payoff matrix.

    ``region`` is the sign pattern (-1, 0, +1) of the five comparisons
    a11-a12, a11-a21, a22-a12, a22-a21, a11-a22 in that order.  ``name``
    is the customary name of the game when the ordering is strict and
    recognizable after normalizing labels so that a12 <= a21; it is None
    otherwise.  ``boundary`` is set when the matrix lies on at least one
    comparison line.
    """

    region: tuple[int, int, int, int, int]
    natures: tuple[str, str]
    name: str | None
    boundary: bool
    boundary_lines: tuple[str, ...]
    labels_swapped: bool


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def classify_game(p: PayoffMatrix) -> GameClass:
    diffs = (p.a11 - p.a12, p.a11 - p.a21, p.a22 - p.a12,
             p.a22 - p.a21, p.a11 - p.a22)
    region = tuple(_sign(x) for x in diffs)
    lines = tuple(name for name, s in zip(_COMPARISON_LINES, region) if s == 0)

    swapped = p.a12 > p.a21
    q = p.swapped() if swapped else p
    name = None
    labeled = sorted(
        zip(("a11", "a12", "a21", "a22"), q.entries()),
        key=lambda kv: kv[1],
        reverse=True,
    )
    values = [kv[1] for kv in labeled]
    if len(set(values)) == 4:
        name = _NAMED_ORDERINGS.get(tuple(kv[0] for kv in labeled))

    return GameClass(
        region=region,
        natures=(strategy_nature(p, 1), strategy_nature(p, 2)),
        name=name,
        boundary=bool(lines),
        boundary_lines=lines,
        labels_swapped=swapped,
    )


# ---------------------------------------------------------------------------
# Payoffs and flip rates
# ---------------------------------------------------------------------------

def local_payoff(strategy: int, n1: int, n2: int, p: PayoffMatrix,
                 ns: NeighborhoodSpec) -> Fraction:
    """Payoff of a type-``strategy`` player seeing n1 type-1 and n2 type-2 neighbors.

    The payoff is a_i1 * n1/N + a_i2 * n2/N with N the neighborhood size;
    the neighbor counts must account for every neighbor.
    """
    N = ns.size
    if n1 < 0 or n2 < 0 or n1 + n2 != N:
        raise ValueError(f"neighbor counts ({n1}, {n2}) must be nonnegative and sum to N={N}")
    if strategy == 1:
        return Fraction(p.a11 * n1 + p.a12 * n2, N)
    if strategy == 2:
        return Fraction(p.a21 * n1 + p.a22 * n2, N)
    raise ValueError("strategy must be 1 or 2")


def fittest_payoffs(x: int, cfg, p: PayoffMatrix) -> tuple[Fraction | None, Fraction | None]:
    """Best payoff among type-1 and among type-2 neighbors of site x.

    Returns (best1, best2) where a missing type is reported as None, a
    distinguished value below every rational.  ``cfg`` provides cells,
    a neighborhood spec, and neighbor indexing.
    """
    ns: NeighborhoodSpec = cfg.ns
    cells = cfg.cells
    best1: Fraction | None = None
    best2: Fraction | None = None
    for z in cfg.neighbors(x):
        n1 = 0
        for w in cfg.neighbors(z):
            if cells[w] == 1:
                n1 += 1
        pay = local_payoff(int(cells[z]), n1, ns.size - n1, p, ns)
        if cells[z] == 1:
            if best1 is None or pay > best1:
                best1 = pay
        else:
            if best2 is None or pay > best2:
                best2 = pay
    return best1, best2


def decide_strategy(best1: Fraction | None, best2: Fraction | None, coin: int) -> int:
    """Strategy adopted by the updating player.

    The player takes the side with the strictly larger best payoff; a side
    with no representative among the neighbors loses to any represented
    side.  On an exact tie the fair coin decides, with coin=1 meaning
    strategy 1.
    """
    if best1 is None and best2 is None:
        raise ValueError("a player always has at least one neighbor")
    if best2 is None:
        return 1
    if best1 is None:
        return 2
    if best1 > best2:
        return 1
    if best2 > best1:
        return 2
    return 1 if coin else 2


def flip_rate(x: int, cfg, p: PayoffMatrix) -> Fraction:
    """Exact rate at which the player at x abandons its current strategy.

    The rate is 1 when the opposite side holds the strictly better best
    payoff, 1/2 on an exact tie, and 0 otherwise.
    """
    best1, best2 = fittest_payoffs(x, cfg, p)
    me = int(cfg.cells[x])
    mine, theirs = (best1, best2) if me == 1 else (best2, best1)
    if theirs is None:
        return Fraction(0)
    if mine is None:
        return Fraction(1)
    if theirs > mine:
        return Fraction(1)
    if theirs == mine:
        return Fraction(1, 2)
    return Fraction(0)


# ---------------------------------------------------------------------------
# Parameter-region predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionFlags:
    """Exact membership in the parameter regions used by the experiments.

    All flags are strict-inequality memberships:

    - ``pure_growth``: min(a11, a12) > max(a21, a22); every type-1 player
      beats every type-2 player, so type 1 can never lose a site.
    - ``weak_1``: a11 > max(a21, a22); a fully supported type-1 site
      outperforms every type-2 player, so such centers persist.
    - ``strong_1``: (N-1) a11 + min(a11, a12) > N max(a21, a22); type-1
      centers not only persist but convert adjacent neighborhoods.
    - ``gold_1`` / ``gold_2``: the one-dimensional front for the named
      strategy advances with the golden-ratio supermartingale guarantee.
    - ``fixation``: single-site range in one dimension locks into a frozen
      mix of blocks from any dense-enough start.
    - ``open_region``: parameters where single intervals fluctuate as an
      unbiased walk and no blockwise argument applies.
    - ``symmetric_coexistence``: a11 = a22 < a12 = a21, the symmetric
      cross-interaction case used for long-run coexistence runs.
    """

    pure_growth: bool
    weak_1: bool
    weak_2: bool
    strong_1: bool
    strong_2: bool
    gold_1: bool
    gold_2: bool
    fixation: bool
    open_region: bool
    symmetric_coexistence: bool


def region_predicates(p: PayoffMatrix, ns: NeighborhoodSpec) -> RegionFlags:
    a11, a12, a21, a22 = p.entries()
    N = ns.size
    q = p.swapped()

    def gold(m: PayoffMatrix) -> bool:
        return (m.a11 + m.a12 > m.a22 + max(m.a21, m.a22)
                and 2 * m.a11 > m.a21 + m.a22)

    fixation = (
        (2 * a11 > a21 + a22 and 2 * a22 > a11 + a12)
        or (2 * a11 > a21 + a22 > a11 + a12)
        or (2 * a22 > a11 + a12 > a21 + a22)
    )
    return RegionFlags(
        pure_growth=min(a11, a12) > max(a21, a22),
        weak_1=a11 > max(a21, a22),
        weak_2=a22 > max(a11, a12),
        strong_1=(N - 1) * a11 + min(a11, a12) > N * max(a21, a22),
        strong_2=(N - 1) * a22 + min(a22, a21) > N * max(a12, a11),
        gold_1=gold(p),
        gold_2=gold(q),
        fixation=fixation,
        open_region=(2 * a11 < a21 + a22
                     and a11 + a12 > a22 + max(a21, a22)),
        symmetric_coexistence=(a11 == a22 and a12 == a21 and a11 < a12),
    )
