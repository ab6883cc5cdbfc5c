"""Interface analysis on the line (d = 1, M = 1).

Starting from a half-line of strategy-1 players, the quantity that matters
is the front X (rightmost 1 with only 1s to its left) together with the gap
K to the next 1 beyond it.  The front's displacement rates come straight
from the flip rates of the two sites X and X+1, and the exact drift of
phi^(-X) (phi the golden ratio) decides survival.  This module provides:

* exact front state / jump-rate / drift computation over explicit words,
* stochastic half-line drivers (hitting runs and interval survival) on an
  adaptive window with frozen all-1 left padding, which is lossless since
  sites deep in the prefix have no type-2 neighbor and hence rate 0,
* brute-force pattern machinery: block decomposition, stability checks,
  forbidden-transition verification, and the absorbing-chain search that
  underlies the fixation argument.

Everything sign-critical is computed in exact arithmetic (Fraction rates,
Surd5 drift values).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .events import EventSource
from .payoffs import NeighborhoodSpec, PayoffMatrix, flip_rate
from .quadratic import Surd5, phi_power

__all__ = [
    "EXTERIORS",
    "FrontConverged",
    "HalfLineState",
    "front_state",
    "front_jump_rates",
    "z_drift",
    "drift_certificate",
    "HittingResult",
    "run_hitting",
    "IntervalResult",
    "interval_survival",
    "Block",
    "decompose_blocks",
    "line_flip_rate",
    "is_stable_pattern",
    "pattern_report",
    "single_interval_event_rates",
    "fixation_case",
    "stability_claims",
    "forbidden_transition_check",
    "AbsorbingChainResult",
    "absorbing_chain_verify",
]

_LINE_NS = NeighborhoodSpec(d=1, M=1)

EXTERIORS = ("all-2", "alternating", "two-blocks", "all-1")


def exterior_cell(name: str, k: int) -> int:
    """Strategy of the k-th exterior site (k = 0 sits next to the 1-region)."""
    if name == "all-2":
        return 2
    if name == "alternating":
        return 2 if k % 2 == 0 else 1
    if name == "two-blocks":
        return 2 if k % 3 < 2 else 1
    if name == "all-1":
        return 1
    raise ValueError(f"unknown exterior {name!r}")


class _LineView:
    """Duck-typed configuration over an explicit list of line cells."""

    __slots__ = ("cells", "ns")

    def __init__(self, cells):
        self.cells = cells
        self.ns = _LINE_NS

    def neighbors(self, x: int):
        return (x - 1, x + 1)


def line_flip_rate(word, i: int, p: PayoffMatrix, left=(2, 2), right=(2, 2)) -> Fraction:
    """Exact flip rate of word[i] on a line reading left + word + right.

    The rate depends on cells within distance 2 of i only, so two context
    cells per side always suffice.
    """
    cells = list(left) + list(word) + list(right)
    x = i + len(left)
    if x < 2 or x > len(cells) - 3:
        raise ValueError("site needs two cells of context on each side")
    return flip_rate(x, _LineView(cells), p)


# ---------------------------------------------------------------------------
# Front state, jump rates, drift
# ---------------------------------------------------------------------------


class FrontConverged(Exception):
    """The window holds no type-2 site: the front lies beyond it."""


@dataclass(frozen=True)
class HalfLineState:
    """Front description: all sites <= X are 1, window[k] is site X+1+k."""

    X: int
    gap: Optional[int]
    window: tuple

    @property
    def completed(self) -> bool:
        return False


def front_state(window, X: int = 0) -> HalfLineState:
    """Classify the cells right of the all-1 prefix.

    ``window[k]`` is the strategy at site X+1+k.  Raises FrontConverged on
    an all-1 window (no interface in view), ValueError when the window
    contradicts the definition of X.
    """
    word = tuple(int(c) for c in window)
    if any(c not in (1, 2) for c in word):
        raise ValueError("strategies are 1 or 2")
    if not word or all(c == 1 for c in word):
        raise FrontConverged(X)
    if word[0] != 2:
        raise ValueError("site X+1 must be type 2 by definition of the front")
    gap: Optional[int] = None
    for j, c in enumerate(word):
        if c == 1:
            gap = j + 1
            break
    return HalfLineState(X=X, gap=gap, window=word)


def front_jump_rates(state: HalfLineState, p: PayoffMatrix) -> dict:
    """Displacement rates of X, derived from flip_rate on the two live sites.

    Keys are signed displacements.  The right jump lands past the run of 1s
    that starts at X+2; when that run reaches the end of the window the
    landing assumes a 2 just beyond, which is the most favorable completion
    for upward drift (drift certificates stay valid for every extension).
    A window with no 1 in view gets the far-gap rates unchanged (gap acts
    as +infinity).
    """
    w = state.window
    if len(w) < 3:
        raise ValueError("need at least 3 window cells to determine rates")
    # site X: context (1, 1, 1, w0, w1)
    rate_left = flip_rate(2, _LineView([1, 1, 1, w[0], w[1]]), p)
    # site X+1: context (1, 1, w0, w1, w2)
    rate_right = flip_rate(2, _LineView([1, 1, w[0], w[1], w[2]]), p)
    if w[1] == 2:
        delta = 1
    else:
        run = 0
        for c in w[1:]:
            if c != 1:
                break
            run += 1
        delta = 1 + run
    rates: dict = {}
    if delta == -1:
        raise AssertionError("unreachable")
    rates[delta] = rates.get(delta, Fraction(0)) + rate_right
    rates[-1] = rates.get(-1, Fraction(0)) + rate_left
    return rates


def z_drift(window, p: PayoffMatrix, x0: int = 0) -> Surd5:
    """Exact generator value of Z = phi^(-X) at the given front window.

    Nonpositive for every window under takeover-favorable payoffs; the
    worst case is the gap-2 state where the value is exactly zero when
    a11 < a21.
    """
    state = front_state(window, X=x0)
    z = phi_power(-x0)
    total = Surd5(0)
    for delta, rate in front_jump_rates(state, p).items():
        if rate == 0:
            continue
        total = total + (phi_power(-(x0 + delta)) - z) * rate
    return total


def enumerate_front_windows(width: int):
    """All front windows of the given width (first cell pinned to 2)."""
    if width < 3:
        raise ValueError("width must be at least 3")
    for tail in itertools.product((1, 2), repeat=width - 1):
        yield (2,) + tail


def drift_certificate(p: PayoffMatrix, width: int = 9) -> dict:
    """Exhaustive drift-sign check over all front windows up to ``width``.

    Windows shorter than 3 cells cannot pin their own rates, so the
    enumeration runs over widths 3..width; conservative landings (see
    front_jump_rates) make each verdict valid for every longer extension.
    """
    max_drift = None
    zero_windows = []
    count = 0
    for w in range(3, width + 1):
        for window in enumerate_front_windows(w):
            d = z_drift(window, p)
            count += 1
            if max_drift is None or d > max_drift:
                max_drift = d
            if d == Surd5(0):
                zero_windows.append(window)
    return {
        "windows": count,
        "max_drift": max_drift,
        "all_nonpositive": max_drift <= Surd5(0),
        "zero_windows": tuple(zero_windows),
        "zero_only_gap2": all(
            front_state(z).gap == 2 for z in zero_windows
        ),
    }


# ---------------------------------------------------------------------------
# Stochastic half-line drivers
# ---------------------------------------------------------------------------


def _scaled_matrix(p: PayoffMatrix) -> np.ndarray:
    a11, a12, a21, a22 = _kernels.scaled_entries(p, _LINE_NS.size)
    return np.array([[a11, a12], [a21, a22]], dtype=np.int64)


@dataclass(frozen=True)
class HittingResult:
    outcome: str  # reached-n-first | hit-minus-one-first
    t: float
    events: int
    flips: int
    level: int
    exterior: str
    seed: int


@dataclass(frozen=True)
class IntervalResult:
    outcome: str  # intact-escape | broken
    t: float
    events: int
    flips: int
    m: int
    level: int
    exterior: str
    seed: int


_GROW_CHUNK = 128


class _Window:
    """Mutable 1D window with frozen margins and adaptive growth."""

    def __init__(self, cells: np.ndarray, lo: int, exterior: str, anchor_right: int,
                 anchor_left: Optional[int] = None):
        self.cells = cells
        self.lo = lo  # lattice position of cells[0]
        self.exterior = exterior
        # exterior pattern index 0 starts just beyond each anchor
        self.anchor_right = anchor_right
        self.anchor_left = anchor_left

    @property
    def size(self) -> int:
        return int(self.cells.shape[0])

    def idx(self, pos: int) -> int:
        return pos - self.lo

    def grow_right(self, n: int = _GROW_CHUNK) -> None:
        hi = self.lo + self.size - 1
        ext = [exterior_cell(self.exterior, (hi + 1 + j) - self.anchor_right - 1)
               for j in range(n)]
        self.cells = np.concatenate([self.cells, np.array(ext, dtype=np.int8)])

    def grow_left(self, n: int = _GROW_CHUNK) -> int:
        """Prepend n exterior cells; returns the index shift."""
        if self.anchor_left is None:
            raise RuntimeError("window has no left exterior")
        ext = [exterior_cell(self.exterior, self.anchor_left - (self.lo - n + j) - 1)
               for j in range(n)]
        self.cells = np.concatenate([np.array(ext, dtype=np.int8), self.cells])
        self.lo -= n
        return n


def _rescan_front(cells: np.ndarray, X: int) -> int:
    while X + 1 < cells.shape[0] and cells[X + 1] == 1:
        X += 1
    return X


def _rescan_rear(cells: np.ndarray, Lf: int) -> int:
    while Lf - 1 >= 0 and cells[Lf - 1] == 1:
        Lf -= 1
    return Lf


def run_hitting(p: PayoffMatrix, level: int, seed: int, exterior: str = "all-2",
                margin: int = 240, x0: int = 0,
                max_events: int = 50_000_000) -> HittingResult:
    """Half-line run from an all-1 prefix ending at x0: does the front reach
    ``level`` before dropping to x0 - 1?

    The window holds ``margin`` exterior sites beyond the level so that the
    suppressed dynamics at the frozen right margin stay causally irrelevant
    on the run's time scale; the window still grows on demand.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    if x0 < 0:
        raise ValueError("the prefix end x0 must be >= 0")
    if exterior not in EXTERIORS:
        raise ValueError(f"exterior must be one of {EXTERIORS}")
    # level and the -1 floor are absolute positions; x0 only pre-extends
    # the all-1 prefix beyond the origin
    lo = -10
    hi = max(x0, level) + margin
    cells = np.array(
        [1 if pos <= x0 else exterior_cell(exterior, pos - x0 - 1)
         for pos in range(lo, hi + 1)],
        dtype=np.int8,
    )
    win = _Window(cells, lo, exterior, anchor_right=x0)
    A = _scaled_matrix(p)
    X = win.idx(x0)
    n_right = win.idx(level)
    x_floor = win.idx(0)
    # exteriors whose first site is a 1 extend the prefix past x0
    X = _rescan_front(win.cells, X)
    if X >= n_right:
        return HittingResult(outcome="reached-n-first", t=0.0, events=0,
                             flips=0, level=level, exterior=exterior,
                             seed=seed)
    es = EventSource(seed, win.size)
    t = 0.0
    events = 0
    flips = 0
    while True:
        es.ensure()
        before = es.pos
        status, pos, t, X, _, fl = _kernels.window_kernel(
            win.cells, A, es.sites, es.waits, es.coins, es.pos, t,
            _kernels.HITTING, 2, win.size - 3,
            X, 0, n_right, 0, x_floor, -1, -2)
        es.pos = pos
        events += pos - before
        flips += fl
        if status == _kernels.ESCAPED:
            outcome = "reached-n-first"
            break
        if status == _kernels.HIT_FLOOR:
            outcome = "hit-minus-one-first"
            break
        if status == _kernels.NEED_GROW:
            win.grow_right()
            es.resize(win.size)
            X = _rescan_front(win.cells, X)
            if X >= n_right:
                outcome = "reached-n-first"
                break
            continue
        if events > max_events:
            raise RuntimeError(
                f"hitting run exceeded {max_events} events (seed {seed})")
    return HittingResult(outcome=outcome, t=t, events=events, flips=flips,
                         level=level, exterior=exterior, seed=seed)


def interval_survival(p: PayoffMatrix, m: int, level: int, seed: int,
                      exterior: str = "all-2", margin: int = 240,
                      max_events: int = 50_000_000) -> IntervalResult:
    """Protect a row of 2m+1 strategy-1 players: do both fronts pass
    ``level`` before any site in [-m, m] flips?
    """
    if m < 1 or level <= m:
        raise ValueError("need m >= 1 and level > m")
    if exterior not in EXTERIORS:
        raise ValueError(f"exterior must be one of {EXTERIORS}")
    lo = -(level + margin)
    hi = level + margin

    def initial(pos: int) -> int:
        if -m <= pos <= m:
            return 1
        if pos > m:
            return exterior_cell(exterior, pos - m - 1)
        return exterior_cell(exterior, -m - 1 - pos)

    cells = np.array([initial(pos) for pos in range(lo, hi + 1)], dtype=np.int8)
    win = _Window(cells, lo, exterior, anchor_right=m, anchor_left=-m)
    A = _scaled_matrix(p)
    X = win.idx(m)
    Lf = win.idx(-m)
    m_lo, m_hi = win.idx(-m), win.idx(m)
    n_right, n_left = win.idx(level), win.idx(-level)
    X = _rescan_front(win.cells, X)
    Lf = _rescan_rear(win.cells, Lf)
    if X >= n_right and Lf <= n_left:
        return IntervalResult(outcome="intact-escape", t=0.0, events=0,
                              flips=0, m=m, level=level, exterior=exterior,
                              seed=seed)
    es = EventSource(seed, win.size)
    t = 0.0
    events = 0
    flips = 0
    outcome = None
    while outcome is None:
        es.ensure()
        before = es.pos
        status, pos, t, X, Lf, fl = _kernels.window_kernel(
            win.cells, A, es.sites, es.waits, es.coins, es.pos, t,
            _kernels.INTERVAL, 2, win.size - 3,
            X, Lf, n_right, n_left, 0, m_lo, m_hi)
        es.pos = pos
        events += pos - before
        flips += fl
        if status == _kernels.BROKEN:
            outcome = "broken"
        elif status == _kernels.INTACT:
            outcome = "intact-escape"
        elif status == _kernels.NEED_GROW:
            # mirror the kernel's trigger conditions exactly
            if X + 6 >= win.size - 3:
                win.grow_right()
            if Lf - 6 <= 2:
                shift = win.grow_left()
                X += shift
                Lf += shift
                m_lo += shift
                m_hi += shift
                n_right += shift
                n_left += shift
            es.resize(win.size)
            X = _rescan_front(win.cells, X)
            Lf = _rescan_rear(win.cells, Lf)
            if X >= n_right and Lf <= n_left:
                outcome = "intact-escape"
        elif events > max_events:
            raise RuntimeError(
                f"interval run exceeded {max_events} events (seed {seed})")
    return IntervalResult(outcome=outcome, t=t, events=events, flips=flips,
                          m=m, level=level, exterior=exterior, seed=seed)


# ---------------------------------------------------------------------------
# Patterns and blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    value: int
    start: int
    length: int


def decompose_blocks(cells) -> tuple:
    """Maximal runs of equal strategy, in order; inverts to the input."""
    word = [int(c) for c in cells]
    if not word:
        return ()
    out = []
    start = 0
    for i in range(1, len(word) + 1):
        if i == len(word) or word[i] != word[start]:
            out.append(Block(value=word[start], start=start, length=i - start))
            start = i
    return tuple(out)


def is_stable_pattern(word, p: PayoffMatrix, left=(2, 2), right=(2, 2)) -> bool:
    """True when every site of the word has flip rate 0 in the fixed context."""
    return all(
        line_flip_rate(word, i, p, left, right) == 0 for i in range(len(word))
    )


def _flip(word: tuple, i: int) -> tuple:
    return word[:i] + (3 - word[i],) + word[i + 1:]


def pattern_report(word, p: PayoffMatrix, left=(2, 2), right=(2, 2),
                   max_states: int = 1 << 18) -> dict:
    """JSON-ready stability report; includes a flip path to a stable pattern
    when one is reachable (breadth-first over positive-rate flips)."""
    word = tuple(int(c) for c in word)
    rates = [line_flip_rate(word, i, p, left, right) for i in range(len(word))]
    stable = all(r == 0 for r in rates)
    witness = None
    if not stable:
        parent = {word: None}
        queue = [word]
        qi = 0
        while qi < len(queue) and len(parent) <= max_states:
            cur = queue[qi]
            qi += 1
            if all(line_flip_rate(cur, i, p, left, right) == 0
                   for i in range(len(cur))):
                path = []
                node = cur
                while node is not None:
                    path.append(list(node))
                    node = parent[node]
                witness = path[::-1]
                break
            for i in range(len(cur)):
                if line_flip_rate(cur, i, p, left, right) > 0:
                    nxt = _flip(cur, i)
                    if nxt not in parent:
                        parent[nxt] = cur
                        queue.append(nxt)
    return {
        "pattern": list(word),
        "context": {"left": list(left), "right": list(right)},
        "payoffs": p.as_text(),
        "stable": stable,
        "flip_rates": [str(r) for r in rates],
        "witness_path": witness,
    }


def single_interval_event_rates(p: PayoffMatrix, length: int) -> dict:
    """Exact grow/shrink rates of an isolated 1-interval in all-2 background."""
    if length < 1:
        raise ValueError("length must be >= 1")
    word = (2, 2) + (1,) * length + (2, 2)
    grow_l = line_flip_rate(word, 1, p)
    shrink_l = line_flip_rate(word, 2, p)
    grow_r = line_flip_rate(word, length + 2, p)
    shrink_r = line_flip_rate(word, length + 1, p)
    interior = [line_flip_rate(word, i, p) for i in range(3, length + 1)]
    return {
        "grow_left": grow_l,
        "grow_right": grow_r,
        "shrink_left": shrink_l,
        "shrink_right": shrink_r,
        "interior_rates": interior,
    }


# ---------------------------------------------------------------------------
# Fixation sub-regions: routing, proof-pattern claims, transition checks
# ---------------------------------------------------------------------------


def _sub_region_clauses(p: PayoffMatrix) -> tuple:
    c_both = 2 * p.a11 > p.a21 + p.a22 and 2 * p.a22 > p.a11 + p.a12
    c_low1 = 2 * p.a11 > p.a21 + p.a22 > p.a11 + p.a12
    c_low2 = 2 * p.a22 > p.a11 + p.a12 > p.a21 + p.a22
    return c_both, c_low1, c_low2


def fixation_case(p: PayoffMatrix) -> Optional[int]:
    """Which fixation sub-argument applies: 1, 2, 3, or None.

    The first sub-region (both diagonal sums dominant) takes precedence:
    payoffs satisfying it alongside a chain inequality still route through
    the first argument.
    """
    c_both, c_low1, c_low2 = _sub_region_clauses(p)
    if c_both:
        return 1
    if c_low1:
        return 2
    if c_low2:
        return 3
    return None


def _max_rate_over_completions(core, i, p, unknown_left: int, unknown_right: int):
    """Max flip rate of core[i] over all {1,2} fillings of the unknown context."""
    best = Fraction(0)
    for pre in itertools.product((1, 2), repeat=unknown_left):
        for post in itertools.product((1, 2), repeat=unknown_right):
            word = tuple(pre) + tuple(core) + tuple(post)
            r = line_flip_rate(word, i + unknown_left, p,
                               left=(1, 1), right=(1, 1))
            # context cells beyond the unknowns are never within range 2 of
            # the flipping site, so the fixed (1,1) padding is arbitrary
            if r > best:
                best = r
    return best


def forbidden_transition_check(p: PayoffMatrix) -> dict:
    """Verify the local transitions the fixation argument forbids.

    Under the chain sub-region (case 2) the three windows that could create
    an isolated (1,2,1) must all have rate zero; under the dominant-diagonal
    sub-region (case 1) and case 2 alike the protected-core windows must
    hold their interior 1s.  Case 3 is case 2 with labels swapped.  Outside
    these regions nothing is asserted.
    """
    case = fixation_case(p)
    q = p.swapped() if case == 3 else p
    report: dict = {"case": case, "payoffs": p.as_text()}

    # creating transitions for an isolated (1,2,1): the flipping site is
    # marked by its index in the core word
    creators = (
        ((1, 1, 1), 1),
        ((2, 2, 2, 1), 1),
        ((1, 2, 2, 1), 1),
    )
    if case in (2, 3):
        rows = []
        ok = True
        for core, i in creators:
            need_l = max(0, 2 - i)
            need_r = max(0, 2 - (len(core) - 1 - i))
            r = _max_rate_over_completions(core, i, q, need_l, need_r)
            rows.append({"window": list(core), "site": i, "max_rate": str(r)})
            ok = ok and r == 0
        report["claim1"] = {"asserted": True, "ok": ok, "transitions": rows}
    else:
        report["claim1"] = {"asserted": False, "ok": None,
                            "note": "chain sub-region only"}

    # protected core: with the pair left of the core in any reachable state,
    # the leftmost interior 1 of (2,2,1,1,...) never flips
    if case in (1, 2, 3):
        rows = []
        ok = True
        for pair in ((1, 1), (2, 1), (2, 2)):
            word = pair + (1, 1, 1)
            r = line_flip_rate(word, 2, q, left=(1, 1), right=(1, 1))
            rows.append({"boundary": list(pair), "rate": str(r)})
            ok = ok and r == 0
        report["claim2"] = {"asserted": True, "ok": ok, "cores": rows}
    else:
        report["claim2"] = {"asserted": False, "ok": None,
                            "note": "fixation region only"}
    return report


def stability_claims(p: PayoffMatrix) -> list:
    """The proof's pattern-level facts, each re-verified by exact rates.

    Every entry carries the word, context, site, the claim kind
    (zero-rate, positive-rate, or equal-rates dichotomy), the computed
    value, and whether it matches.  Claims are stated in the orientation
    the argument normalizes to, so payoffs are label-swapped as needed.
    """
    case = fixation_case(p)
    claims: list = []
    if case is None:
        return claims

    def rate(word, i, q, left=(2, 2), right=(2, 2)):
        return line_flip_rate(word, i, q, left, right)

    def add(name, q, word, i, kind, left=(2, 2), right=(2, 2)):
        r = rate(word, i, q, left, right)
        if kind == "zero":
            ok = r == 0
        elif kind == "positive":
            ok = r > 0
        else:
            raise ValueError(kind)
        claims.append({
            "case": case, "name": name, "word": list(word), "site": i,
            "kind": kind, "rate": str(r), "ok": ok,
        })

    if case == 1:
        # normalize so the type-2 side has the (weakly) larger adjacent sum
        q = p if p.a21 + p.a22 >= p.a11 + p.a12 else p.swapped()
        one = (1, 1)
        add("2-run interior holds", q, (2, 2, 2), 1, "zero", one, one)
        add("2-run edge holds", q, (2, 2, 2), 0, "zero", one, one)
        add("2-run edge holds (len 4)", q, (2, 2, 2, 2), 0, "zero", one, one)
        add("isolated 2 dies", q, (2,), 0, "positive", one, one)
        add("isolated 1 dies", q, (1,), 0, "positive")
        add("1-pair inner site moves", q, (2, 2, 1, 1, 2, 2), 2, "positive")
        add("1-pair inner site moves (right)", q, (2, 2, 1, 1, 2, 2), 3,
            "positive")
        add("1-run of 3 edge holds", q, (2, 2, 1, 1, 1), 2, "zero")
        # sandwiched 2-pair: both sites carry the same rate; zero means the
        # pattern is stable, positive means the pair is removable
        r1 = rate((1, 1, 1, 2, 2, 1, 1, 1), 3, q)
        r2 = rate((1, 1, 1, 2, 2, 1, 1, 1), 4, q)
        claims.append({
            "case": case, "name": "sandwiched 2-pair dichotomy",
            "word": [1, 1, 1, 2, 2, 1, 1, 1], "site": 3,
            "kind": "equal-rates", "rate": str(r1), "ok": r1 == r2,
        })
    else:
        q = p if case == 2 else p.swapped()
        add("2-run of 3 shrinks", q, (1, 1, 2, 2, 2), 2, "positive",
            (1, 1), (2, 2))
        add("1-pair shrinks", q, (2, 2, 1, 1, 2, 2), 2, "positive")
        add("1-run of 3 edge holds", q, (2, 2, 1, 1, 1), 2, "zero")
        add("2-pair holds in 1-context", q, (1, 1, 2, 2, 1, 1), 2, "zero",
            (1, 1), (1, 1))
        add("2-pair holds in 1-context (right)", q, (1, 1, 2, 2, 1, 1), 3,
            "zero", (1, 1), (1, 1))
        add("isolated 2 dies", q, (2,), 0, "positive", (1, 1), (1, 1))
    return claims


# ---------------------------------------------------------------------------
# Absorbing-chain verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbsorbingChainResult:
    ok: bool
    length: int
    n_states: int
    n_stable: int
    counterexample: Optional[tuple]
    next_flip: dict  # word -> (site, successor word) toward a stable word

    def witness_path(self, word: tuple) -> list:
        """Positive-rate flip sequence from ``word`` to a stable pattern."""
        word = tuple(word)
        path = [word]
        while word in self.next_flip:
            word = self.next_flip[word][1]
            path.append(word)
        return path


def absorbing_chain_verify(length: int, p: PayoffMatrix) -> AbsorbingChainResult:
    """Can every pattern of the given length, held between fixed 2-pairs,
    reach a stable pattern through positive-rate flips?

    Works backward from the stable set: a pattern is good when one flip
    with positive rate leads to a good pattern.  Rates are memoized on the
    5-cell window around the flipping site, so the search costs
    O(2^length * length) lookups.
    """
    if not 1 <= length <= 20:
        raise ValueError("length must be within 1..20")
    memo: dict = {}

    def site_rate(extended: tuple, i: int) -> Fraction:
        window = extended[i:i + 5]
        r = memo.get(window)
        if r is None:
            r = line_flip_rate(window, 2, p, left=(2, 2), right=(2, 2))
            memo[window] = r
        return r

    def rates(word: tuple):
        extended = (2, 2) + word + (2, 2)
        return [site_rate(extended, i) for i in range(length)]

    words = list(itertools.product((1, 2), repeat=length))
    good: dict = {}
    queue = []
    for w in words:
        if all(r == 0 for r in rates(w)):
            good[w] = None
            queue.append(w)
    n_stable = len(queue)
    qi = 0
    next_flip: dict = {}
    while qi < len(queue):
        v = queue[qi]
        qi += 1
        for i in range(length):
            u = _flip(v, i)
            if u in good:
                continue
            # the edge u -> v exists when flipping u[i] has positive rate in u
            if site_rate((2, 2) + u + (2, 2), i) > 0:
                good[u] = v
                next_flip[u] = (i, v)
                queue.append(u)
    counter = None
    if len(good) != len(words):
        for w in words:
            if w not in good:
                counter = w
                break
    return AbsorbingChainResult(
        ok=counter is None,
        length=length,
        n_states=len(words),
        n_stable=n_stable,
        counterexample=counter,
        next_flip=next_flip,
    )
