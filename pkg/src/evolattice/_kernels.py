"""Compiled event loops.

Per-site payoffs are compared after clearing denominators: with D the
least common multiple of the payoff denominators and N the neighborhood
size, N*D times a player's payoff is the integer A_i1*n1 + A_i2*n2 where
A_ij = a_ij*D.  Integer comparisons are exact, so tie detection inside
the kernels matches the Fraction arithmetic in `payoffs` bit for bit.

Kernels consume pre-drawn (site, wait, coin) buffers and return when the
buffer runs dry, a stop condition fires, or the next event would land
past the horizon (that event stays in the buffer for the next call).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .payoffs import PayoffMatrix

# Status codes shared by the kernels.
NEED_EVENTS = 0
AT_HORIZON = 1
ABSORBED_ALL1 = 2
ABSORBED_ALL2 = 3
ABSORBED_FROZEN = 4
ESCAPED = 5
HIT_FLOOR = 6
BROKEN = 7
NEED_GROW = 8
INTACT = 9

_INT_LIMIT = 1 << 62


def scaled_entries(p: PayoffMatrix, N: int) -> tuple[int, int, int, int]:
    """Integer payoff entries A_ij = a_ij * lcm(denominators).

    Magnitudes are validated so that A_i1*n1 + A_i2*n2 never overflows a
    signed 64-bit integer for neighbor counts up to N.
    """
    den = math.lcm(*(e.denominator for e in p.entries()))
    ints = tuple(int(e * den) for e in p.entries())
    if max(abs(v) for v in ints) * max(2, N) >= _INT_LIMIT:
        raise ValueError(
            "payoff entries too large for the 64-bit kernel; "
            "rescale the matrix (flip rates are scale invariant)"
        )
    return ints


@njit(cache=True, nogil=True)
def _torus_best(cells, n1, nbr, x, A11, A12, A21, A22, N):
    """Best scaled payoff among type-1 and type-2 neighbors of x.

    Returns (has1, best1, has2, best2).
    """
    has1 = False
    has2 = False
    best1 = np.int64(0)
    best2 = np.int64(0)
    for j in range(N):
        z = nbr[x, j]
        m1 = np.int64(n1[z])
        if cells[z] == 1:
            pay = A11 * m1 + A12 * (N - m1)
            if (not has1) or pay > best1:
                best1 = pay
                has1 = True
        else:
            pay = A21 * m1 + A22 * (N - m1)
            if (not has2) or pay > best2:
                best2 = pay
                has2 = True
    return has1, best1, has2, best2


@njit(cache=True, nogil=True)
def _torus_can_flip(cells, n1, nbr, y, A11, A12, A21, A22, N):
    """Whether the flip rate at y is positive (ties count)."""
    has1, best1, has2, best2 = _torus_best(cells, n1, nbr, y, A11, A12, A21, A22, N)
    if cells[y] == 1:
        return has2 and ((not has1) or best2 >= best1)
    return has1 and ((not has2) or best1 >= best2)


@njit(cache=True, nogil=True)
def torus_kernel(cells, n1, nbr, A11, A12, A21, A22,
                 sites, waits, coins, pos, t, horizon,
                 n_ones, stop_uniform, track_active, ball, active, active_count,
                 log_on, log_t, log_site, log_old, log_new, log_tie):
    n = cells.shape[0]
    N = nbr.shape[1]
    nlog = 0
    nev = sites.shape[0]
    while pos < nev:
        tn = t + waits[pos] / n
        if tn > horizon:
            return AT_HORIZON, pos, t, n_ones, active_count, nlog
        if tn <= t:
            tn = np.nextafter(t, np.inf)
        x = sites[pos]
        coin = coins[pos]
        pos += 1
        t = tn
        me = cells[x]
        has1, best1, has2, best2 = _torus_best(cells, n1, nbr, x,
                                               A11, A12, A21, A22, N)
        tie = has1 and has2 and best1 == best2
        if tie:
            new = 1 if coin == 1 else 2
        elif has1 and ((not has2) or best1 > best2):
            new = 1
        else:
            new = 2
        if new == me:
            continue
        cells[x] = new
        delta = 1 if new == 1 else -1
        for j in range(N):
            n1[nbr[x, j]] += delta
        n_ones += delta
        if log_on:
            log_t[nlog] = t
            log_site[nlog] = x
            log_old[nlog] = me
            log_new[nlog] = new
            log_tie[nlog] = np.uint8(1) if tie else np.uint8(0)
            nlog += 1
        if track_active:
            for j in range(ball.shape[1]):
                y = ball[x, j]
                a = np.uint8(1) if _torus_can_flip(cells, n1, nbr, y,
                                                   A11, A12, A21, A22, N) else np.uint8(0)
                if a != active[y]:
                    active_count += 1 if a == 1 else -1
                    active[y] = a
        if stop_uniform:
            if n_ones == n:
                return ABSORBED_ALL1, pos, t, n_ones, active_count, nlog
            if n_ones == 0:
                return ABSORBED_ALL2, pos, t, n_ones, active_count, nlog
        if track_active and active_count == 0:
            return ABSORBED_FROZEN, pos, t, n_ones, active_count, nlog
    return NEED_EVENTS, pos, t, n_ones, active_count, nlog


# ---------------------------------------------------------------------------
# One-dimensional window kernel (range M = 1) with frozen margins
# ---------------------------------------------------------------------------

HITTING = 0
INTERVAL = 1


@njit(cache=True, nogil=True)
def _line_decide(cells, x, A, coin):
    """Strategy adopted at x on a line; needs cells[x-2..x+2] in range.

    Payoffs are twice the scaled per-neighbor average, an exact integer.
    """
    cl = np.int64(cells[x - 1]) - 1
    cr = np.int64(cells[x + 1]) - 1
    pay_l = A[cl, np.int64(cells[x - 2]) - 1] + A[cl, np.int64(cells[x]) - 1]
    pay_r = A[cr, np.int64(cells[x]) - 1] + A[cr, np.int64(cells[x + 2]) - 1]
    if cells[x - 1] == cells[x + 1]:
        # only one side represented among the neighbors
        best = pay_l if pay_l > pay_r else pay_r
        return cells[x - 1], best, best, True
    if cells[x - 1] == 1:
        return 0, pay_l, pay_r, False
    return 0, pay_r, pay_l, False


@njit(cache=True, nogil=True)
def _line_new_strategy(cells, x, A, coin):
    only, best1, best2, single = _line_decide(cells, x, A, coin)
    if single:
        return only
    if best1 > best2:
        return 1
    if best2 > best1:
        return 2
    return 1 if coin == 1 else 2


@njit(cache=True, nogil=True)
def window_kernel(cells, A, sites, waits, coins, pos, t,
                  mode, active_lo, active_hi,
                  X, Lf, n_right, n_left, x_floor, m_lo, m_hi):
    """Event loop on a 1-d window with frozen margins.

    HITTING mode tracks the front X = (first type-2 position) - 1 of a
    configuration that is all 1 up to X; it stops when X >= n_right
    (ESCAPED) or X < x_floor (HIT_FLOOR).  INTERVAL mode additionally
    tracks the left edge Lf of the type-1 run through the protected block
    [m_lo, m_hi]; any flip inside the block stops with BROKEN, and both
    fronts passing their levels stops with INTACT.  Events at frozen
    sites advance time only.  NEED_GROW asks the caller for a wider
    window before a front reaches the frozen margin.
    """
    W = cells.shape[0]
    nev = sites.shape[0]
    flips = 0
    while pos < nev:
        tn = t + waits[pos] / W
        if tn <= t:
            tn = np.nextafter(t, np.inf)
        x = sites[pos]
        coin = coins[pos]
        pos += 1
        t = tn
        if x < active_lo or x > active_hi:
            continue
        me = cells[x]
        new = _line_new_strategy(cells, x, A, coin)
        if new == me:
            continue
        cells[x] = new
        flips += 1
        if mode == INTERVAL and m_lo <= x <= m_hi:
            return BROKEN, pos, t, X, Lf, flips
        if x == X and new == 2:
            X -= 1
            if mode == HITTING and X < x_floor:
                return HIT_FLOOR, pos, t, X, Lf, flips
        elif x == X + 1 and new == 1:
            X += 1
            while cells[X + 1] == 1 and X + 4 < active_hi:
                X += 1
            if X >= n_right and (mode == HITTING or Lf <= n_left):
                status = ESCAPED if mode == HITTING else INTACT
                return status, pos, t, X, Lf, flips
            if X + 6 >= active_hi:
                return NEED_GROW, pos, t, X, Lf, flips
        if mode == INTERVAL:
            if x == Lf and new == 2:
                Lf += 1
            elif x == Lf - 1 and new == 1:
                Lf -= 1
                while cells[Lf - 1] == 1 and Lf - 4 > active_lo:
                    Lf -= 1
                if Lf <= n_left and X >= n_right:
                    return INTACT, pos, t, X, Lf, flips
                if Lf - 6 <= active_lo:
                    return NEED_GROW, pos, t, X, Lf, flips
    return NEED_EVENTS, pos, t, X, Lf, flips
