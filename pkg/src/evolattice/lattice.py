"""Finite-torus realization of the imitation dynamics.

A Configuration holds the strategies on a periodic d-dimensional lattice.
Continuous-time runs are driven by an EventSource and executed by the
compiled kernel; the exact Fraction path in `payoffs` is kept as the
reference semantics and the two are tested against each other.

The torus stands in for the infinite lattice.  Sides must be at least
4M+1 so that the ball of radius 2M around a site, which is what a single
update can influence, never wraps onto itself ambiguously; constructors
that pick sizes themselves default to 4M+2 or more.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from . import _kernels, geometry
from .events import EventSource
from .payoffs import NeighborhoodSpec, PayoffMatrix, decide_strategy, fittest_payoffs

__all__ = [
    "Configuration",
    "EventRecord",
    "Trajectory",
    "RegionCounts",
    "sample_product_measure",
    "uniform_configuration",
    "configuration_from_cells",
    "step",
    "run",
    "compute_rates_halves",
    "is_absorbed",
    "interface_density",
    "region_counts",
    "first_hitting_times",
    "config_to_text",
    "config_from_text",
    "trajectory_to_csv",
]


@dataclass(frozen=True)
class Configuration:
    """Strategies on a torus; cells are 1 or 2 in row-major site order."""

    ns: NeighborhoodSpec
    sides: tuple[int, ...]
    cells: np.ndarray

    def __post_init__(self) -> None:
        if len(self.sides) != self.ns.d:
            raise ValueError("sides must list one extent per dimension")
        minimum = 4 * self.ns.M + 1
        for s in self.sides:
            if s < minimum:
                raise ValueError(f"side {s} below minimum {minimum} for M={self.ns.M}")
        cells = np.ascontiguousarray(self.cells, dtype=np.int8)
        if cells.shape != (self.num_sites,):
            raise ValueError("cells must be flat with one entry per site")
        if not np.all((cells == 1) | (cells == 2)):
            raise ValueError("cells must contain only strategies 1 and 2")
        object.__setattr__(self, "cells", cells)

    @property
    def num_sites(self) -> int:
        return geometry.num_sites(self.sides)

    def neighbor_table(self) -> np.ndarray:
        return geometry.neighbor_table(self.sides, self.ns.M)

    def neighbors(self, x: int) -> Sequence[int]:
        return self.neighbor_table()[x]

    def n_ones(self) -> int:
        return int(np.count_nonzero(self.cells == 1))

    def minority_fraction(self) -> float:
        k = self.n_ones()
        return min(k, self.num_sites - k) / self.num_sites

    def grid(self) -> np.ndarray:
        return self.cells.reshape(self.sides)

    def copy(self) -> "Configuration":
        return Configuration(self.ns, self.sides, self.cells.copy())

    def with_cells(self, cells: np.ndarray) -> "Configuration":
        return Configuration(self.ns, self.sides, cells)


def configuration_from_cells(cells, ns: NeighborhoodSpec,
                             sides: tuple[int, ...] | None = None) -> Configuration:
    arr = np.asarray(cells, dtype=np.int8)
    if sides is None:
        sides = arr.shape if arr.ndim > 1 else (arr.shape[0],)
    return Configuration(ns, tuple(sides), arr.reshape(-1))


def uniform_configuration(ns: NeighborhoodSpec, sides: tuple[int, ...],
                          strategy: int) -> Configuration:
    if strategy not in (1, 2):
        raise ValueError("strategy must be 1 or 2")
    n = geometry.num_sites(tuple(sides))
    return Configuration(ns, tuple(sides), np.full(n, strategy, dtype=np.int8))


def sample_product_measure(rho, ns: NeighborhoodSpec, sides: tuple[int, ...],
                           seed: int) -> Configuration:
    """Independent draw: each site gets strategy 1 with probability rho."""
    r = float(rho)
    if not 0.0 <= r <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    u = rng.random(geometry.num_sites(tuple(sides)))
    cells = np.where(u < r, np.int8(1), np.int8(2))
    return Configuration(ns, tuple(sides), cells)


# ---------------------------------------------------------------------------
# Exact vectorized rates
# ---------------------------------------------------------------------------

def _scaled_site_payoffs(cells: np.ndarray, nbr: np.ndarray,
                         ints: tuple[int, int, int, int]) -> np.ndarray:
    A11, A12, A21, A22 = (np.int64(v) for v in ints)
    N = nbr.shape[1]
    n1 = np.count_nonzero(cells[nbr] == 1, axis=1).astype(np.int64)
    ones = cells == 1
    return np.where(ones, A11 * n1 + A12 * (N - n1), A21 * n1 + A22 * (N - n1))


def compute_rates_halves(cfg: Configuration, p: PayoffMatrix) -> np.ndarray:
    """Flip rates of every site in half units: values 0, 1, 2 mean 0, 1/2, 1.

    Integer arithmetic throughout; agrees exactly with `payoffs.flip_rate`.
    """
    nbr = cfg.neighbor_table()
    ints = _kernels.scaled_entries(p, cfg.ns.size)
    pay = _scaled_site_payoffs(cfg.cells, nbr, ints)
    pay_nbr = pay[nbr]
    is1 = cfg.cells[nbr] == 1
    has1 = is1.any(axis=1)
    has2 = (~is1).any(axis=1)
    low = np.int64(np.iinfo(np.int64).min)
    best1 = np.where(is1, pay_nbr, low).max(axis=1)
    best2 = np.where(~is1, pay_nbr, low).max(axis=1)

    me1 = cfg.cells == 1
    mine_has = np.where(me1, has1, has2)
    theirs_has = np.where(me1, has2, has1)
    mine = np.where(me1, best1, best2)
    theirs = np.where(me1, best2, best1)

    rate = np.zeros(cfg.num_sites, dtype=np.uint8)
    win = theirs_has & (~mine_has | (theirs > mine))
    tiem = theirs_has & mine_has & (theirs == mine)
    rate[win] = 2
    rate[tiem] = 1
    return rate


def is_absorbed(cfg: Configuration, p: PayoffMatrix) -> bool:
    """True when no site can flip: every flip rate is exactly zero."""
    return not compute_rates_halves(cfg, p).any()


def interface_density(cfg: Configuration) -> Fraction:
    if cfg.ns.d != 1:
        raise ValueError("interface density is defined for one dimension")
    cells = cfg.cells
    k = int(np.count_nonzero(cells != np.roll(cells, 1)))
    return Fraction(k, cfg.num_sites)


@dataclass(frozen=True)
class RegionCounts:
    """Strategy counts in a block of sites; sigma is the minority count."""

    n1: int
    n2: int

    @property
    def sigma(self) -> int:
        return min(self.n1, self.n2)


def region_counts(cfg: Configuration, block: Sequence[int]) -> RegionCounts:
    idx = np.asarray(block, dtype=np.int64)
    n1 = int(np.count_nonzero(cfg.cells[idx] == 1))
    return RegionCounts(n1=n1, n2=len(idx) - n1)


# ---------------------------------------------------------------------------
# Single exact step (reference semantics)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventRecord:
    dt: float
    site: int
    old: int
    new: int
    tie: bool

    @property
    def flipped(self) -> bool:
        return self.old != self.new


def step(cfg: Configuration, es: EventSource, p: PayoffMatrix) -> tuple[Configuration, EventRecord]:
    """Apply one event with exact Fraction payoff comparisons."""
    x, wait, coin = es.draw()
    best1, best2 = fittest_payoffs(x, cfg, p)
    new = decide_strategy(best1, best2, coin)
    old = int(cfg.cells[x])
    tie = best1 is not None and best2 is not None and best1 == best2
    rec = EventRecord(dt=wait / cfg.num_sites, site=x, old=old, new=new, tie=tie)
    if new == old:
        return cfg, rec
    cells = cfg.cells.copy()
    cells[x] = new
    return cfg.with_cells(cells), rec


# ---------------------------------------------------------------------------
# Continuous-time runs
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """A finished run: initial state, flip log, samples, and outcome.

    The flip log records only events that changed a strategy.  With
    ``record_log`` off the arrays are empty and only sampled observables
    and the final state are kept.
    """

    initial: Configuration
    payoffs: PayoffMatrix
    seed: int | None
    times: np.ndarray
    sites: np.ndarray
    olds: np.ndarray
    news: np.ndarray
    ties: np.ndarray
    samples: dict[str, np.ndarray]
    status: str
    t_end: float
    final: Configuration

    @property
    def n_flips(self) -> int:
        return len(self.times)

    @property
    def absorbed(self) -> bool:
        return self.status.startswith("absorbed")

    def replay(self) -> Iterator[tuple[float, int, int, int, np.ndarray]]:
        """Yield (t, site, old, new, cells-after-flip); cells is reused."""
        cells = self.initial.cells.copy()
        for i in range(self.n_flips):
            x = int(self.sites[i])
            cells[x] = self.news[i]
            yield float(self.times[i]), x, int(self.olds[i]), int(self.news[i]), cells


_STATUS_BY_CODE = {
    _kernels.ABSORBED_ALL1: "absorbed-all-1",
    _kernels.ABSORBED_ALL2: "absorbed-all-2",
    _kernels.ABSORBED_FROZEN: "absorbed-mixed",
}


def run(cfg: Configuration, es: EventSource, p: PayoffMatrix, horizon: float, *,
        stop_on_absorption: bool = True,
        record_log: bool = True,
        sample_dt: float | None = None,
        on_flips=None) -> Trajectory:
    """Run the dynamics up to ``horizon`` or absorption.

    Absorption at a uniform state is always detected from the strategy
    counter.  With ``stop_on_absorption`` the kernel additionally keeps
    per-site activity flags inside the radius-2M ball of each flip, so
    frozen mixed states stop the run as well.  ``sample_dt`` records
    (time, ones count, minority fraction) every that many time units.
    ``on_flips(times, sites, olds, news, ties)`` is called with each
    kernel batch's flips as they happen; combined with
    ``record_log=False`` it streams monitors without storing the log.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if es.num_sites != cfg.num_sites:
        raise ValueError("event source sized for a different lattice")

    cells = cfg.cells.copy()
    nbr = cfg.neighbor_table()
    N = cfg.ns.size
    ints = _kernels.scaled_entries(p, N)
    n1 = np.count_nonzero(cells[nbr] == 1, axis=1).astype(np.int32)
    n_ones = int(np.count_nonzero(cells == 1))

    track_active = bool(stop_on_absorption)
    if track_active:
        ball = geometry.neighbor_table(cfg.sides, 2 * cfg.ns.M, include_center=True)
        active = (compute_rates_halves(cfg.with_cells(cells), p) > 0).astype(np.uint8)
        active_count = int(active.sum())
    else:
        ball = np.zeros((1, 1), dtype=np.int32)
        active = np.zeros(1, dtype=np.uint8)
        active_count = 1

    sample_times: list[float] = []
    sample_ones: list[int] = []

    def record_sample(at: float) -> None:
        sample_times.append(at)
        sample_ones.append(n_ones)

    boundaries: list[float] = []
    if sample_dt is not None:
        if sample_dt <= 0:
            raise ValueError("sample_dt must be positive")
        k = 1
        while k * sample_dt < horizon:
            boundaries.append(k * sample_dt)
            k += 1
    boundaries.append(horizon)

    record_sample(0.0)

    logs: list[tuple[np.ndarray, ...]] = []
    t = 0.0
    status = "horizon"

    def finished_initially() -> str | None:
        if n_ones == cfg.num_sites:
            return "absorbed-all-1"
        if n_ones == 0:
            return "absorbed-all-2"
        if track_active and active_count == 0:
            return "absorbed-mixed"
        return None

    init_status = finished_initially()
    if init_status is not None:
        status = init_status
    else:
        fill_log = record_log or on_flips is not None
        bi = 0
        while True:
            es.ensure()
            cap = len(es.sites) - es.pos
            if fill_log:
                log_t = np.empty(cap, dtype=np.float64)
                log_site = np.empty(cap, dtype=np.int32)
                log_old = np.empty(cap, dtype=np.int8)
                log_new = np.empty(cap, dtype=np.int8)
                log_tie = np.empty(cap, dtype=np.uint8)
            else:
                log_t = np.empty(0, dtype=np.float64)
                log_site = np.empty(0, dtype=np.int32)
                log_old = np.empty(0, dtype=np.int8)
                log_new = np.empty(0, dtype=np.int8)
                log_tie = np.empty(0, dtype=np.uint8)
            code, pos, t, n_ones, active_count, nlog = _kernels.torus_kernel(
                cells, n1, nbr, *(np.int64(v) for v in ints),
                es.sites, es.waits, es.coins, es.pos, t, boundaries[bi],
                n_ones, True, track_active, ball, active, active_count,
                fill_log, log_t, log_site, log_old, log_new, log_tie)
            es.pos = pos
            if nlog and on_flips is not None:
                on_flips(log_t[:nlog], log_site[:nlog], log_old[:nlog],
                         log_new[:nlog], log_tie[:nlog])
            if nlog and record_log:
                logs.append((log_t[:nlog].copy(), log_site[:nlog].copy(),
                             log_old[:nlog].copy(), log_new[:nlog].copy(),
                             log_tie[:nlog].copy()))
            if code == _kernels.NEED_EVENTS:
                continue
            if code == _kernels.AT_HORIZON:
                record_sample(boundaries[bi])
                if bi == len(boundaries) - 1:
                    t = horizon
                    status = "horizon"
                    break
                bi += 1
                continue
            status = _STATUS_BY_CODE[code]
            record_sample(t)
            break

    if logs:
        times = np.concatenate([l[0] for l in logs])
        sites = np.concatenate([l[1] for l in logs])
        olds = np.concatenate([l[2] for l in logs])
        news = np.concatenate([l[3] for l in logs])
        ties = np.concatenate([l[4] for l in logs])
    else:
        times = np.empty(0, dtype=np.float64)
        sites = np.empty(0, dtype=np.int32)
        olds = np.empty(0, dtype=np.int8)
        news = np.empty(0, dtype=np.int8)
        ties = np.empty(0, dtype=np.uint8)

    n = cfg.num_sites
    ones_arr = np.asarray(sample_ones, dtype=np.int64)
    samples = {
        "t": np.asarray(sample_times, dtype=np.float64),
        "n_ones": ones_arr,
        "minority_fraction": np.minimum(ones_arr, n - ones_arr) / n,
    }
    final = Configuration(cfg.ns, cfg.sides, cells)
    return Trajectory(
        initial=cfg.copy(), payoffs=p, seed=getattr(es, "seed", None),
        times=times, sites=sites, olds=olds, news=news, ties=ties,
        samples=samples, status=status, t_end=float(t if status != "horizon" else horizon),
        final=final,
    )


def first_hitting_times(traj: Trajectory, block: Sequence[int],
                        strategy: int | None = None) -> float | None:
    """First time the block contains the given strategy (both, when None).

    Returns 0.0 when the initial state already qualifies and None when the
    run ends without the block ever qualifying.  Requires a flip log.
    """
    idx = set(int(i) for i in block)
    counts = region_counts(traj.initial, sorted(idx))
    n1, n2 = counts.n1, counts.n2

    def ok() -> bool:
        if strategy is None:
            return n1 > 0 and n2 > 0
        return (n1 if strategy == 1 else n2) > 0

    if ok():
        return 0.0
    for i in range(traj.n_flips):
        if int(traj.sites[i]) in idx:
            if traj.news[i] == 1:
                n1 += 1
                n2 -= 1
            else:
                n1 -= 1
                n2 += 1
            if ok():
                return float(traj.times[i])
    return None


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------

def config_to_text(cfg: Configuration) -> str:
    """Header ``d M side...`` then row-major strategy digits."""
    out = io.StringIO()
    out.write(f"{cfg.ns.d} {cfg.ns.M} " + " ".join(str(s) for s in cfg.sides) + "\n")
    grid = cfg.grid().reshape(-1, cfg.sides[-1])
    for row in grid:
        out.write("".join(str(int(v)) for v in row) + "\n")
    return out.getvalue()


def config_from_text(text: str) -> Configuration:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    d, M = int(head[0]), int(head[1])
    sides = tuple(int(s) for s in head[2:])
    if len(sides) != d:
        raise ValueError("header must list one side per dimension")
    digits = "".join(lines[1:])
    cells = np.frombuffer(digits.encode(), dtype=np.uint8) - ord("0")
    return Configuration(NeighborhoodSpec(d, M), sides, cells.astype(np.int8))


def trajectory_to_csv(traj: Trajectory) -> str:
    """Flip log as CSV with columns time,site,old,new,tie."""
    out = io.StringIO()
    out.write("time,site,old,new,tie\n")
    for i in range(traj.n_flips):
        out.write(f"{traj.times[i]!r},{int(traj.sites[i])},{int(traj.olds[i])},"
                  f"{int(traj.news[i])},{int(traj.ties[i])}\n")
    return out.getvalue()
