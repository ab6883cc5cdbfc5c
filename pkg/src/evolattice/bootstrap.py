"""Center fields and the comparison filling process.

A site is a *center* when its whole closed neighborhood plays strategy 1.
Centers are the conserved seeds of strategy-1 growth: under weak protection
(a11 above both a21 and a22) a center can never be destroyed, and its
neighbors convert quickly.  This module extracts center indicator fields,
runs the synchronous filling process that dominates center growth from
below (a site fills once every axis direction holds an occupied site among
its two unit-step neighbors), and provides replay monitors for the
monotonicity and growth-rate guarantees.

Indicator fields are numpy uint8 grids shaped like ``Configuration.grid()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import neighbor_table
from .lattice import Configuration, Trajectory, configuration_from_cells
from .payoffs import NeighborhoodSpec

__all__ = [
    "extract_centers",
    "bootstrap_step",
    "bootstrap_limit",
    "coupled_initials",
    "CenterViolation",
    "monitor_center_monotonicity",
    "center_growth_envelope",
    "center_mass_check",
    "indicator_to_text",
    "indicator_from_text",
]


def extract_centers(cfg: Configuration) -> np.ndarray:
    """Indicator grid of sites whose closed neighborhood is all strategy 1."""
    table = neighbor_table(cfg.sides, cfg.ns.M, include_center=True)
    ones = cfg.cells == 1
    flat = ones[table].all(axis=1)
    return flat.astype(np.uint8).reshape(cfg.sides)


def _axis_event(field: np.ndarray) -> np.ndarray:
    """Sites with an occupied unit-step neighbor in every axis direction."""
    occ = field.astype(bool)
    event = np.ones_like(occ)
    for ax in range(occ.ndim):
        event &= np.roll(occ, 1, axis=ax) | np.roll(occ, -1, axis=ax)
    return event


def bootstrap_step(field: np.ndarray) -> np.ndarray:
    """One synchronous update: occupied stays, a site fills on the axis event.

    The neighbor test uses unit steps along each axis regardless of the
    interaction radius of the player dynamics.
    """
    occ = field.astype(bool)
    return (occ | _axis_event(field)).astype(np.uint8)


def bootstrap_limit(field: np.ndarray, max_steps: Optional[int] = None) -> tuple:
    """Iterate to the fixed point; returns (final field, steps taken)."""
    if max_steps is None:
        max_steps = int(field.size)
    cur = field.astype(np.uint8)
    for k in range(max_steps):
        nxt = bootstrap_step(cur)
        if np.array_equal(nxt, cur):
            return cur, k
        cur = nxt
    return cur, max_steps


def coupled_initials(rho, ns: NeighborhoodSpec, sides, seed) -> tuple:
    """Product initial data for the comparison: players at density rho,
    filling seeds at density rho**(N+1).

    Both draws come from one seeded generator, players first, so the pair
    is reproducible from a single seed.
    """
    r = float(rho)
    if not (0 <= r <= 1):
        raise ValueError("rho must lie in [0, 1]")
    sides = tuple(int(s) for s in sides)
    rng = np.random.default_rng(seed)
    n = int(np.prod(sides))
    cells = np.where(rng.random(n) < r, 1, 2).astype(np.int8)
    cfg = configuration_from_cells(cells, ns, sides)
    seeds = (rng.random(n) < r ** (ns.size + 1)).astype(np.uint8)
    return cfg, seeds.reshape(sides)


@dataclass(frozen=True)
class CenterViolation:
    """A replay step where an existing center stopped being one."""

    time: float
    flip_site: int
    lost: tuple


def monitor_center_monotonicity(traj: Trajectory) -> list:
    """Replay a trajectory and report every flip that destroys a center.

    Returns a list of CenterViolation records (empty when the center set
    only ever grows, as guaranteed under weak protection).
    """
    cfg = traj.initial
    ns = cfg.ns
    open_table = neighbor_table(cfg.sides, ns.M, include_center=False)
    closed_table = neighbor_table(cfg.sides, ns.M, include_center=True)
    cells = cfg.cells.copy()
    ones = cells == 1
    n1 = ones[open_table].sum(axis=1).astype(np.int64)
    need = ns.size
    out = []
    for k in range(traj.n_flips):
        x = int(traj.sites[k])
        new = int(traj.news[k])
        affected = closed_table[x]
        before = (cells[affected] == 1) & (n1[affected] == need)
        cells[x] = new
        n1[open_table[x]] += 1 if new == 1 else -1
        after = (cells[affected] == 1) & (n1[affected] == need)
        dropped = before & ~after
        if dropped.any():
            out.append(
                CenterViolation(
                    time=float(traj.times[k]),
                    flip_site=x,
                    lost=tuple(int(s) for s in affected[dropped]),
                )
            )
    return out


def _integer_snapshots(traj: Trajectory):
    """Yield (s, grid of center indicators at time s) for s = 0, 1, ..."""
    cfg = traj.initial
    table = neighbor_table(cfg.sides, cfg.ns.M, include_center=True)
    cells = cfg.cells.copy()

    def centers():
        ones = cells == 1
        return ones[table].all(axis=1).astype(np.uint8).reshape(cfg.sides)

    horizon = int(traj.t_end)
    k = 0
    nf = traj.n_flips
    for s in range(horizon + 1):
        while k < nf and traj.times[k] <= s:
            cells[int(traj.sites[k])] = int(traj.news[k])
            k += 1
        yield s, centers()


def center_growth_envelope(traj: Trajectory) -> tuple:
    """Count axis-event trials and one-step filling failures over unit times.

    At each integer time s, every site with a center among its two unit-step
    neighbors in each axis is a trial; the trial fails when the site is not
    a center at s + 1.  The failure frequency is bounded by exp(-1) for the
    dominated filling process.
    """
    trials = 0
    failures = 0
    prev_field = None
    prev_event = None
    for s, field in _integer_snapshots(traj):
        if prev_event is not None:
            trials += int(prev_event.sum())
            failures += int((prev_event & ~(field.astype(bool))).sum())
        prev_field = field
        prev_event = _axis_event(field)
    del prev_field
    return trials, failures


def center_mass_check(traj: Trajectory) -> tuple:
    """(initial center fraction, final strategy-1 fraction, lower bound held).

    Centers seed growth, so the terminal strategy-1 density should never
    fall below the initial center density.
    """
    start = float(extract_centers(traj.initial).mean())
    end = float((traj.final.cells == 1).mean())
    return start, end, end >= start


def indicator_to_text(field: np.ndarray, ns: NeighborhoodSpec) -> str:
    """Serialize a {0,1} field in the configuration text layout."""
    sides = field.shape
    head = f"{ns.d} {ns.M} " + " ".join(str(s) for s in sides)
    rows = field.reshape(-1, sides[-1])
    body = "\n".join("".join(str(int(v)) for v in row) for row in rows)
    return head + "\n" + body + "\n"


def indicator_from_text(text: str) -> tuple:
    """Parse indicator_to_text output; returns (field, NeighborhoodSpec)."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    d, M = int(head[0]), int(head[1])
    sides = tuple(int(s) for s in head[2:])
    if len(sides) != d:
        raise ValueError("side count does not match dimension")
    digits = "".join(lines[1:])
    vals = np.array([int(c) for c in digits], dtype=np.uint8)
    if vals.size != int(np.prod(sides)):
        raise ValueError("cell count does not match sides")
    if not np.isin(vals, (0, 1)).all():
        raise ValueError("indicator cells must be 0 or 1")
    return vals.reshape(sides), NeighborhoodSpec(d=d, M=M)
