"""Index tables for periodic lattices.

Sites of a d-dimensional torus with per-dimension extents ``sides`` are
numbered row-major.  The tables below list, for every site, the flat
indices of the sites within a given Chebyshev radius.  They are cached
because the simulation kernels index into them on every event.
"""

from __future__ import annotations

import itertools

import numpy as np

_TABLE_CACHE: dict[tuple, np.ndarray] = {}


def num_sites(sides: tuple[int, ...]) -> int:
    n = 1
    for s in sides:
        n *= s
    return n


def offsets_within(d: int, radius: int, include_center: bool) -> list[tuple[int, ...]]:
    """Offsets with max-norm at most ``radius``, in lexicographic order."""
    offs = [off for off in itertools.product(range(-radius, radius + 1), repeat=d)
            if include_center or any(off)]
    return offs


def neighbor_table(sides: tuple[int, ...], radius: int,
                   include_center: bool = False) -> np.ndarray:
    """(num_sites, k) int32 array of flat indices within Chebyshev ``radius``.

    Rows follow row-major site order; columns follow lexicographic offset
    order, so the table is deterministic.
    """
    key = (tuple(sides), radius, include_center)
    cached = _TABLE_CACHE.get(key)
    if cached is not None:
        return cached

    d = len(sides)
    for s in sides:
        if s < 2 * radius + 1:
            raise ValueError(
                f"side {s} too small for radius {radius}: need at least {2 * radius + 1}"
            )
    offs = offsets_within(d, radius, include_center)
    coords = np.indices(sides).reshape(d, -1)  # (d, n)
    n = coords.shape[1]
    table = np.empty((n, len(offs)), dtype=np.int32)
    strides = np.empty(d, dtype=np.int64)
    acc = 1
    for i in range(d - 1, -1, -1):
        strides[i] = acc
        acc *= sides[i]
    for j, off in enumerate(offs):
        flat = np.zeros(n, dtype=np.int64)
        for i in range(d):
            flat += ((coords[i] + off[i]) % sides[i]) * strides[i]
        table[:, j] = flat
    _TABLE_CACHE[key] = table
    return table


def unravel(site: int, sides: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(int(c) for c in np.unravel_index(site, sides))


def ravel(coord: tuple[int, ...], sides: tuple[int, ...]) -> int:
    wrapped = tuple(c % s for c, s in zip(coord, sides))
    return int(np.ravel_multi_index(wrapped, sides))
