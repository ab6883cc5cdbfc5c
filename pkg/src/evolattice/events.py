"""Event streams driving the simulation.

Each player carries an independent rate-one update clock, together with a
fresh fair coin per ring for tie breaking.  Equivalently, with n sites,
the next event happens after an Exponential(n) waiting time at a site
chosen uniformly at random.  An EventSource realizes that description
from a single 64-bit seed: identical seeds reproduce identical streams
bit for bit, regardless of how consumers batch their reads.

Draws are buffered in fixed-size chunks from one PCG64 generator in the
fixed order (sites, waiting times, coins), so single-event consumers and
array-consuming kernels see the same stream.
"""

from __future__ import annotations

import numpy as np

__all__ = ["EventSource", "ScriptedEventSource"]

_CHUNK = 8192


class EventSource:
    """Buffered (site, waiting-time, coin) draws for a fixed site count.

    ``waits`` holds standard-exponential variates; consumers divide by the
    current number of sites.  ``resize`` discards buffered draws so the
    site range can change mid-run (used by growing-window simulations);
    determinism is preserved because resizes themselves are a
    deterministic function of the stream so far.
    """

    def __init__(self, seed: int, sites: int, chunk: int = _CHUNK) -> None:
        if sites < 1:
            raise ValueError("need at least one site")
        self.seed = int(seed)
        self.num_sites = int(sites)
        self.chunk = int(chunk)
        self.rng = np.random.default_rng(self.seed)
        self.sites = np.empty(0, dtype=np.int64)
        self.waits = np.empty(0, dtype=np.float64)
        self.coins = np.empty(0, dtype=np.uint8)
        self.pos = 0

    def refill(self) -> None:
        """Drop consumed draws and fill the buffer with a fresh chunk."""
        self.sites = self.rng.integers(0, self.num_sites, size=self.chunk, dtype=np.int64)
        self.waits = self.rng.standard_exponential(size=self.chunk)
        self.coins = self.rng.integers(0, 2, size=self.chunk, dtype=np.uint8)
        self.pos = 0

    def ensure(self) -> None:
        if self.pos >= len(self.sites):
            self.refill()

    def resize(self, sites: int) -> None:
        if sites < 1:
            raise ValueError("need at least one site")
        self.num_sites = int(sites)
        # Buffered site draws were uniform over the old range; flush them.
        self.pos = len(self.sites)

    def draw(self) -> tuple[int, float, int]:
        """Next event as (site, raw standard-exponential wait, coin)."""
        self.ensure()
        i = self.pos
        self.pos = i + 1
        return int(self.sites[i]), float(self.waits[i]), int(self.coins[i])


class ScriptedEventSource(EventSource):
    """An event source replaying explicitly supplied draws (for tests)."""

    def __init__(self, sites, waits, coins, num_sites: int) -> None:
        self.seed = -1
        self.num_sites = int(num_sites)
        self.chunk = len(sites)
        self.sites = np.asarray(sites, dtype=np.int64)
        self.waits = np.asarray(waits, dtype=np.float64)
        self.coins = np.asarray(coins, dtype=np.uint8)
        self.pos = 0

    def refill(self) -> None:
        raise RuntimeError("scripted event stream exhausted")

    def resize(self, sites: int) -> None:
        self.num_sites = int(sites)
