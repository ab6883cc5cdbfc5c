"""Torus simulation: exact stepper, batched kernel, and their agreement.

The kernel route (run) does integer-scaled payoff comparisons inside a
compiled loop; the reference route steps one event at a time with exact
Fraction arithmetic.  Feeding both the same scripted draws must produce
the same flips, times, and outcome.
"""

from fractions import Fraction

import numpy as np
import pytest

from evolattice.events import EventSource, ScriptedEventSource
from evolattice.lattice import (Configuration, Trajectory,
                                compute_rates_halves, config_from_text,
                                config_to_text, configuration_from_cells,
                                first_hitting_times, interface_density,
                                is_absorbed, region_counts, run,
                                sample_product_measure, step,
                                trajectory_to_csv, uniform_configuration)
from evolattice.payoffs import (NeighborhoodSpec, PayoffMatrix, flip_rate,
                                parse_payoffs)

NS1 = NeighborhoodSpec(d=1, M=1)
NS2 = NeighborhoodSpec(d=2, M=1)


def line(cells):
    return configuration_from_cells(cells, NS1, (len(cells),))


def scripted_draws(seed, n, num_sites):
    rng = np.random.default_rng(seed)
    sites = rng.integers(0, num_sites, size=n, dtype=np.int64)
    waits = rng.standard_exponential(size=n)
    coins = rng.integers(0, 2, size=n, dtype=np.uint8)
    return sites, waits, coins


# -- single steps -----------------------------------------------------------

def test_step_all_one_never_changes():
    cfg = uniform_configuration(NS1, (8,), 1)
    es = ScriptedEventSource([3], [0.5], [0], num_sites=8)
    after, rec = step(cfg, es, parse_payoffs("1 2 3 4"))
    assert not rec.flipped
    assert (after.cells == 1).all()


def test_step_tie_follows_the_coin():
    # middle of (1,1,2,2,2) ties under these payoffs; coin 1 picks
    # strategy 1, coin 0 keeps strategy 2
    p = parse_payoffs("4 0 3 2")
    cfg = line([1, 1, 2, 2, 2])
    for coin, flipped in ((1, True), (0, False)):
        es = ScriptedEventSource([2], [1.0], [coin], num_sites=5)
        after, rec = step(cfg, es, p)
        assert rec.tie
        assert rec.flipped == flipped
        assert after.cells[2] == (1 if flipped else 2)


def test_step_supported_one_never_flips_under_growth_payoffs():
    p = parse_payoffs("3 2 1 0")
    cfg = line([1, 1, 2, 2, 2, 2])
    for site in (0, 1):
        es = ScriptedEventSource([site], [1.0], [0], num_sites=6)
        _, rec = step(cfg, es, p)
        assert not rec.flipped


def test_step_event_time_scales_with_lattice_size():
    cfg = uniform_configuration(NS1, (10,), 2)
    es = ScriptedEventSource([0], [3.0], [0], num_sites=10)
    _, rec = step(cfg, es, parse_payoffs("1 2 3 4"))
    assert rec.dt == pytest.approx(0.3)


# -- runs -------------------------------------------------------------------

def test_run_zero_horizon_records_nothing():
    cfg = uniform_configuration(NS1, (12,), 2)
    traj = run(cfg, EventSource(0, 12), parse_payoffs("4 0 3 2"), 0.0)
    assert traj.n_flips == 0
    assert (traj.final.cells == 2).all()


def test_run_same_seed_is_reproducible():
    cfg = sample_product_measure(0.5, NS1, (40,), seed=5)
    p = parse_payoffs("4 0 3 2")
    a = run(cfg, EventSource(9, 40), p, 30.0)
    b = run(cfg, EventSource(9, 40), p, 30.0)
    assert a.status == b.status
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.sites, b.sites)
    assert (a.final.cells == b.final.cells).all()


def test_run_growth_payoffs_fill_the_line():
    cfg = sample_product_measure(0.5, NS1, (100,), seed=3)
    traj = run(cfg, EventSource(17, 100), parse_payoffs("3 2 1 0"), 400.0)
    assert traj.status == "absorbed-all-1"
    # every 2->1 flip had a type-1 neighbor; every 1->2 flip had none
    cells = cfg.cells.copy()
    for k in range(traj.n_flips):
        x = int(traj.sites[k])
        nbrs = cells[list(cfg.neighbors(x))]
        if traj.news[k] == 1:
            assert (nbrs == 1).any()
        else:
            assert not (nbrs == 1).any()
        cells[x] = traj.news[k]


def test_run_one_site_flips_per_event_and_time_increases():
    cfg = sample_product_measure(0.4, NS2, (6, 6), seed=1)
    traj = run(cfg, EventSource(2, 36), parse_payoffs("4 0 3 2"), 15.0,
               stop_on_absorption=False)
    assert traj.n_flips > 0
    assert (np.diff(traj.times) > 0).all()
    cells = cfg.cells.copy()
    for _, x, old, new, after in traj.replay():
        assert cells[x] == old and old != new
        cells[x] = new
        assert (after == cells).all()
    assert (cells == traj.final.cells).all()


def test_run_interface_count_never_grows_on_the_line():
    # single-range flips move or annihilate interfaces, never create them
    for text in ("4 0 3 2", "0 1 1 0", "4 9 10 0", "3 0 2 2"):
        p = parse_payoffs(text)
        cfg = sample_product_measure(0.5, NS1, (40,), seed=23)
        traj = run(cfg, EventSource(29, 40), p, 40.0,
                   stop_on_absorption=False)
        last = interface_density(cfg) * 40
        for _, _, _, _, cells in traj.replay():
            now = int((cells != np.roll(cells, 1)).sum())
            assert now <= last
            last = now


def test_run_label_swap_with_inverted_coins_mirrors_exactly():
    p = parse_payoffs("4 0 3 2")
    sites, waits, coins = scripted_draws(31, 4000, 30)
    cfg = sample_product_measure(0.5, NS1, (30,), seed=8)
    mirrored = cfg.with_cells((3 - cfg.cells).astype(np.int8))
    a = run(cfg, ScriptedEventSource(sites, waits, coins, 30), p, 20.0,
            stop_on_absorption=False)
    b = run(mirrored, ScriptedEventSource(sites, waits, ~coins & 1, 30),
            p.swapped(), 20.0, stop_on_absorption=False)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.sites, b.sites)
    assert np.array_equal(a.news, 3 - b.news)
    assert np.array_equal(a.ties, b.ties)


# -- kernel vs exact stepper ------------------------------------------------

DUAL_ROUTE_PAYOFFS = ("4 0 3 2", "3 2 1 0", "0 1 1 0", "4 9 10 0",
                      "4 0 9/2 3", "1 1 2 -1")


@pytest.mark.parametrize("text", DUAL_ROUTE_PAYOFFS)
@pytest.mark.parametrize("seed", (0, 1))
def test_kernel_agrees_with_exact_fraction_stepper(text, seed):
    p = parse_payoffs(text)
    L = 24
    cfg = sample_product_measure(0.5, NS1, (L,), seed=100 + seed)
    n_draws = 3000
    sites, waits, coins = scripted_draws(seed, n_draws, L)
    horizon = float(waits.sum() / L * 0.8)

    kern = run(cfg, ScriptedEventSource(sites, waits, coins, L), p, horizon)

    # reference: exact Fractions, one event at a time
    ref = cfg
    es = ScriptedEventSource(sites, waits, coins, L)
    t = 0.0
    flips = []
    status = "horizon"
    for _ in range(n_draws):
        nxt, rec = step(ref, es, p)
        t += rec.dt
        if t > horizon:
            status = "horizon"
            break
        ref = nxt
        if rec.flipped:
            flips.append((t, rec.site, rec.old, rec.new, rec.tie))
            if (ref.cells == 1).all():
                status = "absorbed-all-1"
                break
            if (ref.cells == 2).all():
                status = "absorbed-all-2"
                break
            if is_absorbed(ref, p):
                status = "absorbed-mixed"
                break
    else:
        raise AssertionError("horizon not reached within scripted draws")

    assert kern.status == status
    assert kern.n_flips == len(flips)
    for k, (ft, fx, fo, fn, tie) in enumerate(flips):
        assert kern.times[k] == ft
        assert int(kern.sites[k]) == fx
        assert int(kern.olds[k]) == fo
        assert int(kern.news[k]) == fn
        assert bool(kern.ties[k]) == tie
    assert (kern.final.cells == ref.cells).all()


def test_kernel_agrees_on_a_square_lattice():
    p = parse_payoffs("4 0 3 2")
    cfg = sample_product_measure(0.4, NS2, (5, 5), seed=77)
    sites, waits, coins = scripted_draws(7, 2500, 25)
    horizon = float(waits.sum() / 25 * 0.8)
    kern = run(cfg, ScriptedEventSource(sites, waits, coins, 25), p, horizon,
               stop_on_absorption=False)
    ref = cfg
    es = ScriptedEventSource(sites, waits, coins, 25)
    t, flips = 0.0, []
    while True:
        nxt, rec = step(ref, es, p)
        t += rec.dt
        if t > horizon:
            break
        ref = nxt
        if rec.flipped:
            flips.append((t, rec.site, rec.old, rec.new))
    assert kern.n_flips == len(flips)
    assert (kern.final.cells == ref.cells).all()


def test_rate_table_matches_scalar_rates():
    p = parse_payoffs("4 0 9/2 3")
    cfg = sample_product_measure(0.5, NS2, (6, 6), seed=13)
    halves = compute_rates_halves(cfg, p)
    for x in range(36):
        assert Fraction(int(halves[x]), 2) == flip_rate(x, cfg, p)


def test_one_event_tie_statistics():
    # on this ring every site ties (both strategies earn n1/2), so the
    # first event flips exactly when the coin picks the opposite side
    p = parse_payoffs("1 0 1 0")
    cfg = line([1, 1, 2, 2, 1, 1, 2, 2])
    n = 4000
    flips = 0
    for seed in range(n):
        _, rec = step(cfg, EventSource(seed, 8), p)
        assert rec.tie
        flips += rec.flipped
    sigma = (n * 0.25) ** 0.5
    assert abs(flips - n / 2) < 5 * sigma


# -- absorption -------------------------------------------------------------

def test_is_absorbed_uniform_and_blocks():
    p = parse_payoffs("3 0 2 2")
    assert is_absorbed(uniform_configuration(NS1, (9,), 1), p)
    assert is_absorbed(line([1, 1, 1, 2, 2, 2, 2, 2, 2]), p)
    generic = parse_payoffs("4 0 3 2")
    assert not is_absorbed(line([1, 2, 1, 2, 1, 2]), generic)


def test_run_detects_frozen_mixed_state():
    p = parse_payoffs("3 0 2 2")
    cfg = line([1, 1, 1, 2, 2, 2, 2, 2, 2])
    traj = run(cfg, EventSource(0, 9), p, 50.0)
    assert traj.status == "absorbed-mixed"
    assert traj.n_flips == 0
    assert traj.t_end == 0.0


# -- observables ------------------------------------------------------------

def test_interface_density_values():
    assert interface_density(uniform_configuration(NS1, (10,), 1)) == 0
    assert interface_density(line([1, 2] * 5)) == 1
    assert interface_density(line([2, 1, 1, 1, 2, 2, 2, 2])) == Fraction(2, 8)
    with pytest.raises(ValueError):
        interface_density(uniform_configuration(NS2, (5, 5), 1))


def test_region_counts_and_minority():
    cfg = line([1, 1, 2, 1, 2, 2, 2, 2])
    rc = region_counts(cfg, range(8))
    assert (rc.n1, rc.n2, rc.sigma) == (3, 5, 3)
    empty = region_counts(cfg, [])
    assert (empty.n1, empty.n2, empty.sigma) == (0, 0, 0)
    whole = region_counts(uniform_configuration(NS1, (6,), 1), range(6))
    assert (whole.n1, whole.n2, whole.sigma) == (6, 0, 0)


def test_first_hitting_times():
    cfg = line([1, 1, 2, 1, 2, 2])
    empty = np.empty(0)
    base = dict(payoffs=parse_payoffs("1 2 3 4"), seed=None,
                times=np.empty(0), sites=np.empty(0, dtype=np.int64),
                olds=np.empty(0, dtype=np.int8), news=np.empty(0, dtype=np.int8),
                ties=np.empty(0, dtype=np.uint8), samples={}, status="horizon",
                t_end=1.0)
    still = Trajectory(initial=cfg, final=cfg, **base)
    assert first_hitting_times(still, [2, 3]) == 0.0          # mixed at start
    assert first_hitting_times(still, [4, 5], strategy=1) is None
    del empty

    flip = dict(base)
    flip.update(times=np.array([0.7]), sites=np.array([4], dtype=np.int64),
                olds=np.array([2], dtype=np.int8), news=np.array([1], dtype=np.int8),
                ties=np.array([0], dtype=np.uint8))
    after = cfg.with_cells(np.array([1, 1, 2, 1, 1, 2], dtype=np.int8))
    traj = Trajectory(initial=cfg, final=after, **flip)
    assert first_hitting_times(traj, [4, 5], strategy=1) == 0.7


def test_sampled_series():
    cfg = sample_product_measure(0.5, NS1, (30,), seed=0)
    traj = run(cfg, EventSource(4, 30), parse_payoffs("0 1 1 0"), 10.0,
               sample_dt=2.0, stop_on_absorption=False)
    assert list(traj.samples["t"]) == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
    assert traj.samples["n_ones"][-1] == traj.final.n_ones()

    # uniform absorption cuts the series short at the absorption time
    grow = run(cfg, EventSource(4, 30), parse_payoffs("3 2 1 0"), 10.0,
               sample_dt=2.0, stop_on_absorption=False)
    assert grow.status == "absorbed-all-1"
    assert grow.samples["t"][-1] == grow.t_end < 10.0
    assert grow.samples["n_ones"][-1] == 30


# -- serialization ----------------------------------------------------------

def test_configuration_text_roundtrip():
    cfg = sample_product_measure(0.4, NS2, (5, 7), seed=2)
    back = config_from_text(config_to_text(cfg))
    assert back.ns == cfg.ns
    assert back.sides == cfg.sides
    assert (back.cells == cfg.cells).all()


def test_trajectory_csv_header_and_rows():
    cfg = sample_product_measure(0.5, NS1, (20,), seed=6)
    traj = run(cfg, EventSource(8, 20), parse_payoffs("4 0 3 2"), 5.0)
    lines = trajectory_to_csv(traj).strip().splitlines()
    assert lines[0] == "time,site,old,new,tie"
    assert len(lines) == traj.n_flips + 1


def test_configuration_rejects_small_torus():
    with pytest.raises(ValueError):
        uniform_configuration(NS1, (4,), 1)  # side < 4M + 1
    with pytest.raises(ValueError):
        uniform_configuration(NeighborhoodSpec(d=1, M=3), (12,), 1)
