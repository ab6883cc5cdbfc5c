"""Exact payoff logic: parsing, derived parameters, classification, rates."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolattice.lattice import configuration_from_cells
from evolattice.payoffs import (DerivedParams, NeighborhoodSpec, PayoffMatrix,
                                classify_game, derive_params, flip_rate,
                                local_payoff, parse_payoffs, region_predicates,
                                strategy_nature)

NS1 = NeighborhoodSpec(d=1, M=1)


def line(cells):
    return configuration_from_cells(cells, NS1, (len(cells),))


rationals = st.fractions(
    min_value=Fraction(-6), max_value=Fraction(6), max_denominator=4)
matrices = st.builds(PayoffMatrix, rationals, rationals, rationals, rationals)


# -- parsing and exactness --------------------------------------------------

def test_parse_exact_fractions():
    p = parse_payoffs("4 0 9/2 3")
    assert p.entries() == (Fraction(4), Fraction(0), Fraction(9, 2), Fraction(3))
    assert all(isinstance(v, Fraction) for v in p.entries())
    assert parse_payoffs(p.as_text()).entries() == p.entries()


def test_parse_rejects_wrong_arity():
    with pytest.raises(ValueError):
        parse_payoffs("1 2 3")
    with pytest.raises(ValueError):
        parse_payoffs("1 2 3 4 5")


def test_entry_accessor_matches_fields():
    p = PayoffMatrix(1, 2, 3, 4)
    assert (p.a(1, 1), p.a(1, 2), p.a(2, 1), p.a(2, 2)) == (1, 2, 3, 4)


# -- derived parameters and natures ----------------------------------------

def test_derive_params_direct_subtraction():
    assert derive_params(PayoffMatrix(3, 0, 5, 1)) == DerivedParams(
        Fraction(-2), Fraction(1))


def test_derive_params_degenerate_zero():
    assert derive_params(PayoffMatrix(2, 7, 2, 7)) == DerivedParams(
        Fraction(0), Fraction(0))


def test_derive_params_symmetric_cross():
    assert derive_params(PayoffMatrix(0, 1, 1, 0)) == DerivedParams(
        Fraction(-1), Fraction(-1))


def test_strategy_nature_signs():
    p = PayoffMatrix(3, 0, 5, 1)  # a1 = -2, a2 = 1
    assert strategy_nature(p, 1) == "altruistic"
    assert strategy_nature(p, 2) == "selfish"
    q = PayoffMatrix(1, 1, 1, 1)
    assert strategy_nature(q, 1) == "neutral"
    with pytest.raises(ValueError):
        strategy_nature(p, 3)


# -- game classification ----------------------------------------------------

def test_classify_prisoners_dilemma():
    # a12 < a22 < a11 < a21 with strict orderings
    g = classify_game(PayoffMatrix(4, 0, Fraction(9, 2), 3))
    assert g.name == "prisoners-dilemma"
    assert not g.boundary


def test_classify_full_degeneracy_is_boundary():
    g = classify_game(PayoffMatrix(1, 1, 1, 1))
    assert g.boundary
    assert set(g.boundary_lines) == {
        "a11=a12", "a11=a21", "a22=a12", "a22=a21", "a11=a22"}
    assert g.name is None


def test_classify_symmetric_cross_payoffs():
    # signs of a11-a12, a11-a21, a22-a12, a22-a21, a11-a22 by hand
    g = classify_game(PayoffMatrix(0, 1, 1, 0))
    assert g.region == (-1, -1, -1, -1, 0)
    assert g.natures == ("altruistic", "altruistic")
    assert g.boundary and g.boundary_lines == ("a11=a22",)


def test_classify_hawk_dove_side():
    # both strategies altruistic (a1 = a2 = -1) with the strict ordering
    # a21 > a11 > a12 > a22 and no swap needed
    g = classify_game(PayoffMatrix(2, 1, 3, 0))
    assert g.name == "hawk-dove"
    assert g.natures == ("altruistic", "altruistic")
    assert not g.boundary


def test_classify_label_swap_convention():
    g = classify_game(PayoffMatrix(3, 5, 1, 0))  # a12 > a21 forces a swap
    assert g.labels_swapped


# -- local payoffs ----------------------------------------------------------

def test_local_payoff_all_opposite():
    p = PayoffMatrix(4, 0, 3, 2)
    assert local_payoff(1, 0, 2, p, NS1) == Fraction(0)  # = a12
    assert local_payoff(2, 0, 2, p, NS1) == Fraction(2)  # = a22


def test_local_payoff_mixed_average():
    p = PayoffMatrix(4, 0, 3, 2)
    assert local_payoff(1, 1, 1, p, NS1) == Fraction(2)  # (4 + 0) / 2


def test_local_payoff_rejects_bad_counts():
    p = PayoffMatrix(1, 2, 3, 4)
    with pytest.raises(ValueError):
        local_payoff(1, 1, 3, p, NS1)
    with pytest.raises(ValueError):
        local_payoff(1, -1, 3, p, NS1)
    with pytest.raises(ValueError):
        local_payoff(3, 1, 1, p, NS1)


# -- flip rates -------------------------------------------------------------

def test_flip_rate_exact_tie_is_half():
    # middle site of (1,1,2,2,2): best type-1 neighbor payoff (4+0)/2 = 2,
    # best type-2 neighbor payoff 2 -> exact tie
    p = PayoffMatrix(4, 0, 3, 2)
    cfg = line([1, 1, 2, 2, 2])
    assert flip_rate(2, cfg, p) == Fraction(1, 2)


def test_flip_rate_no_opposite_neighbor_is_zero():
    p = PayoffMatrix(4, 0, 3, 2)
    cfg = line([1, 1, 1, 2, 2, 2])
    # site 1 sees only type-1 neighbors, site 4 only type-2 neighbors
    assert flip_rate(1, cfg, p) == 0
    assert flip_rate(4, cfg, p) == 0


def test_center_payoff_dominates_every_type2_payoff():
    # a fully supported type-1 player earns a11, which under a11 >
    # max(a21, a22) strictly exceeds any type-2 payoff (a convex mix of
    # a21 and a22); consequence: a type-1 neighbor of such a player
    # never flips
    p = PayoffMatrix(3, -5, 2, 1)
    N = 8
    ns = NeighborhoodSpec(d=2, M=1)
    center_pay = local_payoff(1, N, 0, p, ns)
    for n1 in range(N + 1):
        assert center_pay > local_payoff(2, n1, N - n1, p, ns)
    # d=1 embedding: site 1 is fully supported, so its neighbor at
    # site 2 keeps strategy 1 regardless of the 2s to its right
    cfg = line([1, 1, 1, 2, 2, 2, 2])
    assert flip_rate(2, cfg, p) == 0


def test_flip_rate_lone_one_always_flips():
    # an isolated type-1 player has no type-1 neighbor, so the type-2
    # side wins outright whatever the payoffs
    for p in (PayoffMatrix(3, 2, 1, 0), PayoffMatrix(0, 0, 9, 9)):
        cfg = line([2, 2, 1, 2, 2])
        assert flip_rate(2, cfg, p) == 1


@given(matrices, st.lists(st.sampled_from([1, 2]), min_size=5, max_size=9),
       st.integers(min_value=0, max_value=8))
def test_flip_rate_range_and_tie_semantics(p, cells, x):
    x = x % len(cells)
    cfg = line(cells)
    r = flip_rate(x, cfg, p)
    assert r in (Fraction(0), Fraction(1, 2), Fraction(1))


@given(matrices, st.lists(st.sampled_from([1, 2]), min_size=5, max_size=9),
       rationals)
def test_flip_rate_shift_invariance(p, cells, c):
    cfg = line(cells)
    shifted = p.shifted(c)
    for x in range(len(cells)):
        assert flip_rate(x, cfg, p) == flip_rate(x, cfg, shifted)


@given(matrices, st.lists(st.sampled_from([1, 2]), min_size=5, max_size=9),
       st.fractions(min_value=Fraction(1, 3), max_value=Fraction(5),
                    max_denominator=4))
def test_flip_rate_positive_scaling_invariance(p, cells, k):
    cfg = line(cells)
    scaled = p.scaled(k)
    for x in range(len(cells)):
        assert flip_rate(x, cfg, p) == flip_rate(x, cfg, scaled)


@given(matrices, st.lists(st.sampled_from([1, 2]), min_size=5, max_size=9))
def test_flip_rate_label_symmetry(p, cells):
    cfg = line(cells)
    mirrored = line([3 - c for c in cells])
    q = p.swapped()
    for x in range(len(cells)):
        assert flip_rate(x, cfg, p) == flip_rate(x, mirrored, q)


# -- region predicates ------------------------------------------------------

def test_region_examples():
    assert region_predicates(parse_payoffs("3 2 1 0"), NS1).pure_growth
    assert region_predicates(parse_payoffs("5 1 3 1"), NS1).gold_1
    assert region_predicates(parse_payoffs("4 9 10 0"), NS1).open_region
    flags = region_predicates(parse_payoffs("0 1 1 0"), NS1)
    assert flags.symmetric_coexistence
    assert not flags.pure_growth


def test_gold_2_is_label_swapped_gold_1():
    p = parse_payoffs("5 1 3 1")
    assert region_predicates(p.swapped(), NS1).gold_2


@given(matrices)
def test_pure_growth_implies_strong_implies_weak(p):
    for ns in (NS1, NeighborhoodSpec(d=2, M=1)):
        flags = region_predicates(p, ns)
        if flags.pure_growth:
            assert flags.strong_1
        if flags.strong_1:
            assert flags.weak_1
        if flags.strong_2:
            assert flags.weak_2


@given(matrices)
def test_region_flags_label_swap_duality(p):
    a = region_predicates(p, NS1)
    b = region_predicates(p.swapped(), NS1)
    assert a.weak_1 == b.weak_2
    assert a.strong_1 == b.strong_2
    assert a.gold_1 == b.gold_2
    assert a.symmetric_coexistence == b.symmetric_coexistence


def test_neighborhood_sizes():
    assert NeighborhoodSpec(d=1, M=1).size == 2
    assert NeighborhoodSpec(d=2, M=1).size == 8
    assert NeighborhoodSpec(d=1, M=15).size == 30
    assert NeighborhoodSpec(d=3, M=2).size == 124
    with pytest.raises(ValueError):
        NeighborhoodSpec(d=0, M=1)
    with pytest.raises(ValueError):
        NeighborhoodSpec(d=1, M=0)


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=4))
def test_neighborhood_size_formula(d, M):
    assert NeighborhoodSpec(d=d, M=M).size == (2 * M + 1) ** d - 1
