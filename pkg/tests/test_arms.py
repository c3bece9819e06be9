import itertools
from collections import deque
from fractions import Fraction

import numpy as np
import pytest

from helpers.arms import (MAX_ARMS, ArmQuery, Color, backbone_query, crossing_query, event_function,
                          exact_event_count, exact_event_probability, exact_named_event, has_backbone_event,
                          has_bb_crossing, has_bww_event, has_one_arm, has_origin_arm, max_disjoint_arms,
                          origin_query)
from helpers.errors import CapacityError, DomainError
from helpers.lattice import (Coloring, RegionSpec, build_region, coloring_from_mask, enumerate_colorings,
                             norm_sq, uniform_coloring)


def connected(query: ArmQuery, allowed: np.ndarray) -> bool:
    seen = set()
    queue = deque(s for s in query.sources if allowed[s])
    seen.update(queue)
    while queue:
        i = queue.popleft()
        if query.targets[i]:
            return True
        for j in query.region.adjacency[i]:
            if allowed[j] and j not in seen:
                seen.add(j)
                queue.append(j)
    return False


def cut_oracle(coloring: Coloring, query: ArmQuery) -> int:
    """Smallest set of sites whose removal separates sources from targets, capped at required_count."""
    allowed = query.color.mask(coloring).copy()
    allowed[list(query.excluded)] = False
    usable = np.flatnonzero(allowed)
    for size in range(query.required_count):
        for cut in itertools.combinations(usable, size):
            trial = allowed.copy()
            trial[list(cut)] = False
            if not connected(query, trial):
                return size
    return query.required_count


def defect_circuit_exists(coloring: Coloring, query: ArmQuery) -> bool:
    """An opposite-colour separating set with at most one site of the arm colour."""
    allowed = query.color.mask(coloring).copy()
    allowed[list(query.excluded)] = False
    if not connected(query, allowed):
        return True
    for v in np.flatnonzero(allowed):
        trial = allowed.copy()
        trial[v] = False
        if not connected(query, trial):
            return True
    return False


def random_colorings(region, count, rng):
    for _ in range(count):
        yield Coloring(rng.random(region.size) < 0.5)


def test_one_arm_trivial_colorings(small_annulus):
    query = crossing_query(small_annulus)
    assert has_one_arm(uniform_coloring(small_annulus, True), query)
    assert not has_one_arm(uniform_coloring(small_annulus, False), query)
    white = query.with_count(1, Color.WHITE)
    assert has_one_arm(uniform_coloring(small_annulus, False), white)


def test_one_arm_matches_bfs_oracle(small_annulus, rng):
    query = crossing_query(small_annulus)
    for coloring in random_colorings(small_annulus, 500, rng):
        assert has_one_arm(coloring, query) == connected(query, coloring.black)


@pytest.mark.parametrize("required", [2, 3])
def test_flow_matches_cut_oracle(small_annulus, rng, required):
    query = crossing_query(small_annulus, Color.BLACK, required)
    for coloring in random_colorings(small_annulus, 400, rng):
        assert max_disjoint_arms(coloring, query) == cut_oracle(coloring, query)


def test_flow_matches_cut_oracle_on_ball(ball2, rng):
    query = backbone_query(ball2, required_count=3)
    for coloring in random_colorings(ball2, 400, rng):
        assert max_disjoint_arms(coloring, query) == cut_oracle(coloring, query)


def test_white_flow_matches_cut_oracle(small_annulus, rng):
    query = crossing_query(small_annulus, Color.WHITE, 2)
    for coloring in random_colorings(small_annulus, 400, rng):
        assert max_disjoint_arms(coloring, query) == cut_oracle(coloring, query)


def test_menger_duality_on_samples(small_annulus, rng):
    query = crossing_query(small_annulus, Color.BLACK, 2)
    for coloring in random_colorings(small_annulus, 500, rng):
        assert (max_disjoint_arms(coloring, query) >= 2) == (not defect_circuit_exists(coloring, query))


def test_all_black_early_stop(small_annulus):
    black = uniform_coloring(small_annulus, True)
    assert max_disjoint_arms(black, crossing_query(small_annulus, Color.BLACK, 2)) == 2
    assert max_disjoint_arms(black, crossing_query(small_annulus, Color.BLACK, MAX_ARMS)) == 6


def test_white_ring_blocks_every_arm():
    region = build_region(RegionSpec.annulus(2, 7))
    black = np.array([not (16 < norm_sq(region.coord(i)) <= 25) for i in range(region.size)])
    coloring = Coloring(black)
    assert max_disjoint_arms(coloring, crossing_query(region, Color.BLACK, 2)) == 0
    assert not has_one_arm(coloring, crossing_query(region))


def test_monotone_under_added_black(small_annulus, rng):
    query = crossing_query(small_annulus, Color.BLACK, 3)
    for _ in range(20):
        coloring = uniform_coloring(small_annulus, False)
        previous = 0
        for site in rng.permutation(small_annulus.size):
            coloring = coloring.with_black(int(site))
            flow = max_disjoint_arms(coloring, query)
            assert flow >= previous
            previous = flow
        assert previous == 3


def test_backbone_event_basics(ball2):
    assert has_backbone_event(uniform_coloring(ball2, True), ball2)
    assert not has_backbone_event(uniform_coloring(ball2, False), ball2)
    origin = ball2.site((0, 0))
    only_one = uniform_coloring(ball2, True).black.copy()
    neighbours = list(ball2.neighbors_of(origin))
    only_one[neighbours[1:]] = False
    assert not has_backbone_event(Coloring(only_one), ball2)


def test_backbone_ignores_origin_colour(ball2, rng):
    origin = ball2.site((0, 0))
    for coloring in random_colorings(ball2, 200, rng):
        flipped = coloring.black.copy()
        flipped[origin] = not flipped[origin]
        assert has_backbone_event(coloring, ball2) == has_backbone_event(Coloring(flipped), ball2)


def test_backbone_on_unit_ball_is_two_black_neighbours(ball1):
    # every neighbour of the origin is on the rim, so two black neighbours suffice
    assert exact_event_probability(ball1, lambda c: has_backbone_event(c, ball1)) == 1 - Fraction(7, 64)


def test_one_arm_from_origin_on_unit_ball(ball1):
    assert exact_event_probability(ball1, lambda c: has_origin_arm(c, ball1)) == Fraction(63, 128)


def test_single_site_region():
    assert exact_named_event("one", RegionSpec.ball(0)) == Fraction(1, 2)
    region = build_region(RegionSpec.ball(0))
    impossible = ArmQuery(region, (0,), region.rim, Color.BLACK, 2)
    assert exact_event_count(region, lambda c: max_disjoint_arms(c, impossible) >= 2) == (0, 2)


def test_bww_constructed_split():
    region = build_region(RegionSpec.annulus(2, 10))
    upper = np.array([region.coord(i)[1] > 0 for i in range(region.size)])
    assert has_bww_event(Coloring(upper), region)
    assert not has_bww_event(uniform_coloring(region, False), region)
    assert not has_bww_event(uniform_coloring(region, True), region)


def test_bb_crossing_constructed():
    region = build_region(RegionSpec.annulus(2, 10))
    # two black spokes along the positive and negative x-axis
    spokes = np.array([region.coord(i)[1] == 0 for i in range(region.size)])
    assert has_bb_crossing(Coloring(spokes), region)
    one_spoke = np.array([region.coord(i)[1] == 0 and region.coord(i)[0] > 0 for i in range(region.size)])
    assert not has_bb_crossing(Coloring(one_spoke), region)


def test_query_validation(ball1, small_annulus):
    with pytest.raises(DomainError):
        ArmQuery(ball1, (0,), ball1.rim, Color.BLACK, 0)
    with pytest.raises(DomainError):
        ArmQuery(ball1, (0,), ball1.rim, Color.BLACK, MAX_ARMS + 1)
    with pytest.raises(DomainError):
        ArmQuery(ball1, (0,), small_annulus.rim)
    with pytest.raises(DomainError):
        crossing_query(ball1)
    with pytest.raises(DomainError):
        crossing_query(build_region(RegionSpec.annulus(3, 4)))
    with pytest.raises(DomainError):
        backbone_query(small_annulus)
    with pytest.raises(DomainError):
        origin_query(small_annulus)
    with pytest.raises(DomainError):
        max_disjoint_arms(Coloring(np.ones(3, dtype=bool)), crossing_query(small_annulus))


def test_event_lookup():
    assert event_function("bb", RegionSpec.ball(4)) is not event_function("bb", RegionSpec.annulus(1, 4))
    with pytest.raises(DomainError):
        event_function("bww", RegionSpec.ball(4))


def test_enumeration_capacity():
    with pytest.raises(CapacityError):
        exact_named_event("bb", RegionSpec.ball(3))


@pytest.mark.slow
def test_exhaustive_detectors_on_annulus(small_annulus):
    two = crossing_query(small_annulus, Color.BLACK, 2)
    one = crossing_query(small_annulus)
    white = crossing_query(small_annulus, Color.WHITE, 2)
    for coloring in enumerate_colorings(small_annulus):
        flow = max_disjoint_arms(coloring, two)
        assert flow == cut_oracle(coloring, two)
        assert (flow >= 2) == (not defect_circuit_exists(coloring, two))
        assert has_one_arm(coloring, one) == connected(one, coloring.black)
        expected_bww = connected(one, coloring.black) and cut_oracle(coloring, white) >= 2
        assert has_bww_event(coloring, small_annulus) == expected_bww


@pytest.mark.slow
def test_exhaustive_backbone_on_ball(ball2):
    query = backbone_query(ball2)
    hits = 0
    for mask in range(1 << ball2.size):
        coloring = coloring_from_mask(ball2.size, mask)
        event = has_backbone_event(coloring, ball2)
        assert event == (cut_oracle(coloring, query) >= 2)
        hits += event
    assert exact_named_event("bb", RegionSpec.ball(2)) == Fraction(hits, 1 << ball2.size)
