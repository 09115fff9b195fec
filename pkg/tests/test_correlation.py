"""Correlated-subfamily search against the enumeration oracle."""

from fractions import Fraction as Fr

import pytest

from densegrid import (
    BudgetExceededError,
    DomainError,
    EventFamily,
    NotFoundError,
    best_correlated,
    find_correlated,
    intersection_measure,
    sigma,
)
from densegrid.workbench import SeededGenerator

GROUND = 64


def random_family(seed: int, n_events: int, min_measure: Fr,
                  ground: int = GROUND) -> EventFamily:
    """Events of measure >= min_measure: a random floor-size subset each."""
    gen = SeededGenerator(seed)
    floor = -((-min_measure.numerator * ground) // min_measure.denominator)
    events = []
    for _ in range(n_events):
        arr = list(range(ground))
        size = floor + gen.next_below(ground - floor + 1)
        for i in range(size):
            j = i + gen.next_below(ground - i)
            arr[i], arr[j] = arr[j], arr[i]
        events.append(set(arr[:size]))
    return EventFamily(ground, events)


def test_intersection_measure_basics():
    fam = EventFamily(4, [{0, 1}, {2, 3}, {1, 2}])
    assert intersection_measure(fam, [0]) == Fr(1, 2)
    assert intersection_measure(fam, [0, 1]) == 0
    assert intersection_measure(fam, [0, 2]) == Fr(1, 4)
    with pytest.raises(DomainError):
        intersection_measure(fam, [])
    with pytest.raises(DomainError):
        intersection_measure(fam, [3])


def test_intersection_measure_matches_weight_sum():
    gen = SeededGenerator(5)
    for _ in range(20):
        fam = random_family(gen.next_u64(), 6, Fr(1, 4), ground=24)
        idx = [0, 2, 5]
        mask = fam.events[0] & fam.events[2] & fam.events[5]
        expected = sum(Fr(1, 24) for i in range(24) if mask >> i & 1)
        assert intersection_measure(fam, idx) == expected


def test_weighted_measures():
    weights = [Fr(1, 2), Fr(1, 4), Fr(1, 8), Fr(1, 8)]
    fam = EventFamily(4, [{0, 1}, {1, 2, 3}], weights=weights)
    assert fam.event_measure(0) == Fr(3, 4)
    assert intersection_measure(fam, [0, 1]) == Fr(1, 4)
    with pytest.raises(DomainError):
        EventFamily(4, [{0}], weights=[Fr(1, 2)] * 4)  # sums to 2


def test_identical_events():
    fam = EventFamily(4, [{0, 1}, {0, 1}])
    found = find_correlated(fam, 2, Fr(1, 4))
    assert found == (0, 1)
    assert intersection_measure(fam, found) == Fr(1, 2) >= Fr(1, 16)


def test_all_full_events():
    fam = EventFamily(8, [(1 << 8) - 1] * 5)
    for k in (1, 2, 3, 5):
        assert find_correlated(fam, k, Fr(1, 2)) == tuple(range(k))


def test_nested_events_best_pair():
    fam = EventFamily(8, [{0, 1, 2, 3, 4, 5}, {0, 1, 2, 3}, {0, 1}])
    best, measure = best_correlated(fam, 2)
    assert best == (0, 1) and measure == Fr(1, 2)


def test_k1_convenience():
    fam = EventFamily(4, [{0}, {0, 1, 2}])
    assert find_correlated(fam, 1, Fr(1, 2)) == (1,)
    with pytest.raises(NotFoundError):
        find_correlated(fam, 1, Fr(7, 8))


def test_exhaustive_matches_oracle():
    gen = SeededGenerator(77)
    for trial in range(60):
        n = 4 + gen.next_below(10)
        k = 2 + gen.next_below(2)
        fam = random_family(gen.next_u64(), n, Fr(1, 8), ground=32)
        theta = Fr(1 + gen.next_below(6), 8)
        _, best_measure = best_correlated(fam, k)
        try:
            found = find_correlated(fam, k, theta, mode="exhaustive")
            assert intersection_measure(fam, found) >= theta**k
            assert best_measure >= theta**k
        except NotFoundError:
            assert best_measure < theta**k, (trial, n, k, theta)


def test_exhaustive_returns_lexicographically_least():
    fam = EventFamily(4, [{0}, {0, 1}, {0, 1}, {0, 1}])
    # theta^2 = 25/64: pairs with event 0 reach only 1/4, the rest reach 1/2
    assert find_correlated(fam, 2, Fr(5, 8)) == (1, 2)
    # with a lower bar the lexicographically first qualifying pair wins
    assert find_correlated(fam, 2, Fr(1, 2)) == (0, 1)


def test_greedy_sound_or_notfound():
    gen = SeededGenerator(13)
    for _ in range(40):
        fam = random_family(gen.next_u64(), 8, Fr(1, 4), ground=32)
        theta = Fr(1, 4)
        try:
            found = find_correlated(fam, 3, theta, mode="greedy")
            assert intersection_measure(fam, found) >= theta**3
        except NotFoundError:
            pass  # greedy is not complete


def test_guarantee_at_sigma_family_size():
    # the executable form of the correlation guarantee, small sample here
    triples = [(Fr(1, 4), Fr(1, 2), 2), (Fr(1, 8), Fr(1, 4), 2),
               (Fr(1, 4), Fr(1, 2), 3)]
    for theta, eps, k in triples:
        n = sigma(theta, eps, k)
        for seed in range(40):
            fam = random_family(seed, n, eps)
            found = find_correlated(fam, k, theta, mode="exhaustive")
            assert intersection_measure(fam, found) >= theta**k


def test_not_found_only_when_preconditions_violated():
    # two disjoint events cannot reach any positive target at k = 2
    fam = EventFamily(4, [{0, 1}, {2, 3}])
    with pytest.raises(NotFoundError):
        find_correlated(fam, 2, Fr(1, 4))
    with pytest.raises(NotFoundError):
        find_correlated(fam, 3, Fr(1, 4))  # k exceeds the family size


def test_budget_exceeded():
    # each event misses one point, so every 10-subset passes (22/32 >= theta^12)
    # and every 11th addition fails (21/32 < theta^12): a deep fruitless search
    fam = EventFamily(32, [set(range(32)) - {i} for i in range(24)])
    with pytest.raises(BudgetExceededError):
        find_correlated(fam, 12, Fr(31, 32), node_budget=50)
    with pytest.raises(BudgetExceededError):
        best_correlated(fam, 12, node_budget=100)


def test_mode_validation():
    fam = EventFamily(4, [{0}])
    with pytest.raises(DomainError):
        find_correlated(fam, 1, Fr(1, 2), mode="quantum")
    with pytest.raises(DomainError):
        find_correlated(fam, 0, Fr(1, 2))
