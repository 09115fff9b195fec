"""Subgrid extraction, per-level batches, and the split-and-stabilize step."""

import itertools
from fractions import Fraction as Fr

import pytest

from densegrid import (
    DomainError,
    GridShape,
    LevelFamily,
    NotFoundError,
    Point,
    PointSet,
    SubgridWitness,
    brute_force_subgrid,
    concat_sets,
    contains_product,
    density_schedule,
    eps_prime,
    extract_per_level,
    extract_subgrid,
    fubini_split,
    gen_planted,
    gen_random_levels,
    guarantee_report,
    split_and_extract,
    t_bound,
)
from densegrid.workbench import SeededGenerator


def random_set(shape, seed, keep_ratio=0.5):
    gen = SeededGenerator(seed)
    threshold = int(keep_ratio * (1 << 64))
    return PointSet.from_indices(
        shape, (i for i in range(shape.total) if gen.next_u64() < threshold))


OFF_DIAG = PointSet.from_points(
    GridShape((3, 3)), [(i, j) for i in range(3) for j in range(3) if i != j])


# -- density schedule ---------------------------------------------------------

def test_density_schedule_examples():
    assert density_schedule(Fr(1, 2), (2, 2)).values == (
        Fr(1, 2), Fr(1, 64), Fr(1, 65536))
    assert density_schedule(Fr(1), (2,)).values == (Fr(1), Fr(1, 16))


def test_density_schedule_matches_closed_form():
    for eps in (Fr(1), Fr(1, 2), Fr(2, 3), Fr(3, 7)):
        for m in itertools.chain.from_iterable(
                itertools.product((1, 2, 3), repeat=r) for r in (1, 2, 3)):
            values = density_schedule(eps, m).values
            for q in range(len(m) + 1):
                assert values[q] == eps_prime(eps, m[:q] + (1,)), (eps, m, q)


# -- extract_subgrid ----------------------------------------------------------

@pytest.mark.parametrize("mode", ["proof", "exhaustive"])
def test_extract_full_set(mode):
    shape = GridShape((4, 5, 3))
    witness = extract_subgrid(PointSet.full(shape), (2, 3, 2), Fr(1, 2), mode)
    assert witness.subsets == ((0, 1), (0, 1, 2), (0, 1))


@pytest.mark.parametrize("mode", ["proof", "exhaustive"])
def test_extract_off_diagonal_not_found(mode):
    with pytest.raises(NotFoundError):
        extract_subgrid(OFF_DIAG, (2, 2), Fr(2, 3), mode)


def test_extract_planted_with_noise():
    shape = GridShape((5, 5))
    planted = [(0, 1), (3, 4)]
    cells = set(itertools.product(*planted))
    gen = SeededGenerator(123)
    while len(cells) < 13:  # density 13/25 >= 1/2
        cells.add((gen.next_below(5), gen.next_below(5)))
    d = PointSet.from_points(shape, cells)
    witness = extract_subgrid(d, (2, 2), Fr(1, 2), "exhaustive")
    assert contains_product(d, witness)


def test_extract_validates_arguments():
    d = PointSet.full(GridShape((3, 3)))
    with pytest.raises(DomainError):
        extract_subgrid(d, (2,), Fr(1, 2))
    with pytest.raises(DomainError):
        extract_subgrid(d, (2, 4), Fr(1, 2))
    with pytest.raises(DomainError):
        extract_subgrid(d, (2, 2), Fr(3, 2))
    with pytest.raises(DomainError):
        extract_subgrid(d, (2, 2), Fr(1, 2), "telepathy")


def test_extract_single_coordinate():
    d = PointSet.from_indices(GridShape((10,)), [1, 3, 4, 8])
    witness = extract_subgrid(d, (3,), Fr(2, 5), "proof")
    assert witness.subsets == ((1, 3, 4),)


def test_brute_force_examples():
    full = PointSet.full(GridShape((3, 3)))
    assert brute_force_subgrid(full, (2, 2)).subsets == ((0, 1), (0, 1))
    assert brute_force_subgrid(OFF_DIAG, (2, 2)) is None


def test_exhaustive_agrees_with_brute_force():
    gen = SeededGenerator(2024)
    for trial in range(60):
        ndim = 1 + gen.next_below(3)
        sizes = tuple(2 + gen.next_below(4) for _ in range(ndim))
        shape = GridShape(sizes)
        d = random_set(shape, gen.next_u64(),
                       keep_ratio=0.3 + 0.6 * gen.next_below(100) / 100)
        targets = tuple(min(2, n) for n in sizes)
        oracle = brute_force_subgrid(d, targets)
        try:
            found = extract_subgrid(d, targets, Fr(1, 2), "exhaustive")
            assert oracle is not None, trial
            assert found.subsets == oracle.subsets, trial
        except NotFoundError:
            assert oracle is None, trial


def test_proof_mode_at_bound_single_coordinate():
    # |H_0| = 88 = t_bound(1/2, (2)): guaranteed for every set of density 1/2
    assert t_bound(Fr(1, 2), (2,)) == 88
    for seed in range(10):
        inst = gen_random_levels(seed, (88,), Fr(1, 2), [1])
        witness = extract_subgrid(inst.levels[1], (2,), Fr(1, 2), "proof")
        assert contains_product(inst.levels[1], witness)


def test_guarantee_report():
    rows = guarantee_report(Fr(1, 2), (2, 2), (88, 2796288))
    assert [r["guaranteed"] for r in rows] == [True, True]
    rows = guarantee_report(Fr(1, 2), (2, 2), (87, 10))
    assert [r["guaranteed"] for r in rows] == [False, False]
    rows = guarantee_report(Fr(1, 2), (1, 2), (88, 10))
    assert rows[0]["threshold"] is None


# -- extract_per_level ----------------------------------------------------------

def full_levels(sizes, keys, start=0):
    return LevelFamily(start, sizes, {
        k: PointSet.full(GridShape(sizes[: k - start], start)) for k in keys})


def test_per_level_full():
    levels = full_levels((3, 3, 3), [1, 2, 3])
    out = extract_per_level(levels, (2, 2, 2), Fr(1, 2))
    assert set(out) == {1, 2, 3}
    for k, witness in out.items():
        assert witness.subsets == tuple((0, 1) for _ in range(k))


def test_per_level_planted():
    inst, planted = gen_planted(5, (4, 4, 4), (2, 2, 2), Fr(1, 10), [2, 3])
    out = extract_per_level(inst.level_family(), inst.targets, inst.delta,
                            mode="exhaustive")
    for k, witness in out.items():
        assert witness is not None
        assert contains_product(inst.levels[k], witness)


def test_per_level_one_bad_level_does_not_poison_others():
    levels = LevelFamily(0, (3, 3), {
        1: PointSet.full(GridShape((3,))),
        2: OFF_DIAG,
    })
    out = extract_per_level(levels, (2, 2), Fr(2, 3), mode="exhaustive")
    assert out[1] is not None
    assert out[2] is None


# -- fubini split -----------------------------------------------------------------

def test_fubini_full_levels():
    levels = full_levels((2, 3, 2), [2, 3])
    gamma, kept, residual = fubini_split(levels, 1, Fr(1, 2), Fr(1))
    assert gamma == PointSet.full(GridShape((2,)))
    assert kept == [2, 3]
    for k, d in residual.levels.items():
        assert d == PointSet.full(d.shape)


def test_fubini_disjoint_patterns_keeps_majority_side():
    # level 2 forces prefix pattern {0}, level 3 forces {1}; the 1-1 tie breaks
    # to the lexicographically least pattern
    d2 = PointSet.from_points(GridShape((2, 2)), [(0, 0), (0, 1)])
    d3 = PointSet.from_points(GridShape((2, 2, 2)),
                              [(1, y, z) for y in range(2) for z in range(2)])
    levels = LevelFamily(0, (2, 2, 2), {2: d2, 3: d3})
    gamma, kept, residual = fubini_split(levels, 1, Fr(1, 4), Fr(1, 2))
    assert kept == [2]
    assert gamma.indices() == [0]
    assert concat_sets(gamma, residual.levels[2]).issubset(d2)


def test_fubini_majority_of_three():
    d_a = PointSet.from_points(GridShape((2, 2)), [(0, 0), (0, 1)])
    d_b = PointSet.from_points(GridShape((2, 2, 2)),
                               [(0, y, z) for y in range(2) for z in range(2)])
    d_c = PointSet.from_points(
        GridShape((2, 2, 2, 2)),
        [(1, y, z, w) for y in range(2) for z in range(2) for w in range(2)])
    levels = LevelFamily(0, (2, 2, 2, 2), {2: d_a, 3: d_b, 4: d_c})
    gamma, kept, _ = fubini_split(levels, 1, Fr(1, 4), Fr(1, 2))
    assert kept == [2, 3]
    assert gamma.indices() == [0]


def test_fubini_guarantees_on_random_instances():
    gen = SeededGenerator(99)
    theta, eps = Fr(1, 4), Fr(1, 2)
    done = 0
    while done < 25:
        seed = gen.next_u64()
        sizes = (2, 2 + gen.next_below(2), 2, 2)
        keys = [2 + gen.next_below(2), 4]
        inst = gen_random_levels(seed, sizes, eps, sorted(set(keys)))
        levels = inst.level_family()
        cut = 1 + gen.next_below(min(levels.keys()) - 1)
        gamma, kept, residual = fubini_split(levels, cut, theta, eps)
        r = gamma.shape.total
        assert gamma.density() >= theta
        assert kept
        for k in kept:
            d_res = residual.levels[k]
            assert d_res.density() >= (eps - theta) / 2**r
            assert concat_sets(gamma, d_res).issubset(levels.levels[k])
        done += 1


def test_fubini_rejects_low_density_level():
    thin = PointSet.from_points(GridShape((2, 2)), [(0, 0)])
    levels = LevelFamily(0, (2, 2), {2: thin})
    with pytest.raises(NotFoundError):
        fubini_split(levels, 1, Fr(1, 4), Fr(1, 2))


def test_fubini_validates_cut():
    levels = full_levels((2, 2), [2])
    with pytest.raises(DomainError):
        fubini_split(levels, 0, Fr(1, 4), Fr(1, 2))
    with pytest.raises(DomainError):
        fubini_split(levels, 2, Fr(1, 4), Fr(1, 2))
    with pytest.raises(DomainError):
        fubini_split(levels, 1, Fr(1, 2), Fr(1, 2))


# -- split_and_extract -----------------------------------------------------------

def test_split_and_extract_full():
    levels = full_levels((2, 3, 2), [2, 3])
    gamma, kept, witnesses = split_and_extract(levels, 1, Fr(1, 2), Fr(1),
                                               (2, 2, 2))
    assert gamma == PointSet.full(GridShape((2,)))
    assert kept == [2, 3]
    assert witnesses[2].subsets == ((0, 1),)
    assert witnesses[3].subsets == ((0, 1), (0, 1))


def test_split_and_extract_planted():
    # plant gamma* ++ product(I*) in two levels behind the cut
    prefix_shape = GridShape((3,))
    gamma_star = PointSet.from_points(prefix_shape, [(0,), (2,)])
    i_star = [(1, 3), (0, 2)]
    levels = {}
    for k in (2, 3):
        suffix_cells = list(itertools.product(*(s for s in i_star[: k - 1])))
        suffix_shape = GridShape((4, 4)[: k - 1], 1)
        block = PointSet.from_points(suffix_shape, suffix_cells)
        levels[k] = concat_sets(gamma_star, block)
    fam = LevelFamily(0, (3, 4, 4), levels)
    eps = min(d.density() for d in levels.values())
    gamma, kept, witnesses = split_and_extract(
        fam, 1, eps / 2, eps, (2, 2, 2), mode="exhaustive")
    assert kept == [2, 3]
    for k in kept:
        w = witnesses[k]
        assert w is not None
        assert contains_product(levels[k], w, prefix=gamma)
