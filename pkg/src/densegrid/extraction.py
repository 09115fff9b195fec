"""Extracting full combinatorial subgrids from dense sets.

`extract_subgrid` walks coordinates left to right.  At each coordinate it
fibers the current set over the coordinate's values, keeps the values whose
fiber stays dense (the Fubini step), and asks the correlation search for
m_q of them whose fibers intersect heavily; the intersection becomes the
next current set.  Sizes at or above `t_bound` make every step guaranteed;
below them the same procedure runs as a heuristic and failures surface as
NotFoundError.

`fubini_split` is the complementary cut step: classify suffix points by
their prefix-fiber pattern, keep one dense pattern per level, and stabilize
a single pattern across as many levels as possible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, prod
from typing import Optional, Sequence

from .bounds import t_bound
from .correlation import DEFAULT_NODE_BUDGET, EventFamily, find_correlated
from .errors import BudgetExceededError, DomainError, NotFoundError
from .exact import ceil_log2_fraction
from .grid import (
    GridShape,
    Point,
    PointSet,
    SubgridWitness,
    contains_product,
    fiber,
    fibers_by_first_coordinate,
)


@dataclass(frozen=True)
class DensitySchedule:
    """Per-stage density floors: values[q+1] = (values[q]/4) ** m_q."""

    values: tuple[Fraction, ...]


@dataclass(frozen=True)
class LevelFamily:
    """Sets D_k over the prefix products [start, k) of one base shape."""

    start: int
    sizes: tuple[int, ...]
    levels: dict[int, PointSet]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        for k, d in self.levels.items():
            if not self.start < k <= self.start + len(self.sizes):
                raise DomainError(
                    f"level {k} outside ({self.start}, {self.start + len(self.sizes)}]"
                )
            want = GridShape(self.sizes[: k - self.start], self.start)
            if d.shape != want:
                raise DomainError(f"level {k} has shape {d.shape}, expected {want}")

    def keys(self) -> list[int]:
        return sorted(self.levels)

    def shape_for(self, k: int) -> GridShape:
        return GridShape(self.sizes[: k - self.start], self.start)


def density_schedule(eps: Fraction, targets: Sequence[int]) -> DensitySchedule:
    """Run the recurrence e_0 = eps, e_{q+1} = (e_q / 4)^{m_q} through all targets."""
    if not 0 < eps <= 1:
        raise DomainError(f"density_schedule requires 0 < eps <= 1, got {eps}")
    ms = tuple(int(m) for m in targets)
    if not ms or any(m < 1 for m in ms):
        raise DomainError(f"targets must be nonempty and >= 1, got {ms}")
    values = [eps]
    for m in ms:
        values.append((values[-1] / 4) ** m)
    return DensitySchedule(tuple(values))


def _check_extract_args(d: PointSet, targets: Sequence[int]) -> tuple[int, ...]:
    ms = tuple(int(m) for m in targets)
    if len(ms) != len(d.shape.sizes):
        raise DomainError(
            f"{len(ms)} targets for a {len(d.shape.sizes)}-coordinate set"
        )
    if any(m < 1 for m in ms):
        raise DomainError(f"targets must be >= 1, got {ms}")
    if any(m > n for m, n in zip(ms, d.shape.sizes)):
        raise DomainError(f"targets {ms} exceed coordinate sizes {d.shape.sizes}")
    return ms


def guarantee_report(eps: Fraction, targets: Sequence[int],
                     sizes: Sequence[int]) -> list[dict]:
    """Per-coordinate comparison of the actual size against t_bound.

    Informational only: extraction runs regardless, this names the
    coordinates where the success guarantee does not apply.  Thresholds are
    undefined (None) when some target so far is below 2.
    """
    rows = []
    ms = tuple(targets)
    for q, n in enumerate(sizes):
        if all(m >= 2 for m in ms[: q + 1]):
            threshold = t_bound(eps, ms[: q + 1])
            rows.append({"coordinate": q, "size": int(n), "threshold": threshold,
                         "guaranteed": n >= threshold})
        else:
            rows.append({"coordinate": q, "size": int(n), "threshold": None,
                         "guaranteed": False})
    return rows


def extract_subgrid(d: PointSet, targets: Sequence[int], eps: Fraction,
                    mode: str = "proof",
                    node_budget: int = DEFAULT_NODE_BUDGET) -> SubgridWitness:
    """Find value subsets I_q with |I_q| = m_q and prod I_q inside d.

    proof mode follows the guaranteed construction (dense fibers, correlated
    intersection, final direct pick); exhaustive mode searches all witnesses
    in lexicographic order with intersection pruning and is complete.  Raises
    NotFoundError when the respective search fails.
    """
    ms = _check_extract_args(d, targets)
    if not 0 < eps <= 1:
        raise DomainError(f"extract_subgrid requires 0 < eps <= 1, got {eps}")
    if mode == "proof":
        witness = _extract_proof(d, ms, eps)
    elif mode == "exhaustive":
        witness = _extract_exhaustive(d, ms, node_budget)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    assert contains_product(d, witness)
    return witness


def _extract_proof(d: PointSet, ms: tuple[int, ...], eps: Fraction) -> SubgridWitness:
    sched = density_schedule(eps, ms).values
    current = d
    chosen: list[tuple[int, ...]] = []
    for q in range(len(ms) - 1):
        m_q = ms[q]
        floor_half = sched[q] / 2
        fibers = fibers_by_first_coordinate(current)
        suffix_total = fibers[0].shape.total
        dense_values = [
            x for x, f in enumerate(fibers)
            if len(f) * floor_half.denominator >= floor_half.numerator * suffix_total
        ]
        if len(dense_values) < m_q:
            raise NotFoundError(
                f"coordinate {d.shape.start + q}: only {len(dense_values)} values "
                f"keep fiber density >= {floor_half}, need {m_q}"
            )
        fam = EventFamily(suffix_total, [fibers[x].bits for x in dense_values])
        try:
            picked = find_correlated(fam, m_q, sched[q] / 4, mode="greedy")
        except NotFoundError:
            try:
                picked = find_correlated(fam, m_q, sched[q] / 4, mode="exhaustive")
            except NotFoundError as exc:
                raise NotFoundError(
                    f"coordinate {d.shape.start + q}: no {m_q} dense fibers "
                    f"intersect in density >= {(sched[q] / 4) ** m_q}"
                ) from exc
        values = tuple(dense_values[j] for j in picked)
        next_set = fibers[values[0]]
        for x in values[1:]:
            next_set = next_set.intersection(fibers[x])
        chosen.append(values)
        current = next_set
    m_last = ms[-1]
    if len(current) < m_last:
        raise NotFoundError(
            f"final coordinate: {len(current)} candidates remain, need {m_last}"
        )
    chosen.append(tuple(current.smallest_indices(m_last)))
    return SubgridWitness(d.shape.start, tuple(chosen))


def _extract_exhaustive(d: PointSet, ms: tuple[int, ...],
                        node_budget: int) -> SubgridWitness:
    sizes = d.shape.sizes
    nodes = 0

    def dfs(q: int, current: PointSet) -> Optional[list[tuple[int, ...]]]:
        nonlocal nodes
        if q == len(ms) - 1:
            for combo in itertools.combinations(range(sizes[q]), ms[q]):
                nodes += 1
                if nodes > node_budget:
                    raise BudgetExceededError(
                        f"exhaustive extraction exceeded {node_budget} nodes"
                    )
                if all(current.contains_index(x) for x in combo):
                    return [combo]
            return None
        remaining = prod(ms[q + 1:])
        for combo in itertools.combinations(range(sizes[q]), ms[q]):
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"exhaustive extraction exceeded {node_budget} nodes"
                )
            fibers = [fiber(current, Point(current.shape.prefix(
                current.shape.start + 1), (x,))) for x in combo]
            inner = fibers[0]
            for f in fibers[1:]:
                inner = inner.intersection(f)
            # any witness product on the remaining coordinates has prod(m) cells
            if len(inner) < remaining:
                continue
            rest = dfs(q + 1, inner)
            if rest is not None:
                return [combo] + rest
        return None

    found = dfs(0, d)
    if found is None:
        raise NotFoundError("no witness exists for the requested targets")
    return SubgridWitness(d.shape.start, tuple(found))


def brute_force_subgrid(d: PointSet, targets: Sequence[int],
                        node_budget: int = DEFAULT_NODE_BUDGET
                        ) -> Optional[SubgridWitness]:
    """Completeness oracle: plainly enumerate every candidate witness.

    Returns the lexicographically least valid witness or None.  Shares no
    search logic with extract_subgrid; each candidate is checked whole via
    contains_product.
    """
    ms = _check_extract_args(d, targets)
    space = prod(comb(n, m) for n, m in zip(d.shape.sizes, ms))
    if space > node_budget:
        raise BudgetExceededError(
            f"{space} candidate witnesses exceed the {node_budget}-node budget"
        )
    pools = [itertools.combinations(range(n), m)
             for n, m in zip(d.shape.sizes, ms)]
    for combo in itertools.product(*pools):
        witness = SubgridWitness(d.shape.start, combo)
        if contains_product(d, witness):
            return witness
    return None


def extract_per_level(levels: LevelFamily, targets: Sequence[int], eps: Fraction,
                      mode: str = "proof",
                      node_budget: int = DEFAULT_NODE_BUDGET
                      ) -> dict[int, Optional[SubgridWitness]]:
    """Run extract_subgrid independently on every level.

    targets[j] is the demand at coordinate levels.start + j.  A level where
    the search fails maps to None; other levels are unaffected.
    """
    ms = tuple(int(m) for m in targets)
    top = max(levels.keys(), default=levels.start)
    if len(ms) < top - levels.start:
        raise DomainError(
            f"{len(ms)} targets cover coordinates up to {levels.start + len(ms)}, "
            f"level {top} needs {top - levels.start}"
        )
    out: dict[int, Optional[SubgridWitness]] = {}
    for k in levels.keys():
        try:
            out[k] = extract_subgrid(levels.levels[k], ms[: k - levels.start],
                                     eps, mode, node_budget)
        except NotFoundError:
            out[k] = None
    return out


def _bitset_sort_key(mask: int) -> tuple[int, ...]:
    """Ascending member indices; the order behind 'lexicographically least'."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def _density_at_least(count: int, total: int, num: int, den: int,
                      pow2: int = 0) -> bool:
    """count/total >= num / (den * 2^pow2), without materializing 2^pow2."""
    if count == 0:
        return num == 0
    if pow2 == 0:
        return count * den >= num * total
    # count * den * 2^pow2 >= num * total  <=>  pow2 >= log2(num*total/(count*den))
    return pow2 >= ceil_log2_fraction(Fraction(num * total, count * den))


def fubini_split(levels: LevelFamily, cut: int, theta: Fraction, eps: Fraction
                 ) -> tuple[PointSet, list[int], LevelFamily]:
    """Cut every level at `cut`, stabilize one dense prefix pattern.

    Per level: classify suffix points y by their prefix-fiber pattern
    {x : x ++ y in D_k}, discard patterns of density below theta, and keep the
    most populous remaining pattern (ties to the lexicographically least).
    Across levels, keep the pattern chosen by the most levels (same
    tie-break).  Returns (gamma, kept level keys, residual family over
    [cut, .)) with gamma ++ residual_k inside D_k for every kept level,
    density(gamma) >= theta, and residual densities >= (eps - theta) / 2^r
    where r is the prefix cell count.

    Raises NotFoundError if some level's density is below eps; the guarantees
    need that hypothesis.
    """
    if not 0 < theta < eps <= 1:
        raise DomainError(f"need 0 < theta < eps <= 1, got {theta}, {eps}")
    if not levels.levels:
        raise DomainError("level family is empty")
    if cut <= levels.start:
        raise DomainError(f"cut {cut} must exceed the start {levels.start}")
    if any(k <= cut for k in levels.keys()):
        raise DomainError(f"every level must exceed the cut {cut}")
    prefix_shape = GridShape(levels.sizes[: cut - levels.start], levels.start)
    r = prefix_shape.total
    prefix_mask = (1 << r) - 1
    chosen: dict[int, tuple[int, list[int]]] = {}
    for k in levels.keys():
        d = levels.levels[k]
        if d.density() < eps:
            raise NotFoundError(
                f"level {k} has density {d.density()} < {eps}; "
                "the split guarantees need density >= eps"
            )
        suffix_total = d.shape.total // r
        groups: dict[int, list[int]] = {}
        bits = d.bits
        for y in range(suffix_total):
            pattern = bits >> (y * r) & prefix_mask
            if pattern.bit_count() * theta.denominator >= theta.numerator * r:
                groups.setdefault(pattern, []).append(y)
        assert groups, "a level of density >= eps has a theta-dense fiber pattern"
        best = min(groups, key=lambda p: (-len(groups[p]), _bitset_sort_key(p)))
        chosen[k] = (best, groups[best])
    by_pattern: dict[int, list[int]] = {}
    for k, (pattern, _) in chosen.items():
        by_pattern.setdefault(pattern, []).append(k)
    winner = min(by_pattern,
                 key=lambda p: (-len(by_pattern[p]), _bitset_sort_key(p)))
    kept = sorted(by_pattern[winner])
    gamma = PointSet(prefix_shape, winner)
    residual_levels = {}
    gap = eps - theta
    for k in kept:
        suffix_shape = GridShape(
            levels.sizes[cut - levels.start: k - levels.start], cut)
        members = chosen[k][1]
        residual = PointSet.from_indices(suffix_shape, members)
        assert _density_at_least(len(members), suffix_shape.total,
                                 gap.numerator, gap.denominator, r)
        residual_levels[k] = residual
    assert gamma.density() >= theta
    return gamma, kept, LevelFamily(cut, levels.sizes[cut - levels.start:],
                                    residual_levels)


def split_and_extract(levels: LevelFamily, cut: int, theta: Fraction,
                      eps: Fraction, targets: Sequence[int],
                      mode: str = "proof",
                      node_budget: int = DEFAULT_NODE_BUDGET
                      ) -> tuple[PointSet, list[int],
                                 dict[int, Optional[SubgridWitness]]]:
    """fubini_split, then per-level extraction on the residual family.

    targets[j] is the demand at coordinate levels.start + j.  Every returned
    witness satisfies gamma ++ (product over [cut, k)) inside the original
    D_k; verified here.
    """
    gamma, kept, residual = fubini_split(levels, cut, theta, eps)
    r = gamma.shape.total
    if r >= 1 << 20:
        raise BudgetExceededError(
            f"residual density denominator 2^{r} exceeds the bit budget"
        )
    reduced = (eps - theta) / (1 << r)
    ms = tuple(int(m) for m in targets)
    witnesses = extract_per_level(residual, ms[cut - levels.start:], reduced,
                                  mode, node_budget)
    for k, w in witnesses.items():
        if w is not None:
            assert contains_product(levels.levels[k], w, prefix=gamma)
    return gamma, kept, witnesses

