"""Finding heavily-intersecting subfamilies among events of known measure.

Given N events each of measure >= eps, some k of them intersect in measure
>= theta^k as soon as N reaches sigma(theta, eps, k).  The searches here make
that guarantee executable: an exhaustive lexicographic DFS with measure
pruning (complete), a greedy pair-and-extend heuristic (fast, sound, not
complete), and a plain argmax enumeration used as the oracle.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import BudgetExceededError, DomainError, NotFoundError

#: Default cap on candidate evaluations in one search.
DEFAULT_NODE_BUDGET = 2_000_000


class EventFamily:
    """Events over a finite ground set, each stored as an integer bitmask.

    Weights default to uniform; when given they must be nonnegative rationals
    summing exactly to 1.
    """

    def __init__(self, ground_size: int, events: Sequence[int | Iterable[int]],
                 weights: Optional[Sequence[Fraction]] = None):
        if ground_size < 1:
            raise DomainError(f"ground size must be >= 1, got {ground_size}")
        self.ground_size = ground_size
        full = (1 << ground_size) - 1
        masks = []
        for e in events:
            mask = e if isinstance(e, int) else sum(1 << i for i in set(e))
            if mask < 0 or mask & ~full:
                raise DomainError("event has points outside the ground set")
            masks.append(mask)
        self.events: tuple[int, ...] = tuple(masks)
        if weights is not None:
            ws = tuple(Fraction(w) for w in weights)
            if len(ws) != ground_size:
                raise DomainError(
                    f"need {ground_size} weights, got {len(ws)}"
                )
            if any(w < 0 for w in ws) or sum(ws) != 1:
                raise DomainError("weights must be nonnegative and sum exactly to 1")
            self.weights: Optional[tuple[Fraction, ...]] = ws
        else:
            self.weights = None

    def __len__(self) -> int:
        return len(self.events)

    def mask_measure(self, mask: int) -> Fraction:
        if self.weights is None:
            return Fraction(mask.bit_count(), self.ground_size)
        total = Fraction(0)
        while mask:
            low = mask & -mask
            total += self.weights[low.bit_length() - 1]
            mask ^= low
        return total

    def event_measure(self, i: int) -> Fraction:
        return self.mask_measure(self.events[i])


def intersection_measure(fam: EventFamily, indices: Sequence[int]) -> Fraction:
    """Exact measure of the intersection of the indexed events."""
    idx = tuple(indices)
    if not idx:
        raise DomainError("index set must be nonempty")
    mask = (1 << fam.ground_size) - 1
    for i in idx:
        if not 0 <= i < len(fam):
            raise DomainError(f"event index {i} out of range [0, {len(fam)})")
        mask &= fam.events[i]
    return fam.mask_measure(mask)


def find_correlated(fam: EventFamily, k: int, theta: Fraction,
                    mode: str = "exhaustive",
                    node_budget: int = DEFAULT_NODE_BUDGET) -> tuple[int, ...]:
    """Find k event indices whose intersection has measure >= theta^k.

    Exhaustive mode returns the lexicographically least such index set or
    raises NotFoundError (complete: failure means no such set exists).
    Greedy mode seeds with the heaviest pair and extends by best single
    index; sound but not complete.  k = 1 is a convenience extension beyond
    the k >= 2 guarantee regime: it returns the first index of measure
    >= theta.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if mode not in ("exhaustive", "greedy"):
        raise DomainError(f"unknown mode {mode!r}")
    if k > len(fam):
        raise NotFoundError(f"family has {len(fam)} events, needs {k}")
    target = theta**k
    if k == 1:
        for i in range(len(fam)):
            if fam.event_measure(i) >= target:
                return (i,)
        raise NotFoundError(f"no single event has measure >= {target}")
    if mode == "greedy":
        return _find_greedy(fam, k, target)
    return _find_exhaustive(fam, k, target, node_budget)


def _meets(fam: EventFamily, mask: int, target: Fraction) -> bool:
    if fam.weights is None:
        # mask_count / ground >= p/q  <=>  mask_count * q >= p * ground
        return (mask.bit_count() * target.denominator
                >= target.numerator * fam.ground_size)
    return fam.mask_measure(mask) >= target


def _find_exhaustive(fam: EventFamily, k: int, target: Fraction,
                     node_budget: int) -> tuple[int, ...]:
    n = len(fam)
    full = (1 << fam.ground_size) - 1
    nodes = 0

    def dfs(start: int, chosen: list[int], mask: int) -> Optional[tuple[int, ...]]:
        nonlocal nodes
        if len(chosen) == k:
            return tuple(chosen)
        for i in range(start, n - (k - len(chosen)) + 1):
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"exhaustive search exceeded {node_budget} nodes"
                )
            new_mask = mask & fam.events[i]
            # intersection measure only shrinks; prune below the target
            if not _meets(fam, new_mask, target):
                continue
            chosen.append(i)
            found = dfs(i + 1, chosen, new_mask)
            if found is not None:
                return found
            chosen.pop()
        return None

    found = dfs(0, [], full)
    if found is None:
        raise NotFoundError(
            f"no {k}-subset reaches intersection measure {target}"
        )
    assert intersection_measure(fam, found) >= target
    return found


def _find_greedy(fam: EventFamily, k: int, target: Fraction) -> tuple[int, ...]:
    n = len(fam)
    if n < 2:
        raise NotFoundError("greedy mode needs at least two events")
    best_pair, best_mask, best_measure = None, 0, Fraction(-1)
    for i, j in itertools.combinations(range(n), 2):
        mask = fam.events[i] & fam.events[j]
        measure = fam.mask_measure(mask)
        if measure > best_measure:
            best_pair, best_mask, best_measure = (i, j), mask, measure
    chosen = list(best_pair)
    mask = best_mask
    while len(chosen) < k:
        taken = set(chosen)
        ext_best, ext_mask, ext_measure = None, 0, Fraction(-1)
        for i in range(n):
            if i in taken:
                continue
            cand = mask & fam.events[i]
            measure = fam.mask_measure(cand)
            if measure > ext_measure:
                ext_best, ext_mask, ext_measure = i, cand, measure
        if ext_best is None:
            raise NotFoundError("greedy extension ran out of events")
        chosen.append(ext_best)
        mask = ext_mask
    if not _meets(fam, mask, target):
        raise NotFoundError(
            f"greedy candidate reaches only {fam.mask_measure(mask)}, "
            f"needs {target}"
        )
    result = tuple(sorted(chosen))
    assert intersection_measure(fam, result) >= target
    return result


def best_correlated(fam: EventFamily, k: int,
                    node_budget: int = DEFAULT_NODE_BUDGET
                    ) -> tuple[tuple[int, ...], Fraction]:
    """The k-subset maximizing intersection measure (lex-least among ties).

    Plain enumeration with no pruning; serves as the independent oracle for
    find_correlated.
    """
    if not 1 <= k <= len(fam):
        raise DomainError(f"k must be in [1, {len(fam)}], got {k}")
    best: Optional[tuple[int, ...]] = None
    best_measure = Fraction(-1)
    nodes = 0
    for combo in itertools.combinations(range(len(fam)), k):
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceededError(f"enumeration exceeded {node_budget} subsets")
        measure = intersection_measure(fam, combo)
        if measure > best_measure:
            best, best_measure = combo, measure
    assert best is not None
    return best, best_measure
