"""Hereditary families of level sets and their rank.

A finite set F of levels belongs to the family when one witness sequence
(I_q) works simultaneously for every level in F (each level's set contains
prefix ++ product of the I_q up to it).  Removing levels from a member keeps
the same witness valid, so the family plus the empty set is hereditary; its
rank measures the longest chains of extensions and is the finite shadow of
the ordinal rank driving the infinite result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .correlation import DEFAULT_NODE_BUDGET
from .errors import BudgetExceededError, DomainError, NotFoundError
from .extraction import LevelFamily
from .grid import Point, PointSet, SubgridWitness, fiber


@dataclass(frozen=True)
class FiniteSetFamily:
    """A family of nonempty finite subsets of a finite ground set."""

    ground: tuple[int, ...]
    members: frozenset[frozenset[int]]

    def __init__(self, ground: Iterable[int], members: Iterable[Iterable[int]]):
        g = tuple(sorted(set(int(x) for x in ground)))
        ms = frozenset(frozenset(int(x) for x in f) for f in members)
        gset = set(g)
        for f in ms:
            if not f:
                raise DomainError("members must be nonempty")
            if not f <= gset:
                raise DomainError(f"member {sorted(f)} leaves the ground set")
        object.__setattr__(self, "ground", g)
        object.__setattr__(self, "members", ms)

    def is_hereditary(self) -> bool:
        """Every nonempty subset of a member is a member."""
        for f in self.members:
            for size in range(1, len(f)):
                for sub in itertools.combinations(sorted(f), size):
                    if frozenset(sub) not in self.members:
                        return False
        return True


def _end_extends(f: frozenset, g: frozenset) -> bool:
    """g properly end-extends f: f < g and everything new comes after max f."""
    if not f < g:
        return False
    if not f:
        return True
    top = max(f)
    return all(x > top for x in g - f)


def hereditary_rank(fam: FiniteSetFamily, order: str = "end_extension") -> int:
    """Recursive rank of the family with the empty set adjoined as root.

    Maximal members have rank 0; otherwise 1 + the max over proper
    extensions; the family's rank is the root's.  `order` picks the
    extension relation: "end_extension" (new elements beyond the max,
    the default) or "inclusion" (any proper superset).
    """
    if order == "end_extension":
        extends = _end_extends
    elif order == "inclusion":
        def extends(f, g):
            return f < g
    else:
        raise DomainError(f"unknown order {order!r}")
    if not fam.is_hereditary():
        raise DomainError("family is not hereditary")
    members = sorted(fam.members, key=lambda f: (len(f), sorted(f)))
    memo: dict[frozenset, int] = {}
    for f in reversed(members):  # larger sets first: extensions already ranked
        above = [memo[g] for g in memo if extends(f, g)]
        memo[f] = 1 + max(above) if above else 0
    roots = [memo[g] for g in memo if extends(frozenset(), g)]
    return 1 + max(roots) if roots else 0


def _initial_states(levels: LevelFamily, i: int, gamma: Optional[PointSet],
                    keys: Sequence[int]) -> dict[int, PointSet]:
    if gamma is None:
        if i != levels.start:
            raise DomainError(
                f"no prefix given, so the cut {i} must equal the start "
                f"{levels.start}"
            )
        return {k: levels.levels[k] for k in keys}
    if gamma.shape.start != levels.start or gamma.shape.end != i:
        raise DomainError(
            f"prefix must cover [{levels.start}, {i}), covers "
            f"[{gamma.shape.start}, {gamma.shape.end})"
        )
    if len(gamma) == 0:
        raise DomainError("prefix set is empty; containment would be vacuous")
    states = {}
    for k in keys:
        acc: Optional[PointSet] = None
        for idx in gamma.indices():
            x = Point(gamma.shape, gamma.shape.coords_of(idx))
            piece = fiber(levels.levels[k], x)
            acc = piece if acc is None else acc.intersection(piece)
        states[k] = acc
    return states


def _common_witness_dfs(levels: LevelFamily, i: int,
                        states: dict[int, PointSet],
                        targets: Sequence[int], top: int,
                        node_budget: int) -> Optional[list[tuple[int, ...]]]:
    """DFS over coordinates i..top-1 maintaining per-level suffix sets.

    states[k] holds the suffixes still completing every chosen prefix cell of
    level k; a level is satisfied when its state reaches the empty product
    nonempty, and any empty state prunes the branch.
    """
    sizes = levels.sizes
    nodes = 0

    def dfs(q: int, active: dict[int, PointSet]) -> Optional[list[tuple[int, ...]]]:
        nonlocal nodes
        if q == top:
            return []
        n_q = sizes[q - levels.start]
        m_q = targets[q - levels.start]
        # every active state starts at q; borrow the one-coordinate shape
        one = next(iter(active.values())).shape.prefix(q + 1)
        for combo in itertools.combinations(range(n_q), m_q):
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"common-witness search exceeded {node_budget} nodes"
                )
            new_states = {}
            ok = True
            for k, a in active.items():
                pieces = [fiber(a, Point(one, (x,))) for x in combo]
                nxt = pieces[0]
                for piece in pieces[1:]:
                    nxt = nxt.intersection(piece)
                if k == q + 1:
                    if nxt.bits != 1:  # empty-product set: the single cell
                        ok = False
                        break
                else:
                    if nxt.bits == 0:
                        ok = False
                        break
                    new_states[k] = nxt
            if not ok:
                continue
            rest = dfs(q + 1, new_states)
            if rest is not None:
                return [combo] + rest
        return None

    return dfs(i, states)


def family_member(levels_subset: Iterable[int], i: int,
                  gamma: Optional[PointSet], levels: LevelFamily,
                  targets: Sequence[int],
                  node_budget: int = DEFAULT_NODE_BUDGET
                  ) -> Optional[SubgridWitness]:
    """One witness over [i, max F) valid simultaneously for every level in F.

    F must be a nonempty subset of the family's levels with min F > i; gamma
    covers [start, i) (None when i is the start).  Returns None when no
    common witness exists; the search is exact within the node budget.
    """
    f = tuple(sorted(set(int(k) for k in levels_subset)))
    if not f:
        raise DomainError("the level subset must be nonempty")
    if any(k not in levels.levels for k in f):
        raise DomainError(f"levels {f} not all present in the family")
    if f[0] <= i:
        raise DomainError(f"min of {f} must exceed the cut {i}")
    ms = tuple(int(m) for m in targets)
    if len(ms) < f[-1] - levels.start:
        raise DomainError(
            f"{len(ms)} targets cannot cover coordinates up to {f[-1]}"
        )
    states = _initial_states(levels, i, gamma, f)
    found = _common_witness_dfs(levels, i, states, ms, f[-1], node_budget)
    if found is None:
        return None
    return SubgridWitness(i, tuple(found))


def enumerate_family(i: int, gamma: Optional[PointSet], levels: LevelFamily,
                     targets: Sequence[int], cap: int,
                     node_budget: int = DEFAULT_NODE_BUDGET) -> FiniteSetFamily:
    """All level subsets of size <= cap admitting a common witness.

    Hereditariness prunes the enumeration: a set with a non-member subset
    cannot be a member.
    """
    if cap < 1:
        raise DomainError(f"cap must be >= 1, got {cap}")
    ground = [k for k in levels.keys() if k > i]
    members: set[frozenset[int]] = set()
    for size in range(1, min(cap, len(ground)) + 1):
        for combo in itertools.combinations(ground, size):
            fs = frozenset(combo)
            if size > 1 and any(fs - {k} not in members for k in combo):
                continue
            if family_member(combo, i, gamma, levels, targets, node_budget) is not None:
                members.add(fs)
    return FiniteSetFamily(ground, members)


def common_witness(levels: LevelFamily, targets: Sequence[int],
                   delta: Fraction, t: int,
                   node_budget: int = DEFAULT_NODE_BUDGET
                   ) -> tuple[SubgridWitness, tuple[int, ...]]:
    """One witness serving at least t levels at once.

    Level subsets are explored in decreasing cardinality (then lexicographic)
    order, so the first hit maximizes the number of kept levels; per subset
    the coordinate DFS of family_member runs.  `delta` is the claimed density
    floor of the family; it is recorded for callers but the search is exact
    either way.  Raises NotFoundError when no subset of size >= t works.
    """
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")
    keys = levels.keys()
    if not 1 <= t <= len(keys):
        raise DomainError(f"t must be in [1, {len(keys)}], got {t}")
    for size in range(len(keys), t - 1, -1):
        for combo in itertools.combinations(keys, size):
            witness = family_member(combo, levels.start, None, levels,
                                    targets, node_budget)
            if witness is not None:
                return witness, tuple(combo)
    raise NotFoundError(f"no common witness covers {t} of the {len(keys)} levels")
