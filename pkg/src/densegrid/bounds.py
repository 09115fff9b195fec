"""Threshold functions for dense-subgrid extraction, with verified growth bounds.

Everything here is exact: densities and thresholds are `Fraction`s, counts are
Python ints.  The functions form a tower:

    sigma(theta, eps, k)   = ceil( k(k-1) / (2 (eps^k - theta^k)) )
    t_bound(eps, m)        = (2/eps') * sigma(eps'/4, eps'/2, m_k)
    q_bound(theta, eps, r, m) = t_bound at the reduced density (1/8)((eps-theta)/2^r)^2
    v_delta(delta, m, n)   = max of t_bound / q_bound over dyadic density grids
    f_chain(delta, m)      = the recursive chain f_k = ceil(v_delta over prefixes)

plus the fast-growing hierarchy `ackermann` and `leq_tower`, which decides
v <= A_2^(n)(x) by repeated ceiling-log reduction without materializing the
tower.
"""

from __future__ import annotations

from fractions import Fraction
from math import prod
from typing import NamedTuple, Sequence

from .errors import BudgetExceededError, DomainError
from .exact import (
    DEFAULT_BIT_BUDGET,
    ceil_fraction,
    ceil_ln_of_reciprocal,
    ceil_log2,
    ceil_log2_fraction,
)

#: Cap on the size of an enumerated dyadic grid (2^s points).
MAX_DYADIC_EXPONENT = 22


class TowerRef(NamedTuple):
    """Denotes A_2^(iterations)(argument) without materializing it.

    iterations = 0 denotes the argument itself.
    """

    iterations: int
    argument: int


def _frac_bits(x: Fraction) -> int:
    return max(x.numerator.bit_length(), x.denominator.bit_length())


def _guard_pow(base: Fraction, exponent: int, bit_budget: int) -> None:
    """Refuse to raise `base` to `exponent` if the result would blow the budget."""
    if exponent * _frac_bits(base) > bit_budget:
        raise BudgetExceededError(
            f"rational power needs ~{exponent * _frac_bits(base)} bits "
            f"(budget {bit_budget})"
        )


def _check_targets(targets: Sequence[int], minimum: int) -> tuple[int, ...]:
    ms = tuple(int(m) for m in targets)
    if not ms:
        raise DomainError("target sequence must be nonempty")
    if any(m < minimum for m in ms):
        raise DomainError(f"every target must be >= {minimum}, got {ms}")
    return ms


def sigma(theta: Fraction, eps: Fraction, k: int,
          bit_budget: int = DEFAULT_BIT_BUDGET) -> int:
    """Family size guaranteeing k events of measure >= eps with a theta^k-heavy
    intersection: ceil( k(k-1) / (2 (eps^k - theta^k)) ).
    """
    if k < 2:
        raise DomainError(f"sigma requires k >= 2, got {k}")
    if not 0 < theta < eps <= 1:
        raise DomainError(f"sigma requires 0 < theta < eps <= 1, got {theta}, {eps}")
    _guard_pow(eps, k, bit_budget)
    _guard_pow(theta, k, bit_budget)
    return ceil_fraction(Fraction(k * (k - 1)) / (2 * (eps**k - theta**k)))


def eps_prime(eps: Fraction, targets: Sequence[int],
              bit_budget: int = DEFAULT_BIT_BUDGET) -> Fraction:
    """Attenuated density for the last coordinate of the target sequence.

    For targets (m_0, ..., m_k):  eps itself when k = 0, otherwise
    eps^(prod_{q<k} m_q) * 2^(-2 * sum_{j<k} prod_{q=j}^{k-1} m_q).
    Equals the k-fold iterate of e -> (e/4)^(m_q).
    """
    if not 0 < eps <= 1:
        raise DomainError(f"eps_prime requires 0 < eps <= 1, got {eps}")
    ms = _check_targets(targets, 1)
    k = len(ms) - 1
    if k == 0:
        return eps
    pm = prod(ms[:k])
    spm = sum(prod(ms[j:k]) for j in range(k))
    _guard_pow(eps, pm, bit_budget)
    if 2 * spm > bit_budget:
        raise BudgetExceededError(f"2^(2*{spm}) exceeds the bit budget")
    return eps**pm * Fraction(1, 1 << (2 * spm))


def t_bound(eps: Fraction, targets: Sequence[int],
            bit_budget: int = DEFAULT_BIT_BUDGET) -> Fraction:
    """Coordinate-size threshold guaranteeing one-shot subgrid extraction.

    Rational-valued; callers needing an integer size take the ceiling.
    """
    ms = _check_targets(targets, 2)
    ep = eps_prime(eps, ms, bit_budget)
    return Fraction(2) / ep * sigma(ep / 4, ep / 2, ms[-1], bit_budget)


def q_bound(theta: Fraction, eps: Fraction, r: int, targets: Sequence[int],
            bit_budget: int = DEFAULT_BIT_BUDGET) -> Fraction:
    """t_bound at the split-and-stabilize residual density (1/8)((eps-theta)/2^r)^2."""
    if r < 1:
        raise DomainError(f"q_bound requires r >= 1, got {r}")
    if not 0 < theta < eps <= 1:
        raise DomainError(f"q_bound requires 0 < theta < eps <= 1, got {theta}, {eps}")
    gap = eps - theta
    if 2 * (r + _frac_bits(gap)) + 3 > bit_budget:
        raise BudgetExceededError(
            f"reduced density needs ~{2 * r} denominator bits (budget {bit_budget})"
        )
    reduced = Fraction(1, 8) * (gap / (1 << r)) ** 2
    return t_bound(reduced, targets, bit_budget)


def s_delta(delta: Fraction) -> int:
    """Minimal s >= 0 with 2^(1-s) <= delta, for 0 < delta <= 1."""
    if not 0 < delta <= 1:
        raise DomainError(f"s_delta requires 0 < delta <= 1, got {delta}")
    return ceil_log2_fraction(2 / delta)


def dyadic_grid(s: int) -> list[Fraction]:
    """The 2^s rationals i/2^s for 0 < i <= 2^s, increasing."""
    if s < 0:
        raise DomainError(f"dyadic_grid requires s >= 0, got {s}")
    if s > MAX_DYADIC_EXPONENT:
        raise BudgetExceededError(f"dyadic grid with 2^{s} points is too large")
    den = 1 << s
    return [Fraction(i, den) for i in range(1, den + 1)]


def v_delta(delta: Fraction, targets: Sequence[int], sizes: Sequence[int],
            prune: bool = True, bit_budget: int = DEFAULT_BIT_BUDGET) -> Fraction:
    """Coordinate-size threshold covering every dyadic density scenario.

    For a single target, the maximum of t_bound over the level-s_delta dyadic
    grid; otherwise the maximum of t_bound at the smallest grid density and of
    q_bound over all cut positions i and all dyadic pairs theta < eps, where
    the pattern count r_i is the product of the first i realized sizes.

    With prune=True the maxima use monotonicity (t_bound is non-increasing in
    the density, and q_bound depends on the pair only through eps - theta), so
    only minimal-density / minimal-gap evaluations run; prune=False evaluates
    the full definition.  Both agree exactly.
    """
    ms = _check_targets(targets, 2)
    ns = tuple(int(n) for n in sizes)
    k = len(ms) - 1
    if len(ns) != k:
        raise DomainError(
            f"need exactly {k} realized sizes for {k + 1} targets, got {len(ns)}"
        )
    if any(n < 1 for n in ns):
        raise DomainError(f"every realized size must be >= 1, got {ns}")
    sd = s_delta(delta)
    if k == 0:
        grid = dyadic_grid(sd)
        if prune:
            return t_bound(grid[0], ms, bit_budget)
        return max(t_bound(e, ms, bit_budget) for e in grid)
    best = t_bound(Fraction(1, 1 << sd), ms, bit_budget)
    grid = dyadic_grid(sd + k)
    for i in range(1, k + 1):
        r_i = prod(ns[:i])
        suffix = ms[i:]
        if prune:
            # every minimal-gap pair yields the same reduced density
            best = max(best, q_bound(grid[0], grid[1], r_i, suffix, bit_budget))
        else:
            for a, theta in enumerate(grid):
                for eps in grid[a + 1:]:
                    best = max(best, q_bound(theta, eps, r_i, suffix, bit_budget))
    return best


def f_chain(delta: Fraction, targets: Sequence[int],
            prune: bool = True, bit_budget: int = DEFAULT_BIT_BUDGET) -> tuple[int, ...]:
    """Minimal admissible coordinate sizes: f_k = ceil(v_delta) over each prefix,
    feeding earlier values back in as the realized sizes.
    """
    if not 0 < delta <= 1:
        raise DomainError(f"f_chain requires 0 < delta <= 1, got {delta}")
    ms = _check_targets(targets, 2)
    chain: list[int] = []
    for k in range(len(ms)):
        v = v_delta(delta, ms[: k + 1], tuple(chain), prune, bit_budget)
        chain.append(ceil_fraction(v))
    return tuple(chain)


def ackermann(n: int, x: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> int:
    """The fast-growing hierarchy: A_0 affine, A_{n+1}(x) = x-fold iterate of
    A_n at 1.

    Levels 0..2 use the exact closed forms A_0(x) in {1, 2, x+2},
    A_1(x) = 2x (x >= 1), A_2(x) = 2^x; evaluating the raw iteration there
    costs as many steps as the value itself.  Higher levels iterate.
    """
    if n < 0 or x < 0:
        raise DomainError(f"ackermann requires n, x >= 0, got {n}, {x}")
    if n == 0:
        return 1 if x == 0 else (2 if x == 1 else x + 2)
    if n == 1:
        return 1 if x == 0 else 2 * x
    if n == 2:
        if x + 1 > bit_budget:
            raise BudgetExceededError(
                f"A_2 of a {x.bit_length()}-bit argument exceeds the "
                f"{bit_budget}-bit result budget"
            )
        return 1 << x
    value = 1
    for _ in range(x):
        value = ackermann(n - 1, value, bit_budget)
    return value


def leq_tower(v: int, tower: TowerRef) -> bool:
    """Whether v <= A_2^(iterations)(argument), via v <= 2^y iff ceil_log2(v) <= y."""
    if v < 0:
        raise DomainError(f"leq_tower requires v >= 0, got {v}")
    w = v
    for _ in range(tower.iterations):
        w = ceil_log2(w)
    return w <= tower.argument


def p_eps(eps: Fraction, log_base: str = "2") -> int:
    """ceil(log(1/eps)), exactly.  log_base "2" (default) or "e"."""
    if not 0 < eps <= 1:
        raise DomainError(f"p_eps requires 0 < eps <= 1, got {eps}")
    if log_base == "2":
        return ceil_log2_fraction(1 / eps)
    if log_base == "e":
        return ceil_ln_of_reciprocal(eps)
    raise DomainError(f"unknown log base {log_base!r}; use '2' or 'e'")


def check_lemma41(eps: Fraction, targets: Sequence[int], log_base: str = "2",
                  bit_budget: int = DEFAULT_BIT_BUDGET
                  ) -> tuple[bool, Fraction, int]:
    """Test t_bound(eps, m) <= A_2(5 * p_eps * prod(m)); returns (holds, lhs, rhs).

    The inequality is claimed only for eps <= delta/2 <= 1/4; this checker
    accepts eps up to 1/2 and reports the outcome rather than assuming it.
    """
    if not 0 < eps <= Fraction(1, 2):
        raise DomainError(f"check_lemma41 requires 0 < eps <= 1/2, got {eps}")
    ms = _check_targets(targets, 2)
    lhs = t_bound(eps, ms, bit_budget)
    rhs = ackermann(2, 5 * p_eps(eps, log_base) * prod(ms), bit_budget)
    return lhs <= rhs, lhs, rhs


def check_prop43(delta: Fraction, targets: Sequence[int],
                 bit_budget: int = DEFAULT_BIT_BUDGET) -> tuple[bool, ...]:
    """Test f_k <= A_2^(1+k)(5 * s_delta * prod of the first k+1 targets) for
    every prefix, comparing lazily through leq_tower.
    """
    if not 0 < delta <= Fraction(1, 2):
        raise DomainError(f"check_prop43 requires 0 < delta <= 1/2, got {delta}")
    ms = _check_targets(targets, 2)
    sd = s_delta(delta)
    chain = f_chain(delta, ms, bit_budget=bit_budget)
    return tuple(
        leq_tower(f_k, TowerRef(1 + k, 5 * sd * prod(ms[: k + 1])))
        for k, f_k in enumerate(chain)
    )
