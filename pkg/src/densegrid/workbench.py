"""Instance generation, file formats, and bound-comparison reports.

Randomness comes from splitmix64 with the standard increment, driven as a
counter-based stream, so every instance is bit-exact across platforms and the
bulk (vectorized) path produces the identical stream as the scalar one.
Files are JSON: rationals as "p/q" strings, small sets as sorted cell-index
lists, large sets as base64 little-endian bitmaps.
"""

from __future__ import annotations

import base64
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Optional, Sequence

import numpy as np

from .bounds import TowerRef, check_lemma41, f_chain, leq_tower, p_eps, s_delta
from .errors import BudgetExceededError, DomainError, ParseError
from .exact import DEFAULT_BIT_BUDGET, ceil_fraction, format_rational, parse_rational
from .extraction import LevelFamily
from .grid import GridShape, PointSet, SubgridWitness, contains_product

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

#: Levels up to this many cells get exact-count sampling; larger ones get
#: rejection-checked Bernoulli bits.
EXACT_SAMPLE_LIMIT = 1 << 20

_CHUNK = 1 << 22


class SeededGenerator:
    """splitmix64 as a counter-based stream: output i = mix(seed + i * gamma)."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & _MASK64
        self.counter = counter

    def next_u64(self) -> int:
        self.counter += 1
        z = (self.seed + self.counter * _GAMMA) & _MASK64
        z = (z ^ (z >> 30)) * _MIX1 & _MASK64
        z = (z ^ (z >> 27)) * _MIX2 & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        if n < 1:
            raise DomainError(f"next_below needs n >= 1, got {n}")
        return self.next_u64() % n

    def block_u64(self, count: int) -> np.ndarray:
        """The next `count` outputs at once; identical to `count` next_u64 calls."""
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        z = (np.uint64(self.seed) + idx * np.uint64(_GAMMA))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class Instance:
    """A level family packaged with its demands and claimed density floor."""

    version: int
    k0: int
    sizes: tuple[int, ...]
    targets: tuple[int, ...]
    delta: Fraction
    levels: dict[int, PointSet]

    def __post_init__(self):
        if self.version != 1:
            raise DomainError(f"unsupported instance version {self.version}")
        if len(self.targets) != len(self.sizes):
            raise DomainError(
                f"{len(self.targets)} targets for {len(self.sizes)} sizes"
            )
        if any(not 1 <= m <= n for m, n in zip(self.targets, self.sizes)):
            raise DomainError(
                f"targets {self.targets} must lie in [1, size] per coordinate"
            )
        if not 0 < self.delta <= 1:
            raise DomainError(f"delta must be in (0, 1], got {self.delta}")
        LevelFamily(self.k0, self.sizes, self.levels)  # validates level shapes

    def level_family(self) -> LevelFamily:
        return LevelFamily(self.k0, self.sizes, dict(self.levels))


def _exact_count_sample(gen: SeededGenerator, cells: int, count: int) -> int:
    """Bitmask with exactly `count` members via partial Fisher-Yates."""
    arr = list(range(cells))
    for i in range(count):
        j = i + gen.next_below(cells - i)
        arr[i], arr[j] = arr[j], arr[i]
    bits = 0
    for i in arr[:count]:
        bits |= 1 << i
    return bits


def _bernoulli_block(gen: SeededGenerator, cells: int, threshold: int) -> int:
    """Bitmask of `cells` draws, bit set iff draw < threshold."""
    chunks = []
    remaining = cells
    while remaining:
        n = min(remaining, _CHUNK)
        draws = gen.block_u64(n)
        if threshold > _MASK64:
            flags = np.ones(n, dtype=np.uint8)
        else:
            flags = (draws < np.uint64(threshold)).astype(np.uint8)
        chunks.append(np.packbits(flags, bitorder="little").tobytes())
        remaining -= n
    return int.from_bytes(b"".join(chunks), "little")


def gen_random_levels(seed: int, sizes: Sequence[int], delta: Fraction,
                      level_keys: Sequence[int],
                      targets: Optional[Sequence[int]] = None,
                      k0: int = 0) -> Instance:
    """Seeded random instance with every level's density >= delta.

    Small levels (<= EXACT_SAMPLE_LIMIT cells) get exactly ceil(delta * cells)
    members by partial Fisher-Yates; larger levels draw Bernoulli(delta + 1/20)
    bits, skipping one stream position and redrawing in the (astronomically
    rare) case the realized density lands below delta.
    """
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")
    sizes = tuple(int(n) for n in sizes)
    keys = sorted(set(int(k) for k in level_keys))
    if not keys:
        raise DomainError("need at least one level")
    if keys[0] <= k0 or keys[-1] > k0 + len(sizes):
        raise DomainError(
            f"levels {keys} must lie in ({k0}, {k0 + len(sizes)}]"
        )
    gen = SeededGenerator(seed)
    levels = {}
    for k in keys:
        shape = GridShape(sizes[: k - k0], k0)
        cells = shape.total
        if cells <= EXACT_SAMPLE_LIMIT:
            count = ceil_fraction(delta * cells)
            bits = _exact_count_sample(gen, cells, count)
        else:
            boosted = min(delta + Fraction(1, 20), Fraction(1))
            threshold = ceil_fraction(boosted * (1 << 64))
            for _ in range(1000):
                bits = _bernoulli_block(gen, cells, threshold)
                if bits.bit_count() * delta.denominator >= delta.numerator * cells:
                    break
                gen.counter += 1
            else:
                raise BudgetExceededError("rejection sampling failed 1000 times")
        levels[k] = PointSet(shape, bits)
    if targets is None:
        targets = tuple(min(2, n) for n in sizes)
    return Instance(1, k0, sizes, tuple(int(m) for m in targets), delta, levels)


def gen_planted(seed: int, sizes: Sequence[int], targets: Sequence[int],
                noise: Fraction, level_keys: Sequence[int],
                k0: int = 0) -> tuple[Instance, SubgridWitness]:
    """Instance whose every level contains a common planted product, plus noise.

    The planted value subsets are sampled from the seed; each non-planted cell
    joins independently with probability `noise`.  Returns the instance and
    the planted witness (spanning all coordinates).
    """
    sizes = tuple(int(n) for n in sizes)
    ms = tuple(int(m) for m in targets)
    if len(ms) != len(sizes) or any(not 1 <= m <= n for m, n in zip(ms, sizes)):
        raise DomainError(f"targets {ms} must fit the sizes {sizes}")
    if not 0 <= noise <= 1:
        raise DomainError(f"noise must be in [0, 1], got {noise}")
    keys = sorted(set(int(k) for k in level_keys))
    if not keys or keys[0] <= k0 or keys[-1] > k0 + len(sizes):
        raise DomainError(f"levels {keys} must lie in ({k0}, {k0 + len(sizes)}]")
    gen = SeededGenerator(seed)
    planted = []
    for n, m in zip(sizes, ms):
        arr = list(range(n))
        for i in range(m):
            j = i + gen.next_below(n - i)
            arr[i], arr[j] = arr[j], arr[i]
        planted.append(tuple(sorted(arr[:m])))
    witness = SubgridWitness(k0, tuple(planted))
    threshold = ceil_fraction(noise * (1 << 64)) if noise > 0 else 0
    levels = {}
    min_density = Fraction(1)
    for k in keys:
        shape = GridShape(sizes[: k - k0], k0)
        bits = 0
        for combo in itertools.product(*planted[: k - k0]):
            bits |= 1 << shape.index_of(combo)
        if threshold:
            bits |= _bernoulli_block(gen, shape.total, threshold)
        level = PointSet(shape, bits)
        levels[k] = level
        min_density = min(min_density, level.density())
    inst = Instance(1, k0, sizes, ms, min_density, levels)
    return inst, witness


# -- file formats ------------------------------------------------------------

#: Writer emits an index list up to this many members, a bitmap beyond.
POINT_LIST_LIMIT = 1024


def _require_keys(obj: dict, required: set[str], optional: set[str],
                  what: str) -> None:
    missing = required - obj.keys()
    if missing:
        raise ParseError(f"{what}: missing fields {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise ParseError(f"{what}: unknown fields {sorted(unknown)}")


def _level_payload(d: PointSet) -> dict:
    if len(d) <= POINT_LIST_LIMIT:
        return {"points": d.indices()}
    raw = d.bits.to_bytes((d.shape.total + 7) // 8, "little")
    return {"bitset_b64": base64.b64encode(raw).decode("ascii")}


def write_instance(instance: Instance, path: str) -> None:
    payload = {
        "version": instance.version,
        "k0": instance.k0,
        "sizes": list(instance.sizes),
        "targets": list(instance.targets),
        "delta": format_rational(instance.delta),
        "levels": [{"k": k, **_level_payload(d)}
                   for k, d in sorted(instance.levels.items())],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_instance(path: str) -> Instance:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError(f"{path}: top level must be an object")
    _require_keys(payload, {"version", "k0", "sizes", "targets", "delta", "levels"},
                  set(), path)
    if payload["version"] != 1:
        raise ParseError(f"{path}: unsupported version {payload['version']!r}")
    sizes = tuple(payload["sizes"])
    k0 = payload["k0"]
    delta = parse_rational(str(payload["delta"]))
    levels = {}
    for entry in payload["levels"]:
        if not isinstance(entry, dict):
            raise ParseError(f"{path}: level entries must be objects")
        _require_keys(entry, {"k"}, {"points", "bitset_b64"}, f"{path} level")
        k = entry["k"]
        if k in levels:
            raise ParseError(f"{path}: duplicate level {k}")
        try:
            shape = GridShape(sizes[: k - k0], k0)
        except DomainError as exc:
            raise ParseError(f"{path}: level {k}: {exc}") from exc
        if "points" in entry and "bitset_b64" in entry:
            raise ParseError(f"{path}: level {k} has both encodings")
        if "points" in entry:
            try:
                levels[k] = PointSet.from_indices(shape, entry["points"])
            except DomainError as exc:
                raise ParseError(f"{path}: level {k}: {exc}") from exc
        elif "bitset_b64" in entry:
            try:
                raw = base64.b64decode(entry["bitset_b64"], validate=True)
            except Exception as exc:
                raise ParseError(f"{path}: level {k}: bad base64") from exc
            if len(raw) != (shape.total + 7) // 8:
                raise ParseError(
                    f"{path}: level {k}: bitmap is {len(raw)} bytes, "
                    f"expected {(shape.total + 7) // 8}"
                )
            bits = int.from_bytes(raw, "little")
            if bits >> shape.total:
                raise ParseError(f"{path}: level {k}: padding bits set")
            levels[k] = PointSet(shape, bits)
        else:
            raise ParseError(f"{path}: level {k} has no point data")
    try:
        return Instance(1, k0, sizes, tuple(payload["targets"]), delta, levels)
    except DomainError as exc:
        raise ParseError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class WitnessRecord:
    """On-disk form of a witness: cut, optional prefix cells, subsets, levels."""

    cut: int
    subsets: tuple[tuple[int, ...], ...]
    levels: tuple[int, ...]
    gamma_indices: Optional[tuple[int, ...]] = None

    def witness(self) -> SubgridWitness:
        return SubgridWitness(self.cut, self.subsets)


def write_witness(record: WitnessRecord, path: str) -> None:
    payload: dict = {
        "cut": record.cut,
        "I": [list(s) for s in record.subsets],
        "levels": list(record.levels),
    }
    if record.gamma_indices is not None:
        payload["gamma_points"] = list(record.gamma_indices)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_witness(path: str) -> WitnessRecord:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError(f"{path}: top level must be an object")
    _require_keys(payload, {"cut", "I", "levels"}, {"gamma_points"}, path)
    gamma = payload.get("gamma_points")
    try:
        return WitnessRecord(
            cut=int(payload["cut"]),
            subsets=tuple(tuple(int(v) for v in s) for s in payload["I"]),
            levels=tuple(int(k) for k in payload["levels"]),
            gamma_indices=None if gamma is None else tuple(int(i) for i in gamma),
        )
    except (TypeError, ValueError, DomainError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def verify_witness(instance: Instance, record: WitnessRecord) -> list[str]:
    """Check a stored witness against an instance; [] means fully valid.

    Verifies the subset sizes against the instance targets and the product
    containment (behind the stored prefix, if any) for every claimed level.
    """
    problems = []
    try:
        witness = record.witness()
    except DomainError as exc:
        return [f"malformed witness: {exc}"]
    gamma = None
    if record.gamma_indices is not None:
        if record.cut <= instance.k0:
            return [f"prefix cells given but cut {record.cut} is at the start"]
        shape = GridShape(instance.sizes[: record.cut - instance.k0], instance.k0)
        try:
            gamma = PointSet.from_indices(shape, record.gamma_indices)
        except DomainError as exc:
            return [f"bad prefix cells: {exc}"]
        if len(gamma) == 0:
            return ["prefix set is empty; containment would be vacuous"]
    for j, s in enumerate(witness.subsets):
        coord = record.cut + j
        want = instance.targets[coord - instance.k0]
        if len(s) != want:
            problems.append(
                f"coordinate {coord}: subset has {len(s)} values, demand is {want}"
            )
    for k in record.levels:
        if k not in instance.levels:
            problems.append(f"level {k} not present in the instance")
            continue
        try:
            ok = contains_product(instance.levels[k], witness, prefix=gamma)
        except DomainError as exc:
            problems.append(f"level {k}: {exc}")
            continue
        if not ok:
            problems.append(f"level {k}: product not contained")
    return problems


# -- bound reports -----------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    delta: Fraction
    targets: tuple[int, ...]
    s_delta: int
    chain_rows: tuple[dict, ...]
    growth_rows: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "delta": format_rational(self.delta),
            "targets": list(self.targets),
            "s_delta": self.s_delta,
            "chain": [dict(r) for r in self.chain_rows],
            "growth_checks": [dict(r) for r in self.growth_rows],
        }

    def render_text(self) -> str:
        lines = [
            f"delta = {format_rational(self.delta)}   s_delta = {self.s_delta}   "
            f"targets = {list(self.targets)}",
            "",
            "chain vs iterated exponentials:",
            f"  {'k':>2}  {'f_k':<24} {'tower':<16} ok",
        ]
        for r in self.chain_rows:
            f_str = r["f"] if len(r["f"]) <= 24 else f"<{r['bits']}-bit integer>"
            lines.append(
                f"  {r['k']:>2}  {f_str:<24} {r['tower']:<16} "
                f"{'pass' if r['holds'] else 'FAIL'}"
            )
        lines += ["", "single-level thresholds vs 2^(5 * p * prod m):",
                  f"  {'eps':>6}  {'prefix':<12} {'base-2':>7} {'base-e':>7}  in-domain"]
        for r in self.growth_rows:
            lines.append(
                f"  {r['eps']:>6}  {str(r['targets']):<12} "
                f"{'pass' if r['holds_base2'] else 'FAIL':>7} "
                f"{'pass' if r['holds_ln'] else 'FAIL':>7}  "
                f"{'yes' if r['in_domain'] else 'no'}"
            )
        return "\n".join(lines)


def bound_report(delta: Fraction, targets: Sequence[int],
                 lemma_eps: Optional[Sequence[Fraction]] = None,
                 bit_budget: int = DEFAULT_BIT_BUDGET) -> BoundReport:
    """Chain values f_k with their tower bounds, plus single-level growth checks.

    Requires 0 < delta <= 1/2 and all targets >= 2.  Each chain row compares
    f_k against A_2^(1+k)(5 * s_delta * prod m) through the lazy tower
    reduction; each growth row records whether t_bound(eps, prefix) stays
    under 2^(5 * p_eps * prod m) for BOTH log-base readings of p_eps, with a
    flag for whether eps lies in the claimed domain eps <= delta/2.
    """
    if not 0 < delta <= Fraction(1, 2):
        raise DomainError(f"bound_report requires 0 < delta <= 1/2, got {delta}")
    ms = tuple(int(m) for m in targets)
    if not ms or any(m < 2 for m in ms):
        raise DomainError(f"targets must all be >= 2, got {ms}")
    sd = s_delta(delta)
    chain = f_chain(delta, ms, bit_budget=bit_budget)
    chain_rows = []
    for k, f_k in enumerate(chain):
        arg = 5 * sd * prod(ms[: k + 1])
        holds = leq_tower(f_k, TowerRef(1 + k, arg))
        f_str = str(f_k) if f_k.bit_length() <= 80 else f"2^~{f_k.bit_length() - 1}"
        chain_rows.append({
            "k": k,
            "f": f_str,
            "bits": f_k.bit_length(),
            "tower": f"A_2^({1 + k})({arg})",
            "iterations": 1 + k,
            "argument": arg,
            "holds": holds,
        })
    if lemma_eps is None:
        lemma_eps = [delta / 2]
    growth_rows = []
    for eps in lemma_eps:
        for k in range(len(ms)):
            prefix = ms[: k + 1]
            holds2, lhs, rhs2 = check_lemma41(eps, prefix, "2", bit_budget)
            holds_e, _, rhs_e = check_lemma41(eps, prefix, "e", bit_budget)
            growth_rows.append({
                "eps": format_rational(eps),
                "targets": list(prefix),
                "t_value": format_rational(lhs),
                "p_base2": p_eps(eps, "2"),
                "p_ln": p_eps(eps, "e"),
                "holds_base2": holds2,
                "holds_ln": holds_e,
                "in_domain": eps <= delta / 2,
            })
    return BoundReport(delta, ms, sd, tuple(chain_rows), tuple(growth_rows))
