"""Exact-arithmetic toolkit for dense-subgrid extraction in products of finite sets.

Subpackages:

- bounds: the threshold tower (sigma, t_bound, q_bound, v_delta, f_chain),
  the fast-growing hierarchy, and lazy tower comparisons
- grid: mixed-radix product spaces and bitset subsets
- correlation: heavily-intersecting subfamily search with oracle
- extraction: subgrid extraction, per-level batches, split-and-stabilize
- family: hereditary families of levels, rank, common witnesses
- workbench: seeded instance generation, file formats, bound reports
- cli: the `densegrid` command
"""

from .bounds import (
    TowerRef,
    ackermann,
    check_lemma41,
    check_prop43,
    dyadic_grid,
    eps_prime,
    f_chain,
    leq_tower,
    p_eps,
    q_bound,
    s_delta,
    sigma,
    t_bound,
    v_delta,
)
from .correlation import EventFamily, best_correlated, find_correlated, intersection_measure
from .errors import BudgetExceededError, DomainError, NotFoundError, ParseError
from .extraction import (
    DensitySchedule,
    LevelFamily,
    brute_force_subgrid,
    density_schedule,
    extract_per_level,
    extract_subgrid,
    fubini_split,
    guarantee_report,
    split_and_extract,
)
from .family import (
    FiniteSetFamily,
    common_witness,
    enumerate_family,
    family_member,
    hereditary_rank,
)
from .grid import (
    GridShape,
    Point,
    PointSet,
    SubgridWitness,
    concat_sets,
    contains_product,
    density,
    fiber,
    fibers_by_first_coordinate,
    index_of,
    point_of,
    restrict,
)
from .workbench import (
    BoundReport,
    Instance,
    SeededGenerator,
    WitnessRecord,
    bound_report,
    gen_planted,
    gen_random_levels,
    read_instance,
    read_witness,
    verify_witness,
    write_instance,
    write_witness,
)

__version__ = "0.1.0"

__all__ = [
    "TowerRef", "ackermann", "check_lemma41", "check_prop43", "dyadic_grid",
    "eps_prime", "f_chain", "leq_tower", "p_eps", "q_bound", "s_delta",
    "sigma", "t_bound", "v_delta",
    "EventFamily", "best_correlated", "find_correlated", "intersection_measure",
    "BudgetExceededError", "DomainError", "NotFoundError", "ParseError",
    "DensitySchedule", "LevelFamily", "brute_force_subgrid", "density_schedule",
    "extract_per_level", "extract_subgrid", "fubini_split", "guarantee_report",
    "split_and_extract",
    "FiniteSetFamily", "common_witness", "enumerate_family", "family_member",
    "hereditary_rank",
    "GridShape", "Point", "PointSet", "SubgridWitness", "concat_sets",
    "contains_product", "density", "fiber", "fibers_by_first_coordinate",
    "index_of", "point_of", "restrict",
    "BoundReport", "Instance", "SeededGenerator", "WitnessRecord",
    "bound_report", "gen_planted", "gen_random_levels", "read_instance",
    "read_witness", "verify_witness", "write_instance", "write_witness",
]
