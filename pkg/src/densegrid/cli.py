"""Batch command-line front end.

One verb per invocation; every numeric flag takes exact "p/q" rationals and
all output renders library values verbatim (decimal for integers, p/q for
rationals).  Exit codes: 0 success / witness found, 2 nothing found or a
verification failure, 3 invalid input, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import bounds as bd
from . import extraction, family, workbench
from .errors import BudgetExceededError, DomainError, NotFoundError, ParseError
from .exact import DEFAULT_BIT_BUDGET, format_rational, parse_rational
from .grid import GridShape, PointSet

EXIT_OK = 0
EXIT_NOT_FOUND = 2
EXIT_INVALID = 3
EXIT_BUDGET = 4


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors instead of exiting with its own code."""

    def error(self, message):
        raise ParseError(message)


def _rational(text: str) -> Fraction:
    return parse_rational(text)


def _emit(args, data: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(data, sort_keys=True))
    else:
        print(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="densegrid", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap (the current implementation is "
                             "single-threaded; values >= 1 accepted)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("bounds", parents=[common],
                       help="evaluate a threshold function exactly")
    p.add_argument("function",
                   choices=["sigma", "t", "q", "v", "f", "ackermann"])
    p.add_argument("--theta", type=_rational)
    p.add_argument("--eps", type=_rational)
    p.add_argument("--delta", type=_rational)
    p.add_argument("--k", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--x", type=int)
    p.add_argument("--targets", type=int, nargs="+")
    p.add_argument("--sizes", type=int, nargs="*", default=[])
    p.add_argument("--no-prune", action="store_true",
                   help="evaluate the dyadic maxima by full enumeration")
    p.add_argument("--bit-budget", type=int, default=DEFAULT_BIT_BUDGET)
    p.set_defaults(handler=_cmd_bounds)

    p = sub.add_parser("gen", parents=[common],
                       help="write a seeded random or planted instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sizes", type=int, nargs="+", required=True)
    p.add_argument("--levels", type=int, nargs="+", required=True)
    p.add_argument("--delta", type=_rational)
    p.add_argument("--targets", type=int, nargs="+")
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--planted", action="store_true")
    p.add_argument("--noise", type=_rational, default=Fraction(0))
    p.add_argument("--out", required=True)
    p.add_argument("--witness-out",
                   help="with --planted: also write the planted witness")
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("extract", parents=[common],
                       help="extract a subgrid witness from one level")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=["proof", "exhaustive"], default="proof")
    p.add_argument("--level", type=int,
                   help="level to extract from (default: the largest)")
    p.add_argument("--eps", type=_rational,
                   help="density parameter (default: the instance delta)")
    p.add_argument("--out", help="witness file to write")
    p.set_defaults(handler=_cmd_extract)

    p = sub.add_parser("per-level", parents=[common],
                       help="extract one witness per level independently")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=["proof", "exhaustive"], default="proof")
    p.add_argument("--eps", type=_rational)
    p.set_defaults(handler=_cmd_per_level)

    p = sub.add_parser("split", parents=[common],
                       help="cut at a coordinate and stabilize a prefix pattern")
    p.add_argument("--instance", required=True)
    p.add_argument("--cut", type=int, required=True)
    p.add_argument("--theta", type=_rational, required=True)
    p.add_argument("--eps", type=_rational)
    p.add_argument("--out", help="write the residual family as an instance")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("witness", parents=[common],
                       help="search a single witness shared by >= t levels")
    p.add_argument("--instance", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--out", help="witness file to write")
    p.set_defaults(handler=_cmd_witness)

    p = sub.add_parser("rank", parents=[common],
                       help="enumerate the common-witness family and rank it")
    p.add_argument("--instance", required=True)
    p.add_argument("--i", type=int, help="cut coordinate (default: the start)")
    p.add_argument("--gamma-points", type=int, nargs="*",
                   help="prefix cell indices when --i is past the start")
    p.add_argument("--cap", type=int, help="max member size (default: #levels)")
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser("verify", parents=[common],
                       help="check a witness file against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--witness", required=True)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("report", parents=[common],
                       help="chain values vs tower bounds, growth checks")
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--targets", type=int, nargs="+", required=True)
    p.add_argument("--lemma-eps", type=_rational, nargs="*",
                   help="densities for the growth rows (default: delta/2)")
    p.add_argument("--bit-budget", type=int, default=DEFAULT_BIT_BUDGET)
    p.set_defaults(handler=_cmd_report)

    p = sub.add_parser("oracle", parents=[common],
                       help="brute-force witness enumeration (completeness oracle)")
    p.add_argument("--instance", required=True)
    p.add_argument("--level", type=int)
    p.set_defaults(handler=_cmd_oracle)

    return parser


def _require(args, names: Sequence[str]) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise ParseError(f"missing required flags: {', '.join('--' + n for n in missing)}")


def _cmd_bounds(args) -> int:
    fn = args.function
    if fn == "sigma":
        _require(args, ["theta", "eps", "k"])
        value = bd.sigma(args.theta, args.eps, args.k, args.bit_budget)
        _emit(args, {"value": str(value)}, str(value))
    elif fn == "t":
        _require(args, ["eps", "targets"])
        value = bd.t_bound(args.eps, args.targets, args.bit_budget)
        _emit(args, {"value": format_rational(value)}, format_rational(value))
    elif fn == "q":
        _require(args, ["theta", "eps", "r", "targets"])
        value = bd.q_bound(args.theta, args.eps, args.r, args.targets,
                           args.bit_budget)
        _emit(args, {"value": format_rational(value)}, format_rational(value))
    elif fn == "v":
        _require(args, ["delta", "targets"])
        value = bd.v_delta(args.delta, args.targets, args.sizes,
                           not args.no_prune, args.bit_budget)
        _emit(args, {"value": format_rational(value)}, format_rational(value))
    elif fn == "f":
        _require(args, ["delta", "targets"])
        chain = bd.f_chain(args.delta, args.targets, not args.no_prune,
                           args.bit_budget)
        _emit(args, {"value": [str(v) for v in chain]},
              " ".join(str(v) for v in chain))
    else:
        _require(args, ["n", "x"])
        value = bd.ackermann(args.n, args.x, args.bit_budget)
        _emit(args, {"value": str(value)}, str(value))
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.planted:
        if args.targets is None:
            raise ParseError("--planted requires --targets")
        inst, witness = workbench.gen_planted(
            args.seed, args.sizes, args.targets, args.noise, args.levels, args.k0)
        workbench.write_instance(inst, args.out)
        if args.witness_out:
            record = workbench.WitnessRecord(
                cut=inst.k0, subsets=witness.subsets,
                levels=tuple(sorted(inst.levels)))
            workbench.write_witness(record, args.witness_out)
        data = {"out": args.out, "planted": [list(s) for s in witness.subsets],
                "delta": format_rational(inst.delta)}
        _emit(args, data,
              f"wrote {args.out} (planted witness "
              f"{[list(s) for s in witness.subsets]}, min density "
              f"{format_rational(inst.delta)})")
    else:
        if args.delta is None:
            raise ParseError("random generation requires --delta")
        inst = workbench.gen_random_levels(
            args.seed, args.sizes, args.delta, args.levels, args.targets, args.k0)
        workbench.write_instance(inst, args.out)
        densities = {k: format_rational(d.density())
                     for k, d in sorted(inst.levels.items())}
        _emit(args, {"out": args.out, "densities": densities},
              f"wrote {args.out} (densities "
              + ", ".join(f"{k}: {v}" for k, v in densities.items()) + ")")
    return EXIT_OK


def _pick_level(inst: workbench.Instance, level: Optional[int]) -> int:
    if level is None:
        return max(inst.levels)
    if level not in inst.levels:
        raise DomainError(f"level {level} not in the instance "
                          f"(has {sorted(inst.levels)})")
    return level


def _cmd_extract(args) -> int:
    inst = workbench.read_instance(args.instance)
    k = _pick_level(inst, args.level)
    eps = args.eps if args.eps is not None else inst.delta
    targets = inst.targets[: k - inst.k0]
    if args.mode == "proof":
        for row in extraction.guarantee_report(eps, targets,
                                               inst.sizes[: k - inst.k0]):
            if not row["guaranteed"]:
                print(f"note: coordinate {row['coordinate']} size {row['size']} "
                      f"is below the guarantee threshold "
                      f"{row['threshold'] and format_rational(row['threshold'])}",
                      file=sys.stderr)
    witness = extraction.extract_subgrid(inst.levels[k], targets, eps, args.mode)
    record = workbench.WitnessRecord(cut=inst.k0, subsets=witness.subsets,
                                     levels=(k,))
    if args.out:
        workbench.write_witness(record, args.out)
    data = {"level": k, "I": [list(s) for s in witness.subsets]}
    _emit(args, data, f"level {k}: I = {[list(s) for s in witness.subsets]}")
    return EXIT_OK


def _cmd_per_level(args) -> int:
    inst = workbench.read_instance(args.instance)
    eps = args.eps if args.eps is not None else inst.delta
    results = extraction.extract_per_level(
        inst.level_family(), inst.targets, eps, args.mode)
    data = {str(k): (None if w is None else [list(s) for s in w.subsets])
            for k, w in sorted(results.items())}
    lines = [f"level {k}: " + ("not found" if w is None
                               else str([list(s) for s in w.subsets]))
             for k, w in sorted(results.items())]
    _emit(args, {"levels": data}, "\n".join(lines))
    return EXIT_OK if all(w is not None for w in results.values()) else EXIT_NOT_FOUND


def _cmd_split(args) -> int:
    inst = workbench.read_instance(args.instance)
    eps = args.eps if args.eps is not None else inst.delta
    gamma, kept, residual = extraction.fubini_split(
        inst.level_family(), args.cut, args.theta, eps)
    if args.out:
        res_inst = workbench.Instance(1, residual.start, inst.sizes[args.cut - inst.k0:],
                                      inst.targets[args.cut - inst.k0:],
                                      inst.delta, residual.levels)
        workbench.write_instance(res_inst, args.out)
    data = {
        "gamma_points": gamma.indices(),
        "gamma_density": format_rational(gamma.density()),
        "kept_levels": kept,
        "residual_densities": {str(k): format_rational(d.density())
                               for k, d in sorted(residual.levels.items())},
    }
    _emit(args, data,
          f"gamma: {gamma.indices()} (density {format_rational(gamma.density())})\n"
          f"kept levels: {kept}")
    return EXIT_OK


def _cmd_witness(args) -> int:
    inst = workbench.read_instance(args.instance)
    witness, kept = family.common_witness(
        inst.level_family(), inst.targets, inst.delta, args.t)
    record = workbench.WitnessRecord(cut=inst.k0, subsets=witness.subsets,
                                     levels=kept)
    if args.out:
        workbench.write_witness(record, args.out)
    data = {"levels": list(kept), "I": [list(s) for s in witness.subsets]}
    _emit(args, data,
          f"levels {list(kept)}: I = {[list(s) for s in witness.subsets]}")
    return EXIT_OK


def _cmd_rank(args) -> int:
    inst = workbench.read_instance(args.instance)
    i = args.i if args.i is not None else inst.k0
    gamma = None
    if args.gamma_points:
        shape = GridShape(inst.sizes[: i - inst.k0], inst.k0)
        gamma = PointSet.from_indices(shape, args.gamma_points)
    cap = args.cap if args.cap is not None else len(inst.levels)
    fam = family.enumerate_family(i, gamma, inst.level_family(),
                                  inst.targets, cap)
    rank_ee = family.hereditary_rank(fam, "end_extension")
    rank_inc = family.hereditary_rank(fam, "inclusion")
    data = {
        "members": sorted(sorted(f) for f in fam.members),
        "rank_end_extension": rank_ee,
        "rank_inclusion": rank_inc,
    }
    text = (f"{len(fam.members)} members; rank (end-extension) = {rank_ee}")
    if rank_inc != rank_ee:
        text += f"; rank (inclusion) = {rank_inc}"
    _emit(args, data, text)
    return EXIT_OK


def _cmd_verify(args) -> int:
    inst = workbench.read_instance(args.instance)
    record = workbench.read_witness(args.witness)
    problems = workbench.verify_witness(inst, record)
    ok = not problems
    _emit(args, {"valid": ok, "problems": problems},
          "valid" if ok else "INVALID:\n" + "\n".join(f"  {p}" for p in problems))
    return EXIT_OK if ok else EXIT_NOT_FOUND


def _cmd_report(args) -> int:
    report = workbench.bound_report(args.delta, args.targets, args.lemma_eps,
                                    args.bit_budget)
    _emit(args, report.to_dict(), report.render_text())
    return EXIT_OK


def _cmd_oracle(args) -> int:
    inst = workbench.read_instance(args.instance)
    k = _pick_level(inst, args.level)
    witness = extraction.brute_force_subgrid(inst.levels[k],
                                             inst.targets[: k - inst.k0])
    if witness is None:
        _emit(args, {"level": k, "I": None}, f"level {k}: no witness exists")
        return EXIT_NOT_FOUND
    data = {"level": k, "I": [list(s) for s in witness.subsets]}
    _emit(args, data, f"level {k}: I = {[list(s) for s in witness.subsets]}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    # exact values here legitimately run to thousands of digits; the bit
    # budgets bound them, not the int-to-str safety cap
    sys.set_int_max_str_digits(20_000_000)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise ParseError("--threads must be >= 1")
        return args.handler(args)
    except (ParseError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotFoundError as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
