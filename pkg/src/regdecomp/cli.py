"""Command-line interface.

Subcommands: ``decompose``, ``price``, ``fisher-sim``, ``verify``.

Exit codes
----------
0  success
1  unreadable or malformed input (file, line and column given), invalid config
2  schema problems: missing or misaligned columns, unmatched ids
3  rank-deficient design (collinear columns named), zero mean fitness
4  an identity check failed (``verify`` prints the failing case for replay)

Diagnostics always go to standard error. The default ``--format`` can be set
with the ``REGDECOMP_FORMAT`` environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from regdecomp import __version__, report
from regdecomp.algebra import closure_scale
from regdecomp.datasets import (
    FREQ_COLUMN,
    ID_COLUMN,
    DatasetError,
    SchemaError,
    context_from_dataset,
    default_predictors,
    read_dataset,
)
from regdecomp.decomposition import Convention, SchemaMismatchError, decompose_mean_change
from regdecomp.fisher import ConfigError, IdentityViolation, SimulationConfig, simulate
from regdecomp.price import PairedPopulation, ZeroMeanFitnessError, price_covariance_form, price_partition
from regdecomp.regression import RankDeficiencyError
from regdecomp.verify import run_verification

FORMAT_ENV = "REGDECOMP_FORMAT"
PRICE_FORM_TOL = 1e-12

EXIT_OK, EXIT_INPUT, EXIT_SCHEMA, EXIT_DEGENERATE, EXIT_IDENTITY = 0, 1, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message: str, exit_code: int):
        self.exit_code = exit_code
        super().__init__(message)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _predictor_list(arg: Optional[str]) -> Optional[list]:
    if arg is None:
        return None
    names = [n.strip() for n in arg.split(",") if n.strip()]
    if len(set(names)) != len(names):
        raise CommandError(f"--predictors lists a column twice: {arg}", EXIT_INPUT)
    return names


def cmd_decompose(args) -> str:
    initial = read_dataset(args.initial, args.delimiter)
    changed = read_dataset(args.changed, args.delimiter)
    for ds in (initial, changed):
        ds.require(args.outcome)
    predictors = _predictor_list(args.predictors)
    if predictors is None:
        predictors = default_predictors(initial, [args.outcome])
        other = default_predictors(changed, [args.outcome])
        if predictors != other:
            raise SchemaError(
                f"predictor columns differ: {initial.name} has {predictors}, {changed.name} has {other}"
            )
    a = context_from_dataset(initial, args.outcome, predictors, args.normalize_freq)
    b = context_from_dataset(changed, args.outcome, predictors, args.normalize_freq)
    result = decompose_mean_change(a, b, Convention(args.convention))

    if args.format == "table":
        return report.decomposition_table(result)
    doc = report.document(
        "decompose",
        [report.input_record("initial", initial), report.input_record("changed", changed)],
        {
            "outcome": args.outcome,
            "predictors": predictors,
            "convention": result.convention.value,
            "normalize_freq": args.normalize_freq,
        },
        report.decomposition_payload(result),
    )
    return report.dumps(doc)


def _paired_population(initial, changed, args) -> PairedPopulation:
    ids, ids2 = initial.ids, changed.ids
    known = set(ids)
    only_changed = [i for i in ids2 if i not in known]
    if only_changed:
        raise SchemaError(f"ids present only in {changed.name}: {', '.join(only_changed)}")
    present = set(ids2)
    missing = [i for i in ids if i not in present]
    if missing:
        raise SchemaError(
            f"ids missing from {changed.name} (extinct entities need a row with freq 0): {', '.join(missing)}"
        )
    order = [ids2.index(i) for i in ids]
    q = initial.frequencies(args.normalize_freq)
    q2 = changed.frequencies(args.normalize_freq).weights[order]
    z = initial.numeric(args.outcome)
    z2 = changed.numeric(args.outcome)[order]
    w = initial.numeric(args.fitness) if args.fitness else None
    try:
        return PairedPopulation(q, q2, z, z2, w)
    except ZeroMeanFitnessError:
        raise
    except ValueError as exc:
        raise SchemaError(f"{changed.name}: {exc}") from exc


def _assert_forms_agree(pop: PairedPopulation, dot_form, cov_form) -> None:
    # input frequencies may deviate from q*w/wbar by up to 1e-10; allow for that
    q = pop.frequencies_initial.weights
    w = pop.fitness / float(np.dot(q, pop.fitness))
    slack = float(np.sum(np.abs(pop.frequencies_changed.weights - q * w)) * (
        np.max(np.abs(pop.values_initial)) + np.max(np.abs(pop.values_changed - pop.values_initial))
    ))
    scale = closure_scale(dot_form.selection_term, dot_form.transmission_term, dot_form.total)
    for name in ("selection_term", "transmission_term", "total"):
        gap = abs(getattr(dot_form, name) - getattr(cov_form, name))
        if gap > PRICE_FORM_TOL * scale + slack:
            raise IdentityViolation(f"Price forms disagree on {name} by {gap:.3g}")


def cmd_price(args) -> str:
    initial = read_dataset(args.initial, args.delimiter)
    changed = read_dataset(args.changed, args.delimiter)
    initial.require(args.outcome, *([args.fitness] if args.fitness else []))
    changed.require(args.outcome)
    pop = _paired_population(initial, changed, args)
    parts = [price_partition(pop)]
    if pop.fitness is not None:
        parts.append(price_covariance_form(pop))
        _assert_forms_agree(pop, *parts)

    if args.format == "table":
        text = report.price_table(parts)
        if pop.extinct.size:
            ids = [initial.ids[i] for i in pop.extinct]
            text += f"\nextinct entities (weight 0 in the transmission term): {', '.join(ids)}\n"
        return text
    doc = report.document(
        "price",
        [report.input_record("initial", initial), report.input_record("changed", changed)],
        {"outcome": args.outcome, "fitness": args.fitness, "join": ID_COLUMN, "normalize_freq": args.normalize_freq},
        {
            "partitions": [report.partition_payload(p) for p in parts],
            "extinct_ids": [initial.ids[i] for i in pop.extinct],
        },
    )
    return report.dumps(doc)


def load_config(path: Optional[str]) -> SimulationConfig:
    if path is None:
        return SimulationConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CommandError(f"{path}: {exc.strerror or exc}", EXIT_INPUT) from exc
    except json.JSONDecodeError as exc:
        raise CommandError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", EXIT_INPUT) from exc
    try:
        return SimulationConfig.from_mapping(data)
    except ConfigError as exc:
        raise CommandError(f"{path}: {exc}", EXIT_INPUT) from exc


def cmd_fisher_sim(args) -> str:
    config = load_config(args.config)
    run = simulate(config)
    if args.format == "table":
        return report.simulation_table(run)
    inputs = []
    if args.config:
        raw = Path(args.config).read_bytes()
        inputs.append({"role": "config", "name": Path(args.config).name, "sha256": hashlib.sha256(raw).hexdigest()})
    doc = report.document("fisher-sim", inputs, {"config": config.to_mapping()}, report.simulation_payload(run))
    return report.dumps(doc)


def cmd_verify(args) -> str:
    result = run_verification(args.seed, args.cases)
    if args.format == "machine":
        payload = {
            "passed": result.passed,
            "cases": result.cases,
            "seed": result.seed,
            "worst_error": result.worst_error,
            "worst": {k: {"error": e, "tolerance": t} for k, (e, t) in sorted(result.worst.items())},
            "failure": result.failure,
        }
        text = report.dumps(report.document("verify", [], {"seed": args.seed, "cases": args.cases}, payload))
    else:
        lines = [f"verify: seed {args.seed}, {args.cases} cases"]
        for key, (err, tol) in sorted(result.worst.items()):
            lines.append(f"  {'ok  ' if err <= tol else 'FAIL'} {key:<40} worst {err:.3e}  (tol {tol:.0e})")
        lines.append(f"{'PASS' if result.passed else 'FAIL'}: worst closure error {result.worst_error:.3e}")
        text = "\n".join(lines) + "\n"
    if not result.passed:
        f = result.failure
        sys.stderr.write(
            f"identity check {f['check']}.{f['measure']} failed in case {f['case']} "
            f"(error {f['error']:.3e} > {f['tolerance']:.0e}); replay: "
            f"regdecomp verify --seed {f['seed']} --cases {f['case'] + 1}\n"
        )
        sys.stderr.write(report.dumps(f))
        raise CommandError(text, EXIT_IDENTITY)
    return text


def build_parser() -> argparse.ArgumentParser:
    default_format = os.environ.get(FORMAT_ENV, "table")
    if default_format not in ("table", "machine"):
        default_format = "table"

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "machine"), default=default_format,
                        help=f"output format (default from ${FORMAT_ENV}, else table)")
    common.add_argument("--out", help="write the report to this file instead of stdout")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--initial", required=True, metavar="PATH", help="initial-context dataset")
    data.add_argument("--changed", required=True, metavar="PATH", help="changed-context dataset")
    data.add_argument("--outcome", required=True, metavar="NAME", help="outcome column")
    data.add_argument("--delimiter", default=",", metavar="CHAR", help="field delimiter (default ',')")
    data.add_argument("--normalize-freq", action="store_true",
                      help=f"rescale the {FREQ_COLUMN!r} column to sum to one")

    parser = argparse.ArgumentParser(prog="regdecomp", description="Exact decompositions of mean change.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common, data], help="split the change in a regression mean")
    p.add_argument("--predictors", metavar="NAME[,NAME...]",
                   help="predictor columns in order (default: all columns except id, freq, outcome)")
    p.add_argument("--convention", choices=[c.value for c in Convention], default=Convention.PAPER.value)
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("price", parents=[common, data], help="Price-equation partition of paired populations")
    p.add_argument("--fitness", metavar="NAME", help="fitness column in the initial dataset")
    p.set_defaults(handler=cmd_price)

    p = sub.add_parser("fisher-sim", parents=[common], help="simulate haploid selection")
    p.add_argument("--config", metavar="PATH", help="JSON simulation config (default: built-in demo)")
    p.set_defaults(handler=cmd_fisher_sim)

    p = sub.add_parser("verify", parents=[common], help="check every identity on random instances")
    p.add_argument("--seed", type=int, default=0, help="base seed; case k of check c uses PCG64 seeded with [seed, k, c] (default 0)")
    p.add_argument("--cases", type=int, default=100, help="random instances per check (default 100)")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "cases", 0) < 0:
        parser.error("--cases must be >= 0")
    if getattr(args, "delimiter", ",") and len(getattr(args, "delimiter", ",")) != 1:
        parser.error("--delimiter must be a single character")
    try:
        text = args.handler(args)
    except CommandError as exc:
        if exc.exit_code == EXIT_IDENTITY and args.command == "verify":
            _emit(str(exc), args.out)
        else:
            print(f"regdecomp {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except DatasetError as exc:
        print(f"regdecomp {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except SchemaMismatchError as exc:
        print(f"regdecomp {args.command}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (RankDeficiencyError, ZeroMeanFitnessError) as exc:
        print(f"regdecomp {args.command}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except IdentityViolation as exc:
        print(f"regdecomp {args.command}: identity check failed: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
