"""Command-line entry point.

Exit codes (stable contract for CI pipelines):

    0  success / all selected checks pass
    1  verification rejection
    2  usage or schema error
    3  capacity exceeded
    4  accuracy not reached (best estimates still written, flagged)
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .construction import (
    atomic_write_text,
    aux_seed,
    sample_path,
    simulate_ensemble,
    write_ensemble,
)
from .counting import counts_on_grid, CountingPath, validate_counting_axioms
from .errors import (
    AccuracyError,
    CapacityError,
    MrplabError,
    SchemaError,
)
from .exact import (
    BoxQuery,
    QuadratureConfig,
    count_pmf,
    joint_interarrival_probability,
)
from .modelfile import load_model_file, load_queries_file
from .stats import (
    WITNESS_BOXES,
    conditional_iid_test,
    exchangeability_test,
    mc_vs_exact,
    mixed_poisson_check,
)

SUITES = (
    "exchangeability",
    "conditional-iid",
    "mc-vs-exact",
    "mixed-poisson",
    "counting-axioms",
    "all",
)

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_ACCURACY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrplab",
        description="Mixed renewal processes: simulate, evaluate exact mixture "
        "probabilities, verify structural properties.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate an ensemble to CSV + manifest")
    sim.add_argument("--model", required=True, help="model JSON file")
    sim.add_argument("--paths", type=int, default=1000)
    sim.add_argument("--events", type=int, default=8)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")

    ex = sub.add_parser("exact", help="evaluate exact probabilities for query boxes")
    ex.add_argument("--model", required=True)
    ex.add_argument("--queries", required=True, help="JSON list of box/count queries")
    ex.add_argument("--out", required=True, help="output CSV path")
    ex.add_argument("--tol", type=float, default=1e-10, help="relative quadrature tolerance")

    ver = sub.add_parser("verify", help="run a verification suite, write a JSON report")
    ver.add_argument("--model", required=True)
    ver.add_argument("--suite", required=True, choices=SUITES)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--out", required=True, help="output JSON report path")
    ver.add_argument("--paths", type=int, default=20000)
    ver.add_argument("--events", type=int, default=3)
    ver.add_argument("--level", type=float, default=0.01)
    ver.add_argument("--tol", type=float, default=1e-10)
    return parser


def _cmd_simulate(args) -> int:
    model, _meta = load_model_file(args.model)
    ensemble = simulate_ensemble(model, args.paths, args.events, args.seed)
    write_ensemble(ensemble, args.out)
    return EXIT_OK


def _cmd_exact(args) -> int:
    model, _meta = load_model_file(args.model)
    queries = load_queries_file(args.queries)
    cfg = QuadratureConfig(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
    lines = ["query_id,probability,error_estimate,method"]
    accuracy_failed = False
    for q in queries:
        try:
            if q["type"] == "box":
                res = joint_interarrival_probability(model, q["query"], cfg)
            else:
                res = count_pmf(model, q["t"], q["n"], cfg)
            method = res.method
            value, err = res.value, res.error
        except AccuracyError as exc:
            accuracy_failed = True
            value, err = exc.value, exc.error_estimate
            method = "quadrature-gk15(nonconverged)"
        lines.append(f"{q['id']},{value!r},{err!r},{method}")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_ACCURACY if accuracy_failed else EXIT_OK


def _default_mc_queries(model, n_events):
    boxes = [BoxQuery.upper(1.0), BoxQuery.upper(2.0)]
    if n_events >= 2:
        boxes.extend(BoxQuery.upper(*b) for b in WITNESS_BOXES)
        boxes.append(BoxQuery.upper(1.0, 1.0))
    return boxes


def _counting_axiom_report(model, seed, n_events):
    path = sample_path(model, max(n_events, 50), seed)
    cpath = CountingPath.from_arrivals(path.arrivals, horizon=float(path.arrivals[-1]))
    grid = np.union1d(np.linspace(0.0, cpath.horizon, 201), cpath.event_times)
    samples = list(zip(grid, counts_on_grid(cpath, grid)))
    return validate_counting_axioms(samples)


def _cmd_verify(args) -> int:
    model, meta = load_model_file(args.model)
    suite = args.suite
    selected = list(SUITES[:-1]) if suite == "all" else [suite]
    reports = []
    skipped = []

    for name in selected:
        if name == "exchangeability":
            if args.events < 2:
                skipped.append({"suite": name, "reason": "needs at least 2 events per path"})
                continue
            ensemble = simulate_ensemble(model, args.paths, args.events, args.seed)
            r = min(args.events, 3)
            reports.append(exchangeability_test(ensemble, r=r, level=args.level))
        elif name == "conditional-iid":
            theta = model.mixing.mean_point()
            if not model.mixing.contains(theta):
                theta = model.mixing.atoms[int(np.argmax(model.mixing.weights))]
            reports.append(
                conditional_iid_test(
                    model,
                    theta,
                    n_samples=max(args.paths, 100),
                    max_index=max(args.events, 2),
                    level=args.level,
                    seed=aux_seed(args.seed, 2),
                )
            )
        elif name == "mc-vs-exact":
            ensemble = simulate_ensemble(model, args.paths, args.events, args.seed)
            queries = _default_mc_queries(model, args.events)
            cfg = QuadratureConfig(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
            exact_values = [joint_interarrival_probability(model, q, cfg) for q in queries]
            reports.append(mc_vs_exact(ensemble, queries, exact_values))
        elif name == "mixed-poisson":
            if model.kernel.family != "exponential" or not model.is_proper_mrp:
                skipped.append(
                    {"suite": name, "reason": "requires a proper exponential-kernel model"}
                )
                continue
            reports.append(
                mixed_poisson_check(
                    model,
                    t_grid=(0.5, 1.0, 2.0),
                    h=0.5,
                    n_paths=args.paths,
                    level=args.level,
                    seed=aux_seed(args.seed, 3),
                )
            )
        elif name == "counting-axioms":
            reports.append(_counting_axiom_report(model, aux_seed(args.seed, 4), args.events))

    all_passed = all(r.passed for r in reports)
    doc = {
        "schema_version": 1,
        "model_file": args.model,
        "model_hash": model.model_hash(),
        "suite": suite,
        "seed": args.seed,
        "level": args.level,
        "expected_rejection": bool(meta.get("expects_rejection", False)),
        "passed": all_passed,
        "reports": [r.to_dict() for r in reports],
        "skipped": skipped,
    }
    atomic_write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all_passed else EXIT_REJECTED


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "exact":
            return _cmd_exact(args)
        return _cmd_verify(args)
    except CapacityError as exc:
        print(f"mrplab: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except AccuracyError as exc:
        print(f"mrplab: accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (SchemaError, MrplabError, OSError, json.JSONDecodeError) as exc:
        print(f"mrplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
