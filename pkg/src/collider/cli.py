"""Command line front end.

Every subcommand prints a short summary and, where it applies, writes the
per-trial CSV described in collider.harness. Seeds make runs exactly
reproducible; see the README for the stream derivation recipe.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .harness import ExperimentConfig, recipe, run_experiment, sweep
from .ldp import PrivacyParams, audit_privacy, required_salts
from .rng import make_rng

_PLOT_STUB = """\
# gnuplot stub: stopping time / error columns from a collider sweep CSV.
# Adjust `using` to taste; column order is fixed by the CSV header.
set datafile separator ','
set key autotitle columnhead
set logscale y
plot 'RESULTS.csv' using 8:10 with points title 'n_samples by trial'
"""


def _add_common(parser, with_out=True):
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    if with_out:
        parser.add_argument("--out", default=None, help="CSV output path")


def _finish(config: ExperimentConfig, clamp: bool = False) -> int:
    records, summary = run_experiment(config)
    if clamp:
        records = [
            r if r.estimate is None else _clamped(r)
            for r in records
        ]
        if config.out:
            from .harness import write_csv

            write_csv(config.out, records)
    print(json.dumps(summary, indent=2))
    if config.out:
        print(f"wrote {len(records)} rows to {config.out}")
    return 0


def _clamped(record):
    from dataclasses import replace

    clamped = min(1.0, max(0.0, record.estimate))
    return replace(record, estimate=clamped)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="collider",
        description="Collision probability estimation and sequential testing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="empirical privacy audit of the hash channel")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x", type=int, default=1)
    p.add_argument("--x-prime", type=int, default=2)

    p = sub.add_parser("estimate", help="private estimation mechanism")
    p.add_argument("--dist", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eps-rel", type=float, default=1.0)
    p.add_argument("--delta", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int)
    group.add_argument("--c-lower", type=float)
    p.add_argument("--clamp", action="store_true", help="clamp estimates into [0, 1]")
    _add_common(p)

    p = sub.add_parser("seqtest", help="sequential test of C(p) = c0")
    p.add_argument("--dist", required=True)
    p.add_argument("--c0", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--budget", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("psq", help="private sequential test")
    p.add_argument("--dist", required=True)
    p.add_argument("--c0", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--budget", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("doubling", help="doubling tester built on the mechanism")
    p.add_argument("--dist", required=True)
    p.add_argument("--c0", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n0", type=int, default=8192)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--c-lower", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("batch", help="fixed-budget batch test")
    p.add_argument("--dist", required=True)
    p.add_argument("--c0", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--estimator", choices=["plugin", "ustat"], required=True)
    _add_common(p)

    p = sub.add_parser("experiment", help="pre-registered sweeps or custom TOML configs")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--recipe", choices=["fig1", "fig2", "fig3", "fig4", "fig5"])
    group.add_argument("--config", help="TOML sweep description")
    p.add_argument("--scale", choices=["desk", "smoke"], default="desk")
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit-plot-stub", action="store_true")

    args = parser.parse_args(argv)

    if args.command == "audit":
        params = PrivacyParams(alpha=args.alpha, beta=args.beta)
        fraction = audit_privacy(params, args.trials, args.x, args.x_prime, make_rng(args.seed))
        r = required_salts(args.alpha, args.beta)
        ok = fraction <= args.beta
        print(f"salts r = {r}")
        print(f"violation fraction = {fraction:.6f} (beta = {args.beta})")
        print("PASS" if ok else "FAIL")
        return 0 if ok else 1

    if args.command == "estimate":
        params = {"alpha": args.alpha, "beta": args.beta, "eps_rel": args.eps_rel, "delta": args.delta}
        if args.n is not None:
            params["n"] = args.n
        else:
            params["c_lower"] = args.c_lower
        config = ExperimentConfig("estimate", args.dist, args.trials, args.seed, params, args.out)
        return _finish(config, clamp=args.clamp)

    if args.command == "seqtest":
        config = ExperimentConfig(
            "seqtest",
            args.dist,
            args.trials,
            args.seed,
            {"c0": args.c0, "delta": args.delta, "budget": args.budget},
            args.out,
        )
        return _finish(config)

    if args.command == "psq":
        config = ExperimentConfig(
            "psq",
            args.dist,
            args.trials,
            args.seed,
            {
                "c0": args.c0,
                "delta": args.delta,
                "alpha": args.alpha,
                "beta": args.beta,
                "budget": args.budget,
            },
            args.out,
        )
        return _finish(config)

    if args.command == "doubling":
        config = ExperimentConfig(
            "doubling",
            args.dist,
            args.trials,
            args.seed,
            {
                "c0": args.c0,
                "delta": args.delta,
                "alpha": args.alpha,
                "beta": args.beta,
                "n0": args.n0,
                "max_rounds": args.max_rounds,
                "c_lower": args.c_lower,
            },
            args.out,
        )
        return _finish(config)

    if args.command == "batch":
        estimator = {"plugin": "plug_in", "ustat": "u_statistic"}[args.estimator]
        config = ExperimentConfig(
            "batch",
            args.dist,
            args.trials,
            args.seed,
            {"c0": args.c0, "epsilon": args.epsilon, "delta": args.delta, "estimator": estimator},
            args.out,
        )
        return _finish(config)

    if args.command == "experiment":
        os.makedirs(args.out, exist_ok=True)
        if args.recipe:
            configs = recipe(args.recipe, args.scale, args.seed)
            out_csv = os.path.join(args.out, f"{args.recipe}.csv")
        else:
            configs = _load_toml_configs(args.config)
            out_csv = os.path.join(args.out, "sweep.csv")
        records = sweep(configs, out_csv)
        print(f"wrote {len(records)} rows to {out_csv}")
        if args.emit_plot_stub:
            stub_path = os.path.join(args.out, "plot_stub.gp")
            with open(stub_path, "w") as fh:
                fh.write(_PLOT_STUB.replace("RESULTS.csv", os.path.basename(out_csv)))
            print(f"wrote {stub_path}")
        return 0

    parser.error(f"unhandled command {args.command!r}")  # pragma: no cover
    return 2  # pragma: no cover


def _load_toml_configs(path: str) -> list[ExperimentConfig]:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    entries = doc.get("config")
    if not entries:
        raise ValueError(f"{path}: expected at least one [[config]] table")
    configs = []
    for index, entry in enumerate(entries):
        try:
            configs.append(
                ExperimentConfig(
                    algorithm=entry["algorithm"],
                    dist=entry["dist"],
                    trials=int(entry.get("trials", 10)),
                    base_seed=int(entry.get("base_seed", 0)),
                    params=dict(entry.get("params", {})),
                )
            )
        except KeyError as exc:
            raise ValueError(f"{path}: [[config]] #{index} is missing {exc}") from exc
    return configs


if __name__ == "__main__":
    sys.exit(main())
