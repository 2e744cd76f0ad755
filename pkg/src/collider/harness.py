"""Experiment orchestration: sweeps, trial replication, CSV emission.

Every trial runs on its own PCG64 stream seeded by SplitMix64-mixing the
config's base seed with the trial index (see collider.rng), so re-running
a config reproduces every stochastic field exactly; wall_time_ms is the
only nondeterministic column. One CSV row per trial, fixed schema:

    algorithm,distribution,k,alpha,beta,eps,delta,trial,seed,n_samples,
    estimate,abs_error,verdict,wall_time_ms

Inapplicable fields are empty strings.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import batch as batch_mod
from .distributions import collision_probability, parse_distribution_spec, sample
from .ldp import HashChannel, PrivacyParams
from .mechanism import krappor_indirect_estimate, plan_mechanism, recommended_n, run_mechanism
from .private_sequential import run_doubling, run_psq
from .rng import derive_seed, make_rng
from .sequential import run_test

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "RunRecord",
    "run_experiment",
    "sweep",
    "summarize",
    "write_csv",
    "recipe",
    "RECIPES",
]

CSV_HEADER = [
    "algorithm",
    "distribution",
    "k",
    "alpha",
    "beta",
    "eps",
    "delta",
    "trial",
    "seed",
    "n_samples",
    "estimate",
    "abs_error",
    "verdict",
    "wall_time_ms",
]

_ALGORITHMS = (
    "estimate",
    "krappor",
    "seqtest",
    "psq",
    "doubling",
    "batch",
    "plugin_estimate",
    "ustat_estimate",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep cell: an algorithm, a distribution, its parameters, and a
    replication count. params keys depend on the algorithm:

      estimate         alpha, beta, eps_rel, delta, and n or c_lower
      krappor          alpha, n
      seqtest          c0, delta, budget
      psq              c0, delta, alpha, beta, budget
      doubling         c0, delta, alpha, beta, n0, max_rounds, c_lower
      batch            c0, epsilon, delta, estimator ("plug_in"/"u_statistic")
      plugin_estimate  n
      ustat_estimate   n
    """

    algorithm: str
    dist: str
    trials: int
    base_seed: int
    params: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")


@dataclass(frozen=True)
class RunRecord:
    """One trial's outcome row."""

    algorithm: str
    distribution: str
    k: int
    alpha: float | None
    beta: float | None
    eps: float | None
    delta: float | None
    trial: int
    seed: int
    n_samples: int
    estimate: float | None
    abs_error: float | None
    verdict: str | None
    wall_time_ms: float

    def to_row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [
            self.algorithm,
            self.distribution,
            str(self.k),
            fmt(self.alpha),
            fmt(self.beta),
            fmt(self.eps),
            fmt(self.delta),
            str(self.trial),
            str(self.seed),
            str(self.n_samples),
            fmt(self.estimate),
            fmt(self.abs_error),
            self.verdict or "",
            repr(self.wall_time_ms),
        ]


def _run_trial(config: ExperimentConfig, trial: int) -> RunRecord:
    seed = derive_seed(config.base_seed, trial)
    rng = make_rng(config.base_seed, trial)
    d = parse_distribution_spec(config.dist)
    p = dict(config.params)
    algo = config.algorithm
    true_c = collision_probability(d)
    alpha = p.get("alpha")
    beta = p.get("beta")
    eps = delta = None
    estimate = abs_error = None
    verdict = None
    start = time.perf_counter()

    if algo == "estimate":
        params = PrivacyParams(alpha=p["alpha"], beta=p["beta"])
        eps, delta = p["eps_rel"], p["delta"]
        n = int(p["n"]) if "n" in p else recommended_n(p["c_lower"], eps, delta, params)
        plan = plan_mechanism(n, eps, delta, params)
        channel = HashChannel(seed=rng.bytes(16), params=params)
        result = run_mechanism(plan, channel, d, rng)
        estimate = result.c_hat
        abs_error = abs(result.c_hat - true_c)
        n_samples = result.users_consumed
    elif algo == "krappor":
        n = int(p["n"])
        estimate = krappor_indirect_estimate(d, n, p["alpha"], rng)
        abs_error = abs(estimate - true_c)
        n_samples = n
    elif algo == "seqtest":
        delta = p["delta"]
        v = run_test(d, p["c0"], delta, int(p["budget"]), rng)
        verdict = "rejected" if v.rejected else "not_rejected"
        n_samples = v.samples_consumed
    elif algo == "psq":
        params = PrivacyParams(alpha=p["alpha"], beta=p["beta"])
        delta = p["delta"]
        v = run_psq(d, p["c0"], delta, params, int(p["budget"]), rng)
        verdict = "rejected" if v.rejected else "not_rejected"
        n_samples = v.samples_consumed
    elif algo == "doubling":
        params = PrivacyParams(alpha=p["alpha"], beta=p["beta"])
        delta = p["delta"]
        result = run_doubling(
            d, p["c0"], delta, params, int(p["n0"]), int(p["max_rounds"]), rng, p["c_lower"]
        )
        verdict = "rejected" if result.rejected else "not_rejected"
        n_samples = result.samples_consumed
        if result.rounds:
            estimate = result.rounds[-1].c_hat
            abs_error = abs(estimate - true_c)
    elif algo == "batch":
        delta = p["delta"]
        eps = p["epsilon"]
        result = batch_mod.batch_test(d, p["c0"], eps, delta, p["estimator"], rng)
        verdict = "rejected" if result.rejected else "accepted"
        estimate = result.estimate
        abs_error = abs(estimate - true_c)
        n_samples = result.n
    elif algo in ("plugin_estimate", "ustat_estimate"):
        n = int(p["n"])
        draws = sample(d, rng, size=n)
        estimate = batch_mod.plug_in(draws) if algo == "plugin_estimate" else batch_mod.u_statistic(draws)
        abs_error = abs(estimate - true_c)
        n_samples = n
    else:  # pragma: no cover - guarded by ExperimentConfig
        raise ValueError(f"unknown algorithm {algo!r}")

    wall_ms = (time.perf_counter() - start) * 1000.0
    return RunRecord(
        algorithm=algo,
        distribution=config.dist,
        k=d.k,
        alpha=alpha,
        beta=beta,
        eps=eps,
        delta=delta,
        trial=trial,
        seed=seed,
        n_samples=int(n_samples),
        estimate=estimate,
        abs_error=abs_error,
        verdict=verdict,
        wall_time_ms=wall_ms,
    )


def summarize(values) -> dict:
    """Mean, standard error (sample sd / sqrt(n)), and 10/50/90 quantiles."""
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if arr.size == 0:
        return {"n": 0}
    stderr = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    q10, q50, q90 = np.quantile(arr, [0.1, 0.5, 0.9])
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "stderr": stderr,
        "q10": float(q10),
        "q50": float(q50),
        "q90": float(q90),
    }


def run_experiment(config: ExperimentConfig) -> tuple[list[RunRecord], dict]:
    """Run all trials of one config; write CSV if config.out is set.

    Returns (records, summary) where the summary aggregates
    n_samples and abs_error across trials.
    """
    records = [_run_trial(config, t) for t in range(config.trials)]
    summary = {
        "n_samples": summarize(r.n_samples for r in records),
        "abs_error": summarize(r.abs_error for r in records),
    }
    if config.out:
        write_csv(config.out, records)
    return records, summary


def write_csv(path: str, records: list[RunRecord]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for record in records:
                writer.writerow(record.to_row())
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def sweep(configs: list[ExperimentConfig], out: str) -> list[RunRecord]:
    """Run configs in order, merging rows into one CSV with stable
    (config index, trial index) ordering.

    On a failing config the rows already completed are flushed before the
    error propagates, so partial output is never silently lost.
    """
    all_records: list[RunRecord] = []
    try:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for index, config in enumerate(configs):
                try:
                    records, _ = run_experiment(replace(config, out=None))
                except Exception as exc:
                    fh.flush()
                    raise RuntimeError(
                        f"sweep aborted at config {index} ({config.algorithm} on "
                        f"{config.dist}): {exc}"
                    ) from exc
                for record in records:
                    writer.writerow(record.to_row())
                fh.flush()
                all_records.extend(records)
    except OSError as exc:
        raise OSError(f"cannot write sweep results to {out!r}: {exc}") from exc
    return all_records


def _log_spaced_ks(lo: int, hi: int, count: int) -> list[int]:
    ks = np.unique(
        np.round(np.logspace(math.log10(lo), math.log10(hi), count)).astype(int)
    )
    return [int(k) for k in ks]


def recipe(name: str, scale: str = "desk", base_seed: int = 20240) -> list[ExperimentConfig]:
    """Pre-registered desk-scale sweeps mirroring the paper's experiment
    shapes. scale="smoke" shrinks every knob for quick checks."""
    if name not in RECIPES:
        raise ValueError(f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")
    if scale not in ("desk", "smoke"):
        raise ValueError(f"scale must be 'desk' or 'smoke', got {scale!r}")
    return RECIPES[name](scale, base_seed)


def _recipe_fig1(scale: str, base_seed: int) -> list[ExperimentConfig]:
    # Private estimation error vs n: hashing mechanism against the one-hot
    # flipping baseline on uniform and power-law supports.
    small = scale == "smoke"
    alpha, beta, delta = math.log(3.0), 0.05, 0.5
    trials = 2 if small else 5
    dists = ["uniform:k=10"] if small else ["uniform:k=20", "powerlaw:k=20"]
    configs = []
    for dist in dists:
        d = parse_distribution_spec(dist)
        c = collision_probability(d)
        n_star = recommended_n(c, 1.0, delta, PrivacyParams(alpha, beta))
        if small:
            n_star = min(n_star, 40000)
        for n in (n_star // 16, n_star // 4, n_star):
            configs.append(
                ExperimentConfig(
                    "estimate",
                    dist,
                    trials,
                    derive_seed(base_seed, 1, len(configs)),
                    {"alpha": alpha, "beta": beta, "eps_rel": 1.0, "delta": delta, "n": max(n, 400)},
                )
            )
            configs.append(
                ExperimentConfig(
                    "krappor",
                    dist,
                    trials,
                    derive_seed(base_seed, 2, len(configs)),
                    {"alpha": alpha, "n": max(n, 400)},
                )
            )
    return configs


def _recipe_fig2(scale: str, base_seed: int) -> list[ExperimentConfig]:
    # Sequential tester vs the doubling tester as the gap shrinks.
    small = scale == "smoke"
    alpha, beta, delta = 8.0, 0.8, 0.2
    dists = ["uniform:k=2"] if small else ["powerlaw:k=5", "exponential:k=5"]
    gaps = (0.35, 0.18) if small else (0.3, 0.15)
    trials = 2 if small else 3
    n0 = 1 << 21
    configs = []
    for dist in dists:
        d = parse_distribution_spec(dist)
        c = collision_probability(d)
        c_lower = round(0.9 * c, 3)
        for gap in gaps:
            c0 = c + gap
            configs.append(
                ExperimentConfig(
                    "seqtest",
                    dist,
                    trials,
                    derive_seed(base_seed, 3, len(configs)),
                    {"c0": c0, "delta": delta, "budget": 200000},
                )
            )
            configs.append(
                ExperimentConfig(
                    "doubling",
                    dist,
                    trials,
                    derive_seed(base_seed, 4, len(configs)),
                    {
                        "c0": c0,
                        "delta": delta,
                        "alpha": alpha,
                        "beta": beta,
                        "n0": n0,
                        "max_rounds": 8,
                        "c_lower": c_lower,
                    },
                )
            )
    return configs


def _recipe_fig3(scale: str, base_seed: int) -> list[ExperimentConfig]:
    # Stopping time vs support size: fixed null, shrinking gap |C - c0|.
    small = scale == "smoke"
    ks = _log_spaced_ks(10, 100, 5) if small else _log_spaced_ks(10, 10000, 20)
    trials = 3 if small else 10
    budget = 20000 if small else 100000
    return [
        ExperimentConfig(
            "seqtest",
            f"uniform:k={k}",
            trials,
            derive_seed(base_seed, 5, i),
            {"c0": 0.0, "delta": 0.1, "budget": budget},
        )
        for i, k in enumerate(ks)
    ]


def _recipe_fig4(scale: str, base_seed: int) -> list[ExperimentConfig]:
    # Empirical error of the plug-in vs the all-pairs estimator.
    small = scale == "smoke"
    trials = 50 if small else 500
    sizes = (100, 1000) if small else (100, 1000, 10000)
    dists = ["uniform:k=100"] if small else ["uniform:k=1000", "powerlaw:k=1000"]
    configs = []
    for dist in dists:
        for n in sizes:
            for algo in ("plugin_estimate", "ustat_estimate"):
                configs.append(
                    ExperimentConfig(
                        algo,
                        dist,
                        trials,
                        derive_seed(base_seed, 6, len(configs)),
                        {"n": n},
                    )
                )
    return configs


def _recipe_fig5(scale: str, base_seed: int) -> list[ExperimentConfig]:
    # Private sequential testers against the non-private one; the CSV
    # carries the stopping times, the ratio is for the reader.
    small = scale == "smoke"
    alpha, beta, delta = 8.0, 0.8, 0.2
    dist = "uniform:k=2"
    c = 0.5
    gap = 0.4 if small else 0.45
    c0 = c + gap
    trials = 2 if small else 3
    budget = 2000000  # realized-hash deviation sets the PSQ stopping scale
    seeds = [derive_seed(base_seed, 7, i) for i in range(3)]
    return [
        ExperimentConfig(
            "seqtest", dist, trials, seeds[0], {"c0": c0, "delta": delta, "budget": budget}
        ),
        ExperimentConfig(
            "psq",
            dist,
            trials,
            seeds[1],
            {"c0": c0, "delta": delta, "alpha": alpha, "beta": beta, "budget": budget},
        ),
        ExperimentConfig(
            "doubling",
            dist,
            trials,
            seeds[2],
            {
                "c0": c0,
                "delta": delta,
                "alpha": alpha,
                "beta": beta,
                "n0": 1 << 21,
                "max_rounds": 6,
                "c_lower": 0.45,
            },
        ),
    ]


RECIPES = {
    "fig1": _recipe_fig1,
    "fig2": _recipe_fig2,
    "fig3": _recipe_fig3,
    "fig4": _recipe_fig4,
    "fig5": _recipe_fig5,
}
