"""Experiment drivers.

Each driver takes a :class:`dperm.config.RunConfig` and returns an
:class:`ExperimentOutcome`: a list of CSV-ready rows plus an overall verdict.
Rows are deterministic for a fixed config (seeds derive from the config seed
through per-cell streams, so changing the trial count of one cell never
perturbs another), which makes reruns byte-identical.

Row semantics: ``value`` is the measured quantity, ``bound`` the value it is
held against, and ``passed`` says whether the check came out as claimed; rows
with ``passed`` empty are informational.  Most checks are value <= bound; the
counterexample gap rows demand value > bound.  ``DPERM_THREADS`` bounds the
worker threads used for trial loops (default 1); results do not depend on it.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .analysis import (
    AUDIT_TOL,
    aerm_bound,
    aerm_bound_stated,
    aerm_gap,
    audit_approx_dp,
    audit_pure_dp,
    consistency_suite,
    counterexample_experiment,
    exhaustive_neighbor_pairs,
    phase_transition_experiment,
    stability_audit,
    utility_tail_check,
)
from .config import ConfigError, RunConfig
from .mechanisms import (
    amplify_approx,
    amplify_pure,
    boost_high_confidence,
    erm_mechanism,
    exponential_mechanism,
    laplace_icdf,
    membership_flag_mechanism,
    pth_power_erm_batch,
    subsample_wrapper,
)
from .problems import (
    DataDistribution,
    Dataset,
    discrete_points,
    finite_support_estimation,
    labeled_threshold,
    linear_logistic,
    population_risk_vector,
    pth_power_mean,
    threshold_classification,
)
from .seeding import spawn_seed, trial_rng
from .spaces import estimate_sublevel_condition

CSV_COLUMNS = (
    "experiment",
    "mechanism",
    "problem",
    "n",
    "epsilon",
    "delta",
    "seed",
    "metric",
    "value",
    "stderr",
    "bound",
    "passed",
)


@dataclass(frozen=True)
class Row:
    """One CSV row; None fields print as empty cells."""

    experiment: str
    mechanism: str
    problem: str
    n: Optional[int]
    epsilon: Optional[float]
    delta: Optional[float]
    seed: int
    metric: str
    value: float
    stderr: Optional[float] = None
    bound: Optional[float] = None
    passed: Optional[bool] = None


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    return str(value)


def rows_to_csv(rows: Sequence[Row]) -> str:
    # Mechanism names contain commas, so cells go through a real CSV writer.
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(getattr(row, col)) for col in CSV_COLUMNS])
    return buffer.getvalue()


@dataclass
class ExperimentOutcome:
    experiment: str
    rows: list[Row]
    passed: bool
    failures: list[str]
    witnesses: list[dict]

    @property
    def checked(self) -> int:
        return sum(1 for r in self.rows if r.passed is not None)


def _finish(experiment: str, rows: list[Row], witnesses: list[dict]) -> ExperimentOutcome:
    failures = [
        f"{r.metric}: value={_cell(r.value)} bound={_cell(r.bound)}"
        for r in rows
        if r.passed is False
    ]
    return ExperimentOutcome(
        experiment=experiment,
        rows=rows,
        passed=not failures,
        failures=failures,
        witnesses=witnesses,
    )


def thread_count() -> int:
    raw = os.environ.get("DPERM_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(
            f"DPERM_THREADS must be an integer, got {raw!r}"
        ) from None
    return max(1, value)


def map_trials(fn: Callable[[int], object], count: int) -> list:
    """Evaluate fn(0..count-1), optionally on a thread pool.

    Safe only for fns whose result depends on the index alone, which every
    trial closure here guarantees by deriving its randomness from the index.
    """
    workers = thread_count()
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(workers, count)) as pool:
        return list(pool.map(fn, range(count)))


# ---------------------------------------------------------------------------
# Shared construction helpers


def _audit_problem(config: RunConfig):
    """Problem, space, and data-atom universe for the audit experiments."""
    kind = config["problem"]
    universe_size = config["universe"]
    if not 2 <= universe_size <= 6:
        raise ConfigError(
            f"universe must have 2..6 atoms for exhaustive audits, got {universe_size}"
        )
    if kind == "threshold":
        problem, space = threshold_classification(resolution=config["resolution"])
        xs = (np.arange(universe_size) + 0.5) / universe_size
        universe = Dataset(x=xs, y=(xs > 0.5).astype(float))
    elif kind == "finite-support":
        cells = config["cells"]
        problem, space = finite_support_estimation(cells, config["subset_size"])
        size = min(universe_size, cells)
        universe = Dataset(x=(np.arange(size) + 0.5) / cells)
    else:
        raise ConfigError(
            f"problem must be 'threshold' or 'finite-support', got {kind!r}"
        )
    return problem, space, universe


def _support_problem(config: RunConfig):
    """Finite-support problem with the uniform distribution on its cells."""
    cells = config["cells"]
    problem, space = finite_support_estimation(cells, config["subset_size"])
    distribution = discrete_points(x=(np.arange(cells) + 0.5) / cells)
    return problem, space, distribution


# ---------------------------------------------------------------------------
# Drivers


def run_audit(config: RunConfig) -> ExperimentOutcome:
    """Exact privacy audits: the private learner against its pure claim,
    subsampling against the tight amplification bound, the sqrt rule for an
    arbitrary base, and an approximate-budget base before and after
    subsampling."""
    problem, space, universe = _audit_problem(config)
    n = config["n"]
    pairs = list(exhaustive_neighbor_pairs(universe, n))
    seed = config.seed
    rows: list[Row] = []
    wits: list[dict] = []

    for eps in config["epsilon"]:
        mech = exponential_mechanism(problem, space, eps)
        report = audit_pure_dp(mech, pairs)
        ok = report.max_log_ratio <= eps + AUDIT_TOL
        rows.append(
            Row("audit", mech.name, problem.name, n, eps, 0.0, seed,
                "max_log_ratio", report.max_log_ratio, None, eps, ok)
        )
        if not ok and report.witness:
            wits.append({"epsilon": eps, **report.witness})

        m = config["subsample_m"]
        if not 1 <= m <= n:
            raise ConfigError(f"subsample_m must lie in 1..n, got {m}")
        gamma = m / n
        wrapped = subsample_wrapper(mech, m)
        tight = wrapped.claimed_budget(n).epsilon
        relaxed = amplify_pure(eps, gamma).relaxed
        sub_report = audit_pure_dp(wrapped, pairs)
        sub_ok = sub_report.max_log_ratio <= tight + AUDIT_TOL
        rows.append(
            Row("audit", wrapped.name, problem.name, n, eps, 0.0, seed,
                "subsampled_max_log_ratio", sub_report.max_log_ratio, None,
                tight, sub_ok)
        )
        rows.append(
            Row("audit", wrapped.name, problem.name, n, eps, 0.0, seed,
                "tight_below_relaxed", tight, None, relaxed, tight < relaxed)
        )
        if not sub_ok and sub_report.witness:
            wits.append({"epsilon": eps, "stage": "subsampled", **sub_report.witness})

    # The sqrt rule: subsampling an arbitrary (here deterministic) learner.
    raw = erm_mechanism(problem, space)
    sqrt_wrapped = subsample_wrapper(raw, "sqrt")
    claimed_delta = sqrt_wrapped.claimed_budget(n).delta
    zero_eps = audit_approx_dp(sqrt_wrapped, pairs, epsilon=0.0)
    sqrt_ok = zero_eps.realized_delta <= claimed_delta + AUDIT_TOL
    rows.append(
        Row("audit", sqrt_wrapped.name, problem.name, n, 0.0, claimed_delta, seed,
            "sqrt_rule_realized_delta", zero_eps.realized_delta, None,
            claimed_delta, sqrt_ok)
    )
    if not sqrt_ok and zero_eps.witness:
        wits.append({"stage": "sqrt-rule", **zero_eps.witness})

    # Approximate-budget base: realized delta at claimed epsilon, then again
    # after subsampling at the amplified (epsilon', delta').
    base_eps = float(config["epsilon"][0])
    base_delta = config["approx_delta"]
    if not 0.0 < base_delta < 1.0:
        raise ConfigError(f"approx_delta must lie in (0, 1), got {base_delta}")
    marker = float(universe.x[0] if universe.x.ndim == 1 else universe.x[0, 0])
    flag = membership_flag_mechanism(base_eps, base_delta, marker)
    flag_report = audit_approx_dp(flag, pairs, epsilon=base_eps)
    flag_ok = flag_report.realized_delta <= base_delta + AUDIT_TOL
    rows.append(
        Row("audit", flag.name, "membership-flag", n, base_eps, base_delta, seed,
            "approx_realized_delta", flag_report.realized_delta, None,
            base_delta, flag_ok)
    )
    m = config["subsample_m"]
    sub_flag = subsample_wrapper(flag, m)
    amplified = amplify_approx(base_eps, base_delta, m / n)
    sub_flag_report = audit_approx_dp(sub_flag, pairs, epsilon=amplified.epsilon)
    sub_flag_ok = sub_flag_report.realized_delta <= amplified.delta + AUDIT_TOL
    rows.append(
        Row("audit", sub_flag.name, "membership-flag", n, amplified.epsilon,
            amplified.delta, seed, "approx_subsampled_realized_delta",
            sub_flag_report.realized_delta, None, amplified.delta, sub_flag_ok)
    )
    if not flag_ok and flag_report.witness:
        wits.append({"stage": "approx-base", **flag_report.witness})
    if not sub_flag_ok and sub_flag_report.witness:
        wits.append({"stage": "approx-subsampled", **sub_flag_report.witness})
    return _finish("audit", rows, wits)


def run_stability(config: RunConfig) -> ExperimentOutcome:
    """Exact replace-one stability of the private learner against the
    privacy-implies-stability bounds e^eps - 1 and, for eps <= 1, 2 eps."""
    problem, space, universe = _audit_problem(config)
    n = config["n"]
    pairs = list(exhaustive_neighbor_pairs(universe, n))
    rows: list[Row] = []
    for eps in config["epsilon"]:
        mech = exponential_mechanism(problem, space, eps)
        gap = stability_audit(mech, pairs, universe)
        bound = math.expm1(eps)
        rows.append(
            Row("stability", mech.name, problem.name, n, eps, 0.0, config.seed,
                "stability_gap", gap, None, bound, gap <= bound + AUDIT_TOL)
        )
        if eps <= 1.0:
            rows.append(
                Row("stability", mech.name, problem.name, n, eps, 0.0, config.seed,
                    "stability_gap_2eps", gap, None, 2.0 * eps,
                    gap <= 2.0 * eps + AUDIT_TOL)
            )
    return _finish("stability", rows, [])


def run_aerm(config: RunConfig) -> ExperimentOutcome:
    """Mean exact AERM gap of the private learner against the universal
    suboptimality bound, per (n, epsilon) cell."""
    problem, space, distribution = _support_problem(config)
    trials = config["trials"]
    if trials < 2:
        raise ConfigError(f"trials must be >= 2, got {trials}")
    rows: list[Row] = []
    cell = 0
    for n in config["n_grid"]:
        if n < 2:
            raise ConfigError(f"n_grid entries must be >= 2, got {n}")
        for eps in config["epsilon"]:
            mech = exponential_mechanism(problem, space, eps)
            cell_seed = spawn_seed(config.seed, cell)
            cell += 1

            def one_trial(t: int, _n=n, _mech=mech, _seed=cell_seed) -> float:
                dataset = distribution.sample(_n, trial_rng(_seed, t))
                return aerm_gap(_mech, dataset)

            gaps = np.array(map_trials(one_trial, trials))
            mean = float(gaps.mean())
            se = float(gaps.std(ddof=1) / math.sqrt(trials))
            bound = aerm_bound(n, eps, space.size, 0.0, problem.zeta(n))
            stated = aerm_bound_stated(n, eps, space.size, 0.0, problem.zeta(n))
            rows.append(
                Row("aerm", mech.name, problem.name, n, eps, 0.0, config.seed,
                    "aerm_gap_mean", mean, se, bound, mean <= bound + AUDIT_TOL)
            )
            rows.append(
                Row("aerm", mech.name, problem.name, n, eps, 0.0, config.seed,
                    "aerm_gap_max", float(gaps.max()), None, None, None)
            )
            rows.append(
                Row("aerm", mech.name, problem.name, n, eps, 0.0, config.seed,
                    "aerm_bound_stated", stated, None, None, None)
            )
    return _finish("aerm", rows, [])


def run_utility_tail(config: RunConfig) -> ExperimentOutcome:
    """Pointwise tail bound on the realized objective of the private learner,
    checked on a geometric grid of thresholds."""
    kind = config["problem"]
    n = config["n"]
    eps = config["epsilon"]
    if kind == "threshold":
        problem, space = threshold_classification(resolution=config["resolution"])
        distribution = labeled_threshold(0.5, support_size=64)
    elif kind == "finite-support":
        problem, space, distribution = _support_problem(config)
    else:
        raise ConfigError(
            f"problem must be 'threshold' or 'finite-support', got {kind!r}"
        )
    if config["t_count"] < 1 or config["t_min"] <= 0 or config["t_max"] < config["t_min"]:
        raise ConfigError("need t_count >= 1 and 0 < t_min <= t_max")
    t_grid = np.geomspace(config["t_min"], config["t_max"], config["t_count"])
    mech = exponential_mechanism(problem, space, eps)
    dataset = distribution.sample(n, trial_rng(config.seed, 0))
    rows = [
        Row("utility-tail", mech.name, problem.name, n, eps, 0.0, config.seed,
            f"tail_mass[t={r.t:.6g}]", r.tail_mass, None, r.bound, r.ok)
        for r in utility_tail_check(mech, dataset, t_grid)
    ]
    return _finish("utility-tail", rows, [])


def run_consistency(config: RunConfig) -> ExperimentOutcome:
    """Stability, generalization, AERM, and excess-risk gaps of the private
    learner with the decomposition and stability checks, exactly for small n
    or by Monte Carlo with a 4-SE margin."""
    problem, space = threshold_classification(resolution=config["resolution"])
    distribution = discrete_points(
        x=np.array([0.3, 0.7]), y=np.array([0.0, 1.0])
    )
    mech = exponential_mechanism(problem, space, config["epsilon"])
    report = consistency_suite(
        mech,
        distribution,
        n=config["n"],
        mode=config["mode"],
        trials=config["trials"],
        seed=config.seed,
    )
    n, eps = config["n"], config["epsilon"]
    common = ("consistency", mech.name, problem.name, n, eps, 0.0, config.seed)
    rows = [
        Row(*common, "stability_gap", report.stability_gap, None,
            report.stability_bound,
            report.stability_gap <= report.stability_bound + AUDIT_TOL),
        Row(*common, "generalization_gap", report.generalization_gap,
            report.generalization_se, report.stability_gap,
            report.generalization_ok),
        Row(*common, "aerm_gap", report.aerm_gap, report.aerm_se,
            report.aerm_bound, report.aerm_gap <= report.aerm_bound + AUDIT_TOL),
        Row(*common, "excess_risk", report.excess_risk, report.excess_se,
            report.generalization_gap + report.aerm_gap, report.decomposition_ok),
    ]
    return _finish("consistency", rows, [])


def run_counterexample(config: RunConfig) -> ExperimentOutcome:
    """Worst-case AERM gap of the private learner on the packed dataset
    family, swept over hypothesis grid resolutions: consistency under a
    fixed privacy level fails once the grid is fine enough."""
    result = counterexample_experiment(
        epsilon=config["epsilon"],
        n=config["n"],
        resolutions=config["resolutions"],
        ratio_threshold=config["ratio_threshold"],
    )
    seed = config.seed
    rows: list[Row] = []
    for r in result.rows:
        rows.append(
            Row("counterexample", f"em(threshold,eps={result.epsilon:g})",
                f"threshold[grid={r.resolution}]", result.n, result.epsilon,
                0.0, seed, f"max_aerm_gap[grid={r.resolution}]", r.max_gap, None,
                0.5 if r.must_exceed_half else None,
                r.exceeds_half if r.must_exceed_half else None)
        )
    gaps = [r.max_gap for r in result.rows]
    rows.append(
        Row("counterexample", "em(threshold)", "threshold", result.n,
            result.epsilon, 0.0, seed, "gap_monotone_nondecreasing",
            1.0 if result.monotone else 0.0, None, 1.0, result.monotone)
    )
    rows.append(
        Row("counterexample", "em(threshold)", "threshold", result.n,
            result.epsilon, 0.0, seed, "final_gap_exceeds_half", gaps[-1],
            None, 0.5, result.final_exceeds_half)
    )
    witnesses = []
    if not result.monotone:
        witnesses.append(
            {
                "stage": "monotonicity",
                "gaps": gaps,
                "resolutions": [r.resolution for r in result.rows],
                "note": "worst-case gap saturates and wobbles at fine grids",
            }
        )
    return _finish("counterexample", rows, witnesses)


def run_phase(config: RunConfig) -> ExperimentOutcome:
    """Excess risk of ERM on a size-ceil(n^(1-r)) subsample: learning keeps
    improving at r = 1/2 and stalls at r = 1."""
    trials = config["trials"]
    rows_out: list[Row] = []
    phase_rows = phase_transition_experiment(
        rates=config["rates"],
        n_grid=config["n_grid"],
        trials=trials,
        seed=config.seed,
        resolution=config["resolution"],
        support_size=config["support_size"],
        theta=config["theta"],
    )
    for r in phase_rows:
        rows_out.append(
            Row("phase", f"subsampled-erm(r={r.rate:g})", "threshold", r.n,
                None, r.subsample / r.n, config.seed,
                f"excess_mean[r={r.rate:g}]", r.mean_excess, r.stderr, None, None)
        )

    by_cell = {(r.rate, r.n): r for r in phase_rows}
    n_grid = sorted(config["n_grid"])
    if 0.5 in config["rates"]:
        for a, b in zip(n_grid, n_grid[1:]):
            ra, rb = by_cell[(0.5, a)], by_cell[(0.5, b)]
            drop = ra.mean_excess - rb.mean_excess
            margin = 4.0 * math.hypot(ra.stderr, rb.stderr)
            rows_out.append(
                Row("phase", "subsampled-erm(r=0.5)", "threshold", b, None,
                    None, config.seed, f"excess_drop[{a}->{b}]", drop, None,
                    margin, drop > margin)
            )
    if 0.5 in config["rates"] and 1.0 in config["rates"]:
        n_max = n_grid[-1]
        slow, fast = by_cell[(1.0, n_max)], by_cell[(0.5, n_max)]
        sep = slow.mean_excess - fast.mean_excess
        margin = 4.0 * math.hypot(slow.stderr, fast.stderr)
        rows_out.append(
            Row("phase", "subsampled-erm", "threshold", n_max, None, None,
                config.seed, "stall_separation", sep, None, margin, sep > margin)
        )
    return _finish("phase", rows_out, [])


def run_boost(config: RunConfig) -> ExperimentOutcome:
    """Confidence boosting: calibrate the constant in the excess-risk ceiling
    on one block of datasets, then measure the failure frequency on a fresh
    block and hold it to the confidence target plus 3 binomial SEs."""
    problem, space, _uniform = _support_problem(config)
    cells = config["cells"]
    skew = config["skew"]
    if not 0.0 < skew <= 1.0:
        raise ConfigError(f"skew must lie in (0, 1], got {skew}")
    # A skewed cell law gives the support problem a unique optimum, so the
    # excess of a drawn hypothesis actually varies across trials.
    weights = skew ** np.arange(cells)
    distribution = discrete_points(
        x=(np.arange(cells) + 0.5) / cells, probs=weights / weights.sum()
    )
    n = config["n"]
    trials, calibration_trials = config["trials"], config["calibration_trials"]
    if trials < 2 or calibration_trials < 2:
        raise ConfigError("trials and calibration_trials must be >= 2")
    base_eps, sel_eps = config["base_epsilon"], config["epsilon"]
    base = exponential_mechanism(problem, space, base_eps)
    pop = population_risk_vector(problem, space, distribution)
    best = float(pop.min())
    rows: list[Row] = []
    for index, delta_target in enumerate(config["delta"]):
        mech = boost_high_confidence(base, space, delta_target, sel_eps)
        parts = mech.info["parts"]
        part_size = n // (parts + 1)
        if part_size < 2:
            raise ConfigError(
                f"n={n} leaves parts of size {part_size}; the ceiling needs >= 2"
            )
        xi = aerm_bound(
            part_size, base_eps, space.size, 0.0, problem.zeta(part_size)
        ) + math.expm1(base_eps)
        margin = math.sqrt(math.log(3.0 / delta_target) / n)

        def excess_at(root: int, t: int) -> float:
            local = spawn_seed(root, t)
            dataset = distribution.sample(
                n, np.random.default_rng(spawn_seed(local, 0))
            )
            h = mech.sample(dataset, spawn_seed(local, 1))
            return float(pop[h]) - best

        calib_root = spawn_seed(config.seed, 1000 + index)
        scores = np.array(
            map_trials(lambda t: excess_at(calib_root, t), calibration_trials)
        )
        # The calibrated constant may come out negative when the theoretical
        # per-part guarantee xi is loose; the ceiling is then driven by the
        # empirical quantile, which is the point of calibrating.
        constant = float(
            np.quantile((scores - math.e * xi) / margin, 1.0 - delta_target,
                        method="higher")
        )
        ceiling = math.e * xi + constant * margin

        measure_root = spawn_seed(config.seed, 2000 + index)
        failures = np.array(
            map_trials(
                lambda t: excess_at(measure_root, t) > ceiling + 1e-12, trials
            ),
            dtype=float,
        )
        freq = float(failures.mean())
        se = math.sqrt(freq * (1.0 - freq) / trials)
        common = ("boost", mech.name, problem.name, n, sel_eps, delta_target,
                  config.seed)
        rows.append(
            Row(*common, "failure_frequency", freq, se, delta_target,
                freq <= delta_target + 3.0 * se + AUDIT_TOL)
        )
        rows.append(Row(*common, "confidence_constant", constant, None, None, None))
        rows.append(Row(*common, "excess_ceiling", ceiling, None, None, None))
        rows.append(Row(*common, "parts", float(parts), None, None, None))
    return _finish("boost", rows, [])


def run_rates(config: RunConfig) -> ExperimentOutcome:
    """Excess population risk of the noisy-ERM location learner at the
    privacy schedule epsilon(n) = n^(-exponent), with a log-log slope fit
    over the size grid held to the configured band.

    Per trial the data stream draws the n sample points and then one uniform
    for the noise quantile, so trials are reproducible independent of the
    chunked evaluation order.  Population risk of an estimate h under the
    uniform data law has the closed form (h^11 + (1-h)^11) / 11.
    """
    problem, _ = pth_power_mean(resolution=2)  # naming and loss conventions only
    n_grid = list(config["n_grid"])
    trials = config["trials"]
    if trials < 2:
        raise ConfigError(f"trials must be >= 2, got {trials}")
    if any(n < 2 for n in n_grid) or len(n_grid) < 2:
        raise ConfigError("n_grid needs >= 2 sizes, all >= 2")
    exponent = config["epsilon_exponent"]

    def population_risk(h: np.ndarray) -> np.ndarray:
        return (h**11 + (1.0 - h) ** 11) / 11.0

    best = float(population_risk(np.array([0.5]))[0])
    rows: list[Row] = []
    means = []
    for ni, n in enumerate(n_grid):
        eps = float(n) ** (-exponent)
        scale = 2.0 / (eps * n)
        root = spawn_seed(config.seed, ni)
        chunk = max(1, min(trials, 10**6 // n))
        excesses = np.empty(trials)
        done = 0
        while done < trials:
            size = min(chunk, trials - done)
            block = np.empty((size, n))
            quantiles = np.empty(size)
            for j in range(size):
                rng = trial_rng(root, done + j)
                block[j] = rng.uniform(0.0, 1.0, size=n)
                quantiles[j] = rng.random()
            erms = pth_power_erm_batch(block)
            noise = np.array([laplace_icdf(float(u), scale) for u in quantiles])
            outputs = np.clip(erms + noise, 0.0, 1.0)
            excesses[done : done + size] = population_risk(outputs) - best
            done += size
        mean = float(excesses.mean())
        se = float(excesses.std(ddof=1) / math.sqrt(trials))
        means.append(mean)
        rows.append(
            Row("rates", f"laplace-erm(eps=n^-{exponent:g})", problem.name, n,
                eps, 0.0, config.seed, "excess_mean", mean, se, None, None)
        )
    slope = float(np.polyfit(np.log(np.array(n_grid, float)), np.log(means), 1)[0])
    lo, hi = config["slope_lo"], config["slope_hi"]
    rows.append(
        Row("rates", f"laplace-erm(eps=n^-{exponent:g})", problem.name, None,
            None, 0.0, config.seed, "loglog_slope", slope, None, hi,
            lo <= slope <= hi)
    )
    witnesses = []
    if not (lo <= slope <= hi):
        witnesses.append(
            {
                "stage": "slope",
                "slope": slope,
                "band": [lo, hi],
                "means": means,
                "n_grid": n_grid,
                "note": (
                    "the clamped mechanism's excess is nearly size-invariant "
                    "because the noise scale 2 n^(exponent-1) decays slowly"
                ),
            }
        )
    return _finish("rates", rows, witnesses)


def run_sublevel(config: RunConfig) -> ExperimentOutcome:
    """Fit the sublevel-condition constants (K, rho) of a problem by
    regressing log mean mass ratios on log(1/t); on a finite space with
    counting measure every ratio is at most the space size, which is the
    checked claim."""
    kind = config["problem"]
    if kind == "logistic":
        problem, space = linear_logistic(d=1, resolution=config["resolution"])
        distribution = DataDistribution(
            kind="uniform-box",
            lower=np.array([0.0]),
            upper=np.array([1.0]),
            theta=0.5,
        )
    elif kind == "finite-support":
        problem, space, distribution = _support_problem(config)
    else:
        raise ConfigError(
            f"problem must be 'logistic' or 'finite-support', got {kind!r}"
        )
    if config["t_count"] < 2 or config["t_min"] <= 0 or config["t_max"] <= config["t_min"]:
        raise ConfigError("need t_count >= 2 and 0 < t_min < t_max")
    t_grid = np.geomspace(config["t_min"], config["t_max"], config["t_count"])
    fit = estimate_sublevel_condition(
        problem,
        distribution,
        space,
        n=config["n"],
        t_grid=t_grid,
        replications=config["replications"],
        seed=config.seed,
    )
    n = config["n"]
    common = ("sublevel", "none", problem.name, n, None, None, config.seed)
    rows = [
        Row(*common, f"mean_ratio[t={t:.6g}]", ratio, None, float(space.size),
            ratio <= space.size + 1e-6)
        for t, ratio in fit.table
    ]
    rows.append(Row(*common, "rho_hat", fit.rho_hat, None, None, None))
    rows.append(Row(*common, "k_hat", fit.k_hat, None, None, None))
    return _finish("sublevel", rows, [])


EXPERIMENTS: dict[str, Callable[[RunConfig], ExperimentOutcome]] = {
    "audit": run_audit,
    "stability": run_stability,
    "aerm": run_aerm,
    "utility-tail": run_utility_tail,
    "consistency": run_consistency,
    "counterexample": run_counterexample,
    "phase": run_phase,
    "boost": run_boost,
    "rates": run_rates,
    "sublevel": run_sublevel,
}

DESCRIPTIONS: dict[str, str] = {
    "audit": "exact privacy audits of the private learner and its wrappers",
    "stability": "exact replace-one stability against the privacy-implied bounds",
    "aerm": "mean empirical-suboptimality gap against the universal bound",
    "utility-tail": "pointwise objective tail bound over a threshold grid",
    "consistency": "stability, generalization, and excess-risk decomposition checks",
    "counterexample": "worst-case gap growth of the private learner on packed data",
    "phase": "subsampled ERM excess risk: learning at r=1/2, stalling at r=1",
    "boost": "failure frequency of the confidence-boosting wrapper",
    "rates": "excess-risk scaling of the noisy location learner in n",
    "sublevel": "sublevel-condition constants fitted from sampled objectives",
}


def run_experiment(config: RunConfig) -> ExperimentOutcome:
    driver = EXPERIMENTS.get(config.experiment)
    if driver is None:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    return driver(config)
