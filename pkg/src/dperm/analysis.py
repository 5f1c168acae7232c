"""Exact privacy audits, stability and risk-gap checks, and the
counterexample and phase-transition studies.

The audit functions here treat a mechanism's claimed budget as a hypothesis
and test it against the mechanism's exact output laws on enumerated (or
sampled) neighboring datasets.  Neighbors differ in exactly one point drawn
from a finite universe of atoms.  Every shipped mechanism's law depends on
the dataset only through its multiset of points (objectives are averages),
so enumeration happens at the multiset level and each audited law is cached
by dataset content.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from .mechanisms import Mechanism, MechanismDistribution, exponential_mechanism
from .problems import (
    DataDistribution,
    Dataset,
    labeled_threshold,
    objective_vector,
    packed_datasets,
    population_risk_vector,
    risk_vector,
    threshold_classification,
)
from .seeding import spawn_seed, trial_rng
from .spaces import SizeLimitError, sublevel_set

AUDIT_TOL = 1e-9
NEIGHBOR_PAIR_CAP = 2 * 10**5
ENUMERATION_CAP = 10**6


# ---------------------------------------------------------------------------
# Neighbor enumeration


def _dataset_from_atom_ids(universe: Dataset, ids: Sequence[int]) -> Dataset:
    return universe.take(list(ids))


def _fingerprint(dataset: Dataset) -> bytes:
    tail = b"" if dataset.y is None else dataset.y.tobytes()
    return dataset.x.tobytes() + b"|" + tail


def exhaustive_neighbor_pairs(
    universe: Dataset, n: int, cap: int = NEIGHBOR_PAIR_CAP
) -> Iterator[tuple[Dataset, Dataset]]:
    """All ordered neighbor pairs of size-n datasets over a finite universe.

    Datasets are enumerated as multisets of universe atoms, which is lossless
    for the mechanisms in this package (their laws ignore point order).  For
    every multiset and every atom it contains, one occurrence is replaced by
    each other atom; iterating all multisets therefore produces each ordered
    pair exactly once in each direction.

    Raises SizeLimitError when the ordered-pair count would exceed ``cap``.
    """
    u = universe.n
    if n < 1 or u < 2:
        raise ValueError("need n >= 1 and a universe of at least two atoms")
    multisets = math.comb(n + u - 1, n)
    bound = multisets * min(n, u) * (u - 1)
    if bound > cap:
        raise SizeLimitError(
            f"up to {bound} ordered neighbor pairs exceeds the cap of {cap}"
        )
    for ms in itertools.combinations_with_replacement(range(u), n):
        base = _dataset_from_atom_ids(universe, ms)
        seen = set()
        for pos, a in enumerate(ms):
            if a in seen:
                continue
            seen.add(a)
            for b in range(u):
                if b == a:
                    continue
                swapped = list(ms)
                swapped[pos] = b
                yield base, _dataset_from_atom_ids(universe, swapped)


def sampled_neighbor_pairs(
    universe: Dataset, n: int, count: int, seed: int
) -> Iterator[tuple[Dataset, Dataset]]:
    """``count`` random neighbor pairs, each yielded in both orders."""
    u = universe.n
    if n < 1 or u < 2:
        raise ValueError("need n >= 1 and a universe of at least two atoms")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        ids = rng.integers(0, u, size=n)
        pos = int(rng.integers(0, n))
        b = int(rng.integers(0, u - 1))
        if b >= ids[pos]:
            b += 1
        swapped = ids.copy()
        swapped[pos] = b
        first = _dataset_from_atom_ids(universe, ids)
        second = _dataset_from_atom_ids(universe, swapped)
        yield first, second
        yield second, first


class _LawCache:
    def __init__(self, mechanism: Mechanism) -> None:
        if mechanism.law is None:
            raise ValueError(
                f"mechanism {mechanism.name!r} has no exact law to audit"
            )
        self._mechanism = mechanism
        self._cache: dict[bytes, MechanismDistribution] = {}

    def law(self, dataset: Dataset) -> MechanismDistribution:
        key = _fingerprint(dataset)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._mechanism.law(dataset)
            self._cache[key] = hit
        return hit


# ---------------------------------------------------------------------------
# Privacy audits


@dataclass(frozen=True)
class PureAuditReport:
    """Worst pointwise log-likelihood ratio found over the probed pairs."""

    max_log_ratio: float
    pairs_probed: int
    witness: Optional[dict] = None


@dataclass(frozen=True)
class ApproxAuditReport:
    """Largest realized delta at a fixed epsilon over the probed pairs."""

    epsilon: float
    realized_delta: float
    pairs_probed: int
    witness: Optional[dict] = None


def audit_pure_dp(
    mechanism: Mechanism, pairs: Iterable[tuple[Dataset, Dataset]]
) -> PureAuditReport:
    """Exact pure-DP audit: max over pairs and hypotheses of |log P - log Q|.

    A hypothesis with mass under one law and none under the other realizes an
    infinite ratio and is reported as such; zero-zero entries carry no
    evidence and are skipped.
    """
    cache = _LawCache(mechanism)
    worst = 0.0
    witness: Optional[dict] = None
    probed = 0
    for index, (left, right) in enumerate(pairs):
        probed += 1
        p = cache.law(left)
        q = cache.law(right)
        lp, lq = p.log_probabilities, q.log_probabilities
        both_zero = np.isneginf(lp) & np.isneginf(lq)
        with np.errstate(invalid="ignore"):
            gaps = np.abs(lp - lq)
        gaps[both_zero] = 0.0
        hid = int(np.argmax(gaps))
        value = float(gaps[hid])
        if value > worst or witness is None:
            worst = value
            witness = {
                "pair_index": index,
                "hypothesis_id": hid,
                "log_ratio": value,
                "p": float(p.probabilities[hid]),
                "q": float(q.probabilities[hid]),
            }
    if probed == 0:
        raise ValueError("no neighbor pairs were supplied")
    return PureAuditReport(max_log_ratio=worst, pairs_probed=probed, witness=witness)


def audit_approx_dp(
    mechanism: Mechanism,
    pairs: Iterable[tuple[Dataset, Dataset]],
    epsilon: float,
) -> ApproxAuditReport:
    """Exact approximate-DP audit at a fixed epsilon.

    For each ordered pair the realized delta is sum_h max(0, P(h) - e^eps Q(h));
    the report keeps the maximum.  Direction matters, so callers must supply
    ordered pairs covering both orientations (the enumerators here do).
    """
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    cache = _LawCache(mechanism)
    factor = math.exp(epsilon)
    worst = -1.0
    witness: Optional[dict] = None
    probed = 0
    for index, (left, right) in enumerate(pairs):
        probed += 1
        p = cache.law(left).probabilities
        q = cache.law(right).probabilities
        value = float(np.clip(p - factor * q, 0.0, None).sum())
        if value > worst:
            worst = value
            witness = {"pair_index": index, "realized_delta": value}
    if probed == 0:
        raise ValueError("no neighbor pairs were supplied")
    return ApproxAuditReport(
        epsilon=epsilon, realized_delta=worst, pairs_probed=probed, witness=witness
    )


def stability_audit(
    mechanism: Mechanism,
    pairs: Iterable[tuple[Dataset, Dataset]],
    probe_points: Dataset,
) -> float:
    """Exact replace-one stability: the largest shift in expected loss at any
    probe point when one dataset point is swapped.

    Returns sup over pairs and probes of |E_P loss(h, z) - E_Q loss(h, z)|.
    """
    if mechanism.problem is None or mechanism.space is None:
        raise ValueError("stability audit needs a mechanism bound to a problem")
    cache = _LawCache(mechanism)
    losses = mechanism.problem.loss_matrix(mechanism.space, probe_points)
    worst = 0.0
    probed = 0
    for left, right in pairs:
        probed += 1
        diff = cache.law(left).probabilities - cache.law(right).probabilities
        worst = max(worst, float(np.max(np.abs(diff @ losses))))
    if probed == 0:
        raise ValueError("no neighbor pairs were supplied")
    return worst


# ---------------------------------------------------------------------------
# Risk gaps


def aerm_gap(mechanism: Mechanism, dataset: Dataset) -> float:
    """Exact expected suboptimality in empirical risk under the output law."""
    if mechanism.problem is None or mechanism.space is None:
        raise ValueError("aerm gap needs a mechanism bound to a problem")
    law = mechanism.law(dataset)
    risks = risk_vector(mechanism.problem, mechanism.space, dataset)
    return law.expectation(risks) - float(risks.min())


def aerm_bound(
    n: int, epsilon: float, sublevel_k: float, sublevel_rho: float, zeta_n: float
) -> float:
    """Universal suboptimality bound for the exponential-mechanism learner:

        9 [ (rho + 2) ln n + ln K ] / (n epsilon) + 2 zeta(n)

    valid for n >= 2 given a sublevel condition with constants (K, rho) and a
    regularizer ceiling zeta(n).  On a finite space with counting measure the
    condition always holds at K = |H|, rho = 0.
    """
    if n < 2:
        raise ValueError(f"the bound needs n >= 2, got {n}")
    if epsilon <= 0 or sublevel_k < 1:
        raise ValueError("epsilon must be positive and K at least 1")
    return (
        9.0 * ((sublevel_rho + 2.0) * math.log(n) + math.log(sublevel_k))
        / (n * epsilon)
        + 2.0 * zeta_n
    )


def aerm_bound_stated(
    n: int, epsilon: float, sublevel_k: float, sublevel_rho: float, zeta_n: float
) -> float:
    """Companion form with the sign of the ln K term flipped and a single
    zeta, kept so reports can show both readings side by side.  The checked
    bound is :func:`aerm_bound`, which is the self-consistent one."""
    if n < 2:
        raise ValueError(f"the bound needs n >= 2, got {n}")
    if epsilon <= 0 or sublevel_k < 1:
        raise ValueError("epsilon must be positive and K at least 1")
    return (
        9.0 * ((sublevel_rho + 2.0) * math.log(n) + math.log(1.0 / sublevel_k))
        / (n * epsilon)
        + zeta_n
    )


@dataclass(frozen=True)
class TailCheckRow:
    t: float
    tail_mass: float
    bound: float
    margin: float
    ok: bool


def utility_tail_check(
    mechanism: Mechanism, dataset: Dataset, t_grid: Sequence[float]
) -> list[TailCheckRow]:
    """Check P[objective(H) > min + 2t] <= ratio(t) * exp(-eps n t / 4).

    ``ratio(t)`` is the inverse relative measure of the t-sublevel set of the
    realized objective, so both sides are computed exactly from the law.
    Requires a pure claimed budget (the exponent uses claimed epsilon).
    """
    if mechanism.problem is None or mechanism.space is None:
        raise ValueError("the tail check needs a mechanism bound to a problem")
    budget = mechanism.claimed_budget(dataset.n)
    if not budget.pure:
        raise ValueError("the tail bound is stated for pure budgets only")
    values = objective_vector(mechanism.problem, mechanism.space, dataset)
    law = mechanism.law(dataset)
    best = float(values.min())
    scale = budget.epsilon * dataset.n / 4.0
    rows = []
    for t in t_grid:
        if t <= 0:
            raise ValueError(f"t values must be positive, got {t}")
        report = sublevel_set(mechanism.space, values, float(t))
        tail = float(law.probabilities[values > best + 2.0 * t].sum())
        bound = report.ratio * math.exp(-scale * float(t))
        rows.append(
            TailCheckRow(
                t=float(t),
                tail_mass=tail,
                bound=bound,
                margin=bound - tail,
                ok=tail <= bound + 1e-12,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Consistency suite


@dataclass(frozen=True)
class GapReport:
    """Stability, AERM, generalization, and excess-risk gaps for one
    mechanism, dataset size, and sampling distribution, plus the claimed
    bounds they are held to.

    In exact mode every expectation is a finite sum over datasets and the
    standard errors are zero; in Monte Carlo mode gaps carry standard errors
    and the checks allow a 4-SE margin.
    """

    mode: str
    n: int
    trials: int
    excess_risk: float
    generalization_gap: float
    aerm_gap: float
    stability_gap: float
    excess_se: float
    generalization_se: float
    aerm_se: float
    stability_bound: float
    aerm_bound: float
    decomposition_ok: bool
    generalization_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.decomposition_ok and self.generalization_ok


def _multiset_weights(
    probs: np.ndarray, n: int
) -> Iterator[tuple[tuple[int, ...], float]]:
    """Multisets of atom indices with their sampling probabilities."""
    u = len(probs)
    for ms in itertools.combinations_with_replacement(range(u), n):
        counts = np.bincount(ms, minlength=u)
        coef = math.factorial(n)
        for c in counts:
            coef //= math.factorial(int(c))
        weight = float(coef) * float(np.prod(probs**counts))
        yield ms, weight


def consistency_suite(
    mechanism: Mechanism,
    distribution: DataDistribution,
    n: int,
    mode: str = "exact",
    trials: int = 200,
    seed: int = 0,
    enumeration_cap: int = ENUMERATION_CAP,
    stability_pair_cap: int = NEIGHBOR_PAIR_CAP,
    stability_samples: int = 200,
) -> GapReport:
    """Measure the chain from stability to excess risk on one configuration.

    Exact mode enumerates every size-n multiset over the distribution's atoms
    and checks, to 1e-9:

        excess <= generalization + aerm    and    |generalization| <= stability.

    Monte Carlo mode averages the same per-dataset quantities over sampled
    datasets and allows a 4-SE margin on each check.  Both modes require a
    discrete distribution so population risks are exact sums.
    """
    if mechanism.problem is None or mechanism.space is None:
        raise ValueError("the consistency suite needs a problem-bound mechanism")
    if not distribution.discrete:
        raise ValueError("exact population risks need a discrete distribution")
    if mode not in ("exact", "mc"):
        raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")
    problem, space = mechanism.problem, mechanism.space
    universe = distribution.atoms()
    probs = np.asarray(distribution.probs, dtype=float)
    pop = population_risk_vector(problem, space, distribution)
    best_pop = float(pop.min())
    cache = _LawCache(mechanism)

    def dataset_gaps(dataset: Dataset) -> tuple[float, float, float]:
        law = cache.law(dataset)
        emp = risk_vector(problem, space, dataset)
        mean_pop = law.expectation(pop)
        mean_emp = law.expectation(emp)
        return (
            mean_pop - best_pop,
            mean_pop - mean_emp,
            mean_emp - float(emp.min()),
        )

    if mode == "exact":
        if math.comb(n + universe.n - 1, n) > enumeration_cap:
            raise SizeLimitError(
                "multiset enumeration exceeds the cap; use mode='mc'"
            )
        excess = gen = aerm = 0.0
        mass = 0.0
        for ms, weight in _multiset_weights(probs, n):
            e, g, a = dataset_gaps(_dataset_from_atom_ids(universe, ms))
            excess += weight * e
            gen += weight * g
            aerm += weight * a
            mass += weight
        if abs(mass - 1.0) > 1e-9:
            raise AssertionError(f"multiset weights sum to {mass}, not 1")
        se_e = se_g = se_a = 0.0
        trials_used = 0
        margin_e = margin_g = AUDIT_TOL
    else:
        if trials < 2:
            raise ValueError(f"mc mode needs trials >= 2, got {trials}")
        samples = np.empty((trials, 3))
        for t in range(trials):
            dataset = distribution.sample(n, trial_rng(seed, t))
            samples[t] = dataset_gaps(dataset)
        means = samples.mean(axis=0)
        ses = samples.std(axis=0, ddof=1) / math.sqrt(trials)
        excess, gen, aerm = (float(v) for v in means)
        se_e, se_g, se_a = (float(v) for v in ses)
        trials_used = trials
        margin_e = 4.0 * math.hypot(se_e, se_a) + AUDIT_TOL
        margin_g = 4.0 * se_g + AUDIT_TOL

    pair_bound = (
        math.comb(n + universe.n - 1, n) * min(n, universe.n) * (universe.n - 1)
    )
    if pair_bound <= stability_pair_cap:
        pairs = exhaustive_neighbor_pairs(universe, n, cap=stability_pair_cap)
    else:
        pairs = sampled_neighbor_pairs(
            universe, n, stability_samples, spawn_seed(seed, 2**31)
        )
    stability = stability_audit(mechanism, pairs, universe)

    budget = mechanism.claimed_budget(n)
    stability_claim = math.expm1(budget.epsilon) + budget.delta
    if budget.epsilon > 0 and n >= 2:
        bound = aerm_bound(
            n=n,
            epsilon=budget.epsilon,
            sublevel_k=space.size,
            sublevel_rho=0.0,
            zeta_n=problem.zeta(n),
        )
    else:
        bound = math.inf
    return GapReport(
        mode=mode,
        n=n,
        trials=trials_used,
        excess_risk=excess,
        generalization_gap=gen,
        aerm_gap=aerm,
        stability_gap=stability,
        excess_se=se_e,
        generalization_se=se_g,
        aerm_se=se_a,
        stability_bound=stability_claim,
        aerm_bound=bound,
        decomposition_ok=excess <= gen + aerm + margin_e,
        generalization_ok=abs(gen) <= stability + margin_g,
    )


# ---------------------------------------------------------------------------
# Counterexample and phase-transition studies


@dataclass(frozen=True)
class CounterexampleRow:
    resolution: int
    max_gap: float
    argmax_dataset: int
    ratio: float
    must_exceed_half: bool
    exceeds_half: bool


@dataclass(frozen=True)
class CounterexampleResult:
    """Worst-case AERM gaps of the private learner on the packed family,
    swept over grid resolutions.

    ``monotone`` asserts the nondecreasing reading of the sweep at an exact
    1e-9 tolerance.  ``ratio`` is ln(resolution) / (n epsilon / 4); once it
    reaches ``ratio_threshold`` the gap is required to exceed one half.
    """

    epsilon: float
    n: int
    rows: tuple[CounterexampleRow, ...]
    monotone: bool
    final_exceeds_half: bool
    threshold_ok: bool
    ratio_threshold: float


def counterexample_experiment(
    epsilon: float,
    n: int,
    resolutions: Sequence[int],
    ratio_threshold: float = 14.0,
) -> CounterexampleResult:
    """Sweep grid resolutions and record the worst AERM gap over the packed
    dataset family for the exponential-mechanism threshold learner.

    The family is built so that every dataset admits a zero-empirical-risk
    threshold, yet under any fixed privacy level the learner's expected
    empirical risk stays bounded away from zero once the hypothesis grid is
    fine enough: the gap grows with resolution and crosses one half when
    ln(resolution) is large against n * epsilon / 4.
    """
    if len(resolutions) < 1 or any(int(g) < 1 for g in resolutions):
        raise ValueError("resolutions must be positive integers")
    family = packed_datasets(epsilon, n)
    rows = []
    for g in resolutions:
        g = int(g)
        problem, space = threshold_classification(resolution=g)
        mech = exponential_mechanism(problem, space, epsilon)
        worst, arg = -1.0, -1
        for i, dataset in enumerate(family.datasets):
            gap = aerm_gap(mech, dataset)
            if gap > worst:
                worst, arg = gap, i
        ratio = math.log(g) / (n * epsilon / 4.0)
        rows.append(
            CounterexampleRow(
                resolution=g,
                max_gap=worst,
                argmax_dataset=arg,
                ratio=ratio,
                must_exceed_half=ratio >= ratio_threshold,
                exceeds_half=worst > 0.5,
            )
        )
    gaps = [r.max_gap for r in rows]
    monotone = all(b >= a - AUDIT_TOL for a, b in zip(gaps, gaps[1:]))
    threshold_ok = all(r.exceeds_half for r in rows if r.must_exceed_half)
    return CounterexampleResult(
        epsilon=epsilon,
        n=n,
        rows=tuple(rows),
        monotone=monotone,
        final_exceeds_half=rows[-1].exceeds_half,
        threshold_ok=threshold_ok,
        ratio_threshold=ratio_threshold,
    )


@dataclass(frozen=True)
class PhaseRow:
    rate: float
    n: int
    subsample: int
    mean_excess: float
    stderr: float


def phase_transition_experiment(
    rates: Sequence[float],
    n_grid: Sequence[int],
    trials: int,
    seed: int,
    resolution: int = 257,
    support_size: int = 512,
    theta: float = 0.5,
) -> list[PhaseRow]:
    """Excess population risk of ERM run on a size-ceil(n^(1-r)) subsample.

    At r = 1/2 the subsample still grows with n and learning proceeds; at
    r = 1 the learner sees a single point forever and stalls.  Rows report
    the Monte Carlo mean and standard error of the excess risk for each
    (rate, n) cell; callers decide which comparisons to assert.
    """
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    problem, space = threshold_classification(resolution=resolution)
    distribution = labeled_threshold(theta, support_size=support_size)
    pop = population_risk_vector(problem, space, distribution)
    best = float(pop.min())
    rows = []
    for ri, rate in enumerate(rates):
        if not (0.0 <= rate <= 1.0):
            raise ValueError(f"rates must lie in [0, 1], got {rate}")
        for ni, n in enumerate(n_grid):
            m = min(int(math.ceil(n ** (1.0 - rate))), n)
            m = max(m, 1)
            cell_seed = spawn_seed(seed, ri * (len(n_grid) + 1) + ni)
            excesses = np.empty(trials)
            for t in range(trials):
                rng = trial_rng(cell_seed, t)
                dataset = distribution.sample(n, rng)
                idx = rng.choice(n, size=m, replace=False)
                sub = dataset.take(idx)
                emp = risk_vector(problem, space, sub)
                excesses[t] = pop[int(np.argmin(emp))] - best
            rows.append(
                PhaseRow(
                    rate=float(rate),
                    n=int(n),
                    subsample=m,
                    mean_excess=float(excesses.mean()),
                    stderr=float(excesses.std(ddof=1) / math.sqrt(trials)),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Distribution comparison helpers


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("expected two probability vectors of equal length")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < -1e-12) or abs(float(v.sum()) - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability vector")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class GofResult:
    statistic: float
    pvalue: float
    dof: int
    bins: int


def chi_square_gof(
    probabilities: np.ndarray, counts: np.ndarray, min_expected: float = 5.0
) -> GofResult:
    """Pearson goodness-of-fit of observed counts against an exact law.

    Bins whose expected count falls below ``min_expected`` are pooled,
    largest-expectation bins kept as-is, so the chi-square approximation
    stays honest.  Needs at least two effective bins after pooling.
    """
    p = np.asarray(probabilities, dtype=float)
    c = np.asarray(counts, dtype=float)
    if p.shape != c.shape or p.ndim != 1:
        raise ValueError("probabilities and counts must be 1-d and aligned")
    draws = float(c.sum())
    if draws <= 0:
        raise ValueError("counts are empty")
    expected = p * draws
    order = np.argsort(expected)[::-1]
    exp_sorted = expected[order]
    obs_sorted = c[order]
    keep = int(np.searchsorted(-exp_sorted, -min_expected, side="right"))
    if keep < len(exp_sorted):
        pooled_exp = float(exp_sorted[keep:].sum())
        pooled_obs = float(obs_sorted[keep:].sum())
        exp_eff = np.append(exp_sorted[:keep], pooled_exp)
        obs_eff = np.append(obs_sorted[:keep], pooled_obs)
        if pooled_exp < min_expected and keep >= 1:
            exp_eff[keep - 1] += exp_eff[-1]
            obs_eff[keep - 1] += obs_eff[-1]
            exp_eff, obs_eff = exp_eff[:-1], obs_eff[:-1]
    else:
        exp_eff, obs_eff = exp_sorted, obs_sorted
    positive = exp_eff > 0
    exp_eff, obs_eff = exp_eff[positive], obs_eff[positive]
    if len(exp_eff) < 2:
        raise ValueError("law too concentrated for a goodness-of-fit test")
    # Rescale expectations to the observed total so the test sums match.
    exp_eff = exp_eff * (obs_eff.sum() / exp_eff.sum())
    stat, pvalue = stats.chisquare(obs_eff, exp_eff)
    return GofResult(
        statistic=float(stat),
        pvalue=float(pvalue),
        dof=len(exp_eff) - 1,
        bins=len(exp_eff),
    )


def empirical_law_on_grid(
    samples: np.ndarray, lower: float, upper: float, resolution: int
) -> np.ndarray:
    """Histogram scalar samples onto the cells of a uniform grid, as a
    probability vector aligned with ``discretize_box`` cell order."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 1 or len(s) == 0:
        raise ValueError("expected a nonempty 1-d sample array")
    if not (upper > lower) or resolution < 1:
        raise ValueError("need upper > lower and resolution >= 1")
    idx = np.clip(
        np.floor((s - lower) / (upper - lower) * resolution).astype(int),
        0,
        resolution - 1,
    )
    return np.bincount(idx, minlength=resolution) / len(s)


def sample_counts(
    mechanism: Mechanism, dataset: Dataset, draws: int, seed: int
) -> np.ndarray:
    """Histogram of ``draws`` independent outputs over the hypothesis ids."""
    if mechanism.space is None:
        raise ValueError("sample_counts needs a finite-space mechanism")
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    out = np.zeros(mechanism.space.size, dtype=int)
    for i in range(draws):
        out[int(mechanism.sample(dataset, spawn_seed(seed, i)))] += 1
    return out
