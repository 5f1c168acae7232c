"""Randomized learners over finite hypothesis spaces, plus privacy wrappers.

Every mechanism here exposes the same two call paths:

* ``law(dataset)`` returns the exact output distribution as a
  :class:`MechanismDistribution` over the hypothesis ids of a finite space,
  whenever that distribution is tractable.  Auditing code consumes laws, so
  exactness matters more than speed on this path.
* ``sample(dataset, seed)`` draws one output.  The seed is consumed as-is
  (callers derive per-trial seeds themselves); sub-draws inside composite
  mechanisms fork the seed through :func:`dperm.seeding.spawn_seed` so the
  pieces stay independent.

Budgets are claims, not measurements.  ``claimed_budget(n)`` reports what the
mechanism promises at dataset size ``n``; the audit routines in
:mod:`dperm.analysis` check those promises against the realized laws.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import logsumexp

from .problems import Dataset, Problem, objective_vector, risk_vector
from .seeding import spawn_seed
from .spaces import FiniteHypothesisSpace

PROB_SUM_TOL = 1e-12
LOG_CONSISTENCY_TOL = 1e-10
LOG_UNDERFLOW = -740.0
SUBSAMPLE_EXACT_CAP = 10**5
BOOST_LAW_CAP = 2 * 10**5


@dataclass(frozen=True)
class PrivacyBudget:
    """A claimed (epsilon, delta) privacy level."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")

    @property
    def pure(self) -> bool:
        return self.delta == 0.0


@dataclass(eq=False)
class MechanismDistribution:
    """Exact output law of a mechanism over a finite hypothesis space.

    Probabilities are stored both linearly and in log form; the two views
    must agree to within LOG_CONSISTENCY_TOL on every hypothesis of positive
    mass, and the linear view must sum to one within PROB_SUM_TOL.  These are
    enforced at construction because audit arithmetic downstream silently
    degrades when they drift.
    """

    space: FiniteHypothesisSpace
    probabilities: np.ndarray
    log_probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=float)
        logp = np.asarray(self.log_probabilities, dtype=float)
        if p.shape != (self.space.size,) or logp.shape != (self.space.size,):
            raise ValueError(
                "probability vectors must have one entry per hypothesis, "
                f"got shapes {p.shape} and {logp.shape} for |H|={self.space.size}"
            )
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within {PROB_SUM_TOL}")
        pos = p > 0
        if np.any(np.isnan(logp)) or np.any(logp[pos] > 1e-12):
            raise ValueError("log-probabilities must be <= 0 and not NaN")
        with np.errstate(divide="ignore"):
            ref = np.log(p[pos])
        if pos.any() and float(np.max(np.abs(ref - logp[pos]))) > LOG_CONSISTENCY_TOL:
            raise ValueError("linear and log probabilities disagree beyond tolerance")
        # exp underflows to 0.0 just below log of the smallest subnormal
        # (about -744.4), so a zero linear entry is consistent with any
        # log-probability under that floor, not only with -inf.
        if np.any(logp[~pos] > LOG_UNDERFLOW):
            raise ValueError(
                "zero-mass hypotheses must carry log-probability -inf "
                f"or below the underflow floor {LOG_UNDERFLOW}"
            )
        self.probabilities = p
        self.log_probabilities = logp

    @classmethod
    def from_logits(
        cls, space: FiniteHypothesisSpace, logits: np.ndarray
    ) -> "MechanismDistribution":
        """Normalize unnormalized log-weights into a distribution.

        The exponentiated weights are renormalized once more in linear space:
        at |H| in the tens of thousands the raw exp of (logits - logsumexp)
        can miss a unit sum by more than PROB_SUM_TOL in accumulated rounding.
        """
        logits = np.asarray(logits, dtype=float)
        if logits.shape != (space.size,):
            raise ValueError(
                f"expected {space.size} logits, got shape {logits.shape}"
            )
        if np.any(np.isnan(logits)) or np.any(logits == np.inf):
            raise ValueError("logits must be < inf and not NaN")
        lse = float(logsumexp(logits))
        if not math.isfinite(lse):
            raise ValueError("logits carry no finite mass")
        logp = logits - lse
        p = np.exp(logp)
        total = float(p.sum())
        p = p / total
        logp = logp - math.log(total)
        return cls(space=space, probabilities=p, log_probabilities=logp)

    @classmethod
    def from_probabilities(
        cls, space: FiniteHypothesisSpace, probabilities: np.ndarray
    ) -> "MechanismDistribution":
        """Wrap an explicit probability vector (e.g. a mixture of laws)."""
        p = np.asarray(probabilities, dtype=float)
        total = float(p.sum())
        if not math.isfinite(total) or total <= 0:
            raise ValueError("probabilities must have positive finite mass")
        p = p / total
        with np.errstate(divide="ignore"):
            logp = np.log(p)
        return cls(space=space, probabilities=p, log_probabilities=logp)

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.space.size, p=self.probabilities))

    def expectation(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.space.size,):
            raise ValueError("values must have one entry per hypothesis")
        return float(self.probabilities @ values)


LawFn = Callable[[Dataset], MechanismDistribution]
SampleFn = Callable[[Dataset, int], object]
BudgetFn = Callable[[int], PrivacyBudget]


@dataclass(eq=False)
class Mechanism:
    """A randomized learner bundled with its claimed privacy budget.

    ``budget`` holds an n-independent claim; wrappers whose claim depends on
    the dataset size store ``budget_fn`` instead and leave ``budget`` unset.
    ``law`` is None for mechanisms with continuous output (``continuous``
    True) or when the exact law was too large to materialize
    (``law_mode == "none"``).
    """

    name: str
    sample: SampleFn
    law: Optional[LawFn] = None
    budget: Optional[PrivacyBudget] = None
    budget_fn: Optional[BudgetFn] = None
    problem: Optional[Problem] = None
    space: Optional[FiniteHypothesisSpace] = None
    approximate: bool = False
    continuous: bool = False
    law_mode: str = "exact"
    info: dict = field(default_factory=dict)

    def claimed_budget(self, n: int) -> PrivacyBudget:
        if self.budget_fn is not None:
            if n < 1:
                raise ValueError(f"dataset size must be >= 1, got {n}")
            return self.budget_fn(n)
        if self.budget is None:
            raise ValueError(f"mechanism {self.name!r} makes no privacy claim")
        return self.budget


def em_scale(epsilon: float, n: int) -> float:
    """Exponent scale for the exponential mechanism on unit-range losses.

    A one-point swap moves the averaged objective by at most 2/n, so the
    exponent epsilon * n / 4 equals epsilon over twice that sensitivity.
    """
    return epsilon * n / 4.0


def exponential_mechanism(
    problem: Problem, space: FiniteHypothesisSpace, epsilon: float
) -> Mechanism:
    """Regularized ERM via the exponential mechanism at pure budget epsilon.

    Weights each hypothesis by measure(h) * exp(-em_scale * objective(h, Z)).
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")

    log_measure = np.log(space.measure)

    def law(dataset: Dataset) -> MechanismDistribution:
        values = objective_vector(problem, space, dataset)
        logits = log_measure - em_scale(epsilon, dataset.n) * values
        return MechanismDistribution.from_logits(space, logits)

    def sample(dataset: Dataset, seed: int) -> int:
        return law(dataset).sample(np.random.default_rng(seed))

    return Mechanism(
        name=f"em({problem.name},eps={epsilon:g})",
        sample=sample,
        law=law,
        budget=PrivacyBudget(epsilon, 0.0),
        problem=problem,
        space=space,
    )


def erm_mechanism(problem: Problem, space: FiniteHypothesisSpace) -> Mechanism:
    """Deterministic regularized ERM: a point mass on the best hypothesis.

    Ties break toward the lowest hypothesis id.  Carries no privacy claim;
    it exists as the base case for wrappers (subsampling an arbitrary
    learner) and as the non-private comparison arm in experiments.
    """

    def law(dataset: Dataset) -> MechanismDistribution:
        values = objective_vector(problem, space, dataset)
        probs = np.zeros(space.size)
        probs[int(np.argmin(values))] = 1.0
        return MechanismDistribution.from_probabilities(space, probs)

    def sample(dataset: Dataset, seed: int) -> int:
        del seed
        return int(np.argmin(objective_vector(problem, space, dataset)))

    return Mechanism(
        name=f"erm({problem.name})",
        sample=sample,
        law=law,
        budget=None,
        problem=problem,
        space=space,
    )


def laplace_icdf(u: float, scale: float) -> float:
    """Inverse CDF of the centered Laplace distribution; u = 1/2 maps to 0."""
    if not (0.0 < u < 1.0):
        raise ValueError(f"u must lie strictly inside (0, 1), got {u}")
    if not (scale > 0):
        raise ValueError(f"scale must be positive, got {scale}")
    w = u - 0.5
    return -scale * math.copysign(1.0, w) * math.log1p(-2.0 * abs(w))


def pth_power_erm(x: np.ndarray, p: int = 10, tol: float = 1e-10) -> float:
    """Exact minimizer of sum_i |x_i - h|^p over h, for even p >= 2.

    The derivative p * sum_i sign(h - x_i)|h - x_i|^(p-1) is continuous and
    nondecreasing, so bisection on [min x, max x] pins the root.
    """
    out = pth_power_erm_batch(np.asarray(x, dtype=float)[None, :], p=p, tol=tol)
    return float(out[0])


def pth_power_erm_batch(
    x: np.ndarray, p: int = 10, tol: float = 1e-10
) -> np.ndarray:
    """Row-wise pth-power ERM for a (trials, n) batch of samples."""
    if p < 2 or p % 2 != 0:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("expected a (trials, n) array with n >= 1")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    lo = x.min(axis=1).copy()
    hi = x.max(axis=1).copy()
    # 60 halvings shrink any unit-length bracket far below tol = 1e-10.
    iters = max(1, math.ceil(math.log2(max(float((hi - lo).max()), tol) / tol)) + 2)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        diff = mid[:, None] - x
        grad = (np.sign(diff) * np.abs(diff) ** (p - 1)).sum(axis=1)
        go_left = grad > 0
        hi = np.where(go_left, mid, hi)
        lo = np.where(go_left, lo, mid)
    return 0.5 * (lo + hi)


def laplace_erm_mean(problem: Problem, epsilon: float, p: int = 10) -> Mechanism:
    """Additive-noise learner for 1-d unlabeled pth-power estimation on [0, 1].

    Computes the exact empirical minimizer, perturbs it with Laplace noise of
    scale 2 / (epsilon * n), and clamps back to the unit interval.  Output is
    a float payload, so no finite law is available; audits of this mechanism
    go through its claimed budget only.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    if problem.dimension != 1 or problem.labeled:
        raise ValueError("laplace_erm_mean expects a 1-d unlabeled problem")

    def sample(dataset: Dataset, seed: int) -> float:
        if dataset.x.ndim != 1:
            raise ValueError("expected scalar sample points")
        erm = pth_power_erm(dataset.x, p=p)
        rng = np.random.default_rng(seed)
        noise = laplace_icdf(float(rng.random()), 2.0 / (epsilon * dataset.n))
        return float(np.clip(erm + noise, 0.0, 1.0))

    return Mechanism(
        name=f"laplace-erm({problem.name},eps={epsilon:g})",
        sample=sample,
        law=None,
        budget=PrivacyBudget(epsilon, 0.0),
        problem=problem,
        continuous=True,
        law_mode="none",
    )


def membership_flag_mechanism(
    epsilon: float, delta: float, marker: float, tol: float = 1e-9
) -> Mechanism:
    """A deliberately minimal (epsilon, delta) mechanism used as an audit
    target: it releases a randomized-response bit that says whether any data
    point sits at the marker value.

    With probability 1 - delta the true bit passes through randomized
    response at level epsilon; with probability delta it is released as-is.
    On any neighbor pair that flips the bit, the realized delta at epsilon is
    exactly delta, so audits of wrappers built on this base have a known
    ground truth to compare against.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    space = FiniteHypothesisSpace(
        payloads=np.array([[0.0], [1.0]]), measure=np.ones(2)
    )
    keep = math.exp(epsilon) / (1.0 + math.exp(epsilon))
    p_same = (1.0 - delta) * keep + delta
    p_flip = (1.0 - delta) * (1.0 - keep)

    def law(dataset: Dataset) -> MechanismDistribution:
        x = dataset.x if dataset.x.ndim == 1 else dataset.x[:, 0]
        bit = int(np.any(np.abs(x - marker) <= tol))
        probs = np.empty(2)
        probs[bit] = p_same
        probs[1 - bit] = p_flip
        return MechanismDistribution.from_probabilities(space, probs)

    def sample(dataset: Dataset, seed: int) -> int:
        return law(dataset).sample(np.random.default_rng(seed))

    return Mechanism(
        name=f"membership-flag(eps={epsilon:g},delta={delta:g})",
        sample=sample,
        law=law,
        budget=PrivacyBudget(epsilon, delta),
        space=space,
        approximate=delta > 0,
    )


@dataclass(frozen=True)
class AmplifiedPure:
    """Pure-DP level after subsampling: the tight value and its linear relaxation."""

    tight: float
    relaxed: float


def amplify_pure(epsilon: float, gamma: float) -> AmplifiedPure:
    """Privacy amplification for a pure epsilon-DP base under subsampling
    without replacement at rate gamma.

    tight   = log(1 + gamma(e^eps - 1)) - log(1 + gamma(e^-eps - 1))
    relaxed = 2 gamma (e^eps - e^-eps), an upper bound on tight.
    """
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    up = math.log1p(gamma * math.expm1(epsilon))
    down = math.log1p(gamma * math.expm1(-epsilon))
    tight = up - down
    relaxed = 2.0 * gamma * (math.exp(epsilon) - math.exp(-epsilon))
    return AmplifiedPure(tight=tight, relaxed=relaxed)


def amplify_approx(epsilon: float, delta: float, gamma: float) -> PrivacyBudget:
    """Amplification for an (epsilon, delta) base under subsampling without
    replacement at rate gamma:

    epsilon' = log(1 + gamma e^eps (e^eps - 1)),  delta' = gamma e^eps delta.
    """
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    if not (0.0 <= delta <= 1.0):
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    eps_out = math.log1p(gamma * math.exp(epsilon) * math.expm1(epsilon))
    delta_out = gamma * math.exp(epsilon) * delta
    return PrivacyBudget(eps_out, min(delta_out, 1.0))


def subsample_wrapper(
    base: Mechanism,
    m: Union[int, str],
    exact_cap: int = SUBSAMPLE_EXACT_CAP,
    law_samples: int = 2000,
    law_seed: int = 0,
) -> Mechanism:
    """Run ``base`` on a uniform size-m subsample drawn without replacement.

    ``m`` is either a fixed positive integer or the string ``"sqrt"`` for
    m = floor(sqrt(n)).  The sqrt rule is the only mode allowed when the base
    carries no privacy claim at all: an arbitrary base subsampled at that rate
    is claimed (0, 1/sqrt(n)).  A base with a pure claim is amplified through
    the tight pure bound; a base with delta > 0 goes through amplify_approx.

    The exact mixture law averages base laws over all C(n, m) subsets when
    that count is at most ``exact_cap``; beyond the cap the law is replaced by
    a seeded Monte Carlo mixture and ``law_mode`` flips to "sampled".
    """
    sqrt_rule = m == "sqrt"
    if not sqrt_rule:
        if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 1:
            raise ValueError(f"m must be a positive integer or 'sqrt', got {m!r}")
        m = int(m)
    if base.budget is None and base.budget_fn is None and not sqrt_rule:
        raise ValueError(
            "a fixed subsample size needs a base privacy claim; "
            "use m='sqrt' to wrap an arbitrary base"
        )

    def subsample_size(n: int) -> int:
        size = int(math.isqrt(n)) if sqrt_rule else m
        if size > n:
            raise ValueError(f"subsample size {size} exceeds dataset size {n}")
        return size

    wrapper = Mechanism(
        name=f"subsample({base.name},m={'sqrt' if sqrt_rule else m})",
        sample=None,  # type: ignore[arg-type]  # filled below
        law=None,
        problem=base.problem,
        space=base.space,
        approximate=True,
        continuous=base.continuous,
        law_mode=base.law_mode,
        info={"base": base.name, "rule": "sqrt" if sqrt_rule else "fixed"},
    )

    def budget_fn(n: int) -> PrivacyBudget:
        size = subsample_size(n)
        gamma = size / n
        if base.budget is None and base.budget_fn is None:
            return PrivacyBudget(0.0, 1.0 / math.sqrt(n))
        claimed = base.claimed_budget(size) if base.budget is None else base.budget
        if claimed.pure:
            return PrivacyBudget(amplify_pure(claimed.epsilon, gamma).tight, 0.0)
        return amplify_approx(claimed.epsilon, claimed.delta, gamma)

    def law(dataset: Dataset) -> MechanismDistribution:
        if base.law is None:
            raise ValueError(f"base mechanism {base.name!r} has no law")
        n = dataset.n
        size = subsample_size(n)
        total = math.comb(n, size)
        if total <= exact_cap:
            acc = np.zeros(base.space.size)
            for subset in itertools.combinations(range(n), size):
                acc += base.law(dataset.take(subset)).probabilities
            wrapper.law_mode = "exact"
            return MechanismDistribution.from_probabilities(base.space, acc / total)
        rng = np.random.default_rng(spawn_seed(law_seed, n))
        acc = np.zeros(base.space.size)
        for _ in range(law_samples):
            subset = rng.choice(n, size=size, replace=False)
            acc += base.law(dataset.take(subset)).probabilities
        wrapper.law_mode = "sampled"
        return MechanismDistribution.from_probabilities(base.space, acc / law_samples)

    def sample(dataset: Dataset, seed: int):
        size = subsample_size(dataset.n)
        rng = np.random.default_rng(spawn_seed(seed, 0))
        subset = rng.choice(dataset.n, size=size, replace=False)
        return base.sample(dataset.take(subset), spawn_seed(seed, 1))

    wrapper.sample = sample
    wrapper.law = None if base.law is None else law
    wrapper.budget_fn = budget_fn
    wrapper.approximate = True
    return wrapper


def two_stage_subset_selection(
    problem: Problem, space: FiniteHypothesisSpace, epsilon: float
) -> Mechanism:
    """Structured ERM that first picks a support group, then a hypothesis.

    The space must carry ``meta["support_groups"]``, a list of
    (group_key, hypothesis_id_array) pairs partitioning the hypothesis ids.
    Stage one runs an exponential mechanism over groups at budget epsilon/2
    with utility -min objective within the group (a one-point swap moves that
    utility by at most 2/n, the same sensitivity as the plain objective);
    stage two spends the remaining epsilon/2 inside the chosen group.  The
    composed law lives on the original hypothesis space, so audits see the
    mechanism end to end.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    groups = space.meta.get("support_groups")
    if not groups:
        raise ValueError("space.meta['support_groups'] is required")
    covered = np.concatenate([np.asarray(ids) for _, ids in groups])
    if len(np.unique(covered)) != space.size or len(covered) != space.size:
        raise ValueError("support groups must partition the hypothesis ids")

    log_measure = np.log(space.measure)

    def law(dataset: Dataset) -> MechanismDistribution:
        values = objective_vector(problem, space, dataset)
        stage_scale = em_scale(epsilon / 2.0, dataset.n)
        group_logits = np.array(
            [-stage_scale * float(values[ids].min()) for _, ids in groups]
        )
        group_logp = group_logits - logsumexp(group_logits)
        probs = np.zeros(space.size)
        for (_, ids), g_logp in zip(groups, group_logp):
            inner = log_measure[ids] - stage_scale * values[ids]
            inner_logp = inner - logsumexp(inner)
            probs[ids] = np.exp(g_logp + inner_logp)
        return MechanismDistribution.from_probabilities(space, probs)

    def sample(dataset: Dataset, seed: int) -> int:
        return law(dataset).sample(np.random.default_rng(seed))

    return Mechanism(
        name=f"two-stage({problem.name},eps={epsilon:g})",
        sample=sample,
        law=law,
        budget=PrivacyBudget(epsilon, 0.0),
        problem=problem,
        space=space,
        info={"stage_epsilon": epsilon / 2.0, "groups": len(groups)},
    )


def boost_parts(n: int, a: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Index split into a training parts plus a validation remainder."""
    part = n // (a + 1)
    if part < 1:
        raise ValueError(
            f"dataset of size {n} cannot be split into {a + 1} parts"
        )
    train = [np.arange(j * part, (j + 1) * part) for j in range(a)]
    validation = np.arange(a * part, n)
    return train, validation


def boost_high_confidence(
    base: Mechanism,
    space: FiniteHypothesisSpace,
    delta_target: float,
    epsilon: float,
    law_cap: int = BOOST_LAW_CAP,
) -> Mechanism:
    """Confidence boosting: run the base on a = ceil(ln(3/delta)) disjoint
    parts, then privately select among the candidates by validation risk.

    The selection step is an exponential mechanism on validation empirical
    risk.  Swapping one point of the full dataset perturbs at most one
    candidate's training part and every validation risk, which bounds the
    selection utility's sensitivity by 2(a+1)/n and fixes the exponent scale
    at epsilon * n / (4(a+1)).  The composite claims
    (max(base epsilon, epsilon), base delta).

    The exact law enumerates candidate tuples and is materialized only while
    |H|^a stays within ``law_cap``; past that the mechanism is sample-only.
    """
    if not (0.0 < delta_target < 3.0):
        raise ValueError(
            f"delta_target must lie in (0, 3) so that ceil(ln(3/delta)) >= 1, "
            f"got {delta_target}"
        )
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    if base.budget is None:
        raise ValueError("boosting requires a base mechanism with a privacy claim")
    if base.problem is None:
        raise ValueError("boosting requires a base mechanism bound to a problem")
    a = math.ceil(math.log(3.0 / delta_target))
    problem = base.problem

    def selection_scale(n: int) -> float:
        return epsilon * n / (4.0 * (a + 1))

    def law(dataset: Dataset) -> Optional[MechanismDistribution]:
        if base.law is None:
            return None
        if space.size**a > law_cap:
            return None
        train, validation = boost_parts(dataset.n, a)
        part_laws = [base.law(dataset.take(idx)).probabilities for idx in train]
        val_risks = risk_vector(problem, space, dataset.take(validation))
        scale = selection_scale(dataset.n)
        probs = np.zeros(space.size)
        for combo in itertools.product(range(space.size), repeat=a):
            weight = 1.0
            for j, hid in enumerate(combo):
                weight *= part_laws[j][hid]
            if weight == 0.0:
                continue
            logits = -scale * val_risks[np.asarray(combo)]
            sel = np.exp(logits - logsumexp(logits))
            for j, hid in enumerate(combo):
                probs[hid] += weight * sel[j]
        return MechanismDistribution.from_probabilities(space, probs)

    def sample(dataset: Dataset, seed: int) -> int:
        train, validation = boost_parts(dataset.n, a)
        candidates = [
            int(base.sample(dataset.take(idx), spawn_seed(seed, j)))
            for j, idx in enumerate(train)
        ]
        val_risks = risk_vector(problem, space, dataset.take(validation))
        logits = -selection_scale(dataset.n) * val_risks[np.asarray(candidates)]
        sel = np.exp(logits - logsumexp(logits))
        sel = sel / sel.sum()
        rng = np.random.default_rng(spawn_seed(seed, a))
        return candidates[int(rng.choice(a, p=sel))]

    has_law = base.law is not None and space.size**a <= law_cap
    return Mechanism(
        name=f"boost({base.name},delta={delta_target:g},eps={epsilon:g})",
        sample=sample,
        law=law if has_law else None,
        budget=PrivacyBudget(max(base.budget.epsilon, epsilon), base.budget.delta),
        problem=problem,
        space=space,
        law_mode="exact" if has_law else "none",
        info={"parts": a, "selection_epsilon": epsilon},
    )


@dataclass(frozen=True)
class ChainResult:
    """Output of one Metropolis run: kept states plus tuning diagnostics."""

    samples: np.ndarray
    acceptance_rate: float
    step_size: float
    scale: float


@dataclass(eq=False)
class RandomWalkSampler:
    """Random-walk Metropolis targeting exp(-em_scale * objective) on a box.

    A gridless stand-in for the exponential mechanism when the hypothesis
    space is continuous.  Convergence is approximate, so this object is not a
    Mechanism and makes no privacy claim; compare its empirical law against a
    matched finite-grid mechanism to quantify the gap.

    The problem's vectorized loss must read hypotheses from the payload array
    alone (true of the box-shaped problems shipped here), because states are
    evaluated through a single-row space whose payload is rewritten in place.
    """

    problem: Problem
    lower: np.ndarray
    upper: np.ndarray
    epsilon: float
    steps: int
    step_size: Optional[float] = None
    burn_in: Optional[int] = None
    adapt: bool = True

    def __post_init__(self) -> None:
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if not np.all(self.upper > self.lower):
            raise ValueError("box must have positive side lengths")
        if len(self.lower) != self.problem.dimension:
            raise ValueError(
                f"box dimension {len(self.lower)} does not match problem "
                f"dimension {self.problem.dimension}"
            )
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if self.burn_in is None:
            self.burn_in = max(1000, self.steps // 10)
        if self.step_size is None:
            self.step_size = float(np.mean(self.upper - self.lower)) / 8.0
        if not (self.step_size > 0):
            raise ValueError("step_size must be positive")

    def run(self, dataset: Dataset, seed: int) -> ChainResult:
        rng = np.random.default_rng(seed)
        d = len(self.lower)
        probe = FiniteHypothesisSpace(
            payloads=np.zeros((1, d)), measure=np.ones(1), meta={}
        )

        def objective_at(h: np.ndarray) -> float:
            probe.payloads[0, :] = h
            loss = float(self.problem.loss_matrix(probe, dataset)[0].mean())
            return loss + float(self.problem.reg_vector(dataset.n, probe)[0])

        scale = em_scale(self.epsilon, dataset.n)
        sigma = float(self.step_size)
        width = float(np.min(self.upper - self.lower))
        state = 0.5 * (self.lower + self.upper)
        energy = objective_at(state)

        kept = np.empty((self.steps, d))
        accepted = 0
        window_accepts = 0
        total = self.burn_in + self.steps
        for t in range(total):
            proposal = state + sigma * rng.standard_normal(d)
            ok = bool(np.all(proposal >= self.lower) and np.all(proposal <= self.upper))
            if ok:
                new_energy = objective_at(proposal)
                # 1 - U keeps the draw strictly positive before the log.
                if math.log(1.0 - rng.random()) < -scale * (new_energy - energy):
                    state, energy = proposal, new_energy
                    if t >= self.burn_in:
                        accepted += 1
                    else:
                        window_accepts += 1
            if self.adapt and t < self.burn_in and (t + 1) % 50 == 0:
                rate = window_accepts / 50.0
                sigma = float(
                    np.clip(sigma * math.exp(0.5 * (rate - 0.4)), 1e-6 * width, width)
                )
                window_accepts = 0
            if t >= self.burn_in:
                kept[t - self.burn_in] = state

        samples = kept[:, 0] if d == 1 else kept
        return ChainResult(
            samples=samples,
            acceptance_rate=accepted / self.steps,
            step_size=sigma,
            scale=scale,
        )

    def sample(self, dataset: Dataset, seed: int):
        final = self.run(dataset, seed).samples
        return float(final[-1]) if final.ndim == 1 else final[-1]


def logconcave_sampler(
    problem: Problem,
    lower,
    upper,
    epsilon: float,
    steps: int,
    step_size: Optional[float] = None,
    burn_in: Optional[int] = None,
) -> RandomWalkSampler:
    """Build a Metropolis sampler for the continuous exponential-mechanism
    density of a convex problem on a box domain."""
    return RandomWalkSampler(
        problem=problem,
        lower=lower,
        upper=upper,
        epsilon=epsilon,
        steps=steps,
        step_size=step_size,
        burn_in=burn_in,
    )
