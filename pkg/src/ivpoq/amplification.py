"""Sequential repetition and the gap-amplification bookkeeping.

A repetition plan bundles (c, s, lambda): the repeated protocol runs
N >= lambda / (c - s)^2 first phases back to back, defers all second
phases to the end, and accepts when the accepted fraction reaches the
midpoint threshold (c + s) / 2.  Hoeffding's inequality separates
Bernoulli(c) from Bernoulli(s) provers at that N.

Within one macro-trial the sessions are strictly sequential by
contract: they consume a single RNG stream in order.  Macro-trials are
independent and may run in parallel with derived streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .verifier import ProtocolParams, run_session, v2_decide


def required_N(c: float, s: float, lam: float) -> int:
    """ceil(lambda / (c - s)^2)."""
    if not c > s:
        raise ValueError("need c > s")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return math.ceil(lam / (c - s) ** 2)


def hoeffding_tail(n: int, gap: float) -> float:
    """One-sided Hoeffding bound exp(-2 n gap^2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < gap <= 1:
        raise ValueError("gap must lie in (0, 1]")
    return math.exp(-2.0 * n * gap * gap)


@dataclass
class RepetitionPlan:
    c: float
    s: float
    lam: int = 40
    n: int | None = None

    def __post_init__(self):
        if not 0 <= self.s < self.c <= 1:
            raise ValueError("need 0 <= s < c <= 1")
        if self.n is None:
            self.n = required_N(self.c, self.s, self.lam)
        if self.n < 1:
            raise ValueError("N must be >= 1")

    @property
    def threshold(self) -> float:
        return (self.c + self.s) / 2.0


class BernoulliProver:
    """Synthetic test double: each session accepts with probability p.

    The real protocol's c - s at epsilon = 1/100 is too small to
    amplify in desk time, so separation experiments run on these.
    """

    def __init__(self, p: float):
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        self.p = p

    def run_one(self, params, rng: np.random.Generator) -> bool:
        return bool(rng.random() < self.p)


def run_one_session(params: ProtocolParams, prover, rng: np.random.Generator) -> bool:
    """One first phase plus its deferred decision, as a single verdict."""
    record = run_session(params, prover, rng)
    verdict, _ = v2_decide(params, record)
    return verdict


def run_sequential(
    plan: RepetitionPlan,
    prover,
    params: ProtocolParams | None,
    rng: np.random.Generator,
) -> tuple[bool, float]:
    """Run N sequential sessions; accept iff the accepted fraction
    reaches (c + s) / 2.

    The prover is either a protocol prover (driven through run_session)
    or any object with run_one(params, rng), e.g. BernoulliProver.
    Second-phase decisions are computed per session but only tallied at
    the end, matching the deferred-decision reading of the repetition.
    """
    accepted = 0
    runner = prover.run_one if hasattr(prover, "run_one") else None
    for _ in range(plan.n):
        if runner is not None:
            accepted += bool(runner(params, rng))
        else:
            accepted += run_one_session(params, prover, rng)
    fraction = accepted / plan.n
    return fraction >= plan.threshold, fraction


@dataclass
class SeparationReport:
    plan_n: int
    c: float
    s: float
    lam: int
    macro_trials: int
    pass_rate_honest: float
    pass_rate_cheater: float
    seed: int

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def separation_experiment(
    plan: RepetitionPlan, macro_trials: int, seed: int = 0
) -> SeparationReport:
    """Pass rates of Bernoulli(c) and Bernoulli(s) provers under the plan."""
    honest = BernoulliProver(plan.c)
    cheater = BernoulliProver(plan.s)
    passes_h = passes_c = 0
    for i in range(macro_trials):
        rng = np.random.default_rng([seed, 2 * i])
        passes_h += run_sequential(plan, honest, None, rng)[0]
        rng = np.random.default_rng([seed, 2 * i + 1])
        passes_c += run_sequential(plan, cheater, None, rng)[0]
    return SeparationReport(
        plan_n=plan.n,
        c=plan.c,
        s=plan.s,
        lam=plan.lam,
        macro_trials=macro_trials,
        pass_rate_honest=passes_h / macro_trials,
        pass_rate_cheater=passes_c / macro_trials,
        seed=seed,
    )


def per_randomness_profile(
    params: ProtocolParams,
    prover_factory: Callable[[bytes], object],
    n_r: int,
    trials: int,
    threshold: float,
    seed: int = 0,
) -> dict:
    """Empirical strong-soundness profile of a cheating prover.

    Estimates the acceptance rate of prover_factory(r) for a grid of
    fixed randomness values r and reports the fraction of r whose rate
    reaches the threshold.  A report, not an asymptotic claim.
    """
    rates = []
    for i in range(n_r):
        r = b"r-grid" + int(i).to_bytes(4, "big")
        prover = prover_factory(r)
        accepts = 0
        for j in range(trials):
            rng = np.random.default_rng([seed, i, j])
            accepts += run_one_session(params, prover, rng)
        rates.append(accepts / trials)
    above = sum(rate >= threshold for rate in rates)
    return {
        "n_r": n_r,
        "trials_per_r": trials,
        "threshold": threshold,
        "rates": rates,
        "fraction_above": above / n_r,
        "seed": seed,
    }
