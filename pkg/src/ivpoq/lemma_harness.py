"""Direct verification of the protocol's supporting lemmas and identities.

Every check returns a LemmaReport.  Exact checks decide their verdict
in integer or rational arithmetic only; Monte-Carlo checks report a
confidence interval and carry the raw data points.  A "violated"
verdict always ships a replayable counterexample.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .commitment import (
    CommitScheme,
    Transcript,
    hiding_distance,
    transcript_distributions,
)
from .coherent_prover import SupportState, commit_alpha_law, run_coherent_commit
from .hashing import GF2_AFFINE, enumerate_family, family_size, sample_hash
from .stats import hoeffding_halfwidth, wilson_interval
from .verifier import grid_sizes

HOLDS = "holds"
VIOLATED = "violated"
ESTIMATED = "estimated"


@dataclass
class LemmaReport:
    lemma: str
    params: dict
    verdict: str
    counterexample: dict | None = None
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict != VIOLATED

    def to_json_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "verdict": self.verdict,
            "counterexample": self.counterexample,
            "data": self.data,
        }


def check_hash_lemmas(ell: int = 3, ks: tuple[int, ...] = (2, 4, 8)) -> LemmaReport:
    """Exhaustive check of the two hash-family hitting bounds.

    Over every member of the gf2-affine family, every S subset of the
    domain and every y:

        Pr[|S n h^-1(y)| >= 1] >= |S|/k - |S|^2 / (2 k^2)
        Pr[|S n h^-1(y)|  = 1] >= |S|/k - |S|^2 / k^2

    Both sides are compared after clearing denominators, so the verdict
    is decided purely on integers.
    """
    if ell > 3:
        raise ValueError("full family enumeration is only feasible for ell <= 3")
    n = 1 << ell
    n_subsets = 1 << n
    pop = np.unpackbits(
        np.arange(n_subsets, dtype=np.uint16).view(np.uint8).reshape(-1, 2), axis=1
    ).sum(axis=1).astype(np.int64)
    cases = 0
    for k in ks:
        size = family_size(GF2_AFFINE, ell, k)
        # member counts per (y, preimage-mask)
        mask_counts: list[dict[int, int]] = [dict() for _ in range(k)]
        for h in enumerate_family(GF2_AFFINE, ell, k):
            pre = [0] * k
            for x in range(n):
                pre[h.eval(x)] |= 1 << x
            for y in range(k):
                mask_counts[y][pre[y]] = mask_counts[y].get(pre[y], 0) + 1
        subsets = np.arange(n_subsets, dtype=np.int64)
        for y in range(k):
            ge1 = np.zeros(n_subsets, dtype=np.int64)
            eq1 = np.zeros(n_subsets, dtype=np.int64)
            for pm, cnt in mask_counts[y].items():
                inter = pop[subsets & pm]
                ge1 += cnt * (inter >= 1)
                eq1 += cnt * (inter == 1)
            sizes = pop[subsets]
            # ge1/size >= s/k - s^2/(2k^2)  <=>  2 k^2 ge1 >= size (2 k s - s^2)
            lhs_ge = 2 * k * k * ge1
            rhs_ge = size * (2 * k * sizes - sizes * sizes)
            lhs_eq = k * k * eq1
            rhs_eq = size * (k * sizes - sizes * sizes)
            bad = np.flatnonzero((lhs_ge < rhs_ge) | (lhs_eq < rhs_eq))
            cases += 2 * n_subsets
            if len(bad):
                s_mask = int(subsets[bad[0]])
                return LemmaReport(
                    lemma="hash-hitting-bounds",
                    params={"ell": ell, "ks": list(ks)},
                    verdict=VIOLATED,
                    counterexample={"k": k, "y": y, "subset_mask": s_mask},
                    data={"cases": cases},
                )
    return LemmaReport(
        lemma="hash-hitting-bounds",
        params={"ell": ell, "ks": list(ks)},
        verdict=HOLDS,
        data={"cases": cases},
    )


def find_grid_index(
    size0: int, size1: int, epsilon: float, ell: int
) -> tuple[int, int] | None:
    """Smallest grid index j whose k = ceil((1+eps)^j) brackets the sizes.

    Requires the balance precondition (1-eps)|X1| < |X0| < (1+eps)|X1|;
    returns None when it fails.  The returned (j, k) satisfies

        k <= 2|X0| <= (1+eps) k                      (size-0 bracket)
        k/(1+eps) <= 2|X1| <= (1+eps)/(1-eps) k      (size-1 bracket)

    verified in exact rational arithmetic.
    """
    if size0 < 0 or size1 < 0:
        raise ValueError("sizes must be nonnegative")
    eps = Fraction(epsilon)
    if not (1 - eps) * size1 < size0 < (1 + eps) * size1:
        return None
    if size0 > 1 << ell or size1 > 1 << ell:
        raise ValueError("sizes exceed the domain")
    ks = grid_sizes(ell, epsilon)
    # k_j <= 2 size0 holds on a prefix and (1+eps) k_j >= 2 size0 on a
    # suffix, so the smallest size-0 bracket is found by binary search;
    # the size-1 bracket then follows from the balance precondition.
    target = 2 * size0
    hi = bisect.bisect_right(ks, target) - 1
    if hi < 0:
        return None
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if (1 + eps) * ks[mid] >= target:
            hi = mid
        else:
            lo = mid + 1
    for j in range(lo, len(ks)):
        if grid_bounds_ok(j, ks[j], size0, size1, eps):
            return j, ks[j]
        if ks[j] > target:
            return None
    return None


def grid_bounds_ok(j: int, k: int, size0: int, size1: int, eps: Fraction) -> bool:
    cond0 = k <= 2 * size0 and Fraction(2 * size0) <= (1 + eps) * k
    cond1 = Fraction(k, 1) / (1 + eps) <= 2 * size1 and Fraction(2 * size1) <= (
        (1 + eps) / (1 - eps)
    ) * k
    return cond0 and cond1


def check_unique_claw_prob(
    n: int,
    epsilon: float,
    trials: int,
    rng: np.random.Generator,
    hash_family: str = "affine-mod-prime",
) -> LemmaReport:
    """Estimate the both-preimages-unique probability on synthetic sets.

    Disjoint |X0| = |X1| = n with k from the bracketing grid index; each
    trial draws (h0, h1) and adds the exact conditional probability that
    the measured y has unique preimages on both sides:

        q(h0, h1) = 2 |G0 n G1| / (|X0| + |X1|),
        G_b = {y : exactly one element of X_b hashes to y}.

    Verdict HOLDS when the estimate's lower 99% CI clears 0.1, ESTIMATED
    when only the point estimate does, VIOLATED otherwise.
    """
    if n < 1:
        raise ValueError("the balance precondition needs |X0| = |X1| >= 1")
    ell = max(1, (2 * n - 1).bit_length())
    found = find_grid_index(n, n, epsilon, ell)
    assert found is not None  # equal sizes always pass the precondition
    j, k = found
    x0 = list(range(n))
    x1 = list(range(n, 2 * n))
    total = 0.0
    values = []
    for _ in range(trials):
        h0 = sample_hash(hash_family, ell, k, rng)
        h1 = sample_hash(hash_family, ell, k, rng)
        g0 = _unique_values(h0, x0)
        g1 = _unique_values(h1, x1)
        q = 2 * len(g0 & g1) / (2 * n)
        total += q
        values.append(q)
    est = total / trials
    # per-trial values live in [0, 1], so Hoeffding applies directly
    half = hoeffding_halfwidth(trials, alpha=0.01)
    lo, hi = max(0.0, est - half), min(1.0, est + half)
    verdict = HOLDS if lo >= 0.1 else (ESTIMATED if est >= 0.1 else VIOLATED)
    report = LemmaReport(
        lemma="unique-claw-rate",
        params={"n": n, "epsilon": epsilon, "trials": trials, "j": j, "k": k},
        verdict=verdict,
        data={"estimate": est, "ci": [lo, hi]},
    )
    if verdict == VIOLATED:
        report.counterexample = {"n": n, "k": k, "estimate": est}
    return report


def _unique_values(h, xs) -> set[int]:
    vals, counts = np.unique(h.eval_many(xs), return_counts=True)
    return {int(v) for v in vals[counts == 1]}


def check_branch_balance(
    scheme: CommitScheme,
    trials: int,
    epsilon: float,
    rng: np.random.Generator,
) -> LemmaReport:
    """Empirical mass of transcripts with (1-eps)|X1| < |X0| < (1+eps)|X1|.

    For statistically hiding schemes the out-of-balance mass must be
    small: a receiver that answers 0 on |X0| >= (1+eps)|X1| and 1 on
    |X0| <= (1-eps)|X1| distinguishes the committed bit with advantage
    at least eps/(2(1+eps)) times that mass, so the mass is bounded by
    the transcript distance.  Both sides of that bound are reported.
    """
    in_t = 0
    for _ in range(trials):
        r = int(rng.integers(1 << scheme.ell))
        _, state = run_coherent_commit(scheme, r, rng)
        n0, n1 = len(state.s0), len(state.s1)
        if (1 - epsilon) * n1 < n0 < (1 + epsilon) * n1:
            in_t += 1
    mass = in_t / trials
    lo, hi = wilson_interval(in_t, trials)
    data = {"mass_T": mass, "ci": [lo, hi]}
    verdict = ESTIMATED
    if scheme.name == "hm2":
        dist = hiding_distance(scheme, num_transcripts=min(trials, 200), rng=rng)
        bound = (epsilon / (2 * (1 + epsilon))) * (1 - mass)
        data["hiding_distance"] = dist
        data["distinguisher_bound"] = bound
        # allow for Monte-Carlo error on the mass side
        slack = (epsilon / (2 * (1 + epsilon))) * (hi - lo)
        verdict = ESTIMATED if bound <= dist + slack else VIOLATED
    return LemmaReport(
        lemma="branch-balance",
        params={"scheme": scheme.params_dict(), "epsilon": epsilon, "trials": trials},
        verdict=verdict,
        data=data,
    )


def coherent_transcript_law(scheme: CommitScheme) -> dict[Transcript, Fraction]:
    """Exact transcript law of the coherent commit run, by tree traversal.

    Walks every measurement branch with Fraction probabilities; the
    receiver seed is enumerated exhaustively.  Independent of the
    sampling path through run_coherent_commit.
    """
    n = 1 << scheme.ell
    law: dict[Transcript, Fraction] = {}

    def walk(r: int, state: SupportState, prefix: tuple, prob: Fraction):
        j = len(prefix) // 2 + 1
        round_law = commit_alpha_law(scheme, state, j, prefix)
        for i in range(len(round_law.probs)):
            s0, s1 = round_law.split(i)
            branch_prob = prob * Fraction(len(s0) + len(s1), state.size)
            with_alpha = prefix + (round_law.alpha(i),)
            beta = scheme.receiver_msg(j, r, with_alpha)
            t = with_alpha + (beta,)
            if j == scheme.rounds:
                law[t] = law.get(t, Fraction(0)) + branch_prob
            else:
                walk(r, SupportState(scheme.ell, s0, s1), t, branch_prob)

    for r in range(n):
        walk(r, SupportState.full(scheme.ell), (), Fraction(1, n))
    return law


def check_transcript_identity(
    scheme: CommitScheme,
    trials: int = 0,
    rng: np.random.Generator | None = None,
) -> LemmaReport:
    """Three-way check of Pr[t] = (|R_t|/2^ell) (|X0|+|X1|)/2^(ell+1).

    Exact legs: (1) the coherent-run tree law, (2) the identity's right
    side with R_t and the consistency sets brute-forced, (3) the
    classical law (|R_t|/2^ell)(|X_b|+...)/2 from full (b, x, r)
    enumeration.  All three must agree as exact rationals.  With
    trials > 0 an empirical leg samples coherent runs and checks each
    frequency against its 99% interval.
    """
    if scheme.ell > 8:
        raise ValueError("identity check enumerates 2^(2 ell) pairs; keep ell small")
    n = 1 << scheme.ell
    coherent = coherent_transcript_law(scheme)
    classical = transcript_distributions(scheme)
    mismatch = None
    seen = set(coherent) | set(classical)
    for t in sorted(seen):
        p_tree = coherent.get(t, Fraction(0))
        c0, c1 = classical.get(t, (0, 0))
        p_classical = Fraction(c0 + c1, 2 * n * n)
        r_t = int(scheme.receiver_mask(t).sum())
        size0 = int(scheme.consistent_mask(t, 0).sum())
        size1 = int(scheme.consistent_mask(t, 1).sum())
        p_identity = Fraction(r_t, n) * Fraction(size0 + size1, 2 * n)
        if not (p_tree == p_classical == p_identity):
            mismatch = {
                "t": [m.hex() for m in t],
                "tree": str(p_tree),
                "classical": str(p_classical),
                "identity": str(p_identity),
            }
            break
    total = sum(coherent.values())
    data = {"transcripts": len(coherent), "total_mass": str(total)}
    if mismatch is None and total != 1:
        mismatch = {"total_mass": str(total)}
    if mismatch is None and trials > 0:
        freqs: dict[Transcript, int] = {}
        for _ in range(trials):
            r = int(rng.integers(n))
            t, _ = run_coherent_commit(scheme, r, rng)
            freqs[t] = freqs.get(t, 0) + 1
        # simultaneous Hoeffding band over all transcripts at level 1%
        half = hoeffding_halfwidth(trials, alpha=0.01 / max(1, len(coherent)))
        worst = 0.0
        for t, p in coherent.items():
            excess = abs(freqs.get(t, 0) / trials - float(p)) - half
            worst = max(worst, excess)
        data["empirical_worst_excess"] = worst
        if worst > 0:
            mismatch = {"empirical_excess": worst}
    return LemmaReport(
        lemma="transcript-law",
        params={"scheme": scheme.params_dict(), "trials": trials},
        verdict=HOLDS if mismatch is None else VIOLATED,
        counterexample=mismatch,
        data=data,
    )
