"""Classical cheating provers and the binding-attack machinery.

Classical provers here are *replayable*: every response is a
deterministic function of (fixed randomness r, transcript prefix,
challenge), realized by seeding a PRF stream per query.  That models a
prover with its coins fixed, which is exactly what the two-challenge
predictor needs: it may query the same prefix twice and must see the
same d both times.

The soundness pipeline is

    predict_claw_parity   -- query (v1=1, xi) once for d, then eta for
                             v2=0 and v2=1 with the same d; XOR the etas
                             with 1.  Whenever both replies would pass
                             the decider on a unique-claw prefix, the
                             output equals xi.(x0 xor x1).
    goldreich_levin       -- list-decode the inner-product predicate
                             from any such noisy predictor.
    binding_attack        -- assemble a transcript plus decommitments
                             to both bits from the prover's v1=0 answer
                             and the extracted claw difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import coherent_prover as cp
from .bits import check_ell, dot2, parity_u32, rng_from_key
from .commitment import CommitScheme, Transcript
from .hashing import HashFn
from .verifier import (
    ProtocolParams,
    ProtocolViolation,
    SessionRecord,
    sample_hash,
    v2_decide,
)


class ProverNondeterminism(ProtocolViolation):
    """A replayable prover returned different answers to the same query."""


def _prefix_key(t: Transcript, h0: HashFn, h1: HashFn, y: int) -> bytes:
    parts = [len(t).to_bytes(2, "big")]
    for m in t:
        parts.append(len(m).to_bytes(4, "big") + m)
    for h in (h0, h1):
        parts.append(repr(sorted(h.to_json_dict().items())).encode())
    parts.append(int(y).to_bytes(8, "big"))
    return b"".join(parts)


class _ReplayableProver:
    """Base for classical provers: deterministic given (r, query)."""

    replayable = True

    def __init__(self, r: bytes):
        self.r = r

    def new_session(self, rng: np.random.Generator):
        return self

    def session_from_prefix(self, prefix, rng: np.random.Generator):
        return self

    def _rng(self, tag: str, *key_parts) -> np.random.Generator:
        return rng_from_key(self.r, tag, *key_parts)


class ClassicalHonestProver(_ReplayableProver):
    """Baseline classical strategy with a fixed committed bit and seed.

    Commits classically to (b, x), reports y = h_b(x), answers the
    preimage test with (b, x) and the measurement test with d = 0 and
    eta = xi.x, i.e. it plays the first decision clause assuming its
    own seed sits in the x0 slot.  One fixed choice among many; a
    measured baseline, not a claimed optimum.
    """

    def __init__(self, scheme: CommitScheme, b: int, x: int):
        super().__init__(b"classical-honest" + bytes([b]) + int(x).to_bytes(8, "big"))
        self.scheme = scheme
        self.b = b
        self.x = x

    def commit_message(self, j, prefix):
        return self.scheme.sender_msg(j, self.b, self.x, prefix)

    def hash_response(self, t, h0, h1):
        h = h0 if self.b == 0 else h1
        return h.eval(self.x)

    def v0_response(self, t, h0, h1, y, xi):
        return self.b, self.x

    def d_response(self, t, h0, h1, y, xi):
        return 0

    def eta_response(self, t, h0, h1, y, xi, d, v2):
        return dot2(xi, self.x)


def classical_honest_prover(scheme: CommitScheme, b: int, x: int) -> ClassicalHonestProver:
    return ClassicalHonestProver(scheme, b, x)


class UnboundedClawProver(_ReplayableProver):
    """Classical prover that brute-forces the support sets.

    Samples every response from the honest prover's exact conditional
    law, with per-query PRF randomness so replays are consistent.  Over
    fresh randomness its transcript law equals the honest prover's; at
    tiny ell it legitimately defeats binding.
    """

    def __init__(self, scheme: CommitScheme, r: bytes = b""):
        check_ell(scheme.ell)
        super().__init__(b"unbounded-claw" + r)
        self.scheme = scheme

    # exact honest-law sampling, PRF-randomized per query ------------------
    def commit_message(self, j, prefix):
        state = self._state_for_commit(prefix)
        law = cp.commit_alpha_law(self.scheme, state, j, prefix)
        rng = self._rng("commit", len(prefix).to_bytes(2, "big"), *prefix)
        return law.alpha(self._pick(law.probs, rng))

    def hash_response(self, t, h0, h1):
        state = self._state_after_commit(t)
        ys, probs, _, _ = cp.hash_outcome_law(state, h0, h1)
        rng = self._rng("y", _prefix_key(t, h0, h1, 0))
        return int(ys[self._pick(probs, rng)])

    def v0_response(self, t, h0, h1, y, xi):
        state = self._state_after_hash(t, h0, h1, y)
        if state.size == 0:
            raise ProtocolViolation("claw prover queried on unreachable prefix")
        rng = self._rng("v0", _prefix_key(t, h0, h1, y), xi)
        return cp.answer_v0(state, rng)

    def d_response(self, t, h0, h1, y, xi):
        state = self._state_after_hash(t, h0, h1, y)
        if state.size == 0:
            raise ProtocolViolation("claw prover queried on unreachable prefix")
        rng = self._rng("d", _prefix_key(t, h0, h1, y), xi)
        d, _ = cp.sample_d(state, xi, rng)
        return d

    def eta_response(self, t, h0, h1, y, xi, d, v2):
        state = self._state_after_hash(t, h0, h1, y)
        qubit = cp.residual_for_d(state, xi, d)
        rng = self._rng("eta", _prefix_key(t, h0, h1, y), xi, d, v2)
        return 0 if rng.random() < cp.eta0_prob(qubit, v2) else 1

    # state reconstruction --------------------------------------------------
    def _state_for_commit(self, prefix: Transcript) -> cp.SupportState:
        state = cp.SupportState.full(self.scheme.ell)
        for jj in range(1, len(prefix) // 2 + 1):
            sub = prefix[: 2 * jj - 2]
            law = cp.commit_alpha_law(self.scheme, state, jj, sub)
            idx = law.index_of(prefix[2 * jj - 2])
            if idx is None:
                return cp.SupportState(state.ell, state.s0[:0], state.s1[:0])
            state = cp.SupportState(state.ell, *law.split(idx))
        return state

    def _state_after_commit(self, t: Transcript) -> cp.SupportState:
        s0 = np.flatnonzero(self.scheme.consistent_mask(t, 0)).astype(np.int64)
        s1 = np.flatnonzero(self.scheme.consistent_mask(t, 1)).astype(np.int64)
        return cp.SupportState(self.scheme.ell, s0, s1)

    def _state_after_hash(self, t, h0, h1, y) -> cp.SupportState:
        state = self._state_after_commit(t)
        s0 = state.s0[h0.eval_many(state.s0) == y]
        s1 = state.s1[h1.eval_many(state.s1) == y]
        return cp.SupportState(self.scheme.ell, s0, s1)

    @staticmethod
    def _pick(probs: np.ndarray, rng: np.random.Generator) -> int:
        cum = np.cumsum(probs)
        u = rng.random() * cum[-1]
        return int(np.searchsorted(cum, u, side="right").clip(0, len(probs) - 1))


def unbounded_claw_prover(scheme: CommitScheme, r: bytes = b"") -> UnboundedClawProver:
    return UnboundedClawProver(scheme, r)


class ScriptedProver(_ReplayableProver):
    """Test double whose responses come from fixed callables.

    Any callable may return None to model an aborting prover; the
    session driver surfaces that as a protocol violation, which the
    binding attack reports as failure.
    """

    def __init__(
        self,
        scheme: CommitScheme,
        commit: Callable | None = None,
        y_fn: Callable | None = None,
        v0_fn: Callable | None = None,
        d_fn: Callable | None = None,
        eta_fn: Callable | None = None,
    ):
        super().__init__(b"scripted")
        self.scheme = scheme
        self._commit = commit or (lambda j, prefix: scheme.sender_msg(j, 0, 0, prefix))
        self._y = y_fn or (lambda t, h0, h1: 0)
        self._v0 = v0_fn or (lambda t, h0, h1, y, xi: (0, 0))
        self._d = d_fn or (lambda t, h0, h1, y, xi: 0)
        self._eta = eta_fn or (lambda t, h0, h1, y, xi, d, v2: 0)

    def commit_message(self, j, prefix):
        return self._commit(j, prefix)

    def hash_response(self, t, h0, h1):
        return self._y(t, h0, h1)

    def v0_response(self, t, h0, h1, y, xi):
        return self._v0(t, h0, h1, y, xi)

    def d_response(self, t, h0, h1, y, xi):
        return self._d(t, h0, h1, y, xi)

    def eta_response(self, t, h0, h1, y, xi, d, v2):
        return self._eta(t, h0, h1, y, xi, d, v2)


# the two-challenge predictor ---------------------------------------------------

def predict_claw_parity(prefix, xi: int, prover) -> int:
    """Query the prover on (v1=1, xi) and both v2 values; XOR the etas.

    Replays the d-query to audit the prover's replayability contract.
    On unique-claw prefixes, whenever both (d, eta) replies would pass
    the decider the returned bit equals xi.(x0 xor x1).
    """
    if not getattr(prover, "replayable", False):
        raise ProtocolViolation("predictor needs a replayable prover")
    t, h0, h1, y = prefix
    d = prover.d_response(t, h0, h1, y, xi)
    if prover.d_response(t, h0, h1, y, xi) != d:
        raise ProverNondeterminism("d changed across replays of one prefix")
    eta_10 = prover.eta_response(t, h0, h1, y, xi, d, 0)
    eta_11 = prover.eta_response(t, h0, h1, y, xi, d, 1)
    if eta_10 is None or eta_11 is None:
        raise ProtocolViolation("prover aborted the measurement query")
    return eta_10 ^ eta_11 ^ 1


@dataclass
class PredictionOracle:
    """A xi -> bit predictor plus its declared domain length."""

    ell: int
    fn: Callable[[int], int]
    queries: int = 0

    def query(self, xi: int) -> int:
        self.queries += 1
        return int(self.fn(int(xi))) & 1

    def query_many(self, xis: np.ndarray) -> np.ndarray:
        return np.fromiter((self.query(int(x)) for x in xis), dtype=np.int64, count=len(xis))


def oracle_from_prover(prefix, prover, ell: int) -> PredictionOracle:
    return PredictionOracle(ell=ell, fn=lambda xi: predict_claw_parity(prefix, xi, prover))


# Goldreich-Levin list decoding --------------------------------------------------

def goldreich_levin(
    oracle: PredictionOracle,
    ell: int,
    advantage: float,
    confidence: float,
    rng: np.random.Generator,
    max_batch_log2: int = 14,
) -> list[int]:
    """List-decode all s with Pr_xi[oracle(xi) = xi.s] >= 1/2 + advantage.

    Standard pairwise-independent batching: t seed strings r_1..r_t give
    2^t - 1 XOR-combination queries per coordinate; every guess of the t
    predicate bits yields one candidate via per-coordinate majority
    vote.  The deterministic unit-vector probe is always included, so a
    perfect oracle is decoded exactly.  Candidates are then filtered on
    fresh queries at threshold 1/2 + advantage/2, which caps the list
    at O(1/advantage^2) survivors with high probability.

    Query count is ell * (2^t - 1) + filtering, with
    2^t - 1 >= ell / (4 * advantage^2 * confidence).
    """
    if not 0 < advantage <= 0.5:
        raise ValueError("advantage must lie in (0, 1/2]")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    check_ell(ell)
    need = ell / (4.0 * advantage * advantage * confidence)
    t = max(1, int(np.ceil(np.log2(need + 1))))
    t = min(t, max_batch_log2)
    n_comb = (1 << t) - 1

    # unit-vector probe: exact for noiseless linear oracles
    unit = 0
    for i in range(ell):
        unit |= oracle.query(1 << i) << i
    candidates = [unit]

    seeds = [int(rng.integers(1 << ell)) for _ in range(t)]
    combos = np.zeros(1 << t, dtype=np.int64)
    for sigma in range(1, 1 << t):
        combos[sigma] = combos[sigma & (sigma - 1)] ^ seeds[(sigma & -sigma).bit_length() - 1]

    votes = np.empty((n_comb, ell), dtype=np.int64)
    for i in range(ell):
        votes[:, i] = oracle.query_many(combos[1:] ^ (1 << i))

    guesses = np.arange(1 << t, dtype=np.uint32)
    sigmas = np.arange(1, 1 << t, dtype=np.uint32)
    # sign matrix (-1)^(g . sigma): rows = guesses, cols = XOR combos
    signs = 1 - 2 * parity_u32(guesses[:, None] & sigmas[None, :]).astype(np.int64)
    scores = signs @ (1 - 2 * votes)
    bits = scores < 0
    weights = np.int64(1) << np.arange(ell, dtype=np.int64)
    candidates.extend(int(v) for v in (bits @ weights))

    seen: dict[int, None] = {}
    for s in candidates:
        seen.setdefault(s, None)
    distinct = list(seen)

    n_test = max(64, int(np.ceil(8.0 / (advantage * advantage))))
    test_xis = np.array([int(rng.integers(1 << ell)) for _ in range(n_test)], dtype=np.int64)
    answers = oracle.query_many(test_xis)
    threshold = 0.5 + advantage / 2.0
    kept: list[tuple[float, int]] = []
    for s in distinct:
        agree = float(np.mean(parity_u32(test_xis & np.int64(s)) == answers))
        if agree >= threshold:
            kept.append((agree, s))
    kept.sort(key=lambda pair: (-pair[0], pair[1]))
    return [s for _, s in kept]


# the binding attack --------------------------------------------------------------

@dataclass
class BindingResult:
    success: bool
    failure_reason: str | None
    transcript: Transcript | None
    decommit0: tuple[int, int] | None
    decommit1: tuple[int, int] | None
    gl_queries: int
    candidates_tried: int

    def to_json_dict(self) -> dict:
        return {
            "success": self.success,
            "failure_reason": self.failure_reason,
            "gl_queries": self.gl_queries,
            "candidates_tried": self.candidates_tried,
        }


def binding_attack(
    params: ProtocolParams,
    prover,
    rng: np.random.Generator,
    gl_advantage: float = 0.2,
    gl_confidence: float = 0.25,
) -> BindingResult:
    """Assemble a double opening of one transcript from a cheating prover.

    Plays the commit phase honestly as the receiver, lets the prover fix
    y, collects its v1=0 answer (b', x'), list-decodes the claw
    difference z from the two-challenge predictor, and returns the
    decommitments (0, x'_0), (1, x'_1) with {x'_0, x'_1} = {x', x' xor z}
    ordered by b'.  Success means both openings verify; a prover abort
    or an empty surviving list is reported as failure, never raised.
    """
    scheme = params.scheme
    ell = scheme.ell
    try:
        session = prover.new_session(rng)
        r = int(rng.integers(1 << ell))
        msgs: list[bytes] = []
        for j in range(1, scheme.rounds + 1):
            alpha = session.commit_message(j, tuple(msgs))
            if not isinstance(alpha, bytes):
                raise ProtocolViolation("sender message must be bytes")
            msgs.append(alpha)
            msgs.append(scheme.receiver_msg(j, r, tuple(msgs)))
        t = tuple(msgs)

        if params.grid_mode == "oracle":
            size0 = int(scheme.consistent_mask(t, 0).sum())
            j_idx = params.best_grid_index(size0)
            if j_idx is None:
                j_idx = int(rng.integers(params.m))
        else:
            j_idx = int(rng.integers(params.m))
        k = params.ks[j_idx]
        h0 = sample_hash(params.hash_family, ell, k, rng)
        h1 = sample_hash(params.hash_family, ell, k, rng)
        y = session.hash_response(t, h0, h1)
        if not isinstance(y, (int, np.integer)) or not 0 <= int(y) < k:
            raise ProtocolViolation("y out of range")
        y = int(y)

        xi = int(rng.integers(1 << ell))
        resp = session.v0_response(t, h0, h1, y, xi)
        if resp is None or len(resp) != 2 or resp[0] not in (0, 1):
            raise ProtocolViolation("malformed measurement response")
        bprime, xprime = int(resp[0]), int(resp[1])

        prefix = (t, h0, h1, y)
        oracle = oracle_from_prover(prefix, prover, ell)
        z_list = goldreich_levin(oracle, ell, gl_advantage, gl_confidence, rng)
    except ProverNondeterminism:
        raise
    except ProtocolViolation as exc:
        return BindingResult(False, str(exc), None, None, None, 0, 0)

    tried = 0
    for z in z_list:
        tried += 1
        if bprime == 0:
            x0, x1 = xprime, xprime ^ z
        else:
            x0, x1 = xprime ^ z, xprime
        if scheme.open_verify(t, 0, x0) and scheme.open_verify(t, 1, x1):
            return BindingResult(
                True, None, t, (0, x0), (1, x1), oracle.queries, tried
            )
    return BindingResult(
        False, "no candidate opened both bits", t, None, None, oracle.queries, tried
    )


def estimate_conditional_acceptance(
    params: ProtocolParams, prefix, prover, trials: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo Pr[V2 accepts | fixed (t, h0, h1, y)] for a prover.

    Fresh (v1, xi, v2, coin) per trial; the prover resumes from the
    prefix (classical provers are stateless, the honest prover rebuilds
    its post-y state by brute force).
    """
    t, h0, h1, y = prefix
    ell = params.ell
    accepts = 0
    for _ in range(trials):
        session = prover.session_from_prefix(prefix, rng)
        record = SessionRecord(
            scheme=params.scheme.name,
            ell=ell,
            t=t,
            j=0,
            k=h0.k,
            h0=h0,
            h1=h1,
            y=y,
            v1=int(rng.integers(2)),
            xi=int(rng.integers(1 << ell)),
        )
        if record.v1 == 0:
            record.bprime, record.xprime = session.v0_response(t, h0, h1, y, record.xi)
        else:
            record.d = int(session.d_response(t, h0, h1, y, record.xi))
            record.v2 = int(rng.integers(2))
            record.eta = int(
                session.eta_response(t, h0, h1, y, record.xi, record.d, record.v2)
            )
        record.v2coin = int(rng.integers(8))
        ok, _ = v2_decide(params, record)
        accepts += ok
    return accepts / trials
