"""The honest quantum prover, simulated exactly.

The prover's state between the commit phase and the final challenge is
always of the form (sum_{x in S0} |0,x> + sum_{x in S1} |1,x>) / norm:
every operation up to the Hadamard measurement is a classical-function
filter, so amplitudes stay uniform and nonnegative and the state is
fully described by the pair of support sets.  The first nonuniform
object is the 2-amplitude residual qubit left after the d-measurement.

Every measurement here is sampled from its exact distribution; the
*_law functions expose those distributions for tests and for classical
simulators that need them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import check_ell, dot2, parity_u32, to_hex, wht
from .commitment import CommitScheme, Transcript
from .hashing import HashFn

COS_PI8 = np.cos(np.pi / 8)
SIN_PI8 = np.sin(np.pi / 8)
# Conditional acceptance of the honest prover on a two-singleton state:
# 1/2 * 1 + 1/2 * cos^2(pi/8).
HONEST_UNIQUE_RATE = 0.5 + 0.5 * COS_PI8**2


class EmptyStateError(RuntimeError):
    """Raised when a measurement is asked of a state with empty support."""


@dataclass
class SupportState:
    """Support sets (S0, S1) of the two committed-bit branches."""

    ell: int
    s0: np.ndarray  # sorted int64 seeds of the |0> branch
    s1: np.ndarray

    @classmethod
    def full(cls, ell: int) -> "SupportState":
        xs = np.arange(1 << ell, dtype=np.int64)
        return cls(ell, xs, xs.copy())

    @classmethod
    def from_sets(cls, ell, s0, s1) -> "SupportState":
        return cls(
            ell,
            np.array(sorted(int(x) for x in s0), dtype=np.int64),
            np.array(sorted(int(x) for x in s1), dtype=np.int64),
        )

    @property
    def size(self) -> int:
        return len(self.s0) + len(self.s1)

    def sets(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(int(x) for x in self.s0), tuple(int(x) for x in self.s1)

    def to_json_dict(self) -> dict:
        return {
            "ell": self.ell,
            "s0": [to_hex(int(x), self.ell) for x in self.s0],
            "s1": [to_hex(int(x), self.ell) for x in self.s1],
        }


@dataclass
class ResidualQubit:
    """Unnormalized real amplitudes (a0, a1) after the d-measurement."""

    a0: float
    a1: float

    @property
    def norm2(self) -> float:
        return self.a0 * self.a0 + self.a1 * self.a1


def _sample_index(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights, dtype=np.float64)
    u = rng.random() * cum[-1]
    return int(np.searchsorted(cum, u, side="right").clip(0, len(weights) - 1))


# commit phase ---------------------------------------------------------------

class CommitRoundLaw:
    """Exact law of the round-j sender message given the current state.

    alphas[i] occurs with probability probs[i]; split(i) is the (s0, s1)
    support pair the state collapses to when alphas[i] is observed.
    Splits are materialized lazily so samplers only pay for the branch
    they take.
    """

    def __init__(self, scheme: CommitScheme, state: SupportState, j: int, prefix: Transcript):
        keys0, keys1, n_keys, decode = scheme.alpha_partition(j, state.s0, state.s1, prefix)
        n0 = np.bincount(keys0, minlength=n_keys)
        n1 = np.bincount(keys1, minlength=n_keys)
        self._alive = np.flatnonzero(n0 + n1)
        self._keys0 = keys0
        self._keys1 = keys1
        self._state = state
        self.probs = (n0 + n1)[self._alive] / state.size
        self._decode = decode

    def alpha(self, i: int) -> bytes:
        return self._decode(int(self._alive[i]))

    @property
    def alphas(self) -> list[bytes]:
        return [self._decode(int(k)) for k in self._alive]

    def split(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        key = self._alive[i]
        return self._state.s0[self._keys0 == key], self._state.s1[self._keys1 == key]

    def index_of(self, alpha: bytes) -> int | None:
        for i in range(len(self._alive)):
            if self.alpha(i) == alpha:
                return i
        return None


def commit_alpha_law(
    scheme: CommitScheme, state: SupportState, j: int, prefix: Transcript
) -> CommitRoundLaw:
    return CommitRoundLaw(scheme, state, j, prefix)


def run_coherent_commit(
    scheme: CommitScheme, receiver_randomness: int, rng: np.random.Generator
) -> tuple[Transcript, SupportState]:
    """Coherent commit phase: each alpha_j is measured, never chosen.

    At round j the observed message has Pr[alpha] proportional to the
    number of (b, x) branches consistent with it; the support sets are
    filtered to the matching seeds and the receiver replies g_j(r, ...).
    """
    state = SupportState.full(scheme.ell)
    msgs: list[bytes] = []
    for j in range(1, scheme.rounds + 1):
        law = commit_alpha_law(scheme, state, j, tuple(msgs))
        idx = _sample_index(law.probs, rng)
        msgs.append(law.alpha(idx))
        state = SupportState(scheme.ell, *law.split(idx))
        msgs.append(scheme.receiver_msg(j, receiver_randomness, tuple(msgs)))
    return tuple(msgs), state


# hash measurement ------------------------------------------------------------

def hash_outcome_law(state: SupportState, h0: HashFn, h1: HashFn):
    """Exact law of y: Pr[y] = (|S0 n h0^-1(y)| + |S1 n h1^-1(y)|) / |state|."""
    if state.size == 0:
        raise EmptyStateError("hash measurement on empty state")
    y0 = h0.eval_many(state.s0)
    y1 = h1.eval_many(state.s1)
    ys = np.union1d(y0, y1)
    n0 = np.bincount(np.searchsorted(ys, y0), minlength=len(ys))
    n1 = np.bincount(np.searchsorted(ys, y1), minlength=len(ys))
    probs = (n0 + n1) / state.size
    return ys, probs, y0, y1


def measure_hash(
    state: SupportState, h0: HashFn, h1: HashFn, rng: np.random.Generator
) -> tuple[int, SupportState]:
    ys, probs, y0, y1 = hash_outcome_law(state, h0, h1)
    idx = _sample_index(probs, rng)
    y = int(ys[idx])
    return y, SupportState(state.ell, state.s0[y0 == y], state.s1[y1 == y])


# challenge responses ----------------------------------------------------------

def answer_v0(state: SupportState, rng: np.random.Generator) -> tuple[int, int]:
    """Computational-basis measurement: uniform over the surviving branches."""
    if state.size == 0:
        raise EmptyStateError("measurement on empty state")
    idx = int(rng.integers(state.size))
    if idx < len(state.s0):
        return 0, int(state.s0[idx])
    return 1, int(state.s1[idx - len(state.s0)])


def d_outcome_law(state: SupportState, xi: int):
    """Exact law of the Hadamard-basis result d and the residual amplitudes.

    With a_c(d) = sum_{x in S0, xi.x=c} (-1)^(d.x)
                + sum_{x in S1, xi.x=c^1} (-1)^(d.x),
    Pr[d] = (a_0(d)^2 + a_1(d)^2) / (2^ell * |state|) and the residual
    qubit is (a_0(d), a_1(d)).  Computed with two integer Walsh-Hadamard
    transforms of the branch indicator vectors; everything before the
    final normalization is exact integer arithmetic.
    """
    if state.size == 0:
        raise EmptyStateError("measurement on empty state")
    check_ell(state.ell)
    n = 1 << state.ell
    w = np.zeros((2, n), dtype=np.int64)
    c0 = parity_u32(state.s0 & np.int64(xi)).astype(np.int64)
    c1 = parity_u32(state.s1 & np.int64(xi)).astype(np.int64) ^ 1
    np.add.at(w[0], state.s0[c0 == 0], 1)
    np.add.at(w[1], state.s0[c0 == 1], 1)
    np.add.at(w[0], state.s1[c1 == 0], 1)
    np.add.at(w[1], state.s1[c1 == 1], 1)
    a0 = wht(w[0])
    a1 = wht(w[1])
    probs = (a0 * a0 + a1 * a1) / (n * state.size)
    return probs, a0, a1


def residual_for_d(state: SupportState, xi: int, d: int) -> ResidualQubit:
    """The residual amplitudes (a0(d), a1(d)) without a full transform."""
    a = [0, 0]
    for x in state.s0:
        a[dot2(xi, int(x))] += -1 if dot2(d, int(x)) else 1
    for x in state.s1:
        a[dot2(xi, int(x)) ^ 1] += -1 if dot2(d, int(x)) else 1
    return ResidualQubit(float(a[0]), float(a[1]))


def sample_d(
    state: SupportState, xi: int, rng: np.random.Generator
) -> tuple[int, ResidualQubit]:
    if state.size <= 2:
        # One or two support points: Pr[d] is uniform on the subcube where
        # the two amplitudes do not cancel, so rejection sampling is exact
        # and sidesteps the full 2^ell transform.
        if state.size == 0:
            raise EmptyStateError("measurement on empty state")
        while True:
            d = int(rng.integers(1 << state.ell))
            qubit = residual_for_d(state, xi, d)
            if qubit.norm2 > 0:
                return d, qubit
    probs, a0, a1 = d_outcome_law(state, xi)
    d = _sample_index(probs, rng)
    return d, ResidualQubit(float(a0[d]), float(a1[d]))


def eta0_prob(qubit: ResidualQubit, v2: int) -> float:
    """Pr[eta = 0] for the pi/8-rotated measurement selected by v2."""
    if qubit.norm2 <= 0.0:
        raise EmptyStateError("rotated measurement on a zero vector")
    sin = SIN_PI8 if v2 == 0 else -SIN_PI8
    amp = COS_PI8 * qubit.a0 + sin * qubit.a1
    return amp * amp / qubit.norm2


def measure_rotated(qubit: ResidualQubit, v2: int, rng: np.random.Generator) -> int:
    return 0 if rng.random() < eta0_prob(qubit, v2) else 1


# the honest prover as a protocol participant ----------------------------------

class HonestProver:
    """Session factory for the honest (quantum, exactly simulated) prover."""

    replayable = False

    def __init__(self, scheme: CommitScheme):
        self.scheme = scheme

    def new_session(self, rng: np.random.Generator) -> "HonestSession":
        return HonestSession(self.scheme, rng)

    def session_from_prefix(self, prefix, rng: np.random.Generator) -> "HonestSession":
        """Rebuild the post-y state of a session with the given prefix.

        Diagnostic path for conditional-acceptance estimates: the state
        is recomputed by brute force from (t, h0, h1, y).
        """
        t, h0, h1, y = prefix
        scheme = self.scheme
        s0 = np.flatnonzero(scheme.consistent_mask(t, 0)).astype(np.int64)
        s1 = np.flatnonzero(scheme.consistent_mask(t, 1)).astype(np.int64)
        s0 = s0[h0.eval_many(s0) == y]
        s1 = s1[h1.eval_many(s1) == y]
        session = HonestSession(scheme, rng)
        session.state = SupportState(scheme.ell, s0, s1)
        return session


class HonestSession:
    """One protocol run; the support-set state evolves with each message."""

    def __init__(self, scheme: CommitScheme, rng: np.random.Generator):
        self.scheme = scheme
        self.rng = rng
        self.state = SupportState.full(scheme.ell)
        self.qubit: ResidualQubit | None = None

    def commit_message(self, j: int, prefix: Transcript) -> bytes:
        law = commit_alpha_law(self.scheme, self.state, j, prefix)
        idx = _sample_index(law.probs, self.rng)
        self.state = SupportState(self.scheme.ell, *law.split(idx))
        return law.alpha(idx)

    def hash_response(self, t, h0, h1) -> int:
        y, self.state = measure_hash(self.state, h0, h1, self.rng)
        return y

    def v0_response(self, t, h0, h1, y, xi) -> tuple[int, int]:
        return answer_v0(self.state, self.rng)

    def d_response(self, t, h0, h1, y, xi) -> int:
        d, self.qubit = sample_d(self.state, xi, self.rng)
        return d

    def eta_response(self, t, h0, h1, y, xi, d, v2) -> int:
        return measure_rotated(self.qubit, v2, self.rng)
