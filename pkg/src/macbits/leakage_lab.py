"""Executable oracles for the combinatorial security analysis.

Three families of checks back the protocol's parameter choices:

* leakage calculus: a leakage class is a distribution over (S, c) where S is
  the set of secret-key positions handed to the adversary and c flags that
  the run survived detection; its strength is log2 E[c * 2^|S|], and an
  optimal guessing adversary wins the key-guessing game with probability
  2^(strength - tau);
* bucket combining: planting gamma leaky objects among B*ell and bucketing
  uniformly leaves some bucket entirely leaky with probability
  alpha = 2^-gamma * C(gamma,B) * ell / C(B*ell,B) after the guess-survival
  filter, maximized at gamma = 2B-1;
* spanning: ceil(9*psi/2) uniform psi-bit vectors span the space except with
  probability at most 2^(1-psi).

Monte-Carlo estimators are seeded through a caller-supplied random.Random so
every run is reproducible; numpy accelerates the bulk trials internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class LeakageSpec:
    """Distribution over (S, c): leaked position set and survived flag.

    Exactly one of `table` (tuple of (prob, frozenset, c) rows) or `sampler`
    (callable rng -> (iterable, c)) is set.
    """

    tau: int
    table: tuple = None
    sampler: object = None

    def __post_init__(self):
        if self.tau < 1:
            raise UsageError("tau must be positive")
        if (self.table is None) == (self.sampler is None):
            raise UsageError("exactly one of table or sampler")
        if self.table is not None:
            total = 0.0
            for prob, s, c in self.table:
                if prob < 0 or c not in (0, 1):
                    raise UsageError("bad table row")
                if not set(s) <= set(range(1, self.tau + 1)):
                    raise UsageError("leaked positions out of range")
                total += prob
            if abs(total - 1.0) > 1e-9:
                raise UsageError("probabilities must sum to 1")

    @classmethod
    def enumerable(cls, tau: int, rows) -> "LeakageSpec":
        return cls(tau, table=tuple(
            (p, frozenset(s), c) for p, s, c in rows))

    @classmethod
    def sampled(cls, tau: int, fn) -> "LeakageSpec":
        return cls(tau, sampler=fn)

    def draw(self, rng):
        if self.sampler is not None:
            s, c = self.sampler(rng)
            return frozenset(s), c
        u = rng.random()
        acc = 0.0
        for prob, s, c in self.table:
            acc += prob
            if u < acc:
                return s, c
        return self.table[-1][1], self.table[-1][2]


def leak_bits(spec: LeakageSpec, trials: int = None, rng=None):
    """log2 E[c * 2^|S|]; exact for enumerable specs, (estimate, stderr)
    for sampled ones."""
    if spec.table is not None:
        mean = sum(p * c * 2.0 ** len(s) for p, s, c in spec.table)
        return math.log2(mean) if mean > 0 else float("-inf")
    if trials is None or rng is None:
        raise UsageError("sampled spec needs trials and rng")
    vals = []
    for _ in range(trials):
        s, c = spec.draw(rng)
        vals.append(c * 2.0 ** len(s))
    mean = sum(vals) / trials
    var = sum((v - mean) ** 2 for v in vals) / (trials - 1)
    se_mean = math.sqrt(var / trials)
    if mean <= 0:
        return float("-inf"), float("inf")
    return math.log2(mean), se_mean / (mean * math.log(2))


def leakage_game_success(spec: LeakageSpec, trials: int, rng) -> float:
    """Empirical win rate of the guessing game: the adversary sees the
    positions in S, guesses the rest uniformly, and wins if the run survived
    and every guess matches."""
    tau = spec.tau
    full = (1 << tau) - 1
    wins = 0
    for _ in range(trials):
        delta = rng.getrandbits(tau)
        s, c = spec.draw(rng)
        if not c:
            continue
        known = 0
        for i in s:
            known |= 1 << (i - 1)
        guess = rng.getrandbits(tau)
        if (guess ^ delta) & full & ~known == 0:
            wins += 1
    return wins / trials


def _ln_choose(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def bucket_fail_prob(gamma: int, ell: int, bucket: int) -> float:
    """alpha(gamma, ell, B): expected surviving all-leaky-bucket mass when
    gamma planted leaky objects land in ell buckets of B."""
    if ell < 1 or bucket < 1:
        raise UsageError("need at least one bucket of size one")
    if not 0 <= gamma <= bucket * ell:
        raise UsageError("gamma out of range")
    if gamma < bucket:
        return 0.0
    log_a = (-gamma * math.log(2) + _ln_choose(gamma, bucket)
             + math.log(ell) - _ln_choose(bucket * ell, bucket))
    return math.exp(log_a)


def alpha_prime(bucket: int, ell: int) -> float:
    """The gamma-maximized failure bound, attained at gamma = 2B-1."""
    return bucket_fail_prob(2 * bucket - 1, ell, bucket)


def bucket_fail_mc(gamma: int, ell: int, bucket: int, trials: int, rng,
                   return_stderr: bool = False):
    """Monte-Carlo view of alpha: per trial, plant gamma leaky objects among
    B*ell, bucket uniformly, and score (number of all-leaky buckets) * 2^-gamma
    (the factor is the adversary's gamma-coin survival filter). The mean
    estimates alpha exactly."""
    if not 0 <= gamma <= bucket * ell:
        raise UsageError("gamma out of range")
    if trials < 2:
        raise UsageError("need at least two trials")
    gen = np.random.default_rng(rng.getrandbits(64))
    weight = 2.0 ** -gamma
    total = 0.0
    total_sq = 0.0
    done = 0
    step = max(1, min(trials, 200_000))
    while done < trials:
        t = min(step, trials - done)
        # argsort of uniforms = uniform permutation; slots < gamma are leaky
        perm = np.argsort(gen.random((t, bucket * ell)), axis=1)
        leaky = (perm < gamma).reshape(t, ell, bucket)
        counts = leaky.all(axis=2).sum(axis=1)
        vals = counts * weight
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += t
    mean = total / trials
    if not return_stderr:
        return mean
    var = max(0.0, (total_sq - trials * mean * mean) / (trials - 1))
    return mean, math.sqrt(var / trials)


def _span_fail_numpy(psi: int, n: int, trials: int, gen) -> int:
    dtype = np.uint8 if psi <= 8 else np.uint16
    msb = np.zeros(1 << psi, dtype=np.int64)
    for v in range(1, 1 << psi):
        msb[v] = v.bit_length() - 1
    fails = 0
    done = 0
    step = max(1, 4_000_000 // max(1, n))
    while done < trials:
        t = min(step, trials - done)
        vecs = gen.integers(0, 1 << psi, size=(t, n)).astype(dtype)
        basis = np.zeros((t, psi), dtype=dtype)
        rows = np.arange(t)
        for j in range(n):
            v = vecs[:, j].copy()
            for _ in range(psi):
                active = v != 0
                if not active.any():
                    break
                pos = msb[v]
                cur = basis[rows, pos]
                reduce_mask = active & (cur != 0)
                place_mask = active & (cur == 0)
                v = np.where(reduce_mask, v ^ cur, v)
                if place_mask.any():
                    basis[rows[place_mask], pos[place_mask]] = v[place_mask]
                    v = np.where(place_mask, 0, v)
        ranks = (basis != 0).sum(axis=1)
        fails += int((ranks < psi).sum())
        done += t
    return fails


def _span_fail_python(psi: int, n: int, trials: int, rng) -> int:
    fails = 0
    for _ in range(trials):
        basis = [0] * psi
        rank = 0
        for _ in range(n):
            v = rng.getrandbits(psi)
            while v:
                pos = v.bit_length() - 1
                if basis[pos]:
                    v ^= basis[pos]
                else:
                    basis[pos] = v
                    rank += 1
                    break
        if rank < psi:
            fails += 1
    return fails


def span_fail_rate(psi: int, n: int = None, trials: int = 100_000,
                   rng=None) -> float:
    """Fraction of trials in which n uniform psi-bit vectors fail to span;
    the analytic bound is 2^(1-psi) at the default n = ceil(9*psi/2)."""
    if psi < 1:
        raise UsageError("psi must be positive")
    if n is None:
        n = math.ceil(9 * psi / 2)
    if rng is None:
        raise UsageError("pass a seeded rng")
    if psi <= 16:
        gen = np.random.default_rng(rng.getrandbits(64))
        fails = _span_fail_numpy(psi, n, trials, gen)
    else:
        fails = _span_fail_python(psi, n, trials, rng)
    return fails / trials
