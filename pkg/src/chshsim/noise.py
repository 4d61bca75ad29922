"""Correlated binary (+1/-1) noise sources driving the two beam polarizations.

Each source emits trial-by-trial sign pairs (s1, s2) with fair marginals
Pr(+1) = Pr(-1) = 1/2 and a configurable pair correlation r = E[s1*s2].
A sign of +1 sets that beam's polarization to vertical (V), -1 to
horizontal (H).

The pair distribution is fully determined by r: the conditional probability
of matching signs is (1+r)/2 and of opposite signs (1-r)/2, symmetric under
exchanging which source is conditioned on.

Streams are deterministic: trials are consumed in fixed-size chunks
(``CHUNK_TRIALS``), chunk c drawing two uniforms per trial from
``PCG64(SeedSequence(seed, spawn_key=(stream_id, c)))``.  Batch counting
and the stateful ``next_trial`` iterator walk the identical stream, and
results never depend on how many worker threads execute the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.random import PCG64, SeedSequence
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from ._kernels import gaussian_pair_counts, rtw_pair_counts
from .errors import (
    CalibrationError,
    EmptyRunError,
    InsufficientDataError,
    InvalidParameterError,
)

# Fixed chunk granularity for batch runs.  Parallel execution dispatches
# whole chunks; merging is integer addition, so the worker count can never
# change a result.
CHUNK_TRIALS = 1 << 17

V = "V"
H = "H"


def validate_correlation(r, name="r"):
    """Return r as a float, raising if it is not in [-1, 1]."""
    r = float(r)
    if math.isnan(r) or not -1.0 <= r <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [-1, 1], got {r!r}")
    return r


def _validate_probability(p, name):
    p = float(p)
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {p!r}")
    return p


@dataclass(frozen=True)
class ConditionalProbabilities:
    """Conditional sign probabilities of source one given source two.

    ``n_same`` is Pr(s1 = x | s2 = x) and ``n_diff`` is Pr(s1 = x | s2 = -x);
    by symmetry these cover all four conditionals, and n_same + n_diff = 1.
    """

    n_same: float
    n_diff: float

    def prob(self, value_one, value_two):
        """Pr(source one = value_one | source two = value_two), values +-1."""
        return self.n_same if value_one == value_two else self.n_diff


def conditional_probs(r) -> ConditionalProbabilities:
    """Conditional probabilities implied by pair correlation r."""
    r = validate_correlation(r)
    return ConditionalProbabilities(n_same=(1.0 + r) / 2.0, n_diff=(1.0 - r) / 2.0)


def corr_from_conditional(n_diff) -> float:
    """Pair correlation implied by the opposite-sign conditional probability."""
    n_diff = _validate_probability(n_diff, "n_diff")
    return 1.0 - 2.0 * n_diff


def polarization_label(sign) -> str:
    """V for +1, H for -1."""
    return V if sign > 0 else H


@dataclass(frozen=True)
class TrialPolarizations:
    """One trial's sign pair and the polarization labels it induces."""

    s1: int
    s2: int
    pol1: str
    pol2: str

    @classmethod
    def from_signs(cls, s1, s2):
        return cls(s1, s2, polarization_label(s1), polarization_label(s2))


class SignPairCounts(NamedTuple):
    """Joint counts of the four (s1, s2) sign combinations."""

    n_pp: int
    n_mm: int
    n_pm: int
    n_mp: int

    @property
    def total(self):
        return self.n_pp + self.n_mm + self.n_pm + self.n_mp

    @property
    def n_same(self):
        return self.n_pp + self.n_mm

    @property
    def n_diff(self):
        return self.n_pm + self.n_mp

    def __add__(self, other):
        return SignPairCounts(
            self.n_pp + other.n_pp,
            self.n_mm + other.n_mm,
            self.n_pm + other.n_pm,
            self.n_mp + other.n_mp,
        )


class _SignPairSource:
    """Common stream machinery for the concrete sign-pair sources.

    Subclasses define the per-trial decision rule three ways, which must
    agree decision-for-decision: a counting kernel (``_count_chunk``), a
    vectorized sign view (``_signs_chunk``) and a scalar rule
    (``_scalar_pair``) used by ``next_trial``.
    """

    def __init__(self, seed, stream_id=0):
        seed = int(seed)
        stream_id = int(stream_id)
        if seed < 0 or seed >= 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")
        if stream_id < 0:
            raise InvalidParameterError("stream_id must be non-negative")
        self.seed = seed
        self.stream_id = stream_id
        self._trial_index = 0
        self._chunk_gen = None

    def _chunk_bitgen(self, chunk_index) -> PCG64:
        ss = SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, chunk_index))
        return PCG64(ss)

    @staticmethod
    def _chunk_layout(n_trials):
        full, rem = divmod(n_trials, CHUNK_TRIALS)
        layout = [(c, CHUNK_TRIALS) for c in range(full)]
        if rem:
            layout.append((full, rem))
        return layout

    def next_trial(self) -> TrialPolarizations:
        """Next trial of the stateful stream (one consumer per instance)."""
        if self._trial_index % CHUNK_TRIALS == 0:
            chunk = self._trial_index // CHUNK_TRIALS
            self._chunk_gen = np.random.Generator(self._chunk_bitgen(chunk))
        u1, u2 = self._chunk_gen.random(2)
        self._trial_index += 1
        s1, s2 = self._scalar_pair(u1, u2)
        return TrialPolarizations.from_signs(s1, s2)

    def take(self, n_trials) -> list[TrialPolarizations]:
        """Consume and return the next n_trials trials."""
        return [self.next_trial() for _ in range(n_trials)]

    def sign_pair_counts(self, n_trials, threads=1) -> SignPairCounts:
        """Joint sign counts over the first n_trials of the stream.

        Pure function of (seed, stream_id, n_trials); independent of any
        ``next_trial`` iteration state and of ``threads``.
        """
        if n_trials < 1:
            raise EmptyRunError("at least one trial is required")
        layout = self._chunk_layout(n_trials)

        def run(chunk_and_size):
            chunk, size = chunk_and_size
            return SignPairCounts(*self._count_chunk(self._chunk_bitgen(chunk), size))

        if threads > 1 and len(layout) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(run, layout))
        else:
            parts = [run(item) for item in layout]
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        return total

    def sign_pairs(self, n_trials) -> tuple[np.ndarray, np.ndarray]:
        """The first n_trials sign pairs as two int8 arrays (analysis aid)."""
        if n_trials < 1:
            raise EmptyRunError("at least one trial is required")
        s1_parts, s2_parts = [], []
        for chunk, size in self._chunk_layout(n_trials):
            s1_plus, s2_plus = self._signs_chunk(self._chunk_bitgen(chunk), size)
            s1_parts.append(np.where(s1_plus, 1, -1).astype(np.int8))
            s2_parts.append(np.where(s2_plus, 1, -1).astype(np.int8))
        return np.concatenate(s1_parts), np.concatenate(s2_parts)

    # subclass hooks -----------------------------------------------------
    def _count_chunk(self, bitgen, size):
        raise NotImplementedError

    def _signs_chunk(self, bitgen, size):
        raise NotImplementedError

    def _scalar_pair(self, u1, u2):
        raise NotImplementedError


class RtwPairSource(_SignPairSource):
    """Pair of random telegraph waves with pair correlation r.

    s1 is a fair +-1 draw; s2 equals s1 with probability (1+r)/2 and -s1
    otherwise.
    """

    def __init__(self, r, seed, stream_id=0):
        super().__init__(seed, stream_id)
        self.r = validate_correlation(r)
        self._n_same = (1.0 + self.r) / 2.0

    def _count_chunk(self, bitgen, size):
        return rtw_pair_counts(bitgen, size, self._n_same)

    def _signs_chunk(self, bitgen, size):
        u = np.random.Generator(bitgen).random(2 * size)
        s1_plus = u[0::2] < 0.5
        s2_plus = s1_plus == (u[1::2] < self._n_same)
        return s1_plus, s2_plus

    def _scalar_pair(self, u1, u2):
        s1 = 1 if u1 < 0.5 else -1
        s2 = s1 if u2 < self._n_same else -s1
        return s1, s2


class GaussianSignSource(_SignPairSource):
    """Signs of a correlated standard bivariate Gaussian draw.

    Demonstrates that the telegraph-wave choice is inessential: any
    zero-mean noise works by mapping positive excursions to V and negative
    ones to H.  A latent draw of exactly zero counts as +1.  The sign
    correlation equals (2/pi)*arcsin(rho), not rho itself; use
    ``calibrate_gaussian`` to hit a target sign correlation.
    """

    def __init__(self, rho, seed, stream_id=0):
        super().__init__(seed, stream_id)
        self.rho = validate_correlation(rho, name="rho")

    def _count_chunk(self, bitgen, size):
        return gaussian_pair_counts(bitgen, size, self.rho)

    def _signs_chunk(self, bitgen, size):
        u = np.random.Generator(bitgen).random(2 * size)
        z1 = ndtri(u[0::2])
        s1_plus = z1 >= 0.0
        rho = self.rho
        if rho == 1.0:
            s2_plus = s1_plus
        elif rho == -1.0:
            s2_plus = z1 <= 0.0
        elif rho == 0.0:
            s2_plus = ndtri(u[1::2]) >= 0.0
        else:
            z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * ndtri(u[1::2])
            s2_plus = z2 >= 0.0
        return s1_plus, s2_plus

    def _scalar_pair(self, u1, u2):
        z1 = float(ndtri(u1))
        s1 = 1 if z1 >= 0.0 else -1
        rho = self.rho
        if rho == 1.0:
            s2 = s1
        elif rho == -1.0:
            s2 = 1 if z1 <= 0.0 else -1
        elif rho == 0.0:
            s2 = 1 if float(ndtri(u2)) >= 0.0 else -1
        else:
            z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * float(ndtri(u2))
            s2 = 1 if z2 >= 0.0 else -1
        return s1, s2


def empirical_correlation(trials: Sequence[TrialPolarizations]):
    """Sample mean of s1*s2 and its standard error over recorded trials."""
    n = len(trials)
    if n < 2:
        raise InsufficientDataError("need at least 2 trials")
    products = np.array([t.s1 * t.s2 for t in trials], dtype=np.float64)
    r_hat = float(products.mean())
    std_err = float(products.std(ddof=1) / math.sqrt(n))
    return r_hat, std_err


def empirical_correlation_from_counts(counts: SignPairCounts):
    """Same statistic as ``empirical_correlation`` from joint sign counts."""
    n = counts.total
    if n < 2:
        raise InsufficientDataError("need at least 2 trials")
    r_hat = (counts.n_same - counts.n_diff) / n
    # products are +-1, so the sample variance reduces to n(1-m^2)/(n-1)
    var = max(n * (1.0 - r_hat * r_hat), 0.0) / (n - 1)
    return r_hat, math.sqrt(var / n)


def sign_correlation(source, n_trials, threads=1):
    """Empirical pair correlation of a source over n_trials, with its SE."""
    return empirical_correlation_from_counts(
        source.sign_pair_counts(n_trials, threads=threads)
    )


def _sign_correlation_quadrature(rho):
    """Sign correlation of a bivariate Gaussian, by orthant-probability quadrature.

    E[sign(z1) sign(z2)] = 4 P(z1 > 0, z2 > 0) - 1 with
    P(z1 > 0, z2 > 0) = int_0^inf phi(z) Phi(rho z / sqrt(1 - rho^2)) dz.
    """
    if abs(rho) == 1.0:
        return math.copysign(1.0, rho)
    scale = rho / math.sqrt(1.0 - rho * rho)

    def integrand(z):
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi) * ndtr(scale * z)

    orthant, _ = quad(integrand, 0.0, np.inf)
    return 4.0 * orthant - 1.0


def calibrate_gaussian(
    target_r,
    tolerance=1e-3,
    *,
    max_iter=200,
    evaluator="quadrature",
    n_trials=1_000_000,
    seed=0,
):
    """Latent Gaussian correlation rho whose sign correlation matches target_r.

    Bisects rho over [-1, 1] against an evaluation of the sign correlation,
    which is monotone in rho.  ``evaluator`` selects the evaluation:
    "quadrature" (deterministic, default) or "mc" (empirical counts from a
    ``GaussianSignSource``; tolerance must then exceed the Monte Carlo noise
    of roughly 5/sqrt(n_trials)).

    Raises ``CalibrationError`` with the best rho found if the tolerance is
    not reached within max_iter iterations.
    """
    target_r = validate_correlation(target_r, name="target_r")
    if not tolerance > 0.0:
        raise InvalidParameterError("tolerance must be positive")
    if evaluator not in ("quadrature", "mc"):
        raise InvalidParameterError(f"unknown evaluator {evaluator!r}")
    if target_r == 0.0:
        return 0.0
    if abs(target_r) == 1.0:
        return math.copysign(1.0, target_r)

    def evaluate(rho, iteration):
        if evaluator == "quadrature":
            return _sign_correlation_quadrature(rho)
        source = GaussianSignSource(rho, seed=seed, stream_id=iteration)
        return sign_correlation(source, n_trials)[0]

    lo, hi = -1.0, 1.0
    best_rho, best_val, best_err = 0.0, 0.0, math.inf
    for iteration in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = evaluate(mid, iteration)
        err = abs(val - target_r)
        if err < best_err:
            best_rho, best_val, best_err = mid, val, err
        if err <= tolerance:
            return mid
        if val < target_r:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    raise CalibrationError(
        f"sign correlation {best_val:.6g} vs target {target_r:.6g} after "
        f"{max_iter} iterations (tolerance {tolerance:.3g})",
        best_rho=best_rho,
        achieved=best_val,
    )
