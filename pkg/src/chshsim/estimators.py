"""Coincidence probabilities, the correlation estimator E, and the CHSH quantity.

Analytic forms (pair correlation r, relative detector angle D):

    P(V,V) = P(H,H) = (1/2)cos^2(D) * (1+r)/2
    P(V,H) = P(H,V) = (1/2)sin^2(D) * (1-r)/2
    E(D)   = P(V,V) + P(H,H) - P(V,H) - P(H,V) = (1/2)cos(2D) + r/2

and the CHSH combination over four detector pairings

    S = |E(A,B) - E(A,D)| + |E(C,B) + E(C,D)|,  classical bound S <= 2.

At the standard angles (0, 22.5, 45, 67.5) this gives
S = sqrt(2)/2 + |sqrt(2)/2 + r|, i.e. S = sqrt(2) + r for r >= -1/sqrt(2),
so a violation needs r > 2 - sqrt(2) = 0.5858.  A threshold figure of 0.656
is sometimes quoted for this configuration; it is inconsistent with
S = sqrt(2) + r and is surfaced by the CLI only as a documented discrepancy.

Monte Carlo estimators mirror the analytic forms: the empirical P's are
2/N times the per-label intensity sums, making E the sample mean of the
per-trial score u = cos^2(D) for matching polarizations and -sin^2(D) for
opposite ones, an unbiased estimator of E(D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import EmptyRunError, InsufficientDataError, InvalidParameterError
from .noise import GaussianSignSource, RtwPairSource, calibrate_gaussian, validate_correlation
from .polarization import LABELS, normalize_angle, pair_label_intensities

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
# Often-quoted violation threshold for the standard angles; solving
# sqrt(2) + r = 2 actually gives 2 - sqrt(2) = 0.58579.  Reported for
# comparison only.
QUOTED_THRESHOLD_FIGURE = 0.656


@dataclass(frozen=True)
class AngleSet:
    """The four detector orientations (degrees) of a CHSH run."""

    theta_a: float
    theta_b: float
    theta_c: float
    theta_d: float

    def __post_init__(self):
        for name in ("theta_a", "theta_b", "theta_c", "theta_d"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, normalize_angle(value))

    def as_tuple(self):
        return (self.theta_a, self.theta_b, self.theta_c, self.theta_d)

    def pairings(self):
        """The four (name, theta_i, theta_j) detector pairings, in S order."""
        return (
            ("AB", self.theta_a, self.theta_b),
            ("AD", self.theta_a, self.theta_d),
            ("CB", self.theta_c, self.theta_b),
            ("CD", self.theta_c, self.theta_d),
        )

    def rotated(self, offset):
        """The same set with a common offset added to every angle."""
        return AngleSet(*(t + offset for t in self.as_tuple()))


STANDARD_ANGLES = AngleSet(0.0, 22.5, 45.0, 67.5)


@dataclass(frozen=True)
class PairStatistics:
    """Accumulated per-outcome counts for one detector pairing.

    Because the per-trial intensity depends only on the outcome label once
    the pairing is fixed, the four label counts are the complete sufficient
    record; intensity sums and score moments are derived from them.
    """

    theta_i: float
    theta_j: float
    n_vv: int
    n_hh: int
    n_vh: int
    n_hv: int

    @classmethod
    def from_sign_counts(cls, theta_i, theta_j, counts):
        """Map joint sign counts (s1, s2) onto outcome labels."""
        return cls(
            theta_i=theta_i,
            theta_j=theta_j,
            n_vv=counts.n_pp,
            n_hh=counts.n_mm,
            n_vh=counts.n_pm,
            n_hv=counts.n_mp,
        )

    @property
    def trial_counts(self):
        return {"VV": self.n_vv, "HH": self.n_hh, "VH": self.n_vh, "HV": self.n_hv}

    @property
    def total_trials(self):
        return self.n_vv + self.n_hh + self.n_vh + self.n_hv

    @property
    def label_intensities(self):
        return pair_label_intensities(self.theta_i, self.theta_j)

    @property
    def intensity_sums(self):
        intensities = self.label_intensities
        counts = self.trial_counts
        return {label: counts[label] * intensities[label] for label in LABELS}

    def label_scores(self):
        """Per-trial score by label: +2*intensity if matching, -2*intensity if not."""
        intensities = self.label_intensities
        return {
            "VV": 2.0 * intensities["VV"],
            "HH": 2.0 * intensities["HH"],
            "VH": -2.0 * intensities["VH"],
            "HV": -2.0 * intensities["HV"],
        }

    @property
    def sum_scores(self):
        scores = self.label_scores()
        counts = self.trial_counts
        return sum(counts[label] * scores[label] for label in LABELS)

    @property
    def sum_sq_scores(self):
        scores = self.label_scores()
        counts = self.trial_counts
        return sum(counts[label] * scores[label] ** 2 for label in LABELS)

    def __add__(self, other):
        if (self.theta_i, self.theta_j) != (other.theta_i, other.theta_j):
            raise InvalidParameterError("cannot merge statistics from different pairings")
        return PairStatistics(
            self.theta_i,
            self.theta_j,
            self.n_vv + other.n_vv,
            self.n_hh + other.n_hh,
            self.n_vh + other.n_vh,
            self.n_hv + other.n_hv,
        )


@dataclass(frozen=True)
class ChshResult:
    """The four estimators, the CHSH value S, and the violation verdict."""

    e_ab: float
    e_ad: float
    e_cb: float
    e_cd: float
    s_value: float
    std_err: float
    violated: bool
    mode: str  # "analytic" or "monte_carlo"
    e_std_errs: tuple = (0.0, 0.0, 0.0, 0.0)
    pair_stats: Optional[tuple] = None

    @classmethod
    def build(cls, estimators, mode, e_std_errs=(0.0, 0.0, 0.0, 0.0), pair_stats=None):
        e_ab, e_ad, e_cb, e_cd = estimators
        s_value = abs(e_ab - e_ad) + abs(e_cb + e_cd)
        # conservative propagation: root-sum-square of the four estimator
        # errors, ignoring the absolute-value kink near sign changes
        std_err = math.sqrt(sum(se * se for se in e_std_errs))
        return cls(
            e_ab=e_ab,
            e_ad=e_ad,
            e_cb=e_cb,
            e_cd=e_cd,
            s_value=s_value,
            std_err=std_err,
            violated=s_value > CLASSICAL_BOUND,
            mode=mode,
            e_std_errs=tuple(e_std_errs),
            pair_stats=pair_stats,
        )


# --- analytic route ------------------------------------------------------


def analytic_p_aligned(delta_deg, r) -> float:
    """P(V,V) = P(H,H) at relative angle delta for pair correlation r."""
    r = validate_correlation(r)
    c = math.cos(math.radians(delta_deg))
    return 0.5 * c * c * (1.0 + r) / 2.0


def analytic_p_mismatched(delta_deg, r) -> float:
    """P(V,H) = P(H,V) at relative angle delta for pair correlation r."""
    r = validate_correlation(r)
    s = math.sin(math.radians(delta_deg))
    return 0.5 * s * s * (1.0 - r) / 2.0


def analytic_e(delta_deg, r) -> float:
    """Correlation estimator E = (1/2)cos(2*delta) + r/2."""
    r = validate_correlation(r)
    return 0.5 * math.cos(math.radians(2.0 * delta_deg)) + 0.5 * r


def analytic_chsh(angles: AngleSet, r) -> ChshResult:
    """Exact CHSH evaluation at the given angle set and pair correlation."""
    r = validate_correlation(r)
    estimators = tuple(
        analytic_e(theta_i - theta_j, r) for _, theta_i, theta_j in angles.pairings()
    )
    return ChshResult.build(estimators, mode="analytic")


# --- Monte Carlo route ----------------------------------------------------


def mc_pair_run(source, theta_i, theta_j, n_trials, threads=1) -> PairStatistics:
    """Stream n_trials of a sign-pair source through one detector pairing."""
    if n_trials < 1:
        raise EmptyRunError("n_trials must be at least 1")
    counts = source.sign_pair_counts(n_trials, threads=threads)
    return PairStatistics.from_sign_counts(theta_i, theta_j, counts)


def estimate_p(stats: PairStatistics):
    """Empirical (P_vv, P_hh, P_vh, P_hv): 2/N times the intensity sums.

    The factor 2 makes the expectations match the analytic forms: the sums
    P_vv + P_hh and P_vh + P_hv converge to cos^2(D)(1+r)/2 and
    sin^2(D)(1-r)/2 respectively.
    """
    n = stats.total_trials
    if n < 1:
        raise EmptyRunError("statistics contain no trials")
    sums = stats.intensity_sums
    return tuple(2.0 * sums[label] / n for label in LABELS)


def mc_e(stats: PairStatistics):
    """Empirical estimator e = P_vv + P_hh - P_vh - P_hv and its standard error.

    Equivalently the sample mean of the per-trial score u (cos^2 D for
    matching polarizations, -sin^2 D for opposite), with the standard error
    of that mean.  The variance is accumulated around the mean (the score
    takes only four values), so degenerate runs report a zero error instead
    of cancellation noise.
    """
    n = stats.total_trials
    if n < 2:
        raise InsufficientDataError("need at least 2 trials")
    scores = stats.label_scores()
    counts = stats.trial_counts
    mean = sum(counts[label] * scores[label] for label in LABELS) / n
    m2 = sum(counts[label] * (scores[label] - mean) ** 2 for label in LABELS)
    var = m2 / (n - 1)
    return mean, math.sqrt(var / n)


def make_source(kind, r, seed, stream_id, rho=None, calibration_tolerance=1e-3):
    """Construct a sign-pair source for a Monte Carlo run.

    kind "rtw" uses the telegraph-wave pair at correlation r.  kind
    "gaussian" uses latent-Gaussian signs with the given rho, or, when rho
    is None, a rho calibrated so the sign correlation matches r.
    """
    if kind == "rtw":
        return RtwPairSource(r, seed=seed, stream_id=stream_id)
    if kind == "gaussian":
        if rho is None:
            rho = calibrate_gaussian(r, tolerance=calibration_tolerance)
        return GaussianSignSource(rho, seed=seed, stream_id=stream_id)
    raise InvalidParameterError(f"unknown source kind {kind!r}")


def mc_chsh(
    r,
    angles: AngleSet,
    n_trials_per_pair,
    seed,
    *,
    threads=1,
    source="rtw",
    rho=None,
    stream_base=0,
) -> ChshResult:
    """Monte Carlo CHSH run: four independent trial streams, one per pairing.

    Pairing k draws from stream_id = stream_base + k under the given seed,
    mirroring an experiment that collects each detector setting separately.
    The standard error of S is the root-sum-square of the four estimator
    errors.
    """
    r = validate_correlation(r)
    if n_trials_per_pair < 1:
        raise EmptyRunError("n_trials_per_pair must be at least 1")
    if n_trials_per_pair < 2:
        raise InsufficientDataError("n_trials_per_pair must be at least 2")
    if rho is not None:
        rho = validate_correlation(rho, name="rho")
    if source == "gaussian" and rho is None:
        rho = calibrate_gaussian(r)

    estimators, std_errs, pair_stats = [], [], []
    for k, (_, theta_i, theta_j) in enumerate(angles.pairings()):
        src = make_source(source, r, seed, stream_base + k, rho=rho)
        stats = mc_pair_run(src, theta_i, theta_j, n_trials_per_pair, threads=threads)
        e, se = mc_e(stats)
        estimators.append(e)
        std_errs.append(se)
        pair_stats.append(stats)
    return ChshResult.build(
        tuple(estimators),
        mode="monte_carlo",
        e_std_errs=tuple(std_errs),
        pair_stats=tuple(pair_stats),
    )


# --- violation threshold ---------------------------------------------------


def violation_threshold(angles: AngleSet, *, tolerance=1e-10, max_iter=200):
    """Smallest r with S(r) = 2 as the correlation grows, or None.

    For fixed angles S(r) = |e_ab - e_ad| + |e_cb + e_cd| is piecewise
    linear in r: the first term is independent of r (the r/2 offsets
    cancel) and the second is |const + r|, so S is V-shaped with its
    minimum (at most 1) at the kink r = -const.  The scan follows the
    increasing branch [kink, 1], i.e. the onset of violation with growing
    correlation; bisection locates the root to |S - 2| <= tolerance, with
    r = 1 returned when S just reaches 2 there.  Returns None when S stays
    below 2 as r -> 1; violations confined to anti-correlations are the
    angle optimizer's domain, not this solver's.
    """

    def s_of(r):
        return analytic_chsh(angles, r).s_value

    at_zero = analytic_chsh(angles, 0.0)
    kink = min(1.0, max(-1.0, -(at_zero.e_cb + at_zero.e_cd)))

    s_top = s_of(1.0)
    if abs(s_top - CLASSICAL_BOUND) <= tolerance:
        return 1.0
    if s_top < CLASSICAL_BOUND:
        return None

    lo, hi = kink, 1.0
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        s_mid = s_of(mid)
        if abs(s_mid - CLASSICAL_BOUND) <= tolerance:
            return mid
        if s_mid > CLASSICAL_BOUND:
            hi = mid
        else:
            lo = mid
    return mid
