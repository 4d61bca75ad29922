"""Classical polarized fields, detector projections, and coincidence intensities.

A fully polarized unit-amplitude wave viewed at angle theta decomposes into
vertical and horizontal components (cos theta, sin theta).  For coincident
measurement at two detectors, the correlation field is the dot product of
the two detected unit fields, and the coincidence intensity is half its
square: (1/2)cos^2(theta_A - theta_B).

Per trial, the effective angle at each arm is the detector orientation minus
the polarization angle of that beam (0 deg for V, 90 deg for H).  Matching
polarizations therefore give intensity (1/2)cos^2(theta_A - theta_B) and
opposite polarizations (1/2)sin^2(theta_A - theta_B).

Deliberately out of scope: a detector model in which each arm applies a
Malus-law attenuation to its own beam independently and the two intensities
multiply.  That product depends on each absolute angle separately, not only
on theta_A - theta_B, and so cannot reproduce the coincidence law above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .noise import H, V, TrialPolarizations

LABELS = ("VV", "HH", "VH", "HV")

# polarization angle with respect to laboratory coordinates
POLARIZATION_ANGLE = {V: 0.0, H: 90.0}


def normalize_angle(theta_deg) -> float:
    """Map an angle in degrees to [0, 360)."""
    return float(theta_deg) % 360.0


class FieldVector(NamedTuple):
    """Unit field amplitude split into vertical and horizontal components."""

    e_v: float
    e_h: float


def field(theta_deg) -> FieldVector:
    """Detected unit field at orientation theta (degrees)."""
    t = math.radians(theta_deg)
    return FieldVector(math.cos(t), math.sin(t))


def correlation_field(theta_a, theta_b) -> float:
    """Dot product of the two detected unit fields; equals cos(theta_a - theta_b)."""
    fa = field(theta_a)
    fb = field(theta_b)
    return fa.e_v * fb.e_v + fa.e_h * fb.e_h


def coincidence_intensity(theta_a, theta_b) -> float:
    """Half the squared correlation field, in [0, 1/2].

    The dot product can exceed 1 by one ulp at aligned angles; the result
    is clamped so the documented range holds.
    """
    p = correlation_field(theta_a, theta_b)
    return min(0.5 * p * p, 0.5)


def pair_label_intensities(theta_a, theta_b) -> dict[str, float]:
    """Per-trial coincidence intensity for each outcome label.

    The canonical intensity table for a detector pairing: every code path
    that scores trials at these angles (streaming or batched) must read
    from it so that accumulated sums agree exactly.
    """
    return {
        p1 + p2: coincidence_intensity(
            theta_a - POLARIZATION_ANGLE[p1], theta_b - POLARIZATION_ANGLE[p2]
        )
        for p1 in (V, H)
        for p2 in (V, H)
    }


@dataclass(frozen=True)
class TrialOutcome:
    """Outcome label (VV/HH/VH/HV) and coincidence intensity of one trial."""

    label: str
    intensity: float


def trial_outcome(trial: TrialPolarizations, theta_a, theta_b) -> TrialOutcome:
    """Coincidence outcome of one trial at detector orientations (theta_a, theta_b)."""
    label = trial.pol1 + trial.pol2
    return TrialOutcome(label, pair_label_intensities(theta_a, theta_b)[label])
