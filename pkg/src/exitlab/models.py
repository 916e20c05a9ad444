"""Single-jump exit models built on the solver's own large-jump stream.

The model scans the stream in order and declares success at the first
jump whose idealized application from the stable state leaves the domain.
Its arrival time is exactly exponential with the characteristic exit rate
and its index exactly geometric with rate lambda/beta, for every epsilon;
these laws are exact, not asymptotic, so the statistical tests on them are
bug detectors rather than approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficient import CoefficientSpec, apply_c
from .noise import LargeJumpStream
from .spectral import Domain, HilbertVector, as_coeffs


@dataclass(frozen=True)
class ModelOutcome:
    """First successful jump: index K, arrival time and its rate-normalized value."""

    jump_index: int
    arrival_time: float
    scaled_time: float


def build_model(stream: LargeJumpStream, eps: float, phi,
                coefficient: CoefficientSpec, domain: Domain,
                rate: float, max_scan: int = 10_000_000) -> ModelOutcome:
    """Scan the stream for the first jump sending phi outside the domain.

    The stream extends lazily, so the model can look past whatever a
    coupled trial consumed while staying on the same probability space.
    """
    if rate <= 0:
        raise ValueError("success probability is zero: the exit rate vanishes")
    phi_c = np.asarray(as_coeffs(phi), dtype=float)
    k = 1
    while k <= max_scan:
        mark = stream.mark(k)
        landed = phi_c + apply_c(coefficient, phi_c, eps * mark)
        if not domain.contains(landed, level=1):
            return ModelOutcome(jump_index=k, arrival_time=stream.arrival(k),
                                scaled_time=rate * stream.arrival(k))
        k += 1
    raise RuntimeError(f"no successful jump within {max_scan} stream events")


def model_locus(stream: LargeJumpStream, outcome: ModelOutcome, eps: float,
                phi, coefficient: CoefficientSpec) -> HilbertVector:
    """Idealized exit locus phi + G(phi, eps * W_K)."""
    phi_c = np.asarray(as_coeffs(phi), dtype=float)
    mark = stream.mark(outcome.jump_index)
    return HilbertVector(phi_c + apply_c(coefficient, phi_c, eps * mark))
