"""Chinese-restaurant and intensity-weighted cluster assignment priors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CrpParams:
    concentration: float = 1.0

    def __post_init__(self):
        if not self.concentration > 0:
            raise ValueError("CRP concentration must be positive")


def crp_probabilities(table_counts: Sequence[int], params: CrpParams) -> np.ndarray:
    """Seating probabilities for the next customer; the last entry is a new table."""
    counts = np.asarray(table_counts, dtype=float)
    if np.any(counts <= 0):
        raise ValueError("table counts must be positive")
    weights = np.append(counts, params.concentration)
    return weights / (params.concentration + counts.sum())


def dhp_assignment_prior(intensities: Sequence[float], base_intensity: float) -> np.ndarray:
    """Assignment prior where cluster intensities replace table counts.

    Entry ``h`` is ``lambda_h / lambda`` and the last entry, the new-cluster
    option, is ``base_intensity / lambda`` with ``lambda`` the total.
    """
    lam = np.asarray(intensities, dtype=float)
    if np.any(lam < 0):
        raise ValueError("cluster intensities must be non-negative")
    if not base_intensity > 0:
        raise ValueError("base intensity must be positive")
    weights = np.append(lam, base_intensity)
    return weights / weights.sum()


def sample_crp(table_counts: Sequence[int], params: CrpParams, rng: np.random.Generator, size=None):
    """Draw seating choices for the next customer."""
    p = crp_probabilities(table_counts, params)
    return rng.choice(p.size, size=size, p=p)
