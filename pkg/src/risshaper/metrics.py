"""Channel-quality functionals of the singular spectrum."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

DEFAULT_RANK_TOL = 1e-8


def effective_rank(singular_values: np.ndarray) -> float:
    """Exponential of the Shannon entropy of the normalized spectrum.

    Normalization is by the sum of the singular values themselves (not their
    squares); zero values contribute nothing (x*ln(x) -> 0).
    """
    sv = np.asarray(singular_values, dtype=float)
    if sv.size == 0 or not np.all(np.isfinite(sv)) or np.any(sv < 0):
        raise InvalidInputError("singular values must be finite and nonnegative")
    total = sv.sum()
    if total <= 0.0:
        raise InvalidInputError("all-zero spectrum has no effective rank")
    p = sv[sv > 0] / total
    return float(np.exp(-np.sum(p * np.log(p))))


def truncated_condition(singular_values: np.ndarray, s: int) -> float:
    """Ratio of the largest to the s-th largest singular value."""
    sv = np.sort(np.asarray(singular_values, dtype=float))[::-1]
    if not 1 <= s <= sv.size:
        raise InvalidInputError(f"s={s} outside the spectrum of size {sv.size}")
    if sv[s - 1] <= 0.0:
        return math.inf
    return float(sv[0] / sv[s - 1])


@dataclass(frozen=True)
class SpectrumReport:
    """Full singular spectrum with the derived quality numbers."""

    singular_values: np.ndarray
    rank: int
    erank: float
    rank_tol: float

    def truncated(self, s: int) -> float:
        return truncated_condition(self.singular_values, s)


def spectrum(h: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> SpectrumReport:
    """Singular spectrum of a channel matrix with a relative rank threshold."""
    h = np.asarray(h)
    if not np.all(np.isfinite(h.real)) or not np.all(np.isfinite(h.imag)):
        raise InvalidInputError("channel matrix has non-finite entries")
    sv = np.linalg.svd(h, compute_uv=False)
    top = sv[0] if sv.size else 0.0
    if top <= 0.0:
        raise InvalidInputError("zero matrix has no spectrum report")
    rank = int(np.sum(sv > rank_tol * top))
    return SpectrumReport(singular_values=sv, rank=rank,
                          erank=effective_rank(sv), rank_tol=rank_tol)
