"""Panel subset selection for near-orthogonal receive directions.

The selection minimizes ||A^H A - I||_F^2 over the receive-side steering
matrix A that starts with the direct link's arrival vector and grows by one
panel per step.  Adding a unit-norm column a to A changes the objective by
exactly 2*||A^H a||^2, so each greedy step only needs the cross-correlation
energies against the already-chosen columns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import SystemConfig
from .channel import steering_matrix
from .errors import InfeasibleStreamCountError, SearchBudgetError
from .geometry import Deployment


@dataclass(frozen=True)
class SegmentationResult:
    """Outcome of a panel-selection run."""

    selected: tuple[int, ...]           # chosen panel indices, selection order
    excluded_collinear: tuple[int, ...]
    objective: float                     # ||A^H A - I||_F^2 at termination
    op_count: int                        # complex MACs charged to Gram updates

    @property
    def rejected(self) -> tuple[int, ...]:
        return self.excluded_collinear


def collinear_filter(deployment: Deployment, n_tx: int) -> list[int]:
    """Panels whose transmit ray is within one array resolution of the Rx ray.

    The test is on phase-domain departure steps; the bound pi/n_tx is
    inclusive.  Such panels would correlate with the direct link at the Tx
    and are barred from selection.
    """
    direct = deployment.tx_depart_step[0]
    steps = deployment.tx_depart_step[1:]
    return [k for k in range(len(steps)) if abs(direct - steps[k]) <= math.pi / n_tx]


def _candidate_vectors(deployment: Deployment, system: SystemConfig) -> np.ndarray:
    return steering_matrix(system.n_rx, deployment.rx_arrive_step)


def _gram_objective(a: np.ndarray) -> float:
    g = a.conj().T @ a
    return float(np.linalg.norm(g - np.eye(g.shape[1])) ** 2)


def greedy_segment(deployment: Deployment, s: int, system: SystemConfig) -> SegmentationResult:
    """Select s-1 panels, each step minimizing the augmented Gram objective.

    Ties break toward the lowest panel index.  The operation counter charges
    each candidate evaluation the full Gram-product cost (i+1)^2 * n_rx of
    step i, matching the usual accounting for this search.
    """
    vectors = _candidate_vectors(deployment, system)  # col 0: direct link
    excluded = collinear_filter(deployment, system.n_tx)
    candidates = [k for k in range(deployment.ris_count) if k not in excluded]
    if s < 1 or s - 1 > len(candidates):
        raise InfeasibleStreamCountError(
            f"{s} streams need {s - 1} usable panels; {len(candidates)} available"
        )
    chosen: list[int] = []
    basis = vectors[:, [0]]
    objective = 0.0
    ops = 0
    remaining = list(candidates)
    for step in range(s - 1):
        ops += len(remaining) * (step + 2) ** 2 * system.n_rx
        cross = np.abs(basis.conj().T @ vectors[:, [k + 1 for k in remaining]]) ** 2
        scores = cross.sum(axis=0)
        best = int(np.argmin(scores))  # argmin keeps the first (lowest index) tie
        objective += 2.0 * float(scores[best])
        k = remaining.pop(best)
        chosen.append(k)
        basis = np.concatenate([basis, vectors[:, [k + 1]]], axis=1)
    return SegmentationResult(selected=tuple(chosen),
                              excluded_collinear=tuple(excluded),
                              objective=objective, op_count=ops)


def exhaustive_segment(deployment: Deployment, s: int, system: SystemConfig,
                       budget: int = 10 ** 6) -> SegmentationResult:
    """Global minimizer over all s-1 subsets of the usable panels.

    Refuses when the combination count exceeds ``budget`` (use the greedy
    search instead).  Ties break toward the lexicographically smallest
    subset.
    """
    vectors = _candidate_vectors(deployment, system)
    excluded = collinear_filter(deployment, system.n_tx)
    candidates = [k for k in range(deployment.ris_count) if k not in excluded]
    if s < 1 or s - 1 > len(candidates):
        raise InfeasibleStreamCountError(
            f"{s} streams need {s - 1} usable panels; {len(candidates)} available"
        )
    total = math.comb(len(candidates), s - 1)
    if total > budget:
        raise SearchBudgetError(
            f"{total} subsets exceed the budget of {budget}; use greedy_segment"
        )
    best_obj = math.inf
    best_subset: tuple[int, ...] = ()
    ops = 0
    for subset in combinations(candidates, s - 1):
        a = vectors[:, [0] + [k + 1 for k in subset]]
        ops += s * s * system.n_rx
        obj = _gram_objective(a)
        if obj < best_obj:
            best_obj = obj
            best_subset = subset
    return SegmentationResult(selected=best_subset,
                              excluded_collinear=tuple(excluded),
                              objective=best_obj, op_count=ops)


def by_pathloss(deployment: Deployment, s: int, system: SystemConfig) -> SegmentationResult:
    """Alternative selector: the s-1 usable panels with least cascade pathloss.

    Cascade pathloss grows with the product of the two hop distances, so the
    panels with the smallest r_t * r_r win; ties break on the index.
    """
    excluded = collinear_filter(deployment, system.n_tx)
    candidates = [k for k in range(deployment.ris_count) if k not in excluded]
    if s < 1 or s - 1 > len(candidates):
        raise InfeasibleStreamCountError(
            f"{s} streams need {s - 1} usable panels; {len(candidates)} available"
        )
    ranked = sorted(candidates, key=lambda k: (deployment.r_t[k] * deployment.r_r[k], k))
    chosen = tuple(ranked[: s - 1])
    vectors = _candidate_vectors(deployment, system)
    a = vectors[:, [0] + [k + 1 for k in chosen]]
    return SegmentationResult(selected=chosen, excluded_collinear=tuple(excluded),
                              objective=_gram_objective(a), op_count=0)


def complexity_estimate(ris_count: int, s: int, n_rx: int) -> dict[str, float]:
    """Operation-count model of exhaustive vs greedy selection.

    C1 = s^2 * n_rx * K! / ((s-1)! (K-s+1)!)  (exhaustive)
    C2 = n_rx * (4K - 3s) * s^3 / 12          (greedy, dominant term)
    """
    if not 1 <= s - 1 <= ris_count:
        raise InfeasibleStreamCountError("need 1 <= s-1 <= ris_count")
    c1 = s * s * n_rx * math.factorial(ris_count) / (
        math.factorial(s - 1) * math.factorial(ris_count - s + 1)
    )
    c2 = n_rx * (4 * ris_count - 3 * s) * s ** 3 / 12.0
    return {"exhaustive": c1, "greedy": c2, "ratio": c1 / c2}
