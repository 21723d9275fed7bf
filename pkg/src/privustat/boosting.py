"""Median-of-means wrapper: constant-confidence private estimates to 1 - alpha.

The data is split into q disjoint consecutive chunks (q odd), the base
estimator runs independently on each, and the median of the chunk estimates
is returned.  Because the chunks are disjoint, the whole procedure costs the
same privacy budget as a single run (parallel composition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Callable, Optional

import numpy as np

from .dp import PrivacyBudget
from .errors import InsufficientData
from .report import EstimateReport
from .rng import child_seeds
from .ustat import Dataset


@dataclass(frozen=True)
class BoostPlan:
    """Chunking plan for a target failure probability alpha."""

    alpha: float
    chunks: int
    chunk_size: int

    @classmethod
    def for_dataset(cls, n: int, k: int, alpha: float) -> "BoostPlan":
        if not 0 < alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        q = math.ceil(8.0 * math.log(1.0 / alpha))
        if q % 2 == 0:
            q += 1
        q = max(q, 1)
        size = n // q
        if size < k:
            raise InsufficientData(
                f"n = {n} gives chunks of {size} < k = {k} at alpha = {alpha}"
            )
        return cls(alpha=alpha, chunks=q, chunk_size=size)


def median_of_means(
    estimator: Callable[[Dataset, np.random.Generator, Optional[PrivacyBudget]], EstimateReport],
    data: Dataset,
    plan: BoostPlan,
    seed,
    budget: Optional[PrivacyBudget] = None,
) -> EstimateReport:
    """Median of the base estimator over disjoint consecutive chunks.

    Each chunk gets an independently derived seed stream.  Leftover points
    past chunks * chunk_size are dropped.  Chunk runs that return bottom are
    excluded from the median; if a majority are bottom the wrapped result is
    bottom too (a majority of failures leaves the median meaningless).
    """
    q, size = plan.chunks, plan.chunk_size
    if data.n < q * size:
        raise InsufficientData("dataset shorter than the chunk plan")
    rngs = child_seeds(seed, q)
    reports: list[EstimateReport] = []
    if budget is not None:
        with budget.parallel(f"median_of_means(q={q})") as branches:
            for ci in range(q):
                chunk = data.subset(np.arange(ci * size, (ci + 1) * size))
                reports.append(estimator(chunk, rngs[ci], branches.branch()))
    else:
        for ci in range(q):
            chunk = data.subset(np.arange(ci * size, (ci + 1) * size))
            reports.append(estimator(chunk, rngs[ci], None))
    good = [r for r in reports if not r.is_bottom]
    eps = max((r.eps for r in reports), default=0.0)
    if len(good) <= q // 2:
        return EstimateReport(
            estimate=None,
            eps=eps,
            bottom_reason=f"{q - len(good)} of {q} chunk runs returned bottom",
            diagnostics={"chunks": q, "chunk_size": size},
        )
    estimates = [r.estimate for r in good]
    radii = [r.radius for r in good if r.radius is not None]
    return EstimateReport(
        estimate=float(median(estimates)),
        eps=eps,
        radius=max(radii) if len(radii) == len(good) else None,
        noise_scale=None,
        diagnostics={
            "chunks": q,
            "chunk_size": size,
            "chunk_estimates": estimates,
            "bottoms": q - len(good),
        },
    )


def majority_vote(decisions) -> bool:
    """Median of 0/1 decisions: True iff a strict majority is True."""
    votes = [bool(d) for d in decisions]
    return sum(votes) * 2 > len(votes)
