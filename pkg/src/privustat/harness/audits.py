"""Verification oracles: adversarial fixtures, exhaustive smoothness, noise GOF.

These are the checks that justify trusting the mechanisms: a deterministic
dataset pair whose U-statistic gap is combinatorially certified, an exhaustive
neighbor enumeration that validates the smooth sensitivity bound at desk
scale, and goodness-of-fit of both noise samplers against analytic or
quadrature CDFs.  Each audit has a fault-injection mode so tests can confirm
the audit itself is not vacuous.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..dp import laplace_draws, quartic_cdf, quartic_draws
from ..errors import AuditFailure, PreconditionWarning
from ..hajek import HajekParams, hajek_state, summary_from_values
from ..rng import as_generator
from ..ustat import (
    Dataset,
    Kernel,
    all_tuples,
    collision_kernel,
    equality_kernel,
    evaluate_ustat,
    kernel_values,
    local_projections,
)


# ---------------------------------------------------------------------------
# adversarial fixture
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdversarialFixture:
    """Deterministic dataset pair with concentrated projections but a large gap.

    ``base`` has ``ones`` leading entries equal to 1 and distinct values
    elsewhere; ``shifted`` additionally sets the next ceil(1/eps) entries to 1.
    With the all-equal kernel the two U-statistics differ by at least
    (k / 3 n eps) * xi while every projection stays within xi of the
    U-statistic.
    """

    n: int
    k: int
    eps: float
    ones: int
    flips: int
    base: Dataset
    shifted: Dataset
    xi: float
    gap: float
    gap_lower_bound: float


def adversarial_fixture(n: int, k: int, eps: float) -> AdversarialFixture:
    if k < 2:
        raise ValueError("fixture needs k >= 2")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    flips = math.ceil(1.0 / eps)
    ones = math.ceil(k + k ** (1.0 / (2 * k - 2)) * n ** (1.0 - 1.0 / (2 * k - 2)) - 1.0 / eps)
    if ones < 2 * k / eps:
        warnings.warn(
            f"leading block {ones} below 2k/eps = {2 * k / eps:.3g}; gap bound may not hold",
            PreconditionWarning,
            stacklevel=2,
        )
    if ones + flips > n:
        raise ValueError("fixture parameters exceed the dataset size")
    base_vals = np.arange(2, n + 2, dtype=float)
    base_vals[:ones] = 1.0
    shifted_vals = base_vals.copy()
    shifted_vals[ones : ones + flips] = 1.0
    xi = math.comb(ones + flips - 1, k - 1) / math.comb(n - 1, k - 1)
    gap = (math.comb(ones + flips, k) - math.comb(ones, k)) / math.comb(n, k)
    return AdversarialFixture(
        n=n,
        k=k,
        eps=eps,
        ones=ones,
        flips=flips,
        base=Dataset(base_vals),
        shifted=Dataset(shifted_vals),
        xi=xi,
        gap=gap,
        gap_lower_bound=(k / (3.0 * n * eps)) * xi,
    )


def fixture_projection_margins(fix: AdversarialFixture) -> dict:
    """Direct evaluation of the gap and the projection concentration claims."""
    h = equality_kernel(fix.k)
    family = all_tuples(fix.n, fix.k)
    out = {}
    for name, d in (("base", fix.base), ("shifted", fix.shifted)):
        u = evaluate_ustat(h, d, family)
        proj = local_projections(h, d, family)
        out[name] = {
            "ustat": u,
            "max_abs_projection_deviation": float(np.max(np.abs(proj - u))),
        }
    out["direct_gap"] = out["shifted"]["ustat"] - out["base"]["ustat"]
    return out


# ---------------------------------------------------------------------------
# exhaustive smoothness audit
# ---------------------------------------------------------------------------

@dataclass
class SmoothnessReport:
    n: int
    k: int
    eps: float
    xi: float
    c_range: float
    datasets: int
    pairs_checked: int
    worst_dominance_margin: float  # min over D of S(D) - max_nbr |A~ (D) - A~(D')|
    worst_smoothness_margin: float  # min over pairs of e^eps S(D) - S(D')
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def smoothness_audit(
    n: int,
    eps: float,
    xi: float,
    c_range: float = 1.0,
    k: int = 2,
    alphabet=(0, 1),
    kernel: Optional[Kernel] = None,
    fault_scale: float = 1.0,
) -> SmoothnessReport:
    """Check the smooth bound against every adjacent dataset pair.

    Enumerates all |alphabet|^n datasets, computes the reweighted mean and the
    smooth bound for each, and asserts (i) the bound dominates the realized
    change of the reweighted mean to every neighbor, (ii) the bound moves by
    at most e^eps between neighbors.  ``fault_scale`` scales the bound before
    checking; anything below 1 is a deliberate fault.  Raises AuditFailure on
    any violation.
    """
    if n > 12:
        raise ValueError("exhaustive audit is limited to small n")
    if kernel is None:
        kernel = collision_kernel() if k == 2 else equality_kernel(k)
    family = all_tuples(n, k)
    params = HajekParams(eps=eps, c_range=c_range, xi=xi)
    alphabet = tuple(alphabet)

    values_cache: dict[tuple, tuple[float, float]] = {}

    def analyze(config: tuple) -> tuple[float, float]:
        if config not in values_cache:
            values = kernel_values(kernel, Dataset(np.asarray(config, dtype=float)), family)
            state = hajek_state(summary_from_values(values, family), params)
            values_cache[config] = (state.reweighted, fault_scale * state.smooth_bound)
        return values_cache[config]

    report = SmoothnessReport(
        n=n, k=k, eps=eps, xi=xi, c_range=c_range,
        datasets=len(alphabet) ** n, pairs_checked=0,
        worst_dominance_margin=math.inf, worst_smoothness_margin=math.inf,
    )
    grow = math.exp(eps)
    for config in itertools.product(alphabet, repeat=n):
        reweighted, bound = analyze(config)
        for i in range(n):
            for a in alphabet:
                if a == config[i]:
                    continue
                neighbor = config[:i] + (a,) + config[i + 1 :]
                nbr_reweighted, nbr_bound = analyze(neighbor)
                report.pairs_checked += 1
                dom = bound - abs(reweighted - nbr_reweighted)
                smooth = grow * bound - nbr_bound
                report.worst_dominance_margin = min(report.worst_dominance_margin, dom)
                report.worst_smoothness_margin = min(report.worst_smoothness_margin, smooth)
                if dom < 0:
                    report.violations.append(
                        ("dominance", config, neighbor, abs(reweighted - nbr_reweighted), bound)
                    )
                if smooth < 0:
                    report.violations.append(
                        ("smoothness", config, neighbor, nbr_bound, grow * bound)
                    )
    if report.violations:
        kind, d, d2, got, allowed = report.violations[0]
        raise AuditFailure(
            f"{kind} violated for {d} -> {d2}: {got:.6g} vs allowed {allowed:.6g} "
            f"({len(report.violations)} violations total)"
        )
    return report


# ---------------------------------------------------------------------------
# noise goodness of fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GofReport:
    law: str
    draws: int
    ks_gap: float
    threshold: float

    @property
    def ok(self) -> bool:
        return self.ks_gap <= self.threshold


def _ks_gap(samples: np.ndarray, cdf_values: np.ndarray) -> float:
    n = samples.size
    grid = np.arange(n, dtype=float)
    upper = np.max(np.abs(cdf_values - grid / n))
    lower = np.max(np.abs((grid + 1.0) / n - cdf_values))
    return float(max(upper, lower))


def noise_gof(law: str, draws: int, seed, scale: float = 1.0) -> GofReport:
    """Kolmogorov-Smirnov check of a sampler against its reference CDF.

    Laplace is compared to the analytic CDF; the quartic-tail law is compared
    to a quadrature CDF that never uses the sampler's own math.  The pass
    threshold 1.5 * 1.63/sqrt(draws) sits far above the expected gap of a
    correct sampler and far below that of a mis-scaled one.
    """
    if draws < 10**5:
        raise ValueError("goodness-of-fit needs at least 1e5 draws")
    rng = as_generator(seed)
    if law == "laplace":
        samples = np.sort(laplace_draws(scale, draws, rng))
        z = samples / scale
        cdf = np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))
    elif law == "quartic":
        samples = np.sort(quartic_draws(draws, rng) * scale)
        cdf = quartic_cdf(samples / scale)
    else:
        raise ValueError(f"unknown law {law!r}")
    gap = _ks_gap(samples, cdf)
    threshold = 1.5 * 1.63 / math.sqrt(draws)
    return GofReport(law=law, draws=draws, ks_gap=gap, threshold=threshold)
