"""Kernels, subset families, and the U-statistic variance calculus.

A U-statistic averages a symmetric kernel h of degree k over k-subsets of the
data.  The "all-tuples" family enumerates every subset; the "subsampled"
family draws M subsets uniformly with replacement (an incomplete U-statistic).
Per-index incidence counts of a family drive both the noise calibration of the
private estimators and the regularity check used by the reweighting algorithm.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    CombinatorialOverflow,
    DegeneracyMismatch,
    EmptyIncidence,
    NegativeDeltaWarning,
)
from .rng import as_generator

DEFAULT_ENUMERATION_CAP = 10**8


# ---------------------------------------------------------------------------
# kernels and datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bounded:
    """Kernel tail descriptor: sup h - inf h <= range_width."""

    range_width: float


@dataclass(frozen=True)
class SubGaussian:
    """Kernel tail descriptor: variance proxy of the kernel value distribution."""

    tau: float


@dataclass(frozen=True)
class Kernel:
    """A symmetric k-ary real-valued function.

    ``fn`` is evaluated in batch: it receives an (M, k) array whose rows are
    the k-tuples of data values, and returns an (M,) array.  Symmetry in the
    k arguments is the caller's responsibility (and is property-tested).
    """

    degree: int
    fn: Callable[[np.ndarray], np.ndarray]
    tail: Bounded | SubGaussian
    name: str = "kernel"

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("kernel degree must be >= 1")

    def evaluate(self, tuples: np.ndarray) -> np.ndarray:
        tuples = np.asarray(tuples)
        if tuples.ndim == 1:
            tuples = tuples.reshape(1, -1)
        if tuples.shape[1] != self.degree:
            raise ValueError(f"expected {self.degree}-tuples, got shape {tuples.shape}")
        return np.asarray(self.fn(tuples), dtype=float).reshape(tuples.shape[0])

    def evaluate_one(self, *args) -> float:
        return float(self.evaluate(np.asarray(args).reshape(1, -1))[0])


def constant_kernel(value: float, degree: int = 1) -> Kernel:
    return Kernel(degree, lambda t: np.full(t.shape[0], float(value)), Bounded(0.0), name=f"const({value})")


def identity_kernel() -> Kernel:
    """Degree-1 kernel h(x) = x (sample mean)."""
    return Kernel(1, lambda t: t[:, 0].astype(float), SubGaussian(1.0), name="identity")


def mean_kernel(degree: int, tau: float = 1.0) -> Kernel:
    """h(x_1..x_k) = average of the arguments."""
    return Kernel(degree, lambda t: t.mean(axis=1), SubGaussian(tau), name=f"mean{degree}")


def collision_kernel() -> Kernel:
    """Pair kernel 1(x = y) used by the uniformity test."""
    return Kernel(2, lambda t: (t[:, 0] == t[:, 1]).astype(float), Bounded(1.0), name="collision")


def equality_kernel(degree: int) -> Kernel:
    """k-ary kernel 1(x_1 = ... = x_k)."""

    def fn(t):
        out = np.ones(t.shape[0], dtype=bool)
        for j in range(1, t.shape[1]):
            out &= t[:, j] == t[:, 0]
        return out.astype(float)

    return Kernel(degree, fn, Bounded(1.0), name=f"equal{degree}")


def clipped_kernel(base: Kernel, lo: float, hi: float, name: Optional[str] = None) -> Kernel:
    """Project the values of ``base`` onto [lo, hi]."""
    if hi < lo:
        raise ValueError("empty clipping interval")
    return Kernel(
        base.degree,
        lambda t: np.clip(base.fn(t), lo, hi),
        Bounded(hi - lo),
        name=name or f"clip({base.name})",
    )


@dataclass(frozen=True)
class Dataset:
    """An ordered sequence of n opaque data values (stored as a 1-D array)."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points))
        if self.points.ndim != 1:
            raise ValueError("dataset must be one-dimensional")

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    def subset(self, indices) -> "Dataset":
        return Dataset(self.points[np.asarray(indices)])


# ---------------------------------------------------------------------------
# subset families
# ---------------------------------------------------------------------------

class RegularityCheck(NamedTuple):
    ok: bool
    reason: Optional[str]


@dataclass
class SubsetFamily:
    """An indexed collection of k-subsets of range(n), with incidence counts.

    ``subsets`` has shape (M, k) with 0-based, sorted, distinct indices per
    row (rows may repeat).  ``counts`` holds M_i, the number of subsets
    containing each index.  Pairwise counts M_ij are exact rationals for the
    all-tuples family and are counted explicitly otherwise.
    """

    n: int
    k: int
    subsets: np.ndarray
    kind: str  # "all_tuples" | "subsampled" | "chunks" | "explicit"
    seed: Optional[int] = None
    counts: np.ndarray = field(init=False)
    _pair_counts: Optional[dict] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.subsets = np.asarray(self.subsets, dtype=np.int64)
        if self.subsets.ndim != 2 or self.subsets.shape[1] != self.k:
            raise ValueError("subsets must be an (M, k) array")
        if self.subsets.size and (self.subsets.min() < 0 or self.subsets.max() >= self.n):
            raise ValueError("subset indices out of range")
        self.counts = np.bincount(self.subsets.ravel(), minlength=self.n)

    @property
    def size(self) -> int:
        return int(self.subsets.shape[0])

    def pair_counts(self) -> dict:
        """M_ij for each unordered pair that co-occurs in some subset."""
        if self._pair_counts is None:
            counts: dict = {}
            for row in self.subsets:
                for a, b in itertools.combinations(row.tolist(), 2):
                    key = (a, b) if a < b else (b, a)
                    counts[key] = counts.get(key, 0) + 1
            self._pair_counts = counts
        return self._pair_counts

    def dependence_fraction(self) -> float:
        """max_i M_i / M, the maximal fraction of subsets sharing one index."""
        if self.kind == "all_tuples":
            return float(Fraction(self.k, self.n))
        return int(self.counts.max()) / self.size

    def check_regularity(self) -> RegularityCheck:
        """Incidence conditions required by the reweighting algorithm.

        ok iff M_i > 0 for all i, M_i/M <= 3k/n for all i, and
        M_ij/M_i <= 3k/n for all pairs i != j.  Ties pass.  Comparisons are
        done by integer cross-multiplication, so boundary cases are exact.
        """
        n, k, m = self.n, self.k, self.size
        if self.kind == "all_tuples":
            # M_i/M = k/n and M_ij/M_i = (k-1)/(n-1) <= 3k/n hold identically.
            return RegularityCheck(True, None)
        if int(self.counts.min()) == 0:
            i = int(np.argmin(self.counts))
            return RegularityCheck(False, f"index {i} appears in no subset")
        too_big = np.nonzero(self.counts * n > 3 * k * m)[0]
        if too_big.size:
            i = int(too_big[0])
            return RegularityCheck(False, f"M_{i}/M = {int(self.counts[i])}/{m} exceeds 3k/n")
        for (a, b), mij in self.pair_counts().items():
            for i, j in ((a, b), (b, a)):
                if mij * n > 3 * k * int(self.counts[i]):
                    return RegularityCheck(
                        False,
                        f"M_{i}{j}/M_{i} = {mij}/{int(self.counts[i])} exceeds 3k/n",
                    )
        return RegularityCheck(True, None)


def _check_enumeration_cap(n: int, k: int, cap: int) -> int:
    total = math.comb(n, k)
    if total > cap:
        raise CombinatorialOverflow(
            f"C({n},{k}) = {total} exceeds the cap {cap}; use subsample_family instead"
        )
    return total


def all_tuples(n: int, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> SubsetFamily:
    """Every k-subset of range(n), in lexicographic order."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    total = _check_enumeration_cap(n, k, cap)
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.int64,
        count=total * k,
    )
    return SubsetFamily(n, k, flat.reshape(total, k), kind="all_tuples")


def subsample_family(n: int, k: int, size: int, seed) -> SubsetFamily:
    """``size`` subsets drawn uniformly with replacement from all k-subsets."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if size < 1:
        raise ValueError("need at least one subset")
    rng = as_generator(seed)
    # The k smallest of n i.i.d. uniforms mark a uniformly random k-subset.
    if size * n <= 5 * 10**7:
        noise = rng.random((size, n))
        picks = np.argpartition(noise, k - 1, axis=1)[:, :k].astype(np.int64)
    else:
        picks = np.empty((size, k), dtype=np.int64)
        for row in range(size):
            picks[row] = rng.choice(n, size=k, replace=False)
    picks.sort(axis=1)
    stored_seed = None if isinstance(seed, np.random.Generator) else seed
    return SubsetFamily(n, k, picks, kind="subsampled", seed=stored_seed)


def disjoint_chunks(n: int, k: int) -> SubsetFamily:
    """floor(n/k) consecutive disjoint k-blocks; remainder indices dropped."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    m = n // k
    rows = np.arange(m * k, dtype=np.int64).reshape(m, k)
    return SubsetFamily(n, k, rows, kind="chunks")


def explicit_family(n: int, k: int, subsets) -> SubsetFamily:
    """Wrap an explicit list of subsets (test fixtures, file input)."""
    return SubsetFamily(n, k, np.asarray(subsets, dtype=np.int64), kind="explicit")


def check_family_regularity(family: SubsetFamily) -> RegularityCheck:
    return family.check_regularity()


def write_family(family: SubsetFamily, path) -> None:
    """One subset per line, space-separated 1-based indices."""
    with open(path, "w") as fh:
        for row in family.subsets:
            fh.write(" ".join(str(int(i) + 1) for i in row) + "\n")


def read_family(path, n: int) -> SubsetFamily:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(tok) - 1 for tok in line.split()])
    if not rows:
        raise ValueError(f"no subsets in {path}")
    k = len(rows[0])
    return explicit_family(n, k, rows)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def kernel_values(h: Kernel, data: Dataset, family: SubsetFamily) -> np.ndarray:
    """h(X_S) for every subset S of the family, as an (M,) array."""
    if family.n != data.n:
        raise ValueError("family ambient size does not match dataset size")
    if family.k != h.degree:
        raise ValueError("family subset size does not match kernel degree")
    return h.evaluate(data.points[family.subsets])


def evaluate_ustat(h: Kernel, data: Dataset, family: SubsetFamily) -> float:
    """(1/M) sum_S h(X_S): the complete or incomplete U-statistic."""
    return float(kernel_values(h, data, family).mean())


def local_projections(h: Kernel, data: Dataset, family: SubsetFamily) -> np.ndarray:
    """Per-index means over the subsets containing each index.

    Entry i is (1/M_i) sum_{S : i in S} h(X_S).  Indices with M_i = 0 get NaN.
    """
    values = kernel_values(h, data, family)
    return projections_from_values(values, family)


def projections_from_values(values: np.ndarray, family: SubsetFamily) -> np.ndarray:
    k = family.k
    sums = np.bincount(
        family.subsets.ravel(),
        weights=np.repeat(values, k),
        minlength=family.n,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        out = sums / family.counts
    return out


def local_projection(h: Kernel, data: Dataset, family: SubsetFamily, i: int) -> float:
    """Mean of h over the subsets containing index i."""
    if family.counts[i] == 0:
        raise EmptyIncidence(f"index {i} appears in no subset")
    mask = (family.subsets == i).any(axis=1)
    return float(kernel_values(h, data, family)[mask].mean())


# ---------------------------------------------------------------------------
# variance calculus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarianceProfile:
    """Conditional variances (index c = 1..k) of a degree-k kernel."""

    zetas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "zetas", np.asarray(self.zetas, dtype=float))
        if self.zetas.ndim != 1 or self.zetas.size < 1:
            raise ValueError("need at least one conditional variance")
        if not np.all(np.isfinite(self.zetas)):
            raise ValueError("conditional variances must be finite")

    @property
    def k(self) -> int:
        return int(self.zetas.size)

    def deltas(self) -> np.ndarray:
        return hoeffding_deltas(self.zetas)

    def chain_violation(self) -> float:
        """Largest violation of zeta_c / c <= zeta_d / d (0 when the chain holds)."""
        ratios = self.zetas / np.arange(1, self.k + 1)
        worst = 0.0
        for c in range(self.k - 1):
            worst = max(worst, float(np.max(ratios[c] - ratios[c + 1 :], initial=0.0)))
        return worst


def hoeffding_deltas(zetas) -> np.ndarray:
    """Component variances of the orthogonal decomposition, from the zetas.

    delta_c^2 = sum_{i<=c} (-1)^(c-i) C(c,i) zeta_i.  Warns (diagnostic only)
    if an empirical profile yields a materially negative component.
    """
    zetas = np.asarray(zetas, dtype=float)
    k = zetas.size
    deltas = np.empty(k)
    for c in range(1, k + 1):
        deltas[c - 1] = sum(
            (-1) ** (c - i) * math.comb(c, i) * zetas[i - 1] for i in range(1, c + 1)
        )
    scale = max(1.0, float(np.max(np.abs(zetas), initial=0.0)))
    if np.any(deltas < -1e-9 * scale):
        warnings.warn(
            "negative Hoeffding component variance from empirical inputs",
            NegativeDeltaWarning,
            stacklevel=2,
        )
    return deltas


def zetas_from_deltas(deltas) -> np.ndarray:
    """Inverse transform: zeta_c = sum_{i<=c} C(c,i) delta_i^2."""
    deltas = np.asarray(deltas, dtype=float)
    k = deltas.size
    return np.array(
        [sum(math.comb(c, i) * deltas[i - 1] for i in range(1, c + 1)) for c in range(1, k + 1)]
    )


def variance_of_ustat(profile: VarianceProfile, n: int, k: int) -> float:
    """Exact variance of the complete U-statistic from its conditional variances.

    var(U_n) = C(n,k)^{-1} sum_c C(k,c) C(n-k,k-c) zeta_c.  Coefficients are
    computed as exact rationals before the float combination.
    """
    if profile.k != k:
        raise ValueError("profile length must equal the kernel degree")
    if n < k:
        raise ValueError("need n >= k")
    _check_enumeration_cap(n, k, DEFAULT_ENUMERATION_CAP)
    total = math.comb(n, k)
    out = 0.0
    for c in range(1, k + 1):
        weight = Fraction(math.comb(k, c) * math.comb(n - k, k - c), total)
        out += float(weight) * float(profile.zetas[c - 1])
    return out


def variance_leading_term(
    profile: VarianceProfile, n: int, k: int, degenerate: bool, tol: float = 1e-9
) -> float:
    """First-order variance: k^2 zeta_1 / n, or the zeta_2 term when zeta_1 = 0."""
    if k > n / 2:
        raise ValueError("leading-term approximation needs k <= n/2")
    z1 = float(profile.zetas[0])
    if degenerate:
        if z1 > tol:
            raise DegeneracyMismatch(f"zeta_1 = {z1} is not 0")
        if profile.k < 2:
            raise ValueError("degenerate leading term needs k >= 2")
        return k**2 * (k - 1) ** 2 * float(profile.zetas[1]) / (2 * n * (n - 1))
    return k**2 * z1 / n


class ZetaEstimate(NamedTuple):
    value: float
    stderr: float
    trials: int


def empirical_zetas(
    h: Kernel,
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    c: int,
    trials: int,
    seed,
) -> ZetaEstimate:
    """Monte Carlo estimate of the c-th conditional variance.

    Uses the covariance characterization: draw 2k-c i.i.d. points, evaluate the
    kernel on two subsets sharing exactly c points, and average the product of
    the two values minus the squared mean estimate.  The standard error comes
    from the first-order influence function of that plug-in.
    """
    k = h.degree
    if not 1 <= c <= k:
        raise ValueError("need 1 <= c <= k (the c = 0 covariance is undefined)")
    rng = as_generator(seed)
    pts = sampler(rng, trials * (2 * k - c)).reshape(trials, 2 * k - c)
    first = h.evaluate(pts[:, :k])
    second = h.evaluate(pts[:, k - c :])
    prods = first * second
    theta_hat = 0.5 * (first.mean() + second.mean())
    value = float(prods.mean() - theta_hat**2)
    influence = (prods - prods.mean()) - 2.0 * theta_hat * (0.5 * (first + second) - theta_hat)
    stderr = float(influence.std(ddof=1) / math.sqrt(trials))
    return ZetaEstimate(value, stderr, trials)
