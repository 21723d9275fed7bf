"""Two applications: private uniformity testing and private triangle density.

Both test statistics are degenerate U-statistics (collision indicator under
the uniform law; triangle indicator in a geometric graph), which is exactly
the regime where the reweighting estimator beats Laplace-on-range noise.
Both kernels are structured, so the release engine is fed count-based
summaries that avoid enumerating the complete subset family; equivalence
with the generic enumeration path is covered by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boosting import BoostPlan, majority_vote
from .dp import PrivacyBudget, global_sensitivity_release
from .errors import InsufficientData
from .hajek import HajekParams, UStatSummary, release_from_summary
from .report import EstimateReport
from .rng import as_generator, child_seeds
from .ustat import Dataset

APPLICATION_CONFIDENCE = 0.01  # fixed per-run failure level; callers boost

# Laplace scale multiplier for the private edge density: calibrated to the
# true one-node substitution sensitivity (n-1)/C(n,2) = 2/n of edge density.
EDGE_DENSITY_SENSITIVITY_FACTOR = 2.0


# ---------------------------------------------------------------------------
# perturbed-uniform distributions and the collision statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbedUniform:
    """Categorical law p_i = (1 + a_i)/m with a_i in [-1, 1] summing to 0."""

    m: int
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        if self.a.shape != (self.m,):
            raise ValueError("need one perturbation per atom")
        if np.any(np.abs(self.a) > 1 + 1e-12):
            raise ValueError("perturbations must lie in [-1, 1]")
        if abs(float(self.a.sum())) > 1e-9 * max(1, self.m):
            raise ValueError("perturbations must sum to 0")

    @classmethod
    def uniform(cls, m: int) -> "PerturbedUniform":
        return cls(m, np.zeros(m))

    @classmethod
    def half_split(cls, m: int, amplitude: float) -> "PerturbedUniform":
        """+amplitude on the first half of the atoms, -amplitude on the rest."""
        if m % 2:
            raise ValueError("half split needs an even number of atoms")
        a = np.concatenate([np.full(m // 2, amplitude), np.full(m // 2, -amplitude)])
        return cls(m, a)

    @property
    def probabilities(self) -> np.ndarray:
        return (1.0 + self.a) / self.m


def sample_multinomial(dist: PerturbedUniform, n: int, seed) -> Dataset:
    """n i.i.d. category draws (0-based labels)."""
    rng = as_generator(seed)
    return Dataset(rng.choice(dist.m, size=n, p=dist.probabilities))


def collision_theta(dist: PerturbedUniform) -> float:
    """Collision probability sum_i p_i^2 = 1/m + ||a||^2 / m^2."""
    p = dist.probabilities
    return float(np.sum(p * p))


def collision_variance_profile(p: np.ndarray) -> tuple[float, float]:
    """Exact (zeta_1, zeta_2) of the collision kernel under category law p."""
    p = np.asarray(p, dtype=float)
    s2 = float(np.sum(p**2))
    zeta1 = float(np.sum(p**3)) - s2**2
    zeta2 = s2 - s2**2
    return zeta1, zeta2


def collision_ustat_variance(p: np.ndarray, n: int) -> float:
    """Closed-form var(U_n) of the collision kernel on n samples."""
    zeta1, zeta2 = collision_variance_profile(p)
    return (2.0 / (n * (n - 1))) * (2.0 * (n - 2) * zeta1 + zeta2)


def collision_summary(data: Dataset, m: int) -> UStatSummary:
    """Count-based summary of the collision kernel over all pairs.

    The overall mean, the per-index projections, and the reweighted mean all
    depend on the data only through category counts, so everything is
    O(n + m^2) instead of O(n^2).
    """
    x = np.asarray(data.points)
    if x.dtype.kind not in "iu":
        raise ValueError("categorical data must be integer")
    if x.size < 2:
        raise InsufficientData("need at least two samples for pair statistics")
    if x.min() < 0 or x.max() >= m:
        raise ValueError(f"category labels must lie in [0, {m})")
    n = x.size
    counts = np.bincount(x, minlength=m)
    pairs_total = n * (n - 1) // 2
    same_pairs = counts * (counts - 1) // 2
    a_n = float(same_pairs.sum() / pairs_total)
    projections = (counts[x] - 1) / (n - 1)

    def reweight(weights: np.ndarray) -> float:
        # weights are constant within a category (projections are), so one
        # representative weight per occupied category suffices
        w_cat = np.ones(m)
        seen = np.unique(x)
        for c in seen:
            w_cat[c] = weights[np.argmax(x == c)]
        occupied = seen
        total = 0.0
        # same-category pairs: h = 1, weight w_c
        wc = w_cat[occupied]
        sp = same_pairs[occupied]
        total += float(np.sum(sp * (wc + a_n * (1.0 - wc))))
        # cross-category pairs: h = 0, weight min(w_c, w_d)
        cnt = counts[occupied].astype(float)
        for idx in range(occupied.size - 1):
            w_pair = np.minimum(wc[idx], wc[idx + 1 :])
            total += float(np.sum(cnt[idx] * cnt[idx + 1 :] * a_n * (1.0 - w_pair)))
        return total / pairs_total

    return UStatSummary(
        n=n, k=2, a_n=a_n, projections=projections, reweight=reweight, all_tuples_family=True
    )


def collision_xi(m: int, n: int, gamma: float = APPLICATION_CONFIDENCE) -> float:
    """Concentration radius for collision projections: 6/m + 8 log(4n/gamma)/n."""
    return 6.0 / m + 8.0 * math.log(4.0 * n / gamma) / n


def private_collision_density(
    data: Dataset,
    m: int,
    eps: float,
    xi: float,
    seed,
    budget: Optional[PrivacyBudget] = None,
    strict_scale: bool = False,
) -> EstimateReport:
    """Reweighting estimator for the collision probability (C = 1 kernel)."""
    summary = collision_summary(data, m)
    params = HajekParams(eps=eps, c_range=1.0, xi=xi, strict_scale=strict_scale)
    return release_from_summary(summary, params, seed, budget, label="collision density")


@dataclass(frozen=True)
class UniformityDecision:
    reject: bool
    statistic: float
    threshold: float
    report: EstimateReport


def uniformity_test(
    data: Dataset,
    m: int,
    delta: float,
    eps: float,
    seed,
    budget: Optional[PrivacyBudget] = None,
) -> UniformityDecision:
    """Reject approximate uniformity iff the private collision estimate is large.

    The private estimate replaces the raw collision statistic; the decision
    threshold (1 + 3 delta^2 / 4)/m splits the two hypothesis classes.
    """
    if m < 2:
        raise ValueError("need at least two atoms")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if data.n < 2:
        raise InsufficientData("uniformity testing needs at least two samples")
    xi = collision_xi(m, data.n)
    report = private_collision_density(data, m, eps, xi, seed, budget)
    threshold = (1.0 + 0.75 * delta**2) / m
    return UniformityDecision(
        reject=report.estimate >= threshold,
        statistic=report.estimate,
        threshold=threshold,
        report=report,
    )


def boosted_uniformity_test(
    data: Dataset,
    m: int,
    delta: float,
    eps: float,
    alpha: float,
    seed,
    budget: Optional[PrivacyBudget] = None,
) -> UniformityDecision:
    """Majority vote of the tester over disjoint chunks (parallel composition)."""
    plan = BoostPlan.for_dataset(data.n, 2, alpha)
    rngs = child_seeds(seed, plan.chunks)
    decisions = []
    whole: list[UniformityDecision] = []

    def run_chunk(ci, sub_budget):
        chunk = data.subset(
            np.arange(ci * plan.chunk_size, (ci + 1) * plan.chunk_size)
        )
        d = uniformity_test(chunk, m, delta, eps, rngs[ci], sub_budget)
        decisions.append(d.reject)
        whole.append(d)

    if budget is not None:
        with budget.parallel(f"uniformity majority(q={plan.chunks})") as branches:
            for ci in range(plan.chunks):
                run_chunk(ci, branches.branch())
    else:
        for ci in range(plan.chunks):
            run_chunk(ci, None)
    reject = majority_vote(decisions)
    return UniformityDecision(
        reject=reject,
        statistic=float(np.median([d.statistic for d in whole])),
        threshold=whole[0].threshold,
        report=EstimateReport(
            estimate=float(np.median([d.statistic for d in whole])),
            eps=eps,
            diagnostics={"chunks": plan.chunks, "votes": decisions},
        ),
    )


# ---------------------------------------------------------------------------
# random geometric graphs and triangle density
# ---------------------------------------------------------------------------

@dataclass
class GeometricGraph:
    """Undirected graph, optionally carrying latent unit-sphere positions."""

    adjacency: np.ndarray
    radius: Optional[float] = None
    latent: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("adjacency entries must be 0/1")
        self.adjacency = a.astype(np.int8)

    @property
    def n(self) -> int:
        return int(self.adjacency.shape[0])

    def edge_density(self) -> float:
        n = self.n
        return float(self.adjacency.sum() / (n * (n - 1)))

    def induced(self, indices) -> "GeometricGraph":
        idx = np.asarray(indices)
        lat = self.latent[idx] if self.latent is not None else None
        return GeometricGraph(self.adjacency[np.ix_(idx, idx)], self.radius, lat)


def sample_rgg(n: int, radius: float, seed) -> GeometricGraph:
    """Latent positions uniform on the unit sphere; edges within the radius."""
    if n < 3:
        raise ValueError("need at least three nodes")
    if not 0 < radius <= 2:
        raise ValueError("radius must be in (0, 2]")
    rng = as_generator(seed)
    raw = rng.standard_normal((n, 3))
    latent = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    # |x - y| <= r on the unit sphere <=> <x, y> >= 1 - r^2/2
    gram = latent @ latent.T
    adj = (gram >= 1.0 - radius**2 / 2.0).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return GeometricGraph(adj, radius, latent)


def triangle_summary(graph: GeometricGraph) -> UStatSummary:
    """Matrix-power summary of the triangle kernel over all node triples."""
    a = graph.adjacency.astype(np.float64)
    n = graph.n
    if n < 3:
        raise InsufficientData("triangle statistics need at least three nodes")
    a2 = a @ a
    per_node = np.einsum("ij,ji->i", a2, a) / 2.0  # triangles through each node
    total = float(per_node.sum() / 3.0)
    m_total = math.comb(n, 3)
    m_i = math.comb(n - 1, 2)
    a_n = total / m_total
    projections = per_node / m_i

    def reweight(weights: np.ndarray) -> float:
        low = np.nonzero(weights < 1.0)[0]
        if low.size == 0:
            return a_n
        # reweighted mean = a_n + (1/M) sum over triples meeting a
        # down-weighted node of (wt(S) - 1)(h(S) - a_n); triples of three
        # full-weight nodes contribute nothing
        rest = np.setdiff1d(np.arange(n), low)
        corr = 0.0
        ar = a[np.ix_(rest, rest)]
        # exactly one down-weighted node
        for b in low:
            row = a[b, rest]
            tri_with_b = float(row @ ar @ row) / 2.0
            pairs = rest.size * (rest.size - 1) // 2
            corr += (weights[b] - 1.0) * (tri_with_b - a_n * pairs)
        # exactly two down-weighted nodes
        for x in range(low.size):
            for y in range(x + 1, low.size):
                b1, b2 = low[x], low[y]
                w = min(weights[b1], weights[b2])
                tri = float(a[b1, b2] * np.sum(a[b1, rest] * a[b2, rest]))
                corr += (w - 1.0) * (tri - a_n * rest.size)
        # all three down-weighted
        for x in range(low.size):
            for y in range(x + 1, low.size):
                for z in range(y + 1, low.size):
                    b1, b2, b3 = low[x], low[y], low[z]
                    w = min(weights[b1], weights[b2], weights[b3])
                    h = float(a[b1, b2] * a[b1, b3] * a[b2, b3])
                    corr += (w - 1.0) * (h - a_n)
        return a_n + corr / m_total

    return UStatSummary(
        n=n, k=3, a_n=a_n, projections=projections, reweight=reweight, all_tuples_family=True
    )


def triangle_xi(nu: float, n: int, gamma: float = APPLICATION_CONFIDENCE) -> float:
    """Concentration radius for triangle projections, from the edge proxy nu."""
    log_term = math.log(2.0 * n / gamma)
    return (
        18.0 * nu * math.sqrt((2.0 / n) * log_term)
        + (16.0 / (3.0 * n)) * log_term
        + (9.0 * nu / n) * math.sqrt(2.0 / gamma)
    )


def private_triangle_density(
    graph: GeometricGraph,
    eps: float,
    seed,
    budget: Optional[PrivacyBudget] = None,
    strict_scale: bool = False,
) -> EstimateReport:
    """Private triangle density of a geometric graph.

    First releases the edge density with Laplace noise (sensitivity 2/n under
    one-node substitution) to size the concentration radius; returns bottom if
    that proxy comes out negative.  Then runs the reweighting estimator on the
    triangle kernel over all triples.  Sequential composition: 2 * eps total.
    """
    n = graph.n
    rng = as_generator(seed)
    u_edges = graph.edge_density()
    nu = global_sensitivity_release(
        u_edges,
        gs=EDGE_DENSITY_SENSITIVITY_FACTOR / n,
        eps=eps,
        budget=budget,
        seed=rng,
        label="edge density proxy",
    )
    if nu < 0:
        return EstimateReport(
            estimate=None,
            eps=eps,
            bottom_reason=f"edge-density proxy {nu:.4g} < 0",
            diagnostics={"nu": nu, "edge_density": u_edges},
        )
    xi = triangle_xi(nu, n)
    summary = triangle_summary(graph)
    params = HajekParams(eps=eps, c_range=1.0, xi=xi, strict_scale=strict_scale)
    report = release_from_summary(summary, params, rng, budget, label="triangle density")
    report.eps = 2.0 * eps
    report.diagnostics.update({"nu": nu, "xi": xi, "edge_density": u_edges})
    return report


def boosted_triangle_density(
    graph: GeometricGraph,
    eps: float,
    alpha: float,
    seed,
    budget: Optional[PrivacyBudget] = None,
) -> EstimateReport:
    """Median of the triangle estimator over disjoint node chunks."""
    plan = BoostPlan.for_dataset(graph.n, 3, alpha)
    rngs = child_seeds(seed, plan.chunks)
    reports = []

    def run_chunk(ci, sub_budget):
        idx = np.arange(ci * plan.chunk_size, (ci + 1) * plan.chunk_size)
        reports.append(private_triangle_density(graph.induced(idx), eps, rngs[ci], sub_budget))

    if budget is not None:
        with budget.parallel(f"triangle majority(q={plan.chunks})") as branches:
            for ci in range(plan.chunks):
                run_chunk(ci, branches.branch())
    else:
        for ci in range(plan.chunks):
            run_chunk(ci, None)
    good = [r.estimate for r in reports if not r.is_bottom]
    if len(good) <= plan.chunks // 2:
        return EstimateReport(
            estimate=None,
            eps=2.0 * eps,
            bottom_reason=f"{plan.chunks - len(good)} of {plan.chunks} chunks returned bottom",
        )
    return EstimateReport(
        estimate=float(np.median(good)),
        eps=2.0 * eps,
        diagnostics={"chunks": plan.chunks, "bottoms": plan.chunks - len(good)},
    )


def rgg_triangle_theta(radius: float, draws: int, seed) -> float:
    """Monte Carlo oracle for the expected triangle indicator at a given radius."""
    rng = as_generator(seed)
    theta_hat = 0.0
    threshold = 1.0 - radius**2 / 2.0
    done = 0
    batch = 200_000
    while done < draws:
        take = min(batch, draws - done)
        pts = rng.standard_normal((take, 3, 3))
        pts /= np.linalg.norm(pts, axis=2, keepdims=True)
        d01 = np.einsum("ij,ij->i", pts[:, 0], pts[:, 1]) >= threshold
        d02 = np.einsum("ij,ij->i", pts[:, 0], pts[:, 2]) >= threshold
        d12 = np.einsum("ij,ij->i", pts[:, 1], pts[:, 2]) >= threshold
        theta_hat += float(np.sum(d01 & d02 & d12))
        done += take
    return theta_hat / draws


# ---------------------------------------------------------------------------
# graph / categorical file formats
# ---------------------------------------------------------------------------

def read_edge_list(path) -> GeometricGraph:
    """Edge list, one '1-based i j' pair per line, each undirected edge once."""
    edges = []
    max_node = 0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            i_s, j_s = line.split()
            i, j = int(i_s) - 1, int(j_s) - 1
            if i == j:
                raise ValueError("self-loops are not allowed")
            edges.append((i, j))
            max_node = max(max_node, i, j)
    n = max_node + 1
    adj = np.zeros((n, n), dtype=np.int8)
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1
    return GeometricGraph(adj)


def write_edge_list(graph: GeometricGraph, path) -> None:
    with open(path, "w") as fh:
        rows, cols = np.nonzero(np.triu(graph.adjacency, k=1))
        for i, j in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{i + 1} {j + 1}\n")


def read_categories(path) -> Dataset:
    """Newline-delimited non-negative integer labels."""
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(int(line))
    if not values:
        raise ValueError(f"no data in {path}")
    arr = np.asarray(values)
    if arr.min() < 0:
        raise ValueError("category labels must be non-negative")
    return Dataset(arr)


def read_reals(path) -> Dataset:
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line))
    if not values:
        raise ValueError(f"no data in {path}")
    return Dataset(np.asarray(values))
