"""Monte Carlo estimators for truncation errors.

Every estimator here targets a quantity the analytic modules compute
exactly, so each one doubles as an end-to-end check of the whole stack:
sample the squared gap between target and surrogate, and the mean must
land within sampling noise of the closed-form budget.

Sampling draws from the problem's product measure via
:func:`numpy.random.default_rng`; identical (seed, n) give identical
estimates.  Samples accumulate in fixed-size chunks through a
count-weighted mean/variance merge — the same combination rule exposed by
:func:`pool`, so embarrassingly parallel runs (worker ``k`` seeded
``worker_seed(base, k)``) reproduce exactly the united statistics.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from dimdecomp.decomp import (
    ADD,
    ComponentTable,
    ProblemSpec,
    _cardinal_matrix,
    _fold_interp,
    rdd_direct,
)
from dimdecomp.errors import add_error
from dimdecomp.subsets import all_subsets_up_to
from dimdecomp.variance import variance_components

MIN_SAMPLES = 1_000
MIN_PAIRS = 10_000
DEFAULT_CHUNK = 200_000


@dataclass(frozen=True)
class McEstimate:
    """A sample mean with its standard error and provenance."""

    mean: float
    std_error: float
    n: int
    seed: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("an estimate needs at least 2 samples")
        if not self.std_error >= 0.0:
            raise ValueError("standard error must be nonnegative")

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        """True when `target` lies inside mean ± n_sigma * std_error."""
        return abs(self.mean - target) <= n_sigma * self.std_error


class _Accumulator:
    """Streaming count-weighted mean/variance (chunk-merged Welford)."""

    __slots__ = ("n", "mean", "m2")

    def __init__(self) -> None:
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, batch: np.ndarray) -> None:
        b = np.asarray(batch, dtype=float).reshape(-1)
        if b.size == 0:
            return
        m = float(np.mean(b))
        self._merge(b.size, m, float(np.sum((b - m) ** 2)))

    def _merge(self, n2: int, mean2: float, m2_2: float) -> None:
        if n2 == 0:
            return
        n1 = self.n
        n = n1 + n2
        delta = mean2 - self.mean
        self.mean += delta * n2 / n
        self.m2 += m2_2 + delta * delta * n1 * n2 / n
        self.n = n

    def result(self, seed: int) -> McEstimate:
        if self.n < 2:
            raise ValueError("need at least 2 samples")
        var = self.m2 / (self.n - 1)
        return McEstimate(self.mean, sqrt(max(var, 0.0) / self.n), self.n, seed)


def worker_seed(base_seed: int, worker_index: int) -> int:
    """Seed for parallel worker `worker_index`: ``base_seed + worker_index``."""
    if worker_index < 0:
        raise ValueError("worker index must be nonnegative")
    return int(base_seed) + int(worker_index)


def pool(estimates) -> McEstimate:
    """Combine independent estimates of the same mean, count-weighted.

    Exact algebra on (n, mean, variance) triples: pooling per-worker
    results equals the single-stream statistics over the concatenated
    samples, up to roundoff.  The pooled estimate keeps the first seed.
    """
    ests = list(estimates)
    if not ests:
        raise ValueError("nothing to pool")
    acc = _Accumulator()
    for e in ests:
        acc._merge(e.n, e.mean, e.std_error**2 * e.n * (e.n - 1))
    return acc.result(ests[0].seed)


def _check_n(n: int, minimum: int, label: str) -> None:
    if n < minimum:
        raise ValueError(f"{label} needs at least {minimum} samples, got {n}")


def mc_add_error(
    problem: ProblemSpec,
    table: ComponentTable,
    order: int,
    n: int = 100_000,
    seed: int = 0,
    *,
    chunk: int = DEFAULT_CHUNK,
) -> McEstimate:
    """Sampled mean-square error of the S-variate integration-based surrogate.

    Requires an ADD `table` built with interpolation so the surrogate can
    be evaluated at the sampled (off-grid) points.
    """
    table._require(ADD)
    if not table.interpolation:
        raise ValueError(
            "sampling the surrogate needs a table built with interpolation=True"
        )
    _check_n(n, MIN_SAMPLES, "mc_add_error")
    rng = np.random.default_rng(seed)
    acc = _Accumulator()
    left = int(n)
    while left > 0:
        m = min(chunk, left)
        X = problem.measure.sample(rng, m)
        gap = problem.evaluate(X) - table.truncated(order, X)
        acc.update(gap * gap)
        left -= m
    return acc.result(seed)


def mc_rdd_error(
    problem: ProblemSpec,
    order: int,
    anchor,
    n: int = 100_000,
    seed: int = 0,
    *,
    chunk: int = DEFAULT_CHUNK,
) -> McEstimate:
    """Sampled mean-square error of the anchored surrogate at a fixed anchor."""
    _check_n(n, MIN_SAMPLES, "mc_rdd_error")
    c = np.asarray(anchor, dtype=float)
    rng = np.random.default_rng(seed)
    acc = _Accumulator()
    left = int(n)
    while left > 0:
        m = min(chunk, left)
        X = problem.measure.sample(rng, m)
        gap = problem.evaluate(X) - rdd_direct(problem, order, c, X)
        acc.update(gap * gap)
        left -= m
    return acc.result(seed)


def mc_expected_rdd_error(
    problem: ProblemSpec,
    order: int,
    n_pairs: int = 100_000,
    seed: int = 0,
    *,
    chunk: int = DEFAULT_CHUNK,
) -> McEstimate:
    """Anchored-surrogate error averaged over random anchors.

    Each pair draws a point X and an anchor C independently from the input
    measure (in that order within every chunk) and samples
    ``(y(X) - yhat_S(X; C))**2`` — the double expectation the exact budget
    ``sum_{s>S} (1 + b_S(s)) V_s`` predicts.
    """
    _check_n(n_pairs, MIN_PAIRS, "mc_expected_rdd_error")
    rng = np.random.default_rng(seed)
    acc = _Accumulator()
    left = int(n_pairs)
    while left > 0:
        m = min(chunk, left)
        X = problem.measure.sample(rng, m)
        C = problem.measure.sample(rng, m)
        gap = problem.evaluate(X) - rdd_direct(problem, order, C, X)
        acc.update(gap * gap)
        left -= m
    return acc.result(seed)


@dataclass(frozen=True)
class PerturbationProbe:
    """One perturbed surrogate measured against the unperturbed optimum."""

    error: McEstimate  # E[(y - y_perturbed)^2]
    excess: McEstimate  # E[(y_best - y_perturbed)^2]
    split_gap: float  # mean of (error - excess) minus the exact e_add
    split_se: float
    dominates: bool
    split_holds: bool


@dataclass(frozen=True)
class OptimalityReport:
    """Evidence that no same-order surrogate beats the integration-based one.

    For every probe, the measured error of the perturbed surrogate must
    stay above the exact optimum ``e_add`` (within 3 combined standard
    errors), and the error must split additively as
    ``E[(y - y_pert)^2] = e_add + E[(y_best - y_pert)^2]`` — orthogonality
    in sampled form.
    """

    order: int
    e_add: float
    probes: tuple[PerturbationProbe, ...]
    all_dominate: bool
    all_split_hold: bool


def optimality_probe(
    problem: ProblemSpec,
    table: ComponentTable,
    order: int,
    n_perturbations: int = 20,
    seed: int = 0,
    *,
    n_samples: int = 20_000,
    amplitude: float = 0.25,
    chunk: int = DEFAULT_CHUNK,
) -> OptimalityReport:
    """Probe mean-square optimality of the S-variate truncation.

    Each probe adds independent uniform perturbations (bounded by
    `amplitude` times the table scale) to every stored component with
    ``|u| <= S`` — including the constant — and samples both the error of
    the perturbed surrogate and its excess over the unperturbed one.
    Probe ``k`` draws from a generator seeded ``worker_seed(seed, k)``.
    With ``amplitude = 0`` the perturbed surrogate *is* the optimum and the
    excess is identically zero.
    """
    table._require(ADD)
    if not table.interpolation:
        raise ValueError(
            "sampling the surrogate needs a table built with interpolation=True"
        )
    if not 0 <= order < table.dim:
        raise ValueError("truncation order must satisfy 0 <= S < dim")
    if n_perturbations < 1:
        raise ValueError("need at least one perturbation")
    _check_n(n_samples, MIN_SAMPLES, "optimality_probe")
    e_add = add_error(order, variance_components(table))
    nonempty = [u for u in all_subsets_up_to(table.dim, order) if not u.is_empty]
    bound = amplitude * table.scale
    probes = []
    for k in range(n_perturbations):
        rng = np.random.default_rng(worker_seed(seed, k))
        delta0 = float(rng.uniform(-bound, bound)) if bound > 0.0 else 0.0
        deltas = {
            u.mask: rng.uniform(-bound, bound, size=np.shape(table.grid_values(u)))
            for u in nonempty
        }
        acc_err = _Accumulator()
        acc_exc = _Accumulator()
        acc_split = _Accumulator()
        left = int(n_samples)
        while left > 0:
            m = min(chunk, left)
            X = problem.measure.sample(rng, m)
            y = problem.evaluate(X)
            y_best = table.truncated(order, X)
            shift = np.full(m, delta0)
            for u in nonempty:
                mats = [
                    _cardinal_matrix(
                        problem.rules[j].nodes, table._bary[j], X[:, j]
                    )
                    for j in u.indices()
                ]
                shift += _fold_interp(deltas[u.mask], mats)
            err = (y - y_best - shift) ** 2
            exc = shift**2
            acc_err.update(err)
            acc_exc.update(exc)
            acc_split.update(err - exc)
            left -= m
        err_est = acc_err.result(seed)
        exc_est = acc_exc.result(seed)
        split = acc_split.result(seed)
        dominates = err_est.mean >= e_add - 3.0 * err_est.std_error
        split_holds = abs(split.mean - e_add) <= 3.0 * split.std_error
        probes.append(
            PerturbationProbe(
                error=err_est,
                excess=exc_est,
                split_gap=split.mean - e_add,
                split_se=split.std_error,
                dominates=dominates,
                split_holds=split_holds,
            )
        )
    return OptimalityReport(
        order=order,
        e_add=e_add,
        probes=tuple(probes),
        all_dominate=all(p.dominates for p in probes),
        all_split_hold=all(p.split_holds for p in probes),
    )
