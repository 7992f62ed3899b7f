"""Dimensional decompositions of multivariate functions.

A function ``y`` of ``N`` independent inputs splits into ``2**N`` component
functions, one per subset ``u`` of the variables, ``y(x) = sum_u y_u(x_u)``.
Two constructions of the split are built here:

* **ADD** (:func:`build_add`) defines components by integration against the
  input product measure.  Every nonempty component has zero mean in each of
  its own coordinates and distinct components are orthogonal, so variances
  add across subsets.  Components are stored on tensor subgrids of the
  per-coordinate Gauss nodes; off-grid evaluation is available through
  barycentric interpolation.
* **RDD** (:func:`build_rdd`) replaces every integral with an evaluation at
  a fixed anchor point ``c``.  Components cost only function calls — no
  grids — and every nonempty component vanishes as soon as one of its own
  coordinates equals the matching anchor coordinate.

Truncating either expansion to ``|u| <= S`` gives an S-variate surrogate.
For the anchored expansion the truncated sum collapses telescopically into
a binomially weighted sum of anchored evaluations, which
:func:`rdd_direct` evaluates without materializing any components; the two
routes agree pointwise and the test-suite holds them to that.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Callable, Iterable, Sequence

import numpy as np

from dimdecomp.measures import ProductMeasure, QuadratureRule, product_rules
from dimdecomp.subsets import (
    VariableSubset,
    all_subsets_up_to,
    strict_subsets,
    subsets_of_cardinality,
)

ADD = "ADD"
RDD = "RDD"

DEFAULT_MAX_GRID_POINTS = 4_000_000
_EVAL_CHUNK = 500_000

# Structural tolerances: residuals scale with max(1, |y_empty|) (or its
# square for second-moment checks).
TOL_ZERO_MEAN = 1e-10
TOL_ORTHOGONALITY = 1e-10
TOL_EXACTNESS = 1e-10
TOL_ANNIHILATION = 1e-12
TOL_FORM_EQUIVALENCE = 1e-10


@dataclass(frozen=True)
class ProblemSpec:
    """A target function paired with its input measure and quadrature order.

    Parameters
    ----------
    function : callable
        Vectorized map from points of shape ``(..., dim)`` to ``(...,)``.
    measure : ProductMeasure
        Independent product measure of the inputs.
    quad_order : int or tuple of int, optional
        Gauss nodes per coordinate (scalar broadcasts). Default 10.
    """

    function: Callable[[np.ndarray], np.ndarray]
    measure: ProductMeasure
    quad_order: int | tuple[int, ...] = 10

    def __post_init__(self) -> None:
        if not callable(self.function):
            raise ValueError("function must be callable")
        orders = self.orders  # validates length/positivity via product_rules later
        if any(n < 1 for n in orders):
            raise ValueError("quadrature orders must be at least 1")

    @property
    def dim(self) -> int:
        return self.measure.dim

    @property
    def orders(self) -> tuple[int, ...]:
        if isinstance(self.quad_order, int):
            return (self.quad_order,) * self.dim
        orders = tuple(int(n) for n in self.quad_order)
        if len(orders) != self.dim:
            raise ValueError(f"got {len(orders)} orders for dimension {self.dim}")
        return orders

    @cached_property
    def rules(self) -> tuple[QuadratureRule, ...]:
        return product_rules(self.measure, self.orders)

    def evaluate(self, x) -> np.ndarray:
        """Evaluate the target as a float array."""
        return np.asarray(self.function(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class AnchoredApprox:
    """S-variate anchored surrogate bound to a problem and reference point.

    Calling an instance evaluates :func:`rdd_direct` at the stored anchor.
    """

    problem: ProblemSpec
    order: int
    anchor: np.ndarray

    def __post_init__(self) -> None:
        anchor = np.asarray(self.anchor, dtype=float)
        if anchor.shape != (self.problem.dim,):
            raise ValueError(f"anchor must have shape ({self.problem.dim},)")
        if not np.all(self.problem.measure.contains(anchor)):
            raise ValueError("anchor lies outside the measure's support")
        if not 0 <= self.order < self.problem.dim:
            raise ValueError("truncation order must satisfy 0 <= S < dim")
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)

    def __call__(self, x) -> np.ndarray | float:
        return rdd_direct(self.problem, self.order, self.anchor, x)


class ComponentTable:
    """Components of a built decomposition, queried by subset.

    ADD tables hold component values on tensor subgrids of the Gauss nodes
    (plus barycentric data when built with ``interpolation=True``).  RDD
    tables hold no values: components are reproduced on demand from anchored
    evaluations of the target, memoized within each call.

    Build through :func:`build_add` / :func:`build_rdd`, not directly.
    """

    def __init__(
        self,
        kind: str,
        problem: ProblemSpec,
        y_empty: float,
        *,
        anchor: np.ndarray | None = None,
        components: dict[int, np.ndarray] | None = None,
        full_values: np.ndarray | None = None,
        interpolation: bool = False,
        bary_weights: Sequence[np.ndarray] | None = None,
    ) -> None:
        if kind not in (ADD, RDD):
            raise ValueError(f"kind must be {ADD!r} or {RDD!r}")
        if kind == RDD and anchor is None:
            raise ValueError("an RDD table needs an anchor")
        if kind == ADD and components is None:
            raise ValueError("an ADD table needs component grids")
        self.kind = kind
        self.problem = problem
        self.y_empty = float(y_empty)
        self.anchor = anchor
        self.interpolation = bool(interpolation)
        self._components = components or {}
        self._full_values = full_values
        self._bary = list(bary_weights) if bary_weights is not None else None

    @property
    def dim(self) -> int:
        return self.problem.dim

    @property
    def scale(self) -> float:
        """Magnitude used to normalize structural residuals."""
        return max(1.0, abs(self.y_empty))

    def masks(self) -> list[int]:
        """Masks of stored components (ADD) in (cardinality, mask) order."""
        return sorted(self._components, key=lambda m: (m.bit_count(), m))

    def grid_values(self, u: VariableSubset) -> np.ndarray | float:
        """ADD component values on the subgrid of `u` (a scalar for ``u = {}``)."""
        self._require(ADD)
        if u.is_empty:
            return self.y_empty
        return self._components[u.mask]

    def component(self, u: VariableSubset, x) -> float | np.ndarray:
        """Evaluate one component at points ``x`` of shape ``(|u|,)`` or ``(m, |u|)``.

        Columns of ``x`` follow ``u.indices()`` in ascending order.  For ADD
        tables the points must lie on the subgrid unless the table was built
        with interpolation.
        """
        if u.dim != self.dim:
            raise ValueError(f"subset dimension {u.dim} != table dimension {self.dim}")
        if u.is_empty:
            return self.y_empty
        X, squeeze = _as_rows(x, u.cardinality)
        if self.kind == ADD:
            out = self._add_component_at(u, X)
        else:
            out = self._rdd_component_at(u, X)
        return float(out[0]) if squeeze else out

    def truncated(self, order: int, x) -> float | np.ndarray:
        """Evaluate the S-variate truncated sum at full points ``x``."""
        if not 0 <= order <= self.dim:
            raise ValueError(f"truncation order {order} outside [0, {self.dim}]")
        X, squeeze = _as_rows(x, self.dim)
        if self.kind == ADD:
            out = self._add_truncated(order, X)
        else:
            out = self._rdd_truncated(order, X)
        return float(out[0]) if squeeze else out

    # -- ADD internals ----------------------------------------------------

    def _require(self, kind: str) -> None:
        if self.kind != kind:
            raise ValueError(f"operation requires a {kind} table, not {self.kind}")

    def _grid_indices(self, X: np.ndarray, coords: Sequence[int]) -> list[np.ndarray]:
        """Column-wise node indices of on-grid points; raises off grid."""
        rules = self.problem.rules
        out = []
        for col, j in enumerate(coords):
            nodes = rules[j].nodes
            pos = np.searchsorted(nodes, X[:, col]).clip(0, len(nodes) - 1)
            prev = np.maximum(pos - 1, 0)
            pick = np.where(
                np.abs(nodes[pos] - X[:, col]) <= np.abs(nodes[prev] - X[:, col]),
                pos,
                prev,
            )
            tol = 1e-12 * max(1.0, float(np.max(np.abs(nodes))))
            if np.any(np.abs(nodes[pick] - X[:, col]) > tol):
                raise ValueError(
                    "off-grid evaluation requires a table built with interpolation=True"
                )
            out.append(pick)
        return out

    def _cardinal_matrices(self, X: np.ndarray, coords: Sequence[int]) -> list[np.ndarray]:
        rules = self.problem.rules
        return [
            _cardinal_matrix(rules[j].nodes, self._bary[j], X[:, col])
            for col, j in enumerate(coords)
        ]

    def _add_component_at(self, u: VariableSubset, X: np.ndarray) -> np.ndarray:
        vals = self._components[u.mask]
        if self.interpolation:
            return _fold_interp(vals, self._cardinal_matrices(X, u.indices()))
        idx = self._grid_indices(X, u.indices())
        return vals[tuple(idx)]

    def _add_truncated(self, order: int, X: np.ndarray) -> np.ndarray:
        out = np.full(X.shape[0], self.y_empty)
        if self.interpolation:
            cols = [
                _cardinal_matrix(self.problem.rules[j].nodes, self._bary[j], X[:, j])
                for j in range(self.dim)
            ]
        else:
            idx = self._grid_indices(X, range(self.dim))
        for u in all_subsets_up_to(self.dim, order):
            if u.is_empty:
                continue
            vals = self._components[u.mask]
            coords = u.indices()
            if self.interpolation:
                out += _fold_interp(vals, [cols[j] for j in coords])
            else:
                out += vals[tuple(idx[j] for j in coords)]
        return out

    # -- RDD internals ----------------------------------------------------

    def _anchored_rows(self, coords: tuple[int, ...], X: np.ndarray) -> np.ndarray:
        """Evaluate y with coordinates `coords` taken from X, the rest anchored."""
        Z = np.tile(self.anchor, (X.shape[0], 1))
        if coords:
            cols = list(coords)
            Z[:, cols] = X[:, cols]
        return self.problem.evaluate(Z)

    def _rdd_truncated(self, order: int, X: np.ndarray) -> np.ndarray:
        comp: dict[int, np.ndarray] = {}
        out = np.zeros(X.shape[0])
        for u in all_subsets_up_to(self.dim, order):
            acc = self._anchored_rows(u.indices(), X)
            for v in strict_subsets(u):
                acc = acc - comp[v.mask]
            comp[u.mask] = acc
            out += acc
        return out

    def _rdd_component_at(self, u: VariableSubset, X: np.ndarray) -> np.ndarray:
        # Recurse over the sub-lattice of u only; columns of X follow
        # u.indices(), so map each v ⊆ u to its column positions.
        coords = u.indices()
        col_of = {j: k for k, j in enumerate(coords)}
        full = np.empty((X.shape[0], self.dim))
        comp: dict[int, np.ndarray] = {}
        lattice = list(strict_subsets(u)) + [u]
        for v in lattice:
            full[:] = self.anchor
            for j in v.indices():
                full[:, j] = X[:, col_of[j]]
            acc = self.problem.evaluate(full)
            for w in strict_subsets(v):
                acc = acc - comp[w.mask]
            comp[v.mask] = acc
        return comp[u.mask]


# -- builders --------------------------------------------------------------


def build_add(
    problem: ProblemSpec,
    *,
    interpolation: bool = False,
    max_grid_points: int = DEFAULT_MAX_GRID_POINTS,
) -> ComponentTable:
    """Build the integration-based decomposition on the tensor Gauss grid.

    The target is evaluated once on the full tensor grid.  The component of
    subset ``u`` is then the conditional mean over the complementary
    coordinates minus the components of all proper subsets, assembled in
    cardinality order; on a Gauss grid this makes zero means, orthogonality
    and grid exactness hold to roundoff by construction.

    Parameters
    ----------
    problem : ProblemSpec
    interpolation : bool, optional
        Store barycentric data so components can be evaluated off the grid
        (needed by the sampling estimators). Default False.
    max_grid_points : int, optional
        Reject builds whose full tensor grid exceeds this many points.

    Returns
    -------
    ComponentTable
        An ADD table holding all ``2**dim`` components.
    """
    Y = _evaluate_full_grid(problem, max_grid_points)
    N = problem.dim
    orders = problem.orders
    weights = [r.weights for r in problem.rules]
    components: dict[int, np.ndarray] = {}
    y_empty = 0.0
    for u in all_subsets_up_to(N, N):
        own = set(u.indices())
        M = Y
        for ax in reversed([i for i in range(N) if i not in own]):
            M = np.tensordot(M, weights[ax], axes=([ax], [0]))
        if u.is_empty:
            y_empty = float(M)
            continue
        M = np.array(M, dtype=float)
        coords = u.indices()
        for v in strict_subsets(u):
            if v.is_empty:
                M -= y_empty
            else:
                vset = set(v.indices())
                shape = tuple(orders[j] if j in vset else 1 for j in coords)
                M -= components[v.mask].reshape(shape)
        components[u.mask] = M
    bary = [_bary_weights(r.nodes) for r in problem.rules] if interpolation else None
    return ComponentTable(
        ADD,
        problem,
        y_empty,
        components=components,
        full_values=Y,
        interpolation=interpolation,
        bary_weights=bary,
    )


def build_rdd(problem: ProblemSpec, anchor) -> ComponentTable:
    """Build the anchored decomposition at reference point `anchor`.

    Nothing is precomputed beyond ``y(anchor)``; components are reproduced
    from anchored evaluations when queried.
    """
    c = np.asarray(anchor, dtype=float)
    if c.shape != (problem.dim,):
        raise ValueError(f"anchor must have shape ({problem.dim},)")
    if not np.all(problem.measure.contains(c)):
        raise ValueError("anchor lies outside the measure's support")
    if not np.all(np.isfinite(c)):
        raise ValueError("anchor must be finite")
    y_c = float(problem.evaluate(c[None, :])[0])
    if not np.isfinite(y_c):
        raise ValueError("function value at the anchor is not finite")
    c = c.copy()
    c.setflags(write=False)
    return ComponentTable(RDD, problem, y_c, anchor=c)


def eval_truncated(table: ComponentTable, order: int, x) -> float | np.ndarray:
    """Functional alias for :meth:`ComponentTable.truncated`."""
    return table.truncated(order, x)


def rdd_direct(problem: ProblemSpec, order: int, anchor, x) -> float | np.ndarray:
    """Evaluate the S-variate anchored surrogate directly.

    Uses the collapsed form: an alternating binomially weighted sum over
    all anchored evaluations with ``S - k`` free coordinates,

    ``sum_{k=0..S} (-1)**k C(N-S+k-1, k) sum_{|u|=S-k} y(x_u, c_-u)``.

    Parameters
    ----------
    problem : ProblemSpec
    order : int
        Truncation order ``0 <= S < dim``.
    anchor : array
        Shape ``(dim,)``, or ``(m, dim)`` to pair each row of `x` with its
        own anchor.
    x : array
        Shape ``(dim,)`` or ``(m, dim)``.

    Returns
    -------
    float or ndarray
        Scalar for a single point, else shape ``(m,)``.
    """
    N = problem.dim
    if not 0 <= order < N:
        raise ValueError("truncation order must satisfy 0 <= S < dim")
    X, squeeze = _as_rows(x, N)
    C = np.asarray(anchor, dtype=float)
    if C.ndim == 1:
        if C.shape != (N,):
            raise ValueError(f"anchor must have shape ({N},)")
        if not np.all(problem.measure.contains(C)):
            raise ValueError("anchor lies outside the measure's support")
        C = np.broadcast_to(C, X.shape)
    elif C.shape == X.shape:
        if not np.all(problem.measure.contains(C)):
            raise ValueError("an anchor row lies outside the measure's support")
    else:
        raise ValueError("per-row anchors must match the shape of x")
    out = np.zeros(X.shape[0])
    Z = np.empty_like(X)
    for k in range(order + 1):
        w = (-1) ** k * comb(N - order + k - 1, k)
        for u in subsets_of_cardinality(N, order - k):
            Z[:] = C
            cols = list(u.indices())
            if cols:
                Z[:, cols] = X[:, cols]
            out += w * problem.evaluate(Z)
    return float(out[0]) if squeeze else out


def explicit_component(
    problem: ProblemSpec,
    u: VariableSubset,
    kind: str,
    x_u,
    *,
    anchor=None,
    max_grid_points: int = DEFAULT_MAX_GRID_POINTS,
) -> float:
    """Evaluate one component by its non-recursive alternating-sum form.

    For ADD this sums signed conditional means over all ``v ⊆ u`` (each one
    a fresh quadrature over the complementary coordinates); for RDD it sums
    signed anchored evaluations.  Exists as an independent route against the
    recursive construction — the two must agree to roundoff.
    """
    if kind not in (ADD, RDD):
        raise ValueError(f"kind must be {ADD!r} or {RDD!r}")
    if u.dim != problem.dim:
        raise ValueError(f"subset dimension {u.dim} != problem dimension {problem.dim}")
    pt = np.asarray(x_u, dtype=float).reshape(-1)
    if pt.shape != (u.cardinality,):
        raise ValueError(f"x_u must have shape ({u.cardinality},)")
    coords = u.indices()
    value_at = dict(zip(coords, pt))
    if kind == RDD:
        c = np.asarray(anchor, dtype=float)
        if c.shape != (problem.dim,):
            raise ValueError(f"anchor must have shape ({problem.dim},)")
    total = 0.0
    lattice = list(strict_subsets(u)) + [u] if not u.is_empty else [u]
    for v in lattice:
        sign = (-1) ** (u.cardinality - v.cardinality)
        if kind == ADD:
            term = _conditional_mean(
                problem,
                v.indices(),
                [value_at[j] for j in v.indices()],
                max_grid_points,
            )
        else:
            z = c.copy()
            for j in v.indices():
                z[j] = value_at[j]
            term = float(problem.evaluate(z[None, :])[0])
        total += sign * term
    return total


# -- structural checks ------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """One verified property: worst residual against its tolerance."""

    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""


def check_add_structure(
    table: ComponentTable, *, max_orthogonality_dim: int = 5
) -> list[CheckResult]:
    """Zero means, pairwise orthogonality and grid exactness of an ADD table.

    All three are expectations under the discrete Gauss measure, so they
    must hold to roundoff whatever the target function.  Orthogonality
    loops over all component pairs and is skipped above
    `max_orthogonality_dim` variables to keep the cost quadratic-small.
    """
    table._require(ADD)
    N = table.dim
    weights = [r.weights for r in table.problem.rules]
    scale = table.scale
    results = []

    worst = 0.0
    worst_label = ""
    for u in all_subsets_up_to(N, N):
        if u.is_empty:
            continue
        vals = table.grid_values(u)
        w = [weights[j] for j in u.indices()]
        for col, wj in enumerate(w):
            mean = np.tensordot(vals, wj, axes=([col], [0]))
            r = float(np.max(np.abs(mean)))
            if r > worst:
                worst, worst_label = r, f"subset {u.label()}, coordinate {u.indices()[col] + 1}"
            # only the per-coordinate means matter; full mean is their special case
    tol = TOL_ZERO_MEAN * scale
    results.append(
        CheckResult("add_zero_mean", worst, tol, worst <= tol, worst_label)
    )

    if N <= max_orthogonality_dim:
        worst = 0.0
        worst_label = ""
        subsets = [u for u in all_subsets_up_to(N, N) if not u.is_empty]
        for a in range(len(subsets)):
            for b in range(a + 1, len(subsets)):
                u, v = subsets[a], subsets[b]
                r = abs(_pair_inner(table, u, v, weights))
                if r > worst:
                    worst, worst_label = r, f"pair {u.label()} x {v.label()}"
        tol = TOL_ORTHOGONALITY * scale**2
        results.append(
            CheckResult("add_orthogonality", worst, tol, worst <= tol, worst_label)
        )

    Y = table._full_values
    recon = np.full_like(Y, table.y_empty)
    orders = table.problem.orders
    for u in all_subsets_up_to(N, N):
        if u.is_empty:
            continue
        own = set(u.indices())
        shape = tuple(orders[j] if j in own else 1 for j in range(N))
        recon = recon + table.grid_values(u).reshape(shape)
    denom = max(1.0, float(np.max(np.abs(Y))))
    r = float(np.max(np.abs(recon - Y))) / denom
    results.append(
        CheckResult("add_grid_exactness", r, TOL_EXACTNESS, r <= TOL_EXACTNESS, "")
    )
    return results


def check_rdd_structure(
    table: ComponentTable, *, n_points: int = 100, seed: int = 0
) -> list[CheckResult]:
    """Anchor annihilation and full-sum exactness of an RDD table.

    Annihilation: a nonempty component is zero whenever any one of its own
    coordinates sits at the matching anchor coordinate.  Exactness: summing
    all components reproduces the target at arbitrary points.  Both are
    probed at `n_points` random points drawn from the input measure.
    """
    table._require(RDD)
    N = table.dim
    rng = np.random.default_rng(seed)
    X = table.problem.measure.sample(rng, n_points)
    scale = table.scale
    results = []

    full = table.truncated(N, X)
    y = table.problem.evaluate(X)
    denom = np.maximum(1.0, np.abs(y))
    r = float(np.max(np.abs(full - y) / denom))
    results.append(
        CheckResult("rdd_full_sum_exactness", r, TOL_EXACTNESS, r <= TOL_EXACTNESS, "")
    )

    worst = 0.0
    worst_label = ""
    for row in range(n_points):
        size = int(rng.integers(1, N + 1))
        coords = tuple(sorted(rng.choice(N, size=size, replace=False).tolist()))
        u = VariableSubset.from_indices(coords, N)
        x_u = X[row, list(coords)].copy()
        pin = int(rng.integers(size))
        x_u[pin] = table.anchor[coords[pin]]
        r = abs(float(table.component(u, x_u)))
        if r > worst:
            worst, worst_label = r, f"subset {u.label()}, pinned coordinate {coords[pin] + 1}"
    tol = TOL_ANNIHILATION * scale
    results.append(
        CheckResult("rdd_annihilation", worst, tol, worst <= tol, worst_label)
    )
    return results


def check_form_equivalence(
    problem: ProblemSpec, order: int, *, n_pairs: int = 100, seed: int = 0
) -> CheckResult:
    """Truncated component-sum route vs direct collapsed route, pointwise.

    Draws `n_pairs` independent (anchor, point) pairs from the input
    measure and compares :func:`eval_truncated` on a fresh RDD table
    against :func:`rdd_direct`.  Relative deviation is measured against
    ``max(1, |direct value|)``.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        c = problem.measure.sample(rng)
        x = problem.measure.sample(rng)
        table = build_rdd(problem, c)
        a = table.truncated(order, x)
        b = rdd_direct(problem, order, c, x)
        r = abs(a - b) / max(1.0, abs(b))
        worst = max(worst, r)
    return CheckResult(
        f"rdd_form_equivalence_S{order}",
        worst,
        TOL_FORM_EQUIVALENCE,
        worst <= TOL_FORM_EQUIVALENCE,
        f"{n_pairs} anchor/point pairs",
    )


# -- helpers ----------------------------------------------------------------


def _as_rows(x, width: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape != (width,):
            raise ValueError(f"point must have shape ({width},)")
        return arr[None, :], True
    if arr.ndim == 2 and arr.shape[1] == width:
        return arr, False
    raise ValueError(f"points must have shape ({width},) or (m, {width})")


def _evaluate_full_grid(problem: ProblemSpec, max_grid_points: int) -> np.ndarray:
    orders = problem.orders
    total = int(np.prod(orders))
    if total > max_grid_points:
        raise ValueError(
            f"tensor grid has {total} points, over the budget {max_grid_points}"
        )
    nodes = [r.nodes for r in problem.rules]
    N = problem.dim
    vals = np.empty(total)
    for start in range(0, total, _EVAL_CHUNK):
        flat = np.arange(start, min(start + _EVAL_CHUNK, total))
        multi = np.unravel_index(flat, orders)
        pts = np.column_stack([nodes[j][multi[j]] for j in range(N)])
        vals[flat] = problem.evaluate(pts).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function returned non-finite values on the tensor grid")
    return vals.reshape(orders)


def _conditional_mean(
    problem: ProblemSpec,
    coords: tuple[int, ...],
    values: Iterable[float],
    max_grid_points: int,
) -> float:
    """Quadrature of y over the coordinates not in `coords`, others fixed."""
    N = problem.dim
    rest = [j for j in range(N) if j not in set(coords)]
    orders = problem.orders
    total = int(np.prod([orders[j] for j in rest])) if rest else 1
    if total > max_grid_points:
        raise ValueError(
            f"conditional-mean grid has {total} points, over the budget {max_grid_points}"
        )
    pts = np.empty((total, N))
    for j, val in zip(coords, values):
        pts[:, j] = val
    wprod = np.ones(total)
    if rest:
        shape = [orders[j] for j in rest]
        flat = np.arange(total)
        multi = np.unravel_index(flat, shape)
        for k, j in enumerate(rest):
            pts[:, j] = problem.rules[j].nodes[multi[k]]
            wprod *= problem.rules[j].weights[multi[k]]
    return float(np.dot(problem.evaluate(pts), wprod))


def _pair_inner(
    table: ComponentTable,
    u: VariableSubset,
    v: VariableSubset,
    weights: list[np.ndarray],
) -> float:
    """E[y_u y_v] under the discrete Gauss measure on the union subgrid."""
    union = sorted(set(u.indices()) | set(v.indices()))
    pos = {j: k for k, j in enumerate(union)}
    orders = table.problem.orders

    def lift(w: VariableSubset) -> np.ndarray:
        own = set(w.indices())
        shape = tuple(orders[j] if j in own else 1 for j in union)
        return np.asarray(table.grid_values(w)).reshape(shape)

    prod = lift(u) * lift(v)
    for k in reversed(range(len(union))):
        prod = np.tensordot(prod, weights[union[k]], axes=([k], [0]))
    return float(prod)


def _bary_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights of the node set, normalized to unit max."""
    n = len(nodes)
    w = np.empty(n)
    for i in range(n):
        diff = nodes[i] - np.delete(nodes, i)
        w[i] = 1.0 / np.prod(diff)
    return w / np.max(np.abs(w))


def _cardinal_matrix(nodes: np.ndarray, bw: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lagrange cardinal values L_j(t_i) as an (m, n) matrix."""
    diff = t[:, None] - nodes[None, :]
    tol = 1e-14 * max(1.0, float(np.max(np.abs(nodes))))
    hit = np.abs(diff) < tol
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = bw / diff
        L = ratio / np.sum(ratio, axis=1, keepdims=True)
    rows = np.nonzero(np.any(hit, axis=1))[0]
    if rows.size:
        L[rows] = 0.0
        cols = np.argmax(hit[rows], axis=1)
        L[rows, cols] = 1.0
    return L


def _fold_interp(vals: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
    """Contract per-coordinate cardinal matrices into subgrid values."""
    out = np.einsum("mi,i...->m...", mats[0], vals)
    for L in mats[1:]:
        out = np.einsum("mi,mi...->m...", L, out)
    return out
