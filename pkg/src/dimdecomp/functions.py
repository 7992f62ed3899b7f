"""Built-in test functions.

Each factory returns a vectorized callable mapping points of shape
``(..., dim)`` to values of shape ``(...,)``.  The registry names are the
ones accepted in run configs: ``product_linear``, ``sobol_g``, ``ishigami``
and ``poly``.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from dimdecomp.measures import MarginalMeasure


def _batch(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != dim:
        raise ValueError(f"points have last axis {arr.shape[-1]}, expected {dim}")
    return arr


def product_linear(dim: int, a=None) -> Callable:
    """``y = prod_i (1 + a_i * x_i)``; defaults to ``a_i = 1``."""
    coeff = np.ones(dim) if a is None else np.asarray(a, dtype=float)
    if coeff.shape != (dim,):
        raise ValueError(f"coefficient vector must have length {dim}")

    def fn(x):
        arr = _batch(x, dim)
        return np.prod(1.0 + coeff * arr, axis=-1)

    return fn


def sobol_g(dim: int, a=None) -> Callable:
    """``y = prod_i (|4 x_i - 2| + a_i) / (1 + a_i)`` on the unit cube.

    Defaults to ``a_i = i`` (0-based), the classic strongly-interacting
    setting.  Piecewise linear in each coordinate: polynomial quadrature
    converges at a fixed algebraic rate here, not spectrally.
    """
    coeff = (
        np.arange(dim, dtype=float) if a is None else np.asarray(a, dtype=float)
    )
    if coeff.shape != (dim,):
        raise ValueError(f"coefficient vector must have length {dim}")
    if np.any(coeff < 0):
        raise ValueError("coefficients must be nonnegative")

    def fn(x):
        arr = _batch(x, dim)
        return np.prod((np.abs(4.0 * arr - 2.0) + coeff) / (1.0 + coeff), axis=-1)

    return fn


def ishigami(dim: int = 3, a: float = 7.0, b: float = 0.1) -> Callable:
    """``y = sin(x1) + a sin^2(x2) + b x3^4 sin(x1)``; requires dim == 3."""
    if dim != 3:
        raise ValueError("ishigami is defined for exactly 3 variables")
    a = float(a)
    b = float(b)

    def fn(x):
        arr = _batch(x, 3)
        s1 = np.sin(arr[..., 0])
        return s1 + a * np.sin(arr[..., 1]) ** 2 + b * arr[..., 2] ** 4 * s1

    return fn


def poly(dim: int, terms) -> Callable:
    """Sparse multivariate polynomial ``y = sum_t c_t * prod_i x_i**e_ti``.

    `terms` is a sequence of mappings with keys ``coeff`` (float) and
    ``exponents`` (length-`dim` list of nonnegative ints).
    """
    parsed = []
    for t in terms:
        c = float(t["coeff"])
        e = np.asarray(t["exponents"], dtype=int)
        if e.shape != (dim,):
            raise ValueError(f"exponent vector must have length {dim}")
        if np.any(e < 0):
            raise ValueError("exponents must be nonnegative")
        parsed.append((c, e))
    if not parsed:
        raise ValueError("poly needs at least one term")

    def fn(x):
        arr = _batch(x, dim)
        out = np.zeros(arr.shape[:-1], dtype=float)
        for c, e in parsed:
            out += c * np.prod(arr**e, axis=-1)
        return out

    return fn


_REGISTRY = {
    "product_linear": product_linear,
    "sobol_g": sobol_g,
    "ishigami": ishigami,
    "poly": poly,
}

# Marginal used when a run config names a function but no measure.
_DEFAULT_MARGINALS = {
    "product_linear": MarginalMeasure.uniform(-1.0, 1.0),
    "sobol_g": MarginalMeasure.uniform(0.0, 1.0),
    "ishigami": MarginalMeasure.uniform(-math.pi, math.pi),
    "poly": MarginalMeasure.uniform(-1.0, 1.0),
}


def function_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def make_function(name: str, dim: int, **params) -> Callable:
    """Instantiate a registry function by name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown function {name!r}; choose from {function_names()}"
        ) from None
    return factory(dim, **params)


def default_marginal(name: str) -> MarginalMeasure:
    """The marginal measure conventionally paired with a registry function."""
    try:
        return _DEFAULT_MARGINALS[name]
    except KeyError:
        raise ValueError(
            f"unknown function {name!r}; choose from {function_names()}"
        ) from None
