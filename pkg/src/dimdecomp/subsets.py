"""Subset algebra over variable index sets, backed by bitmasks.

Bit ``i`` of a mask stands for variable ``i + 1``, so reports print subsets
as 1-based index lists like ``[1, 3]``.  Full-lattice traversals are capped
(default 24 bits): tables over all ``2**N`` subsets stop being desk-scale
beyond that.  Cardinality-only arithmetic elsewhere in the package carries
no such cap.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, Iterator

DEFAULT_SUBSET_CAP = 24


@dataclass(frozen=True)
class VariableSubset:
    """A subset of ``{1, ..., dim}`` stored as a bitmask."""

    mask: int
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")
        if self.mask < 0 or self.mask >> self.dim:
            raise ValueError(
                f"mask {self.mask:#x} has bits outside dimension {self.dim}"
            )

    @classmethod
    def from_indices(cls, indices: Iterable[int], dim: int) -> "VariableSubset":
        """Build from 0-based coordinate indices."""
        mask = 0
        for i in indices:
            if not 0 <= i < dim:
                raise ValueError(f"index {i} outside [0, {dim})")
            mask |= 1 << i
        return cls(mask, dim)

    @classmethod
    def empty(cls, dim: int) -> "VariableSubset":
        return cls(0, dim)

    @classmethod
    def full(cls, dim: int) -> "VariableSubset":
        return cls((1 << dim) - 1, dim)

    @property
    def cardinality(self) -> int:
        return self.mask.bit_count()

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def indices(self) -> tuple[int, ...]:
        """0-based coordinate indices, ascending."""
        return tuple(i for i in range(self.dim) if self.mask >> i & 1)

    def label(self) -> str:
        """1-based display form, e.g. ``[1,3]``; the empty set prints ``[]``."""
        return "[" + ",".join(str(i + 1) for i in self.indices()) + "]"

    def complement(self) -> "VariableSubset":
        return VariableSubset(self.mask ^ ((1 << self.dim) - 1), self.dim)

    def union(self, other: "VariableSubset") -> "VariableSubset":
        self._check_compatible(other)
        return VariableSubset(self.mask | other.mask, self.dim)

    def intersection(self, other: "VariableSubset") -> "VariableSubset":
        self._check_compatible(other)
        return VariableSubset(self.mask & other.mask, self.dim)

    def issubset(self, other: "VariableSubset") -> bool:
        self._check_compatible(other)
        return self.mask & ~other.mask == 0

    def _check_compatible(self, other: "VariableSubset") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __len__(self) -> int:
        return self.cardinality

    def __str__(self) -> str:
        return self.label()


def sort_key(u: VariableSubset) -> tuple[int, int]:
    """Canonical ordering: by cardinality, then by numeric mask."""
    return (u.cardinality, u.mask)


def subsets_of_cardinality(
    dim: int, size: int, *, cap: int = DEFAULT_SUBSET_CAP
) -> Iterator[VariableSubset]:
    """All subsets of a given cardinality, in increasing mask order."""
    if dim > cap:
        raise ValueError(f"dimension {dim} exceeds the enumeration cap {cap}")
    if not 0 <= size <= dim:
        raise ValueError(f"cardinality {size} outside [0, {dim}]")
    masks = sorted(
        sum(1 << i for i in c) for c in combinations(range(dim), size)
    )
    for m in masks:
        yield VariableSubset(m, dim)


def all_subsets_up_to(
    dim: int, max_order: int, *, cap: int = DEFAULT_SUBSET_CAP
) -> Iterator[VariableSubset]:
    """Every subset with ``|u| <= max_order``, ordered by (cardinality, mask).

    Parameters
    ----------
    dim : int
        Number of variables; must not exceed `cap`.
    max_order : int
        Largest cardinality to emit; ``0 <= max_order <= dim``.

    Yields
    ------
    VariableSubset
        Starting with the empty set, ending with the lexicographically
        largest subset of cardinality `max_order`.
    """
    if dim > cap:
        raise ValueError(f"dimension {dim} exceeds the enumeration cap {cap}")
    if not 0 <= max_order <= dim:
        raise ValueError(f"max order {max_order} outside [0, {dim}]")
    for size in range(max_order + 1):
        yield from subsets_of_cardinality(dim, size, cap=cap)


def count_up_to(dim: int, max_order: int) -> int:
    """Number of subsets with ``|u| <= max_order`` (no enumeration cap)."""
    if not 0 <= max_order <= dim:
        raise ValueError(f"max order {max_order} outside [0, {dim}]")
    return sum(comb(dim, s) for s in range(max_order + 1))


def complement(u: VariableSubset) -> VariableSubset:
    return u.complement()


def strict_subsets(u: VariableSubset) -> Iterator[VariableSubset]:
    """All proper subsets of `u` (the empty set included), ordered by
    (cardinality, mask)."""
    if u.mask == 0:
        return
    masks = []
    sub = u.mask
    while True:
        sub = (sub - 1) & u.mask  # standard submask walk
        masks.append(sub)
        if sub == 0:
            break
    masks.sort(key=lambda m: (m.bit_count(), m))
    for m in masks:
        yield VariableSubset(m, u.dim)
