"""Hierarchical structure on a countable configuration space.

Elements are enumerated so that every cluster of rank ``r`` is a contiguous
block of ``volume(r)`` indices, counted from the left. Equivalently an element
is a mixed-radix digit sequence ``(xi_1, xi_2, ...)`` with
``xi_r in {0, ..., n_r - 1}``: ``xi_1`` is the position of the element inside its
rank-1 cluster and ``xi_r`` the position of its rank-(r-1) cluster inside its
rank-r cluster. Index and digits are related by ``k = sum_r xi_r * |Q_{r-1}|``.

Digit-wise addition modulo ``n_r`` turns the space into an Abelian group whose
translations map clusters onto clusters, which is what makes the random
Hamiltonian covariant under shifts of the potential.

Only indices below ``volume(max_rank)`` are materialized; everything else is a
:class:`~hieranderson.exceptions.RangeError`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import RangeError, ValidationError


# ---------------------------------------------------------------------------
# Data classes


@dataclass(frozen=True)
class HierarchicalStructure:
    """Branching numbers ``n_r`` and the largest materialized rank.

    ``prefix`` lists ``n_1, ..., n_L`` explicitly; ``degree`` (if given) is the
    homogeneous continuation ``n_r = degree`` for ``r > L``. A purely
    homogeneous structure has an empty prefix.
    """

    prefix: Tuple[int, ...] = ()
    degree: Optional[int] = None
    max_rank: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", tuple(int(n) for n in self.prefix))
        if self.degree is None and not self.prefix:
            raise ValidationError("a hierarchical structure needs a prefix or a degree")
        if any(n < 2 for n in self.prefix):
            raise ValidationError(f"branching numbers must be >= 2, got {self.prefix}")
        if self.degree is not None and int(self.degree) < 2:
            raise ValidationError(f"homogeneous degree must be >= 2, got {self.degree}")
        if self.max_rank < 0:
            raise ValidationError(f"max_rank must be >= 0, got {self.max_rank}")
        if self.degree is None and self.max_rank > len(self.prefix):
            raise ValidationError(
                f"max_rank {self.max_rank} exceeds the explicit branching prefix "
                f"of length {len(self.prefix)} and no continuation degree is set"
            )

    @classmethod
    def homogeneous(cls, n: int, max_rank: int) -> "HierarchicalStructure":
        return cls(prefix=(), degree=int(n), max_rank=int(max_rank))

    @classmethod
    def from_branching(
        cls,
        branching: Sequence[int],
        degree: Optional[int] = None,
        max_rank: Optional[int] = None,
    ) -> "HierarchicalStructure":
        branching = tuple(int(n) for n in branching)
        return cls(
            prefix=branching,
            degree=degree,
            max_rank=len(branching) if max_rank is None else int(max_rank),
        )

    # Branching and volumes -------------------------------------------------

    @property
    def is_homogeneous(self) -> bool:
        return self.degree is not None and all(n == self.degree for n in self.prefix)

    def branching(self, r: int) -> int:
        """``n_r`` for ``r >= 1``."""
        if r < 1:
            raise RangeError(f"branching numbers are indexed from rank 1, got {r}")
        if r <= len(self.prefix):
            return self.prefix[r - 1]
        if self.degree is not None:
            return int(self.degree)
        raise RangeError(f"rank {r} is beyond the explicit branching prefix")

    @cached_property
    def branchings(self) -> Tuple[int, ...]:
        return tuple(self.branching(r) for r in range(1, self.max_rank + 1))

    @cached_property
    def volumes(self) -> Tuple[int, ...]:
        volumes = [1]
        for n in self.branchings:
            volumes.append(volumes[-1] * n)
        return tuple(volumes)

    def volume(self, r: int) -> int:
        """``|Q_r|``; defined beyond ``max_rank`` whenever the branching rule is."""
        if r < 0:
            raise RangeError(f"rank must be >= 0, got {r}")
        if r <= self.max_rank:
            return self.volumes[r]
        volume = self.volumes[-1]
        for s in range(self.max_rank + 1, r + 1):
            volume *= self.branching(s)
        return volume

    @property
    def size(self) -> int:
        """Number of materialized elements, ``volume(max_rank)``."""
        return self.volumes[self.max_rank]

    def with_max_rank(self, max_rank: int) -> "HierarchicalStructure":
        return dataclasses.replace(self, max_rank=int(max_rank))

    def check_rank(self, r: int) -> None:
        if not 0 <= r <= self.max_rank:
            raise RangeError(f"rank {r} outside the materialized range 0..{self.max_rank}")

    def check_index(self, k: int) -> None:
        if not 0 <= k < self.size:
            raise RangeError(f"index {k} outside the materialized range 0..{self.size - 1}")


@dataclass(frozen=True, eq=False)
class Point:
    """Mixed-radix digits ``(xi_1, xi_2, ...)``; trailing zeros are implicit."""

    digits: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))

    @property
    def canonical(self) -> Tuple[int, ...]:
        digits = self.digits
        end = len(digits)
        while end and digits[end - 1] == 0:
            end -= 1
        return digits[:end]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)

    def digit(self, r: int) -> int:
        """``xi_r`` (1-based); zero beyond the stored digits."""
        return self.digits[r - 1] if 1 <= r <= len(self.digits) else 0

    @property
    def support_rank(self) -> int:
        """Largest rank with a nonzero digit; the point lies in ``Q_r(x_0)`` for r >= this."""
        return len(self.canonical)

    def padded(self, length: int) -> Tuple[int, ...]:
        canonical = self.canonical
        if len(canonical) > length:
            raise RangeError(f"point {canonical} has nonzero digits beyond rank {length}")
        return canonical + (0,) * (length - len(canonical))


@dataclass(frozen=True)
class ClusterRef:
    """Cluster of rank ``rank`` at ``position`` (counted from the left)."""

    rank: int
    position: int

    def members(self, struct: HierarchicalStructure) -> range:
        volume = struct.volume(self.rank)
        return range(self.position * volume, (self.position + 1) * volume)

    def contains(self, struct: HierarchicalStructure, k: int) -> bool:
        return k // struct.volume(self.rank) == self.position


# ---------------------------------------------------------------------------
# Enumeration


def origin(struct: HierarchicalStructure) -> Point:
    return Point((0,) * struct.max_rank)


def validate_point(struct: HierarchicalStructure, p: Point) -> None:
    if len(p.canonical) > struct.max_rank:
        raise RangeError(
            f"point {p.canonical} has nonzero digits beyond max_rank {struct.max_rank}"
        )
    for r, xi in enumerate(p.digits, start=1):
        if xi == 0:
            continue
        if xi < 0 or xi >= struct.branching(r):
            raise ValidationError(
                f"digit xi_{r}={xi} violates 0 <= xi_{r} < n_{r}={struct.branching(r)}"
            )


def index_to_point(struct: HierarchicalStructure, k: int) -> Point:
    struct.check_index(k)
    digits = []
    for n in struct.branchings:
        k, xi = divmod(k, n)
        digits.append(xi)
    return Point(tuple(digits))


def point_to_index(struct: HierarchicalStructure, p: Point) -> int:
    validate_point(struct, p)
    return sum(xi * struct.volume(r - 1) for r, xi in enumerate(p.digits, start=1) if xi)


def cluster_of(struct: HierarchicalStructure, k: int, r: int) -> ClusterRef:
    struct.check_rank(r)
    struct.check_index(k)
    return ClusterRef(rank=r, position=k // struct.volume(r))


def group_add(struct: HierarchicalStructure, p: Point, q: Point) -> Point:
    validate_point(struct, p)
    validate_point(struct, q)
    return Point(
        tuple(
            (p.digit(r) + q.digit(r)) % n
            for r, n in enumerate(struct.branchings, start=1)
        )
    )


def group_neg(struct: HierarchicalStructure, p: Point) -> Point:
    validate_point(struct, p)
    return Point(
        tuple((n - p.digit(r)) % n for r, n in enumerate(struct.branchings, start=1))
    )


# ---------------------------------------------------------------------------
# Vectorised helpers


def indices_to_digits(
    struct: HierarchicalStructure, indices: Iterable[int], rank: Optional[int] = None
) -> np.ndarray:
    """Digit table of shape ``(len(indices), rank)``; column ``r-1`` holds ``xi_r``."""
    rank = struct.max_rank if rank is None else rank
    struct.check_rank(rank)
    remaining = np.asarray(indices, dtype=np.int64).copy()
    if remaining.size and (remaining.min() < 0 or remaining.max() >= struct.volume(rank)):
        raise RangeError(f"indices outside 0..{struct.volume(rank) - 1}")
    digits = np.empty((remaining.size, rank), dtype=np.int64)
    for r in range(rank):
        n = struct.branching(r + 1)
        digits[:, r] = remaining % n
        remaining //= n
    return digits


def digits_to_indices(struct: HierarchicalStructure, digits: np.ndarray) -> np.ndarray:
    digits = np.asarray(digits, dtype=np.int64)
    weights = np.asarray(struct.volumes[: digits.shape[1]], dtype=np.int64)
    return digits @ weights


def translate_indices(
    struct: HierarchicalStructure, x: Point, indices: Iterable[int]
) -> np.ndarray:
    """``index(x + y)`` for every ``y`` in ``indices``."""
    validate_point(struct, x)
    rank = struct.max_rank
    digits = indices_to_digits(struct, indices, rank)
    shift = np.asarray(x.padded(rank), dtype=np.int64)
    radix = np.asarray(struct.branchings, dtype=np.int64)
    return digits_to_indices(struct, (digits + shift) % radix)


def common_rank_matrix(struct: HierarchicalStructure, kappa: int) -> np.ndarray:
    """``d(x, y)``: smallest rank of a cluster containing both ``x`` and ``y`` in ``Q_kappa``.

    ``d`` is the largest rank whose digits differ (0 on the diagonal).
    """
    digits = indices_to_digits(struct, np.arange(struct.volume(kappa)), kappa)
    size = digits.shape[0]
    ranks = np.zeros((size, size), dtype=np.int16)
    for r in range(1, kappa + 1):
        column = digits[:, r - 1]
        ranks[column[:, None] != column[None, :]] = r
    return ranks
