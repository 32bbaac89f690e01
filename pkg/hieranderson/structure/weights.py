"""Probability weights of the hierarchical Laplacian.

``p_s`` is the rate of jumping uniformly inside the rank-``s`` cluster,
``lam(r) = p_1 + ... + p_r`` are the eigenvalues of the free operator and
``tail(k) = 1 - lam(k)`` is the mass missing from a finite volume of rank ``k``.
Tails are never obtained by summing an infinite series: geometric weights
use the closed form ``rho**-k``, explicit lists a compensated partial sum.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

import numpy as np

from ..config import RANK_SLACK
from ..exceptions import DomainError, RangeError, ValidationError

logger = logging.getLogger(__name__)

GEOMETRIC = "geometric"
EXPLICIT = "explicit"
TAIL_RULES = ("geometric", "reject")
# explicit lists without continuation must sum to 1 within this slack
EXPLICIT_SUM_SLACK = 1e-12


@dataclass(frozen=True)
class WeightSequence:
    """Geometric weights ``(rho-1) rho**-s`` or an explicit list with a tail rule.

    For explicit lists ``tail_rule`` decides what happens beyond the list:
    ``"geometric"`` spreads the leftover mass ``1 - sum(explicit)`` geometrically
    with base ``rho``; ``"reject"`` requires the list to sum to one and sets
    ``p_s = 0`` past its end.
    """

    kind: str = GEOMETRIC
    rho: Optional[float] = None
    explicit: Tuple[float, ...] = field(default_factory=tuple)
    tail_rule: str = "geometric"

    def __post_init__(self):
        object.__setattr__(self, "explicit", tuple(float(p) for p in self.explicit))
        if self.kind == GEOMETRIC:
            if self.rho is None or not self.rho > 1:
                raise ValidationError(f"geometric weights need rho > 1, got {self.rho}")
            return
        if self.kind != EXPLICIT:
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        if not self.explicit:
            raise ValidationError("explicit weights need a non-empty list")
        if any(not 0 < p < 1 for p in self.explicit):
            raise ValidationError(f"explicit weights must satisfy 0 < p_s < 1, got {self.explicit}")
        total = math.fsum(self.explicit)
        if total > 1 + EXPLICIT_SUM_SLACK:
            raise ValidationError(f"explicit weights sum to {total!r} > 1")
        if self.tail_rule not in TAIL_RULES:
            raise ValidationError(f"tail rule must be one of {TAIL_RULES}, got {self.tail_rule!r}")
        if self.tail_rule == "geometric":
            if self.rho is None or not self.rho > 1:
                raise ValidationError("a geometric continuation needs rho > 1")
            if total >= 1:
                raise ValidationError("a geometric continuation needs leftover mass 1 - sum(p) > 0")
        elif total < 1 - EXPLICIT_SUM_SLACK:
            raise ValidationError(
                f"explicit weights sum to {total!r} < 1 and the tail rule rejects continuation"
            )

    @property
    def remainder(self) -> float:
        """Mass beyond an explicit list (zero for geometric weights)."""
        if self.kind == GEOMETRIC:
            return 0.0
        return max(0.0, math.fsum((1.0, *(-p for p in self.explicit))))

    def p(self, s: int) -> float:
        if s < 0:
            raise RangeError(f"weights are indexed from 0, got {s}")
        if s == 0:
            return 0.0
        if self.kind == GEOMETRIC:
            return (self.rho - 1) * self.rho ** (-s)
        if s <= len(self.explicit):
            return self.explicit[s - 1]
        if self.tail_rule == "reject":
            return 0.0
        return self.remainder * (self.rho - 1) * self.rho ** (-(s - len(self.explicit)))

    def probabilities(self, kappa: int) -> np.ndarray:
        """``p_1, ..., p_kappa`` as an array."""
        return np.array([self.p(s) for s in range(1, kappa + 1)], dtype=float)

    def lam(self, r: int) -> float:
        if r < 0:
            raise RangeError(f"rank must be >= 0, got {r}")
        if self.kind == GEOMETRIC:
            return -math.expm1(-r * math.log(self.rho))
        return math.fsum((1.0, -self.tail(r)))

    def tail(self, kappa: int) -> float:
        if kappa < 0:
            raise RangeError(f"rank must be >= 0, got {kappa}")
        if self.kind == GEOMETRIC:
            return self.rho ** (-kappa)
        listed = len(self.explicit)
        if kappa < listed:
            return math.fsum((*self.explicit[kappa:], self.remainder))
        if self.tail_rule == "reject":
            return 0.0
        return self.remainder * self.rho ** (-(kappa - listed))

    def log_tail(self, kappa: int) -> float:
        if self.kind == GEOMETRIC:
            if kappa < 0:
                raise RangeError(f"rank must be >= 0, got {kappa}")
            return -kappa * math.log(self.rho)
        tail = self.tail(kappa)
        return math.log(tail) if tail > 0 else -math.inf

    def to_dict(self) -> dict:
        if self.kind == GEOMETRIC:
            return {"kind": GEOMETRIC, "rho": self.rho}
        return {
            "kind": EXPLICIT,
            "rho": self.rho,
            "explicit": list(self.explicit),
            "tail_rule": self.tail_rule,
        }


@dataclass(frozen=True)
class SpectralDimension:
    n: int
    rho: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"homogeneous degree must be an integer >= 2, got {self.n}")
        if not self.rho > 1:
            raise ValidationError(f"decay base must satisfy rho > 1, got {self.rho}")

    @property
    def d_s(self) -> float:
        return 2 * math.log(self.n) / math.log(self.rho)


@dataclass(frozen=True)
class DecayConstants:
    """Realized ``min`` / ``max`` of ``p_r rho**r`` over the inspected ranks."""

    c1: float
    c2: float
    ranks: Tuple[int, ...]


def geometric_weights(rho: float) -> WeightSequence:
    return WeightSequence(kind=GEOMETRIC, rho=float(rho))


def explicit_weights(
    probabilities: Iterable[float], tail_rule: str = "geometric", rho: Optional[float] = None
) -> WeightSequence:
    return WeightSequence(
        kind=EXPLICIT,
        rho=None if rho is None else float(rho),
        explicit=tuple(probabilities),
        tail_rule=tail_rule,
    )


def spectral_dimension(n: int, rho: float) -> SpectralDimension:
    return SpectralDimension(n=int(n), rho=float(rho))


def k_of_E(dim: SpectralDimension, E: float, alpha: float) -> int:
    """Largest rank ``r`` with ``n**r <= (alpha E)**(-d_s/2)``."""
    if not E > 0:
        raise ValidationError(f"energy must be positive, got {E}")
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    exponent = -(dim.d_s / 2) * math.log(alpha * E) / math.log(dim.n)
    rank = math.floor(exponent + RANK_SLACK)
    if rank < 1:
        raise DomainError(
            f"(alpha E)^(-d_s/2) = n^{exponent:.6g} < n: no rank qualifies for E={E}, alpha={alpha}"
        )
    return rank


def K_of_E(w: WeightSequence, E: float, max_rank: int = 100_000) -> int:
    """Smallest rank ``r >= 1`` with ``tail(r) < E/2`` (strict)."""
    if not E > 0:
        raise ValidationError(f"energy must be positive, got {E}")
    threshold = math.log(E / 2) - RANK_SLACK
    if w.kind == GEOMETRIC:
        # log_tail(r) = -r ln(rho) is linear, so the answer is closed form
        rank = max(1, math.floor(-threshold / math.log(w.rho)) + 1)
        while rank > 1 and w.log_tail(rank - 1) < threshold:
            rank -= 1
        while w.log_tail(rank) >= threshold:
            rank += 1
        return rank
    for rank in range(1, max_rank + 1):
        if w.log_tail(rank) < threshold:
            return rank
    raise DomainError(f"tail stays >= E/2 up to rank {max_rank} for E={E}")


def decay_constants(w: WeightSequence, rho: float, ranks: Iterable[int]) -> DecayConstants:
    ranks = tuple(int(r) for r in ranks)
    if not ranks:
        raise ValidationError("decay_constants needs at least one rank")
    ratios = [w.p(r) * rho ** r for r in ranks]
    return DecayConstants(c1=min(ratios), c2=max(ratios), ranks=ranks)
