"""Single-site distributions of the random potential.

All built-in laws have compact support ``[v_minus, v_plus]`` and are sampled by
inverse CDF. ``power_tail`` is the law of ``v_plus - (v_plus - v_minus) U**(1/mu)``,
so ``P(omega >= v_plus - eps) = (eps / (v_plus - v_minus))**mu`` exactly.
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import ValidationError

logger = logging.getLogger(__name__)

KINDS = ("uniform", "two_point", "power_tail", "point_mass")


@dataclass(frozen=True)
class SingleSiteDistribution:
    """``kind`` plus support bounds; ``q`` is the weight at ``v_plus`` for two-point laws."""

    kind: str
    v_minus: float
    v_plus: float = 0.0
    q: Optional[float] = None
    mu: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}, expected one of {KINDS}")
        if not (math.isfinite(self.v_minus) and math.isfinite(self.v_plus)):
            raise ValidationError("support bounds must be finite")
        if self.v_minus > self.v_plus:
            raise ValidationError(f"support [{self.v_minus}, {self.v_plus}] is empty")
        if self.kind == "two_point" and (self.q is None or not 0 <= self.q <= 1):
            raise ValidationError(f"two-point weight q must lie in [0, 1], got {self.q}")
        if self.kind == "power_tail":
            if self.mu is None or not self.mu > 0:
                raise ValidationError(f"power-tail exponent must be positive, got {self.mu}")
            if self.v_minus == self.v_plus:
                raise ValidationError("power-tail law needs v_minus < v_plus")
        if self.kind == "point_mass" and self.v_minus != self.v_plus:
            raise ValidationError("a point mass has v_minus == v_plus")

    # Construction ---------------------------------------------------------

    @classmethod
    def uniform(cls, a: float, b: float) -> "SingleSiteDistribution":
        return cls("uniform", float(a), float(b))

    @classmethod
    def two_point(cls, v_minus: float, v_plus: float, q: float) -> "SingleSiteDistribution":
        return cls("two_point", float(v_minus), float(v_plus), q=float(q))

    @classmethod
    def power_tail(cls, v_minus: float, mu: float, v_plus: float = 0.0) -> "SingleSiteDistribution":
        return cls("power_tail", float(v_minus), float(v_plus), mu=float(mu))

    @classmethod
    def point_mass(cls, value: float) -> "SingleSiteDistribution":
        return cls("point_mass", float(value), float(value))

    @classmethod
    def from_dict(cls, data: dict) -> "SingleSiteDistribution":
        data = dict(data)
        kind = data.pop("kind", None)
        if kind == "uniform":
            return cls.uniform(data["a"], data["b"])
        if kind == "two_point":
            return cls.two_point(data["v_minus"], data["v_plus"], data["q"])
        if kind == "power_tail":
            return cls.power_tail(data["v_minus"], data["mu"], data.get("v_plus", 0.0))
        if kind == "point_mass":
            return cls.point_mass(data["value"])
        raise ValidationError(f"unknown distribution kind {kind!r}, expected one of {KINDS}")

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "a": self.v_minus, "b": self.v_plus}
        if self.kind == "two_point":
            return {"kind": "two_point", "v_minus": self.v_minus, "v_plus": self.v_plus, "q": self.q}
        if self.kind == "power_tail":
            return {"kind": "power_tail", "v_minus": self.v_minus, "v_plus": self.v_plus, "mu": self.mu}
        return {"kind": "point_mass", "value": self.v_minus}

    # Properties -----------------------------------------------------------

    @property
    def width(self) -> float:
        return self.v_plus - self.v_minus

    @property
    def support(self) -> Tuple[float, float]:
        return self.v_minus, self.v_plus

    @property
    def is_degenerate(self) -> bool:
        """All mass at one point."""
        if self.kind == "point_mass" or self.width == 0:
            return True
        return self.kind == "two_point" and self.q in (0.0, 1.0)

    def atoms(self) -> List[float]:
        if self.kind == "point_mass":
            return [self.v_minus]
        if self.kind == "two_point":
            return [v for v, mass in ((self.v_minus, 1 - self.q), (self.v_plus, self.q)) if mass > 0]
        return []

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.v_minus + self.v_plus)
        if self.kind == "two_point":
            return self.v_minus + self.q * self.width
        if self.kind == "power_tail":
            return self.v_plus - self.width * self.mu / (self.mu + 1)
        return self.v_minus

    @property
    def var(self) -> float:
        if self.kind == "uniform":
            return self.width ** 2 / 12
        if self.kind == "two_point":
            return self.q * (1 - self.q) * self.width ** 2
        if self.kind == "power_tail":
            mu = self.mu
            return self.width ** 2 * (mu / (mu + 2) - (mu / (mu + 1)) ** 2)
        return 0.0

    # Distribution functions ----------------------------------------------

    def ppf(self, u):
        """Inverse CDF on ``[0, 1)``, clipped to the support."""
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            values = self.v_minus + self.width * u
        elif self.kind == "two_point":
            values = np.where(u >= 1 - self.q, self.v_plus, self.v_minus)
        elif self.kind == "power_tail":
            values = self.v_plus - self.width * (1 - u) ** (1 / self.mu)
        else:
            values = np.full_like(u, self.v_minus)
        return np.clip(values, self.v_minus, self.v_plus)

    def cdf(self, v):
        """``P(omega <= v)``."""
        v = np.asarray(v, dtype=float)
        if self.kind == "uniform":
            if self.width == 0:
                return np.where(v >= self.v_minus, 1.0, 0.0)
            return np.clip((v - self.v_minus) / self.width, 0.0, 1.0)
        if self.kind == "two_point":
            return np.where(v >= self.v_plus, 1.0, np.where(v >= self.v_minus, 1 - self.q, 0.0))
        if self.kind == "power_tail":
            distance = np.clip((self.v_plus - v) / self.width, 0.0, 1.0)
            return 1 - distance ** self.mu
        return np.where(v >= self.v_minus, 1.0, 0.0)

    def prob_above(self, t: float) -> float:
        """``P(omega > t)``."""
        if self.kind == "power_tail":
            # avoids cancellation in 1 - cdf for t close to v_plus
            distance = min(max((self.v_plus - t) / self.width, 0.0), 1.0)
            return distance ** self.mu
        return float(1 - self.cdf(t))

    def prob_interval(self, low: float, high: float) -> float:
        """``P(low < omega <= high)``."""
        if high <= low:
            return 0.0
        return float(self.cdf(high) - self.cdf(low))

    # Frames and constants ------------------------------------------------

    def shifted(self, offset: float) -> "SingleSiteDistribution":
        """Law of ``omega + offset``."""
        return replace(self, v_minus=self.v_minus + offset, v_plus=self.v_plus + offset)

    def normalized(self) -> Tuple["SingleSiteDistribution", float]:
        """Shift so that ``v_plus = 0``; returns the law and the removed offset."""
        return self.shifted(-self.v_plus), self.v_plus

    def tail_constants(self) -> Tuple[float, float]:
        """Realized ``(C, mu)`` with ``P(omega in [v_plus - eps, v_plus]) >= C eps**mu`` for small eps."""
        if self.kind == "uniform":
            if self.width == 0:
                return 1.0, 0.0
            return 1.0 / self.width, 1.0
        if self.kind == "two_point":
            # q = 0 leaves no mass near v_plus, so no positive C exists
            return float(self.q), 0.0
        if self.kind == "power_tail":
            return self.width ** (-self.mu), float(self.mu)
        return 1.0, 0.0

    def describe(self) -> dict:
        summary = asdict(self)
        summary.update(mean=self.mean, var=self.var, degenerate=self.is_degenerate)
        return summary
