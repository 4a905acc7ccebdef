"""Task-complexity distributions.

Everything downstream talks to a distribution through ``pdf``, ``cdf``,
``sf``, ``inv_cdf`` and ``hazard_gap``, so adding a family means subclassing
:class:`ComplexityDistribution` and registering it in ``FAMILIES``.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError


def _as_support(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("complexity must be nonnegative")
    return arr


def _out(arr, like):
    # hand scalars back as Python floats
    return float(arr) if np.ndim(like) == 0 else arr


class ComplexityDistribution(ABC):
    """Distribution of task complexity on [0, inf)."""

    family = "abstract"

    @abstractmethod
    def _pdf(self, x): ...

    @abstractmethod
    def _cdf(self, x): ...

    @abstractmethod
    def _inv_cdf(self, u): ...

    def _sf(self, x):
        return 1.0 - self._cdf(x)

    def pdf(self, x):
        return _out(self._pdf(_as_support(x)), x)

    def cdf(self, x):
        return _out(self._cdf(_as_support(x)), x)

    def sf(self, x):
        """Survival function 1 - cdf(x)."""
        return _out(self._sf(_as_support(x)), x)

    def inv_cdf(self, u):
        arr = np.asarray(u, dtype=float)
        if np.any(arr < 0) or np.any(arr >= 1):
            raise DomainError("quantile level must lie in [0, 1)")
        return _out(self._inv_cdf(arr), u)

    def hazard_gap(self, x):
        """(1 - F(x)) / f(x), the inverse hazard rate."""
        arr = _as_support(x)
        dens = self._pdf(arr)
        if np.any(dens <= 0):
            raise EvaluationError("hazard gap undefined where the density vanishes")
        return _out(self._sf(arr) / dens, x)

    def virtual_valuation(self, x):
        return _out(_as_support(x) - np.asarray(self.hazard_gap(x)), x)

    def inverse_virtual_valuation(self, v, tol=1e-12):
        """Smallest x >= 0 with x - hazard_gap(x) >= v.

        Assumes the virtual valuation is nondecreasing. Values below the
        virtual valuation at 0 map to 0. Generic version bisects.
        """
        target = np.atleast_1d(np.asarray(v, dtype=float))
        lo = np.zeros_like(target)
        hi = np.ones_like(target)
        grow = self._virtual(hi) < target
        while np.any(grow):
            hi = np.where(grow, 2.0 * hi, hi)
            if np.any(hi > 1e300):
                raise EvaluationError("virtual valuation never reaches the target")
            grow = self._virtual(hi) < target
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            up = self._virtual(mid) < target
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
            if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
                break
        res = np.where(self._virtual(np.zeros_like(target)) >= target, 0.0, hi)
        return _out(res if np.ndim(v) else res[0], v)

    def _virtual(self, x):
        return x - self._sf(x) / self._pdf(x)

    @abstractmethod
    def to_dict(self) -> dict: ...

    @staticmethod
    def from_dict(data: dict) -> "ComplexityDistribution":
        if not isinstance(data, dict) or "family" not in data:
            raise DomainError("distribution description needs a 'family' key")
        fam = FAMILIES.get(data["family"])
        if fam is None:
            raise DomainError(f"unknown distribution family {data['family']!r}")
        return fam.from_params(data)


@dataclass(frozen=True)
class Exponential(ComplexityDistribution):
    """Exponential complexities with rate ``alpha`` (mean 1/alpha)."""

    alpha: float = 1.0
    family = "exponential"

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and a > 0):
            raise DomainError(f"alpha must be positive and finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    def _pdf(self, x):
        return self.alpha * np.exp(-self.alpha * x)

    def _cdf(self, x):
        return -np.expm1(-self.alpha * x)

    def _sf(self, x):
        return np.exp(-self.alpha * x)

    def _inv_cdf(self, u):
        return -np.log1p(-u) / self.alpha

    def hazard_gap(self, x):
        # constant; avoids 0/0 once the density underflows
        arr = _as_support(x)
        return _out(np.full(arr.shape, 1.0 / self.alpha), x)

    def _virtual(self, x):
        return x - 1.0 / self.alpha

    def inverse_virtual_valuation(self, v, tol=None):
        arr = np.maximum(np.asarray(v, dtype=float) + 1.0 / self.alpha, 0.0)
        return _out(arr, v)

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha}

    @classmethod
    def from_params(cls, data):
        if "alpha" not in data:
            raise DomainError("exponential distribution needs 'alpha'")
        return cls(alpha=float(data["alpha"]))


FAMILIES = {"exponential": Exponential}
