"""Reference values computed independently of the package internals."""
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, pdtr

from vmalloc import ComplexityDistribution


def j_direct(h, n_vms):
    """Ratio of the two finite sums, term by term in exact rational arithmetic.

    Floating point would lose about nine digits to cancellation in the
    numerator at small h.
    """
    h = Fraction(h)
    num = den = Fraction(0)
    for n in range(1, n_vms + 1):
        fact = math.factorial(n - 1)
        power = h ** (n - 1)
        lower = 0 if n == 1 else (n - 1) * h ** (n - 2)
        num += (power - lower) / fact
        den += power / fact
    return float(num / den)


def single_unit_threshold(t, lam, horizon, alpha=1.0):
    """N=1 solution: exp(alpha y) = e + lam (T - t)."""
    return np.log(np.e + lam * (horizon - np.asarray(t))) / alpha


def poisson_threshold(remaining, n_vms, lam, alpha=1.0):
    """Exponential-family threshold with N units and ``remaining`` hours left.

    With K the expected number of qualified arrivals still to come, the
    threshold is (1 - log P(Pois(K) <= N-1)) / alpha and K solves
    lam * remaining / e = E[min(Pois(K), N)] / P(Pois(K) <= N-1).
    """
    if remaining <= 0:
        return 1.0 / alpha
    sold = lambda k: sum(gammainc(n, k) for n in range(1, n_vms + 1))
    f = lambda k: math.e * sold(k) / pdtr(n_vms - 1, k) - lam * remaining
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    k = brentq(f, 1e-14, hi, xtol=1e-14, rtol=1e-14)
    return (1.0 - math.log(pdtr(n_vms - 1, k))) / alpha


def revenue_fine_trapezoid(curve, d, lam, n_vms, t_from=0.0, points=400_001, q=1.0):
    """Expected revenue as the integral of y * qualified rate * P(Pois(H) <= N-1)."""
    s = np.linspace(t_from, curve.grid.t_end, points)
    y = curve(s)
    rate = lam * np.exp(-d.alpha * y)
    h = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(s) * (rate[1:] + rate[:-1]))])
    f = y * rate * pdtr(n_vms - 1, h)
    return q * float(np.sum(0.5 * np.diff(s) * (f[1:] + f[:-1])))


class PlainExponential(ComplexityDistribution):
    """Exponential family routed through the generic base-class hazard and inverse code."""

    family = "plain-exponential"

    def __init__(self, alpha):
        self.alpha = alpha

    def _pdf(self, x):
        return self.alpha * np.exp(-self.alpha * x)

    def _cdf(self, x):
        return -np.expm1(-self.alpha * x)

    def _sf(self, x):
        return np.exp(-self.alpha * x)

    def _inv_cdf(self, u):
        return -np.log1p(-u) / self.alpha

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha}
