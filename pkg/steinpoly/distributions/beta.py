"""Beta tilt family X | Z ~ Beta(a + z, b - z)."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import stats, special

import steinpoly.types as t
from steinpoly.exceptions import DomainError

from .base import Support, GaussRule, CondFamily


class BetaTilt(CondFamily):
    """Beta family with s(x) = x^(a-1) (1-x)^(b-1), tau = log(x / (1-x)), mu = z."""

    KIND = t.FamilyKind.BetaTilt
    PARAMS = (
        t.Param("a", Fraction, "first shape at z = 0"),
        t.Param("b", Fraction, "second shape at z = 0"),
    )

    def __init__(self, a, b, z_domain=None, z1_dim=0):
        """Create the family from its two base shapes."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, a=a, b=b)

    def default_z_domain(self):
        """Middle half of (-a, b)."""
        a, b = (float(self._params[k]) for k in ("a", "b"))
        return (-a + (a + b) / 4, b - (a + b) / 4)

    def _validate(self):
        a, b = self._params["a"], self._params["b"]
        if a <= 0 or b <= 0:
            raise DomainError("Beta shapes must be positive")
        lo, hi = self.z_domain
        if not (-a < lo and hi < b):
            raise DomainError(
                f"Instrument domain [{lo}, {hi}] must lie inside ({-a}, {b})")

    def shapes(self, point, z2=None):
        """(a + z, b - z)."""
        z2 = point.scalar if z2 is None else z2
        return float(self._params["a"]) + z2, float(self._params["b"]) - z2

    def _mu(self, point):
        return point.scalar

    def _log_t(self, point):
        return -special.betaln(*self.shapes(point))

    def _log_s(self, x, z1):
        x = np.asarray(x, dtype=float)
        a, b = (float(self._params[k]) for k in ("a", "b"))
        return (a - 1) * np.log(x) + (b - 1) * np.log1p(-x)

    def _tau(self, x, z1):
        x = np.asarray(x, dtype=float)
        return np.log(x) - np.log1p(-x)

    def support(self, z1=(), z=None):
        """(0, 1)."""
        return Support(0.0, 1.0)

    def law(self, point, z2=None):
        """Frozen beta law."""
        return stats.beta(*self.shapes(point, z2))

    def gauss_rule(self, point, n):
        """Gauss-Jacobi rule on [-1, 1] mapped to [0, 1]."""
        alpha, beta = self.shapes(point)
        nodes, weights = special.roots_jacobi(n, beta - 1, alpha - 1)
        return GaussRule((1 + nodes) / 2, weights / weights.sum())

    def phi_psi_raw(self, z1=()):
        """phi = -x(1 - x) and psi = (a + b) x - a."""
        a, b = self._params["a"], self._params["b"]
        return t.Poly([0, -1, 1]), t.Poly([-a, a + b])

    def log_weight_ratio(self, z1=()):
        """s'/s = ((a - 1) - (a + b - 2) x) / (x (1 - x))."""
        a, b = self._params["a"], self._params["b"]
        return t.Poly([a - 1, -(a + b - 2)]), t.Poly([0, 1, -1])
