"""Poisson tilt family X | Z ~ Poisson(m0 + z)."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import stats, special

import steinpoly.types as t
from steinpoly.exceptions import DomainError

from .base import Support, CondFamily


class PoissonTilt(CondFamily):
    """Power-series form t(z) s(x) [mu(z) + 1]^x with s(x) = e^-m0 m0^x / x!."""

    KIND = t.FamilyKind.PoissonTilt
    DISCRETE = True
    PARAMS = (t.Param("m0", Fraction, "base rate"),)

    def __init__(self, m0, z_domain=None, z1_dim=0):
        """Create the family from its base rate."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, m0=m0)

    def default_z_domain(self):
        """Domain used when none is declared."""
        return (0.0, 2.0)

    def _validate(self):
        m0 = self._params["m0"]
        if m0 <= 0:
            raise DomainError("Base rate must be positive")
        if self.z_domain[0] <= -m0:
            raise DomainError(
                f"mu(z) - m must stay positive: z_domain starts at "
                f"{self.z_domain[0]} <= -m0"
            )

    def _check_point(self, point):
        if point.scalar <= -float(self._params["m0"]):
            raise DomainError(f"Rate m0 + z is not positive at {point}")

    def rate(self, point, z2=None):
        """Poisson rate m0 + z."""
        z2 = point.scalar if z2 is None else z2
        return float(self._params["m0"]) + z2

    def m(self, z1=()):
        """Base point m = -1."""
        return Fraction(-1)

    def _mu(self, point):
        return point.scalar / float(self._params["m0"])

    def _log_t(self, point):
        return -point.scalar

    def _log_s(self, x, z1):
        x = np.asarray(x, dtype=float)
        m0 = float(self._params["m0"])
        return -m0 + x * math.log(m0) - special.gammaln(x + 1)

    def _tau(self, x, z1):
        return np.asarray(x, dtype=float)

    def support(self, z1=(), z=None):
        """0, 1, 2, ..."""
        return Support(0, np.inf, lattice=True)

    def law(self, point, z2=None):
        """Frozen Poisson law."""
        return stats.poisson(self.rate(point, z2))

    def lattice_bounds(self, point):
        """Lattice starts at 0 and is unbounded."""
        return 0, None

    def weight_ratio(self, z1=()):
        """s(x - 1) / s(x) = x / m0."""
        return t.RationalFunction(t.Poly([0, 1 / self._params["m0"]]))

    def closed_form_projection(self, j, z):
        """P_j = (z / m0)^j."""
        return self.mu(z) ** j
