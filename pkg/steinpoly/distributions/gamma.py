"""Shifted gamma family with shape r + z2, rate delta and location g(z1)."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import stats, special

import steinpoly.types as t
from steinpoly.utils import falling
from steinpoly.exceptions import DomainError

from .base import Support, GaussRule, CondFamily


class GammaShift(CondFamily):
    """Gamma family with s(x) = (x-g)^(r-1) e^(-delta (x-g)) and tau = log(x-g)."""

    KIND = t.FamilyKind.GammaShift
    PARAMS = (
        t.Param("r", Fraction, "base shape", z1_dependent=True),
        t.Param("delta", Fraction, "rate", z1_dependent=True),
        t.Param("g", Fraction, "location", optional=True, z1_dependent=True),
    )

    def __init__(self, r, delta, g=0, z_domain=None, z1_dim=0):
        """Create the family from shape, rate and location."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, r=r, delta=delta, g=g)

    def default_z_domain(self):
        """Domain used when none is declared."""
        return (0.0, 4.0)

    def _validate(self):
        for name in ("r", "delta"):
            value = self._params[name]
            if not callable(value) and value <= 0:
                raise DomainError(f"{name} must be positive")
        r = self._params["r"]
        if not callable(r) and self.z_domain[0] <= -r:
            raise DomainError(
                f"Shape r + z2 must stay positive: z_domain starts at "
                f"{self.z_domain[0]} <= -r = {-r}"
            )

    def _check_point(self, point):
        if self.fparam("r", point.z1) + point.scalar <= 0:
            raise DomainError(f"Shape r + z2 is not positive at {point}")

    def shape(self, point, z2=None):
        """Shape r + z2 of the law."""
        z2 = point.scalar if z2 is None else z2
        return self.fparam("r", point.z1) + z2

    def _mu(self, point):
        return point.scalar

    def _log_t(self, point):
        k = self.shape(point)
        return k * math.log(self.fparam("delta", point.z1)) - special.gammaln(k)

    def _log_s(self, x, z1):
        y = np.asarray(x, dtype=float) - self.fparam("g", z1)
        r = self.fparam("r", z1)
        return (r - 1) * np.log(y) - self.fparam("delta", z1) * y

    def _tau(self, x, z1):
        return np.log(np.asarray(x, dtype=float) - self.fparam("g", z1))

    def support(self, z1=(), z=None):
        """(g, infinity)."""
        return Support(self.fparam("g", z1), np.inf)

    def law(self, point, z2=None):
        """Frozen gamma law."""
        return stats.gamma(
            a=self.shape(point, z2),
            loc=self.fparam("g", point.z1),
            scale=1.0 / self.fparam("delta", point.z1),
        )

    def gauss_rule(self, point, n):
        """Generalized Gauss-Laguerre rule moved to the law."""
        nodes, weights = special.roots_genlaguerre(n, self.shape(point) - 1)
        delta = self.fparam("delta", point.z1)
        return GaussRule(
            self.fparam("g", point.z1) + nodes / delta, weights / weights.sum())

    def phi_psi_raw(self, z1=()):
        """phi = -(x - g) and psi = delta (x - g) - r."""
        r, delta, g = (self.param(k, z1) for k in ("r", "delta", "g"))
        return t.Poly([g, -1]), t.Poly([-delta * g - r, delta])

    def log_weight_ratio(self, z1=()):
        """s'/s = ((r - 1) - delta (x - g)) / (x - g)."""
        r, delta, g = (self.param(k, z1) for k in ("r", "delta", "g"))
        return t.Poly([r - 1 + delta * g, -delta]), t.Poly([-g, 1])

    def closed_form_projection(self, j, z):
        """P_j = z2 (z2 - 1) ... (z2 - j + 1)."""
        return float(falling(self.check_z(z).scalar, j))
