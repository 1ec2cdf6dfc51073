"""Normal location family X | Z ~ N(mu_tilde(z), sigma2(z1))."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import stats, special

import steinpoly.types as t
from steinpoly.utils import as_fraction
from steinpoly.exceptions import InvalidArgument

from .base import Support, GaussRule, CondFamily


class NormalLoc(CondFamily):
    """Normal location family.

    The conditional mean is mu_tilde(z) = intercept + slope * z2 so that
    mu(z) = mu_tilde(z) / sigma2, s(x) = exp(-x^2 / 2 sigma2) and tau(x) = x.
    """

    KIND = t.FamilyKind.NormalLoc
    PARAMS = (
        t.Param("sigma2", Fraction, "conditional variance", z1_dependent=True),
        t.Param("intercept", Fraction, "mean at z2 = 0", optional=True,
                z1_dependent=True),
        t.Param("slope", Fraction, "mean slope in z2", optional=True,
                z1_dependent=True),
    )

    def __init__(self, sigma2, intercept=0, slope=1, z_domain=None, z1_dim=0):
        """Create the family from the variance and the mean line."""
        super().__init__(
            z_domain=z_domain,
            z1_dim=z1_dim,
            sigma2=sigma2,
            intercept=intercept,
            slope=slope,
        )

    @classmethod
    def from_joint_normal(cls, mean_x, mean_z, var_x, var_z, cov, z_domain=None):
        """Build X | Z2 from a bivariate normal law of (X, Z2).

        The conditional mean is mean_x + (cov / var_z)(z2 - mean_z) and the
        conditional variance (1 - cov^2 / (var_x var_z)) var_x.
        """
        mean_x, mean_z = as_fraction(mean_x), as_fraction(mean_z)
        var_x, var_z, cov = (as_fraction(v) for v in (var_x, var_z, cov))
        if var_x <= 0 or var_z <= 0:
            raise InvalidArgument("Variances must be positive")
        sigma2 = var_x - cov * cov / var_z
        if sigma2 <= 0:
            raise InvalidArgument("Degenerate joint law: |correlation| = 1")
        slope = cov / var_z
        if slope == 0:
            raise InvalidArgument("X and Z2 are uncorrelated, Z2 is no instrument")
        return cls(
            sigma2=sigma2,
            intercept=mean_x - slope * mean_z,
            slope=slope,
            z_domain=z_domain,
        )

    def default_z_domain(self) -> tuple:
        """Domain used when none is declared."""
        return (-2.0, 2.0)

    def _validate(self):
        for name in ("sigma2", "slope"):
            value = self._params[name]
            if not callable(value) and value == 0:
                raise InvalidArgument(f"{name} must be non-zero")
        value = self._params["sigma2"]
        if not callable(value) and value <= 0:
            raise InvalidArgument("sigma2 must be positive")

    def mean(self, point: t.InstrumentPoint, z2=None):
        """Conditional mean mu_tilde(z)."""
        z2 = point.scalar if z2 is None else z2
        return self.fparam("intercept", point.z1) + self.fparam(
            "slope", point.z1) * z2

    def _mu(self, point):
        return self.mean(point) / self.fparam("sigma2", point.z1)

    def base_instrument(self, z1=()) -> t.InstrumentPoint:
        """Instrument value at which mu(z) = 0."""
        z2 = -self.param("intercept", z1) / self.param("slope", z1)
        return t.InstrumentPoint(z1=tuple(z1), z2=(float(z2),))

    def _log_t(self, point):
        sigma2 = self.fparam("sigma2", point.z1)
        mean = self.mean(point)
        return -mean * mean / (2 * sigma2) - 0.5 * math.log(2 * math.pi * sigma2)

    def _log_s(self, x, z1):
        return -np.square(x) / (2 * self.fparam("sigma2", z1))

    def _tau(self, x, z1):
        return np.asarray(x, dtype=float)

    def support(self, z1=(), z=None) -> Support:
        """Whole real line."""
        return Support(-np.inf, np.inf)

    def law(self, point, z2=None):
        """Frozen normal law."""
        scale = math.sqrt(self.fparam("sigma2", point.z1))
        return stats.norm(loc=self.mean(point, z2), scale=scale)

    def gauss_rule(self, point, n):
        """Gauss-Hermite rule (probabilists' weight) moved to the law."""
        nodes, weights = special.roots_hermitenorm(n)
        sigma = math.sqrt(self.fparam("sigma2", point.z1))
        return GaussRule(self.mean(point) + sigma * nodes, weights / weights.sum())

    def phi_psi_raw(self, z1=()):
        """phi = -1 and psi = x / sigma2."""
        sigma2 = self.param("sigma2", z1)
        return t.Poly([-1]), t.Poly([0, 1 / sigma2])

    def log_weight_ratio(self, z1=()):
        """s'/s = -x / sigma2."""
        sigma2 = self.param("sigma2", z1)
        return t.Poly([0, -1 / sigma2]), t.Poly([1])

    def closed_form_projection(self, j, z):
        """P_j = mu(z)^j."""
        return self.mu(z) ** j
