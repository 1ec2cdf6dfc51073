"""Pascal shift family X | Z ~ NB(alpha + mu(z), p) with mu(z) = z."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import stats

import steinpoly.types as t
from steinpoly.utils import falling
from steinpoly.exceptions import DomainError

from .base import Support, CondFamily


class PascalShift(CondFamily):
    """Ord-family shift of the Pascal law NB(alpha, p); coupling c = 1 - p."""

    KIND = t.FamilyKind.PascalShift
    DISCRETE = True
    FACTORIZED = False
    PARAMS = (
        t.Param("alpha", int, "base number of successes"),
        t.Param("p", Fraction, "success probability"),
    )

    def __init__(self, alpha, p, z_domain=None, z1_dim=0):
        """Create the family from its base Pascal law."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, alpha=alpha, p=p)

    def default_z_domain(self):
        """Domain used when none is declared."""
        return (0.0, 6.0)

    def _validate(self):
        if self._params["alpha"] < 1:
            raise DomainError("alpha must be a positive integer")
        if not 0 < self._params["p"] < 1:
            raise DomainError("p must lie in (0, 1)")
        if self.z_domain[0] <= -self._params["alpha"]:
            raise DomainError("alpha + mu(z) must stay positive")

    def _check_point(self, point):
        if point.scalar <= -self._params["alpha"]:
            raise DomainError(f"alpha + mu(z) is not positive at {point}")

    @property
    def coupling(self) -> Fraction:
        """Constant c of the shifted operator."""
        return 1 - self._params["p"]

    def _mu(self, point):
        return point.scalar

    def identity_rate(self, z):
        """rho = (1 - p) mu(z)."""
        return float(self.coupling) * self.mu(z)

    def _log_s(self, x, z1):
        base = stats.nbinom(float(self._params["alpha"]), float(self._params["p"]))
        return base.logpmf(x)

    def _tau(self, x, z1):
        return np.asarray(x, dtype=float)

    def log_density(self, x, point):
        """Negative binomial log pmf."""
        return self.law(point).logpmf(np.asarray(x, dtype=float))

    def support(self, z1=(), z=None):
        """0, 1, 2, ..."""
        return Support(0, np.inf, lattice=True)

    def law(self, point, z2=None):
        """Frozen negative binomial law with alpha + mu(z) successes."""
        z2 = point.scalar if z2 is None else z2
        return stats.nbinom(
            float(self._params["alpha"]) + np.asarray(z2, dtype=float),
            float(self._params["p"]),
        )

    def lattice_bounds(self, point):
        """Lattice starts at 0 and is unbounded."""
        return 0, None

    def phi_psi_ord(self, z1=()):
        """Ord pair phi = x and psi = (1 - p) alpha - p x."""
        alpha, p = self._params["alpha"], self._params["p"]
        return t.Poly([0, 1]), t.Poly([(1 - p) * alpha, -p])

    def closed_form_projection(self, j, z):
        """P_j = (-1)^j mu (mu - 1) ... (mu - j + 1) for Meixner Q_j."""
        mu = self.check_z(z).scalar
        return float((-1) ** j * falling(mu, j))
