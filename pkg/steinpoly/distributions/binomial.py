"""Binomial shift family X | Z ~ Bin(N + mu(z), p) with integer mu(z) = z."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import stats

import steinpoly.types as t
from steinpoly.utils import rising
from steinpoly.exceptions import DomainError

from .base import Support, CondFamily


class BinomialShift(CondFamily):
    """Ord-family shift of Bin(N, p); Stein coupling constant c = p."""

    KIND = t.FamilyKind.BinomialShift
    DISCRETE = True
    FACTORIZED = False
    PARAMS = (
        t.Param("N", int, "base number of trials"),
        t.Param("p", Fraction, "success probability"),
    )

    def __init__(self, N, p, z_domain=None, z1_dim=0):
        """Create the family from its base binomial law."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, N=N, p=p)

    def default_z_domain(self):
        """Domain used when none is declared."""
        return (0.0, 20.0)

    def _validate(self):
        if self._params["N"] < 1:
            raise DomainError("N must be a positive integer")
        if not 0 < self._params["p"] < 1:
            raise DomainError("p must lie in (0, 1)")
        if self.z_domain[0] < 0:
            raise DomainError("The trial shift mu(z) must be non-negative")

    def _check_point(self, point):
        z = point.scalar
        if z < 0 or z != int(z):
            raise DomainError(f"mu(z) must be a non-negative integer, got {z}")

    @property
    def coupling(self) -> Fraction:
        """Constant c of the shifted operator."""
        return self._params["p"]

    def trials(self, point, z2=None):
        """N + mu(z)."""
        z2 = point.scalar if z2 is None else z2
        return np.rint(np.asarray(z2)).astype(int) + self._params["N"]

    def _mu(self, point):
        return point.scalar

    def identity_rate(self, z):
        """rho = p mu(z)."""
        return float(self.coupling) * self.mu(z)

    def _log_s(self, x, z1):
        return stats.binom(self._params["N"], float(self._params["p"])).logpmf(x)

    def _tau(self, x, z1):
        return np.asarray(x, dtype=float)

    def log_density(self, x, point):
        """Binomial log pmf."""
        return self.law(point).logpmf(np.asarray(x, dtype=float))

    def support(self, z1=(), z=None):
        """0..N + mu(z)."""
        top = self._params["N"] if z is None else int(self.trials(z))
        return Support(0, top, lattice=True)

    def law(self, point, z2=None):
        """Frozen binomial law."""
        trials = self.trials(point, z2)
        if trials.ndim == 0:
            trials = int(trials)
        return stats.binom(trials, float(self._params["p"]))

    def lattice_bounds(self, point):
        """Finite lattice 0..N + mu(z)."""
        return 0, int(self.trials(point))

    def phi_psi_ord(self, z1=()):
        """Ord pair phi = (1 - p) x and psi = pN - x."""
        N, p = self._params["N"], self._params["p"]
        return t.Poly([0, 1 - p]), t.Poly([p * N, -1])

    def closed_form_projection(self, j, z):
        """P_j = p^j mu (mu + 1) ... (mu + j - 1) / j! for Krawtchouk Q_j."""
        mu = int(self.check_z(z).scalar)
        p = self._params["p"]
        factorial = rising(1, j)
        return float(p ** j * rising(mu, j) / factorial)
