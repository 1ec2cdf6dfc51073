"""Negative binomial tilt family p(x|z) = t(z) C(x+alpha-1, x) p^alpha [1-p+mu]^x."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import stats, special

import steinpoly.types as t
from steinpoly.config import TOLERANCES, LATTICE_MAX_POINTS
from steinpoly.utils import rising
from steinpoly.exceptions import DomainError, NumericalFailure

from .base import Support, CondFamily


class NegBinTilt(CondFamily):
    """Negative binomial tilt with mu(z) = z restricted to (p - 1, p).

    t(z) is obtained by summing the power series to the tail tolerance.
    Projections are polynomials in kappa(z) = -mu / ((1-p)(p-mu)).
    """

    KIND = t.FamilyKind.NegBinTilt
    DISCRETE = True
    PARAMS = (
        t.Param("alpha", int, "integer shape, at least 1"),
        t.Param("p", Fraction, "base success probability"),
    )

    def __init__(self, alpha, p, z_domain=None, z1_dim=0):
        """Create the family from its base negative binomial law."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, alpha=alpha, p=p)

    def default_z_domain(self):
        """Middle half of (p - 1, p)."""
        p = float(self._params["p"])
        return (p - 1 + 0.25, p - 0.25)

    def _validate(self):
        alpha, p = self._params["alpha"], self._params["p"]
        if alpha < 1:
            raise DomainError("alpha must be an integer >= 1")
        if not 0 < p < 1:
            raise DomainError("p must lie in (0, 1)")
        lo, hi = self.z_domain
        if not (p - 1 < lo and hi < p):
            raise DomainError(
                f"Instrument domain [{lo}, {hi}] must lie inside "
                f"({p - 1}, {p})"
            )

    def _check_point(self, point):
        p = float(self._params["p"])
        if not p - 1 < point.scalar < p:
            raise DomainError(f"1 - p + mu(z) leaves (0, 1) at {point}")

    def m(self, z1=()):
        """Base point m = p - 1."""
        return self._params["p"] - 1

    def ratio(self, point, z2=None) -> float:
        """Failure probability 1 - p + mu(z)."""
        z2 = point.scalar if z2 is None else z2
        return 1 - float(self._params["p"]) + z2

    def _mu(self, point):
        return point.scalar

    def _coordinate(self, point):
        p = float(self._params["p"])
        mu = point.scalar
        return -mu / ((1 - p) * (p - mu))

    def _log_t(self, point):
        log_q = math.log(self.ratio(point))
        total = -np.inf
        start, stop = 0, 256
        while True:
            x = np.arange(start, stop, dtype=float)
            block = special.logsumexp(self._log_s(x, point.z1) + x * log_q)
            if np.isfinite(total) and block - total < math.log(TOLERANCES["tail"]):
                total = np.logaddexp(total, block)
                break
            total = np.logaddexp(total, block)
            start, stop = stop, 2 * stop
            if stop > LATTICE_MAX_POINTS:
                raise NumericalFailure(
                    "Normalizing series did not converge",
                    {"family": self.name, "z": point.as_list(), "points": stop},
                )
        return -float(total)

    def _log_s(self, x, z1):
        x = np.asarray(x, dtype=float)
        alpha = self._params["alpha"]
        p = float(self._params["p"])
        log_binom = (special.gammaln(x + alpha) - special.gammaln(x + 1)
                     - special.gammaln(alpha))
        return log_binom + alpha * math.log(p)

    def _tau(self, x, z1):
        return np.asarray(x, dtype=float)

    def support(self, z1=(), z=None):
        """0, 1, 2, ..."""
        return Support(0, np.inf, lattice=True)

    def law(self, point, z2=None):
        """Frozen negative binomial law with success probability p - mu."""
        z2 = point.scalar if z2 is None else z2
        return stats.nbinom(float(self._params["alpha"]), float(self._params["p"]) - z2)

    def lattice_bounds(self, point):
        """Lattice starts at 0 and is unbounded."""
        return 0, None

    def weight_ratio(self, z1=()):
        """s(x - 1) / s(x) = x / (x + alpha - 1)."""
        return t.RationalFunction(
            t.Poly([0, 1]), t.Poly([self._params["alpha"] - 1, 1]))

    def phi_psi_ord(self, z1=()):
        """Ord pair of the mu = 0 law: phi = x and psi = (1 - p) alpha - p x."""
        alpha, p = self._params["alpha"], self._params["p"]
        return t.Poly([0, 1]), t.Poly([(1 - p) * alpha, -p])

    def closed_form_projection(self, j, z):
        """P_j = (alpha)_j kappa(z)^j for the Meixner basis."""
        return float(rising(self._params["alpha"], j)) * (
            self.projection_coordinate(z) ** j)
