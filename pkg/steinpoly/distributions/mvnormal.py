"""Multivariate normal location family X | Z ~ N(z2, M^-1) in d <= 3 dimensions."""
from __future__ import annotations

import math
import itertools
from fractions import Fraction

import numpy as np
import scipy.linalg
import voluptuous as vol
from scipy import stats, special

import steinpoly.types as t
from steinpoly.config import MAX_DIMENSION, square_matrix
from steinpoly.exceptions import DomainError, InvalidArgument

from .base import Support, GaussRule, CondFamily


def _det(rows) -> Fraction:
    """Exact determinant by cofactor expansion along the first row."""
    if len(rows) == 1:
        return rows[0][0]
    total = Fraction(0)
    for col, value in enumerate(rows[0]):
        if value == 0:
            continue
        minor = [row[:col] + row[col + 1:] for row in rows[1:]]
        total += (-1) ** col * value * _det(minor)
    return total


class MvNormalLoc(CondFamily):
    """Normal family with s(x) = exp(-x'Mx / 2), tau(x) = x and mu(z) = M z2.

    The instrument domain is a box, one [lo, hi] interval per coordinate of
    z2; a single interval is repeated over every coordinate.
    """

    KIND = t.FamilyKind.MvNormalLoc
    PARAMS = (t.Param("M", tuple, "symmetric positive-definite precision"),)

    def __init__(self, M, z_domain=None, z1_dim=0):
        """Create the family from its precision matrix."""
        super().__init__(z_domain=z_domain, z1_dim=z1_dim, M=M)

    @staticmethod
    def _coerce(param, value):
        if isinstance(value, np.ndarray):
            value = value.tolist()
        try:
            return square_matrix(MAX_DIMENSION)(value)
        except vol.Invalid as exc:
            raise InvalidArgument(f"Invalid precision matrix: {exc}") from exc

    def _coerce_domain(self, z_domain):
        d = len(self._params["M"])
        if z_domain is None:
            z_domain = [(-1.0, 1.0)] * d
        elif len(z_domain) == 2 and not isinstance(z_domain[0], (list, tuple)):
            z_domain = [z_domain] * d
        if len(z_domain) != d:
            raise InvalidArgument(
                f"Expected {d} instrument intervals, got {len(z_domain)}")
        return tuple(super(MvNormalLoc, self)._coerce_domain(pair)
                     for pair in z_domain)

    def _validate(self):
        rows = self._params["M"]
        for k in range(1, len(rows) + 1):
            minor = [row[:k] for row in rows[:k]]
            if _det(minor) <= 0:
                raise InvalidArgument(
                    f"Precision matrix is not positive definite "
                    f"(leading minor {k} <= 0)"
                )

    @property
    def precision(self) -> np.ndarray:
        """M as a float array."""
        return np.array([[float(v) for v in row] for row in self._params["M"]])

    @property
    def covariance_factor(self) -> np.ndarray:
        """Lower triangular L with L L' = M^-1."""
        return scipy.linalg.cholesky(
            scipy.linalg.inv(self.precision), lower=True)

    @property
    def dim(self) -> int:
        """Dimension of X."""
        return len(self._params["M"])

    @property
    def z2_dim(self) -> int:
        """z2 has the dimension of X."""
        return self.dim

    def describe(self) -> dict:
        """Return the JSON document describing the family."""
        doc = super().describe()
        doc["z_domain"] = [list(pair) for pair in self.z_domain]
        return doc

    def check_z(self, z) -> t.InstrumentPoint:
        """Coerce z and check every coordinate against its interval."""
        point = self.instrument(z)
        for value, (lo, hi) in zip(point.z2, self.z_domain):
            if not lo <= value <= hi:
                raise DomainError(
                    f"z2={value} outside of the domain [{lo}, {hi}] of {self.name}")
        return point

    def _mu(self, point):
        return self.precision @ np.array(point.z2)

    def identity_rate(self, z):
        """The rate is the vector mu(z)."""
        return self.mu(z)

    def _log_t(self, point):
        z2 = np.array(point.z2)
        M = self.precision
        _, logdet = np.linalg.slogdet(M)
        return (-0.5 * z2 @ M @ z2 + 0.5 * logdet
                - 0.5 * self.dim * math.log(2 * math.pi))

    def _log_s(self, x, z1):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.einsum("...i,ij,...j->...", x, self.precision, x)

    def _tau(self, x, z1):
        return np.asarray(x, dtype=float)

    def support(self, z1=(), z=None):
        """Whole space."""
        return Support(-np.inf, np.inf)

    def weight_s(self, x, z1=()):
        """s(x) = exp(-x'Mx / 2) for points stacked on the last axis."""
        out = np.exp(self._log_s(x, z1))
        return out if np.ndim(out) else float(out)

    def tau(self, x, z1=()):
        """tau(x) = x."""
        return np.asarray(x, dtype=float)

    def log_density(self, x, point):
        """Gaussian log density for points stacked on the last axis."""
        x = np.asarray(x, dtype=float)
        return self._log_t(point) + self._log_s(x, point.z1) + x @ self._mu(point)

    def density(self, x, z):
        """Conditional density."""
        out = np.exp(self.log_density(x, self.check_z(z)))
        return out if np.ndim(out) else float(out)

    def law(self, point, z2=None):
        """Frozen multivariate normal law."""
        mean = np.array(point.z2) if z2 is None else np.asarray(z2)
        return stats.multivariate_normal(
            mean=mean, cov=scipy.linalg.inv(self.precision))

    def sample(self, z, n, seed):
        """Draw n vectors of X | Z = z as an (n, d) array."""
        return np.atleast_2d(super().sample(z, n, seed)).reshape(n, self.dim)

    def sample_conditional(self, z1, z2, rng):
        """Draw one X per row of the (n, d) array z2."""
        z2 = np.atleast_2d(z2)
        shocks = rng.standard_normal(z2.shape) @ self.covariance_factor.T
        return z2 + shocks

    def conditional_mean(self, z1, z2):
        """E[X | Z] = z2."""
        return np.atleast_2d(np.asarray(z2, dtype=float))

    def gauss_rule(self, point, n):
        """Tensor Gauss-Hermite rule after whitening the covariance."""
        nodes, weights = special.roots_hermitenorm(n)
        weights = weights / weights.sum()
        grid = np.array(list(itertools.product(nodes, repeat=self.dim)))
        w = np.prod(
            np.array(list(itertools.product(weights, repeat=self.dim))), axis=1)
        x = np.array(point.z2) + grid @ self.covariance_factor.T
        return GaussRule(x, w)

    def closed_form_projection(self, j, z):
        """P_j = prod_i (M z2)_i^(j_i) for a multi-index j."""
        mu = self.mu(z)
        return float(np.prod([m ** k for m, k in zip(mu, j)]))
