"""Module defining struct types."""
from __future__ import annotations

import typing
import dataclasses
from fractions import Fraction

import numpy as np

from steinpoly.config import TOLERANCES
from steinpoly.exceptions import InvalidArgument
from steinpoly.types.named import PolyClass, InstrumentPoint
from steinpoly.types.poly import Poly


@dataclasses.dataclass(frozen=True)
class PhiPsi:
    """Coefficient pair of phi Q'' + psi Q' + lambda Q = 0."""

    phi: Poly
    psi: Poly
    poly_class: PolyClass = PolyClass.Unclassified

    def __post_init__(self):
        """Check the degree bounds."""
        if self.phi.degree > 2 or self.psi.degree > 1:
            raise InvalidArgument(
                f"phi must have degree <= 2 and psi <= 1, got "
                f"{self.phi.degree} and {self.psi.degree}"
            )

    @property
    def scale(self) -> Fraction:
        """Divisor bringing a Hermite-like pair to its canonical form."""
        if self.poly_class is PolyClass.HermiteLike:
            return self.psi.lead
        return Fraction(1)

    def canonical(self) -> PhiPsi:
        """Return the pair divided by `scale`."""
        scale = self.scale
        return PhiPsi(self.phi / scale, self.psi / scale, self.poly_class)


@dataclasses.dataclass(frozen=True)
class EigenBasis:
    """Polynomial eigenfunctions Q_0..Q_J of a Stein-Markov operator."""

    family: typing.Any
    z1: tuple
    polys: tuple
    eigenvalues: tuple
    raw_eigenvalues: tuple
    operator: typing.Any = None

    def __post_init__(self):
        """Check the ladder invariants."""
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "eigenvalues", tuple(self.eigenvalues))
        object.__setattr__(self, "raw_eigenvalues", tuple(self.raw_eigenvalues))

        if not self.polys:
            raise InvalidArgument("A basis needs at least Q_0")
        if len(self.eigenvalues) != len(self.polys) or len(
                self.raw_eigenvalues) != len(self.polys):
            raise InvalidArgument("One eigenvalue per polynomial is required")
        if self.polys[0].degree != 0 or self.eigenvalues[0] != 0:
            raise InvalidArgument("Q_0 must be a non-zero constant with lambda 0")
        for j, q in enumerate(self.polys):
            if q.degree != j:
                raise InvalidArgument(f"Q_{j} has degree {q.degree}")
            if j and self.eigenvalues[j] == 0:
                raise InvalidArgument(f"lambda_{j} vanishes")

    @property
    def J(self) -> int:
        """Truncation degree."""
        return len(self.polys) - 1

    def weight(self, x) -> float:
        """Orthogonality weight s(x, z1)."""
        return self.family.weight_s(x, self.z1)

    def leading_coefficients(self) -> tuple:
        """Leading coefficient of every Q_j."""
        return tuple(q.lead for q in self.polys)

    def expand(self, p: Poly) -> list:
        """Return the coefficients of `p` in Q_0..Q_deg p, exactly."""
        if p.degree > self.J:
            raise InvalidArgument(
                f"Degree {p.degree} exceeds the truncation {self.J}")
        coeffs = [Fraction(0)] * (self.J + 1)
        rest = p
        for j in range(p.degree, -1, -1):
            q = self.polys[j]
            factor = rest.coeff(j) / q.lead
            coeffs[j] = factor
            rest = rest - q * factor
        if not rest.is_zero():
            raise InvalidArgument(f"Expansion of {p} left remainder {rest}")
        return coeffs

    def rescaled(self, factors) -> EigenBasis:
        """Return the basis with Q_j multiplied by factors[j]."""
        factors = list(factors)
        if len(factors) != len(self.polys) or any(f == 0 for f in factors):
            raise InvalidArgument("One non-zero factor per polynomial needed")
        return dataclasses.replace(
            self, polys=tuple(q * f for q, f in zip(self.polys, factors)))

    def truncated(self, J: int) -> EigenBasis:
        """Return the first J + 1 members."""
        if not 0 <= J <= self.J:
            raise InvalidArgument(f"Cannot truncate degree {self.J} basis to {J}")
        return dataclasses.replace(
            self,
            polys=self.polys[: J + 1],
            eigenvalues=self.eigenvalues[: J + 1],
            raw_eigenvalues=self.raw_eigenvalues[: J + 1],
        )

    def evaluate(self, beta, x) -> np.ndarray:
        """Return sum_j beta_j Q_j(x) at an array of points."""
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for b, q in zip(beta, self.polys):
            total = total + float(b) * q.demote().values(x)
        return total

    def as_json(self) -> list:
        """Return the basis as a list of {j, lambda, raw_lambda, coeffs}."""
        return [
            {
                "j": j,
                "lambda": str(lam),
                "raw_lambda": str(raw),
                "coeffs": [str(c) for c in q.coeffs],
            }
            for j, (q, lam, raw) in enumerate(
                zip(self.polys, self.eigenvalues, self.raw_eigenvalues))
        ]


@dataclasses.dataclass(frozen=True)
class MuFit:
    """Degree-j polynomial fit of P_j against the projection coordinate."""

    j: int
    coeffs: tuple
    residual: float
    lower_residual: float
    scale: float

    @property
    def certified(self) -> bool:
        """True when the fit is exact to tolerance and degree j is needed."""
        limit = TOLERANCES["fit"] * (1.0 + self.scale)
        floor = max(self.residual, 1e-10 * (1.0 + self.scale))
        return self.residual <= limit and self.lower_residual >= 100.0 * floor

    def __call__(self, coordinate) -> np.ndarray:
        """Evaluate the fitted polynomial."""
        return np.polynomial.polynomial.polyval(
            np.asarray(coordinate, dtype=float), np.array(self.coeffs))

    def as_json(self) -> dict:
        """Return the fit as plain data."""
        return {
            "j": self.j,
            "coeffs": list(self.coeffs),
            "residual": self.residual,
            "lower_residual": self.lower_residual,
            "certified": self.certified,
        }


@dataclasses.dataclass(frozen=True)
class ProjectionTable:
    """Projections P_j(z) over a z-grid together with their mu fits."""

    family: typing.Any
    j_max: int
    z_grid: tuple
    values: np.ndarray
    mu_grid: np.ndarray
    coordinates: np.ndarray
    fitted: tuple = ()

    def __post_init__(self):
        """Check the table shape."""
        object.__setattr__(self, "z_grid", tuple(self.z_grid))
        if self.values.shape != (self.j_max + 1, len(self.z_grid)):
            raise InvalidArgument(
                f"Table shape {self.values.shape} does not match "
                f"{self.j_max + 1} x {len(self.z_grid)}"
            )
        for fit in self.fitted:
            if len(fit.coeffs) != fit.j + 1:
                raise InvalidArgument(f"Fit of P_{fit.j} has wrong length")


@dataclasses.dataclass(frozen=True)
class KernelMatrix:
    """Discretized conditional expectation operator."""

    family: str
    z_grid: tuple
    x_points: np.ndarray
    entries: np.ndarray
    row_sums: np.ndarray
    min_singular_value: float
    max_singular_value: float

    @property
    def shape(self) -> tuple:
        """(rows, columns)."""
        return self.entries.shape


@dataclasses.dataclass(frozen=True)
class InjectivityReport:
    """Finite-section injectivity certificate.

    min_sv and max_sv are taken after the columns are scaled to unit norm
    when the report is normalized, so a 1x1 kernel reports min_sv = 1.  The
    extremes of the unscaled matrix are kept in raw_min_sv and raw_max_sv.
    """

    family: str
    n: int
    min_sv: float
    max_sv: float
    injective: bool
    raw_min_sv: float
    raw_max_sv: float
    normalized: bool = True
    note: str = (
        "completeness is an infinite-dimensional property; this is a "
        "finite-section certificate only"
    )

    @property
    def verdict(self) -> str:
        """Human readable verdict."""
        if self.injective:
            return f"numerically injective at scale {self.n}"
        return f"not numerically injective at scale {self.n}"

    def as_json(self) -> dict:
        """Return the report as plain data."""
        return {
            "family": self.family,
            "n": self.n,
            "min_sv": self.min_sv,
            "max_sv": self.max_sv,
            "raw_min_sv": self.raw_min_sv,
            "raw_max_sv": self.raw_max_sv,
            "normalized": self.normalized,
            "verdict": self.verdict,
            "note": self.note,
        }


@dataclasses.dataclass(frozen=True)
class Residual:
    """One verification residual."""

    family: str
    check: str
    j: typing.Any
    z: typing.Any
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        """True when the residual is within tolerance."""
        return bool(self.residual <= self.tolerance)

    def as_json(self) -> dict:
        """Return the residual as plain data."""
        z = self.z
        if isinstance(z, InstrumentPoint):
            z = z.as_list()
        return {
            "family": self.family,
            "check": self.check,
            "j": list(self.j) if isinstance(self.j, tuple) else self.j,
            "z": z,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclasses.dataclass(frozen=True)
class Dataset:
    """Observations of (Y, X, Z1, Z2)."""

    frame: typing.Any
    z1_columns: tuple = ()
    z2_columns: tuple = ("z2",)
    x_columns: tuple = ("x",)
    rejected: tuple = ()

    @property
    def n(self) -> int:
        """Number of rows."""
        return len(self.frame)

    @property
    def y(self) -> np.ndarray:
        """Responses."""
        return self.frame["y"].to_numpy(dtype=float)

    @property
    def x(self) -> np.ndarray:
        """Endogenous covariate, one column per dimension."""
        values = self.frame[list(self.x_columns)].to_numpy(dtype=float)
        return values[:, 0] if values.shape[1] == 1 else values

    @property
    def z1(self) -> np.ndarray:
        """Included instruments as an (n, dim z1) array."""
        return self.frame[list(self.z1_columns)].to_numpy(dtype=float)

    @property
    def z2(self) -> np.ndarray:
        """Excluded instruments as an (n, dim z2) array."""
        return self.frame[list(self.z2_columns)].to_numpy(dtype=float)

    def instruments(self) -> list:
        """Return one InstrumentPoint per row."""
        z1 = self.frame[list(self.z1_columns)].to_numpy(dtype=float)
        z2 = self.frame[list(self.z2_columns)].to_numpy(dtype=float)
        return [InstrumentPoint(z1=a, z2=b) for a, b in zip(z1, z2)]


@dataclasses.dataclass(frozen=True)
class FitResult:
    """Series IV fit over Q_0..Q_J."""

    beta: np.ndarray
    J: int
    ridge: float
    basis: EigenBasis
    condition: float
    rank: int
    residual_mean: float
    residual_sd: float

    def __post_init__(self):
        """Check the coefficient count."""
        if len(self.beta) != self.J + 1:
            raise InvalidArgument(
                f"Expected {self.J + 1} coefficients, got {len(self.beta)}")

    def ghat(self, x) -> np.ndarray:
        """Evaluate sum_j beta_j Q_j(x)."""
        return self.basis.evaluate(self.beta, x)

    def as_json(self) -> dict:
        """Return the fit as plain data."""
        return {
            "beta": [float(b) for b in self.beta],
            "J": self.J,
            "ridge": self.ridge,
            "diagnostics": {
                "condition": self.condition,
                "rank": self.rank,
                "residual_mean": self.residual_mean,
                "residual_sd": self.residual_sd,
            },
        }
