"""Base class shared by the conditional families X | Z."""
from __future__ import annotations

import math
import typing
import logging
import dataclasses
from fractions import Fraction

import numpy as np
import voluptuous as vol

import steinpoly.types as t
from steinpoly.utils import as_fraction
from steinpoly.config import interval
from steinpoly.exceptions import DomainError, InvalidArgument, UnsupportedOperation

LOGGER = logging.getLogger(__name__)

ParamValue = typing.Union[Fraction, typing.Callable[[tuple], typing.Any]]


@dataclasses.dataclass(frozen=True)
class Support:
    """Open interval (lo, hi) or lattice lo, lo + 1, ..., hi."""

    lo: float
    hi: float
    lattice: bool = False

    def contains(self, x) -> np.ndarray:
        """Mask of the points lying in the support."""
        x = np.asarray(x, dtype=float)
        if self.lattice:
            return (x >= self.lo) & (x <= self.hi) & (np.floor(x) == x)
        return (x > self.lo) & (x < self.hi)


@dataclasses.dataclass(frozen=True)
class GaussRule:
    """Nodes and normalized weights of a quadrature rule for one law."""

    nodes: np.ndarray
    weights: np.ndarray


class CondFamily:
    """Conditional law X | Z = z in power-series or exponential-family form.

    Subclasses declare KIND, DISCRETE, PARAMS and implement the log pieces
    of the factorization t(z) s(x, z1) exp(mu(z) tau(x, z1)).  Parameters
    are kept as Fractions or as callables of z1 returning a number.
    """

    KIND: t.FamilyKind = None
    DISCRETE: bool = False
    PARAMS: typing.Tuple[t.Param, ...] = ()
    FACTORIZED: bool = True

    def __init__(self, z_domain=None, z1_dim: int = 0, **params):
        """Validate the parameters and the instrument domain."""
        self.z1_dim = int(z1_dim)
        self._params = {}

        known = {p.name for p in self.PARAMS}
        unknown = set(params) - known
        if unknown:
            raise InvalidArgument(
                f"Unknown parameters for {self.KIND.value}: {sorted(unknown)}")

        for param in self.PARAMS:
            if param.name not in params or params[param.name] is None:
                if param.optional:
                    continue
                raise InvalidArgument(
                    f"Missing parameter {param.name!r} for {self.KIND.value}")
            value = params[param.name]
            if callable(value):
                if not param.z1_dependent:
                    raise InvalidArgument(
                        f"Parameter {param.name!r} cannot depend on z1")
                self._params[param.name] = value
            else:
                self._params[param.name] = self._coerce(param, value)

        self.z_domain = self._coerce_domain(z_domain)
        self._validate()
        LOGGER.debug("Built %s with %s on %s", self.KIND.value,
                     self._params, self.z_domain)

    @staticmethod
    def _coerce(param: t.Param, value):
        if param.type is int:
            if isinstance(value, bool) or int(value) != value:
                raise InvalidArgument(f"{param.name} must be an integer")
            return int(value)
        return as_fraction(value)

    def _coerce_domain(self, z_domain):
        if z_domain is None:
            z_domain = self.default_z_domain()
        try:
            return interval()(z_domain)
        except vol.Invalid as exc:
            raise InvalidArgument(f"Invalid instrument domain {z_domain}: {exc}") from exc

    def default_z_domain(self) -> tuple:
        """Domain used when none is declared."""
        return (-1.0, 1.0)

    def _validate(self):
        """Check cross-parameter constraints; subclasses extend this."""

    @property
    def name(self) -> str:
        """Family kind as used in documents."""
        return self.KIND.value

    @property
    def dim(self) -> int:
        """Dimension of X."""
        return 1

    @property
    def z2_dim(self) -> int:
        """Dimension of the excluded instruments."""
        return 1

    def param(self, name: str, z1=()):
        """Return a parameter at z1, as an exact number."""
        value = self._params[name]
        if callable(value):
            value = value(tuple(z1))
            return int(value) if isinstance(value, int) else as_fraction(value)
        return value

    def fparam(self, name: str, z1=()) -> float:
        """Return a parameter at z1 as a float."""
        return float(self.param(name, z1))

    def exact_params(self, z1=()) -> tuple:
        """Sorted (name, value) pairs at z1, used as a cache key."""
        return tuple(
            (name, self.param(name, z1)) for name in sorted(self._params))

    def describe(self) -> dict:
        """Return the JSON document describing the family."""
        if any(callable(v) for v in self._params.values()):
            raise UnsupportedOperation(
                "Families with z1-dependent callables cannot be serialized")
        return {
            "kind": self.KIND.value,
            "params": {k: _exact_json(v) for k, v in self._params.items()},
            "z_domain": list(self.z_domain),
        }

    def __repr__(self) -> str:
        """Return a representation with the parameters."""
        params = ", ".join(f"{k}={v}" for k, v in self._params.items())
        return f"{type(self).__name__}({params}, z_domain={self.z_domain})"

    # Instruments

    def instrument(self, z) -> t.InstrumentPoint:
        """Coerce z to an InstrumentPoint of the right dimensions."""
        return t.InstrumentPoint.coerce(z, self.z1_dim, self.z2_dim)

    def check_z(self, z) -> t.InstrumentPoint:
        """Coerce z and raise DomainError outside of the declared domain."""
        point = self.instrument(z)
        lo, hi = self.z_domain
        for value in point.z2:
            if not lo <= value <= hi:
                raise DomainError(
                    f"z2={value} outside of the domain [{lo}, {hi}] "
                    f"of {self.name}"
                )
        self._check_point(point)
        return point

    def _check_point(self, point: t.InstrumentPoint):
        """Family specific domain constraints; subclasses extend this."""

    def base_instrument(self, z1=()) -> t.InstrumentPoint:
        """Instrument value at which mu(z) = 0."""
        return t.InstrumentPoint(z1=tuple(z1), z2=(0.0,) * self.z2_dim)

    def mu(self, z):
        """Natural parameter map mu(z)."""
        return self._mu(self.check_z(z))

    def _mu(self, point: t.InstrumentPoint):
        raise NotImplementedError()  # pragma: no cover

    def projection_coordinate(self, z) -> float:
        """Variable in which P_j(z) is a degree-j polynomial."""
        return self._coordinate(self.check_z(z))

    def _coordinate(self, point: t.InstrumentPoint) -> float:
        return self._mu(point)

    def identity_rate(self, z) -> float:
        """rho(z) with E[A q | Z = z] = -rho(z) E[q | Z = z]."""
        return self._mu(self.check_z(z))

    # Factorization

    def t(self, z) -> float:
        """Normalizing factor t(z)."""
        if not self.FACTORIZED:
            raise UnsupportedOperation(f"{self.name} has no t(z) factor")
        return math.exp(self._log_t(self.check_z(z)))

    def _log_t(self, point: t.InstrumentPoint) -> float:
        raise NotImplementedError()  # pragma: no cover

    def _log_s(self, x: np.ndarray, z1) -> np.ndarray:
        raise NotImplementedError()  # pragma: no cover

    def _tau(self, x: np.ndarray, z1) -> np.ndarray:
        raise NotImplementedError()  # pragma: no cover

    def support(self, z1=(), z=None) -> Support:
        """Support of X given z1 (and z for shift families)."""
        raise NotImplementedError()  # pragma: no cover

    def weight_s(self, x, z1=()):
        """Orthogonality weight s(x, z1), zero outside of the support."""
        x_arr = np.asarray(x, dtype=float)
        inside = self.support(z1, self.base_instrument(z1)).contains(x_arr)
        out = np.zeros(x_arr.shape)
        if np.any(inside):
            out[inside] = np.exp(self._log_s(x_arr[inside], z1))
        return out if out.ndim else float(out)

    def tau(self, x, z1=()):
        """Sufficient statistic tau(x, z1); x must lie inside the support."""
        x_arr = np.asarray(x, dtype=float)
        if not np.all(self.support(z1, self.base_instrument(z1)).contains(x_arr)):
            raise DomainError(f"tau undefined outside of the open support: {x}")
        out = self._tau(x_arr, z1)
        return out if np.ndim(out) else float(out)

    def log_density(self, x, point: t.InstrumentPoint) -> np.ndarray:
        """Log density at points inside the support of the law at `point`."""
        x = np.asarray(x, dtype=float)
        log_f = self._log_t(point) + self._log_s(x, point.z1)
        if self.DISCRETE:
            return log_f + x * math.log(self._mu(point) - self.m(point.z1))
        return log_f + self._mu(point) * self._tau(x, point.z1)

    def density(self, x, z):
        """Conditional density (Lebesgue or counting), zero off support."""
        point = self.check_z(z)
        x_arr = np.asarray(x, dtype=float)
        inside = self.support(point.z1, point).contains(x_arr)
        out = np.zeros(x_arr.shape)
        if np.any(inside):
            out[inside] = np.exp(self.log_density(x_arr[inside], point))
        return out if out.ndim else float(out)

    def m(self, z1=()) -> Fraction:
        """Power-series base point of a discrete tilt."""
        raise UnsupportedOperation(f"{self.name} has no power-series base point")

    # Laws, quadrature and sampling

    def law(self, point: t.InstrumentPoint, z2=None):
        """Frozen scipy law of X given the instrument (z2 may be an array)."""
        raise NotImplementedError()  # pragma: no cover

    def sample(self, z, n: int, seed: int) -> np.ndarray:
        """Draw n i.i.d. values of X | Z = z, deterministic in seed."""
        if n < 1:
            raise InvalidArgument(f"Sample size must be positive, got {n}")
        point = self.check_z(z)
        rng = np.random.default_rng(seed)
        return np.asarray(self.law(point).rvs(size=n, random_state=rng))

    def sample_conditional(self, z1, z2: np.ndarray, rng) -> np.ndarray:
        """Draw one X per entry of z2 at fixed z1."""
        point = t.InstrumentPoint(z1=tuple(z1), z2=(float(z2[0]),))
        return np.asarray(self.law(point, z2=np.asarray(z2)).rvs(
            random_state=rng))

    def conditional_mean(self, z1, z2: np.ndarray) -> np.ndarray:
        """E[X | Z] for every entry of z2 at fixed z1."""
        point = t.InstrumentPoint(z1=tuple(z1), z2=(float(z2[0]),))
        return np.asarray(self.law(point, z2=np.asarray(z2)).mean())

    def gauss_rule(self, point: t.InstrumentPoint, n: int) -> GaussRule:
        """n-point rule exact for polynomials of degree 2n - 1 under the law."""
        raise UnsupportedOperation(f"{self.name} has no Gauss rule")

    def lattice_bounds(self, point: t.InstrumentPoint) -> tuple:
        """First lattice point and last one (None when unbounded)."""
        raise UnsupportedOperation(f"{self.name} is not a lattice law")

    def log_pmf(self, x: np.ndarray, point: t.InstrumentPoint) -> np.ndarray:
        """Log probabilities at integer points of the support."""
        return self.log_density(x, point)

    # Operators

    def phi_psi_raw(self, z1=()) -> tuple:
        """Exact (phi, psi) with phi = -1/tau' and (s phi)' = psi s."""
        raise UnsupportedOperation(
            f"phi/psi are defined for univariate continuous families, "
            f"not {self.name}"
        )

    def log_weight_ratio(self, z1=()) -> tuple:
        """(N, D) with s'/s = N/D as exact polynomials."""
        raise UnsupportedOperation(f"{self.name} has no continuous weight")

    def closed_form_projection(self, j: int, z) -> typing.Optional[float]:
        """Known closed form of P_j(z), None when there is none."""
        return None


def _exact_json(value):
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value)
        return str(value)
    if isinstance(value, tuple):
        return [_exact_json(v) for v in value]
    return value
