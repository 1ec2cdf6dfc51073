"""Module defining named types."""
from __future__ import annotations

import enum
import logging
import numbers
import dataclasses

from steinpoly.exceptions import DomainError, InvalidArgument

LOGGER = logging.getLogger(__name__)


class AliasEnumMixin:
    """Mixin accepting member names and values case-insensitively."""

    @classmethod
    def _missing_(cls, value):
        if not isinstance(value, str):
            raise ValueError(f"{value!r} is not a valid {cls.__name__}")

        wanted = value.strip().lower()
        for member in cls:
            aliases = {member.name.lower(), str(member.value).lower()}
            if wanted in aliases:
                LOGGER.debug("Resolved %s alias %r to %s",
                             cls.__name__, value, member)
                return member

        raise ValueError(f"{value!r} is not a valid {cls.__name__}")


class FamilyKind(AliasEnumMixin, enum.Enum):
    """Catalog of conditional families."""

    NormalLoc = "normal"
    MvNormalLoc = "mvnormal"
    GammaShift = "gamma"
    BetaTilt = "beta"
    PoissonTilt = "poisson"
    NegBinTilt = "negbin"
    BinomialShift = "binomial"
    PascalShift = "pascal"


class PolyClass(AliasEnumMixin, enum.Enum):
    """Sufficient-condition class of a (phi, psi) pair."""

    HermiteLike = "hermite"
    LaguerreLike = "laguerre"
    JacobiLike = "jacobi"
    Unclassified = "unclassified"


class OperatorForm(AliasEnumMixin, enum.Enum):
    """Shape of a first order Stein operator."""

    ContinuousD1 = "continuous"
    DiscreteForwardBase = "discrete-forward"
    DiscreteBackwardBase = "discrete-backward"
    PearsonOrd = "pearson-ord"


@dataclasses.dataclass(frozen=True)
class Param:
    """Family parameter declaration."""

    name: str
    type: type = None
    description: str = ""
    optional: bool = False
    z1_dependent: bool = False


@dataclasses.dataclass(frozen=True)
class InstrumentPoint:
    """Instrument value Z = (Z1, Z2)."""

    z1: tuple = ()
    z2: tuple = ()

    def __post_init__(self):
        """Store both parts as tuples of floats."""
        for name in ("z1", "z2"):
            value = getattr(self, name)
            if isinstance(value, numbers.Real):
                value = (value,)
            try:
                value = tuple(float(v) for v in value)
            except (TypeError, ValueError) as exc:
                raise InvalidArgument(f"Invalid {name}: {value!r}") from exc
            # We're frozen so __setattr__ is disallowed
            object.__setattr__(self, name, value)

    @classmethod
    def coerce(cls, value, z1_dim: int = 0, z2_dim: int = 1) -> InstrumentPoint:
        """Build a point from a scalar, a sequence or another point."""
        if isinstance(value, InstrumentPoint):
            point = value
        elif isinstance(value, numbers.Real):
            point = cls(z1=(), z2=(value,))
        elif isinstance(value, dict):
            point = cls(z1=value.get("z1", ()), z2=value.get("z2", ()))
        else:
            value = tuple(value)
            if len(value) != z1_dim + z2_dim:
                raise InvalidArgument(
                    f"Expected {z1_dim + z2_dim} instrument values, got {value}")
            point = cls(z1=value[:z1_dim], z2=value[z1_dim:])

        if len(point.z1) != z1_dim or len(point.z2) != z2_dim:
            raise DomainError(
                f"Instrument {point} does not match dimensions "
                f"z1={z1_dim}, z2={z2_dim}"
            )
        return point

    @property
    def scalar(self) -> float:
        """The single excluded instrument of a univariate family."""
        if len(self.z2) != 1:
            raise InvalidArgument(f"{self} has no scalar z2")
        return self.z2[0]

    def as_list(self) -> list:
        """Return z1 followed by z2."""
        return list(self.z1) + list(self.z2)
