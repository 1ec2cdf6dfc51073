"""Exact univariate and small multivariate polynomials.

Coefficients are kept as `fractions.Fraction` whenever they are built from
exact inputs so that operator identities can be checked with no tolerance.
Floats are accepted as well; `Poly.demote()` turns an exact polynomial into
a float one for quadrature consumers.
"""
from __future__ import annotations

import math
import typing
import numbers
import itertools
from fractions import Fraction

import numpy as np

from steinpoly.config import MAX_DIMENSION
from steinpoly.exceptions import InvalidArgument, OperatorMismatch

Coefficient = typing.Union[int, Fraction, float]


def _normalize(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidArgument(f"Invalid coefficient {value!r}")
    if isinstance(value, (numbers.Integral, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (numbers.Real, np.floating)):
        return float(value)

    raise InvalidArgument(f"Invalid coefficient {value!r}")


def _is_exact(value) -> bool:
    return isinstance(value, Fraction)


class Poly:
    """Dense polynomial in one variable, index k holding the x^k coefficient."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: typing.Iterable[Coefficient] = ()):
        """Create a polynomial, dropping trailing zero coefficients."""
        items = [_normalize(c) for c in coeffs]
        while items and items[-1] == 0:
            items.pop()
        self._coeffs = tuple(items)

    @classmethod
    def constant(cls, value: Coefficient) -> Poly:
        """Return the constant polynomial."""
        return cls([value])

    @classmethod
    def x(cls) -> Poly:
        """Return the identity polynomial x."""
        return cls([0, 1])

    @classmethod
    def monomial(cls, k: int, coeff: Coefficient = 1) -> Poly:
        """Return coeff * x^k."""
        return cls([0] * k + [coeff])

    @classmethod
    def from_roots(cls, roots: typing.Iterable[Coefficient]) -> Poly:
        """Return prod (x - root)."""
        result = cls.constant(1)
        for root in roots:
            result = result * cls([-_normalize(root), 1])
        return result

    @property
    def coeffs(self) -> tuple:
        """Coefficients in increasing degree."""
        return self._coeffs

    @property
    def degree(self) -> int:
        """Degree, -1 for the zero polynomial."""
        return len(self._coeffs) - 1

    @property
    def lead(self):
        """Leading coefficient, 0 for the zero polynomial."""
        return self._coeffs[-1] if self._coeffs else Fraction(0)

    @property
    def is_exact(self) -> bool:
        """True when every coefficient is a Fraction."""
        return all(_is_exact(c) for c in self._coeffs)

    def is_zero(self) -> bool:
        """Return True for the zero polynomial."""
        return not self._coeffs

    def coeff(self, k: int):
        """Return the x^k coefficient, 0 beyond the degree."""
        if 0 <= k < len(self._coeffs):
            return self._coeffs[k]
        return Fraction(0)

    def demote(self) -> Poly:
        """Return the same polynomial with float coefficients."""
        return Poly(float(c) for c in self._coeffs)

    def __add__(self, other):
        """Coefficient-wise sum."""
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        size = max(len(self._coeffs), len(other._coeffs))
        return Poly(self.coeff(k) + other.coeff(k) for k in range(size))

    __radd__ = __add__

    def __neg__(self):
        """Negate every coefficient."""
        return Poly(-c for c in self._coeffs)

    def __sub__(self, other):
        """Coefficient-wise difference."""
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        """Coefficient-wise difference with the operands swapped."""
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        """Convolution of the coefficients."""
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return Poly()

        out = [Fraction(0)] * (len(self._coeffs) + len(other._coeffs) - 1)
        for i, a in enumerate(self._coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other._coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        """Divide every coefficient by a scalar."""
        if isinstance(scalar, Poly):
            quotient, remainder = self.divmod(scalar)
            if not remainder.is_zero():
                raise OperatorMismatch(
                    f"{self!r} is not divisible by {scalar!r}")
            return quotient

        scalar = _normalize(scalar)
        if scalar == 0:
            raise ZeroDivisionError("Polynomial division by zero")
        return Poly(c / scalar for c in self._coeffs)

    def __pow__(self, exponent: int):
        """Raise to a non-negative integer power."""
        if not isinstance(exponent, int) or exponent < 0:
            raise InvalidArgument(f"Invalid exponent {exponent!r}")
        result = Poly.constant(1)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other):
        """Compare coefficient vectors."""
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        return self._coeffs == other._coeffs

    def __hash__(self):
        """Hash the coefficient vector."""
        return hash(self._coeffs)

    def __call__(self, x):
        """Evaluate with Horner's scheme."""
        return poly_eval(self, x)

    def __repr__(self) -> str:
        """Return a representation listing the coefficients."""
        return f"{type(self).__name__}({[str(c) for c in self._coeffs]})"

    def __str__(self) -> str:
        """Return the polynomial written out in x."""
        if self.is_zero():
            return "0"
        terms = []
        for k, c in enumerate(self._coeffs):
            if c == 0:
                continue
            if k == 0:
                terms.append(f"{c}")
            elif k == 1:
                terms.append(f"{c}*x")
            else:
                terms.append(f"{c}*x^{k}")
        return " + ".join(terms)

    def diff(self) -> Poly:
        """Return the formal derivative."""
        return Poly(k * c for k, c in enumerate(self._coeffs) if k > 0)

    def shift(self, h) -> Poly:
        """Return p(x + h) through binomial re-expansion."""
        h = _normalize(h)
        out = [Fraction(0)] * len(self._coeffs)
        for k, c in enumerate(self._coeffs):
            if c == 0:
                continue
            for i in range(k + 1):
                out[i] += c * math.comb(k, i) * h ** (k - i)
        return Poly(out)

    def forward_diff(self) -> Poly:
        """Return p(x + 1) - p(x)."""
        return self.shift(1) - self

    def backward_diff(self) -> Poly:
        """Return p(x) - p(x - 1)."""
        return self - self.shift(-1)

    def reflect(self) -> Poly:
        """Return p(-x)."""
        return Poly(c if k % 2 == 0 else -c for k, c in enumerate(self._coeffs))

    def compose(self, inner: Poly) -> Poly:
        """Return p(inner(x))."""
        result = Poly()
        for c in reversed(self._coeffs):
            result = result * inner + Poly.constant(c)
        return result

    def divmod(self, divisor: Poly) -> tuple[Poly, Poly]:
        """Euclidean division, returning (quotient, remainder)."""
        if divisor.is_zero():
            raise ZeroDivisionError("Polynomial division by zero")

        remainder = list(self._coeffs)
        quotient = [Fraction(0)] * max(len(remainder) - divisor.degree, 1)
        lead = divisor.lead
        for shift in range(len(remainder) - len(divisor._coeffs), -1, -1):
            factor = remainder[shift + divisor.degree] / lead
            quotient[shift] = factor
            if factor == 0:
                continue
            for i, c in enumerate(divisor._coeffs):
                remainder[shift + i] -= factor * c
            remainder[shift + divisor.degree] = Fraction(0)

        return Poly(quotient), Poly(remainder)

    def values(self, xs) -> np.ndarray:
        """Evaluate at an array of points.

        Integer arrays are evaluated exactly and rounded once; float arrays
        go through numpy with float coefficients.
        """
        xs = np.asarray(xs)
        if np.issubdtype(xs.dtype, np.integer) and self.is_exact:
            return np.array(
                [float(poly_eval(self, int(x))) for x in xs.ravel()],
                dtype=float,
            ).reshape(xs.shape)

        xs = xs.astype(float)
        coeffs = [float(c) for c in self._coeffs] or [0.0]
        result = np.full(xs.shape, coeffs[-1])
        for c in reversed(coeffs[:-1]):
            result = result * xs + c
        return result


def _as_poly(value):
    if isinstance(value, Poly):
        return value
    if isinstance(value, (numbers.Real, np.number)) and not isinstance(
            value, bool):
        return Poly.constant(value)
    return NotImplemented


class RationalFunction:
    """Quotient of two polynomials, kept unreduced."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly = None):
        """Create num / den; the denominator defaults to 1."""
        den = Poly.constant(1) if den is None else den
        if den.is_zero():
            raise ZeroDivisionError("Rational function with zero denominator")
        self.num = num
        self.den = den

    def __call__(self, x):
        """Evaluate pointwise."""
        return poly_eval(self.num, x) / poly_eval(self.den, x)

    def values(self, xs) -> np.ndarray:
        """Evaluate at an array of points."""
        return self.num.values(xs) / self.den.values(xs)

    def to_poly(self) -> Poly:
        """Return the polynomial quotient, failing on a non-zero remainder."""
        quotient, remainder = self.num.divmod(self.den)
        if not remainder.is_zero():
            raise OperatorMismatch(
                f"Rational remainder {remainder} over {self.den} does not cancel"
            )
        return quotient

    def __repr__(self) -> str:
        """Return a representation of numerator and denominator."""
        return f"{type(self).__name__}({self.num!r}, {self.den!r})"


def poly_add(a: Poly, b: Poly) -> Poly:
    """Coefficient-wise sum."""
    return a + b


def poly_mul(a: Poly, b: Poly) -> Poly:
    """Polynomial product."""
    return a * b


def poly_diff(p: Poly) -> Poly:
    """Formal derivative."""
    return p.diff()


def poly_forward_diff(p: Poly) -> Poly:
    """Coefficients of p(x+1) - p(x)."""
    return p.forward_diff()


def poly_backward_diff(p: Poly) -> Poly:
    """Coefficients of p(x) - p(x-1)."""
    return p.backward_diff()


def poly_eval(p: Poly, x):
    """Horner evaluation, exact for exact coefficients at rational x.

    Non-finite floats are evaluated in floating point and follow IEEE rules;
    an exact result too large for a double becomes a signed infinity.
    """
    if isinstance(x, float):
        if math.isfinite(x) and all(_is_exact(c) for c in p.coeffs):
            x = Fraction(x)
            result = Fraction(0)
            for c in reversed(p.coeffs):
                result = result * x + c
            try:
                return float(result)
            except OverflowError:
                return math.copysign(math.inf, result)
        x = float(x)
    elif isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        x = int(x)

    coeffs = [float(c) for c in p.coeffs] if isinstance(x, float) else list(p.coeffs)
    if not coeffs:
        return 0.0 if isinstance(x, float) else Fraction(0)
    # start from the leading coefficient so that x = inf never meets 0 * inf
    result = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        result = result * x + c
    return result


class MultiPoly:
    """Sparse polynomial in d <= 3 variables keyed by exponent tuples."""

    __slots__ = ("_terms", "_dim")

    def __init__(self, terms: typing.Mapping[tuple, Coefficient], dim: int):
        """Create a polynomial, dropping zero terms."""
        if not 1 <= dim <= MAX_DIMENSION:
            raise InvalidArgument(
                f"Dimension must lie in 1..{MAX_DIMENSION}, got {dim}")

        clean = {}
        for exps, coeff in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps):
                raise InvalidArgument(f"Bad exponent tuple {exps} for dim {dim}")
            coeff = _normalize(coeff)
            if coeff != 0:
                clean[exps] = clean.get(exps, Fraction(0)) + coeff
        self._terms = {k: v for k, v in clean.items() if v != 0}
        self._dim = dim

    @classmethod
    def constant(cls, value: Coefficient, dim: int) -> MultiPoly:
        """Return the constant polynomial."""
        return cls({(0,) * dim: value}, dim)

    @classmethod
    def variable(cls, axis: int, dim: int) -> MultiPoly:
        """Return x_axis (zero-based axis)."""
        exps = [0] * dim
        exps[axis] = 1
        return cls({tuple(exps): 1}, dim)

    @property
    def terms(self) -> dict:
        """Copy of the exponent to coefficient map."""
        return dict(self._terms)

    @property
    def dim(self) -> int:
        """Number of variables."""
        return self._dim

    @property
    def degree(self) -> int:
        """Total degree, -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_zero(self) -> bool:
        """Return True for the zero polynomial."""
        return not self._terms

    def _check(self, other: MultiPoly):
        if other.dim != self._dim:
            raise InvalidArgument(
                f"Dimension mismatch: {self._dim} vs {other.dim}")

    def __add__(self, other):
        """Termwise sum."""
        if isinstance(other, (numbers.Real, Fraction)):
            other = MultiPoly.constant(other, self._dim)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        self._check(other)
        terms = dict(self._terms)
        for exps, coeff in other._terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + coeff
        return MultiPoly(terms, self._dim)

    __radd__ = __add__

    def __neg__(self):
        """Negate every term."""
        return MultiPoly({k: -v for k, v in self._terms.items()}, self._dim)

    def __sub__(self, other):
        """Termwise difference."""
        return self + (-other)

    def __mul__(self, other):
        """Polynomial product."""
        if isinstance(other, (numbers.Real, Fraction)):
            other = _normalize(other)
            return MultiPoly(
                {k: v * other for k, v in self._terms.items()}, self._dim)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        self._check(other)
        terms = {}
        for (ea, ca), (eb, cb) in itertools.product(
                self._terms.items(), other._terms.items()):
            exps = tuple(a + b for a, b in zip(ea, eb))
            terms[exps] = terms.get(exps, Fraction(0)) + ca * cb
        return MultiPoly(terms, self._dim)

    __rmul__ = __mul__

    def __eq__(self, other):
        """Compare term maps."""
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self._dim == other._dim and self._terms == other._terms

    def __hash__(self):
        """Hash the sorted terms."""
        return hash((self._dim, tuple(sorted(self._terms.items()))))

    def __repr__(self) -> str:
        """Return a representation listing the terms."""
        body = {k: str(v) for k, v in sorted(self._terms.items())}
        return f"{type(self).__name__}({body}, dim={self._dim})"

    def partial(self, axis: int) -> MultiPoly:
        """Formal partial derivative along a zero-based axis."""
        if not 0 <= axis < self._dim:
            raise InvalidArgument(
                f"Axis {axis} out of range for dimension {self._dim}")
        terms = {}
        for exps, coeff in self._terms.items():
            power = exps[axis]
            if power == 0:
                continue
            lowered = list(exps)
            lowered[axis] -= 1
            terms[tuple(lowered)] = coeff * power
        return MultiPoly(terms, self._dim)

    def __call__(self, point):
        """Evaluate at one point."""
        point = tuple(point)
        if len(point) != self._dim:
            raise InvalidArgument(
                f"Point of length {len(point)} for dimension {self._dim}")
        total = 0
        for exps, coeff in self._terms.items():
            term = coeff
            for value, power in zip(point, exps):
                term = term * value ** power
            total = total + term
        return total

    def values(self, points) -> np.ndarray:
        """Evaluate at an (n, dim) array of points in floating point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self._dim:
            raise InvalidArgument(
                f"Points of width {points.shape[1]} for dimension {self._dim}")
        total = np.zeros(points.shape[0])
        for exps, coeff in self._terms.items():
            total += float(coeff) * np.prod(points ** np.array(exps), axis=1)
        return total


def multipoly_partial(p: MultiPoly, axis: int) -> MultiPoly:
    """Formal partial derivative of `p` along a zero-based axis."""
    return p.partial(axis)
