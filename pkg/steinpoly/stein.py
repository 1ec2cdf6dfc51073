"""Stein and Stein-Markov operators acting exactly on polynomials."""
from __future__ import annotations

import math
import logging
import dataclasses
from fractions import Fraction

import numpy as np

import steinpoly.types as t
from steinpoly import quadrature
from steinpoly.config import TOLERANCES
from steinpoly.utils import as_fraction
from steinpoly.exceptions import (
    NotPearsonOrd,
    InvalidArgument,
    OperatorMismatch,
    UnsupportedOperation,
)

LOGGER = logging.getLogger(__name__)

ORD_CHECK_POINTS = 100
RATIO_CHECK_POINTS = 50


@dataclasses.dataclass(frozen=True)
class SteinOp:
    """First order Stein operator.

    ContinuousD1:         A q = phi q' + psi q
    DiscreteBackwardBase: A q = r nabla q - (m + r) q, r(x) = s(x - 1) / s(x)
    DiscreteForwardBase:  A q = -r delta q - (m + r) q, r(x) = s(x + 1) / s(x)
    PearsonOrd:           A q = phi nabla q + psi q (+ c mu q once shifted)

    `boundary` is the end of the lattice where the ratio is forced to 0.
    """

    form: t.OperatorForm
    phi: t.Poly = None
    psi: t.Poly = None
    ratio: t.RationalFunction = None
    m: Fraction = Fraction(0)
    c: Fraction = None
    boundary: int = 0

    @property
    def discrete(self) -> bool:
        """True for operators acting on lattice functions."""
        return self.form is not t.OperatorForm.ContinuousD1

    @property
    def polynomial(self) -> bool:
        """True when the operator maps polynomials to polynomials."""
        if self.ratio is None:
            return True
        return self.ratio.den.degree == 0

    def shifted(self, mu) -> SteinOp:
        """Return A_mu = phi nabla + (psi + c mu) of a Pearson / Ord operator."""
        if self.form is not t.OperatorForm.PearsonOrd or self.c is None:
            raise UnsupportedOperation(f"{self.form} operators cannot be shifted")
        return dataclasses.replace(self, psi=self.psi + self.c * as_fraction(mu))


def _continuous(phi_raw: t.Poly, psi_raw: t.Poly) -> SteinOp:
    # A = -phi D - psi in terms of the (phi, psi) pair of the family
    return SteinOp(t.OperatorForm.ContinuousD1, phi=-phi_raw, psi=-psi_raw)


def _ord(fam, z1) -> SteinOp:
    phi, psi = fam.phi_psi_ord(z1)
    return SteinOp(
        t.OperatorForm.PearsonOrd,
        phi=phi,
        psi=psi,
        c=getattr(fam, "coupling", None),
    )


def stein_operator(fam, z1=()) -> SteinOp:
    """Operator A with E[A q | Z] = -rho(z) E[q | Z]."""
    if fam.dim != 1:
        raise UnsupportedOperation(f"No scalar Stein operator for {fam.name}")
    if not fam.DISCRETE:
        return _continuous(*fam.phi_psi_raw(z1))
    if hasattr(fam, "weight_ratio"):
        lo, _ = fam.lattice_bounds(fam.base_instrument(z1))
        return SteinOp(
            t.OperatorForm.DiscreteBackwardBase,
            ratio=fam.weight_ratio(z1),
            m=fam.m(z1),
            boundary=lo,
        )
    return _ord(fam, z1)


def markov_operator(fam, z1=()) -> SteinOp:
    """First order operator whose composition with D has the basis as eigenfunctions."""
    op = stein_operator(fam, z1)
    if op.polynomial:
        return op
    return _ord(fam, z1)


def mirrored_operator(op: SteinOp) -> SteinOp:
    """Operator of the law of -X for a lattice a + Z_+ operator of X."""
    if op.form is not t.OperatorForm.DiscreteBackwardBase:
        raise UnsupportedOperation("Only backward lattice operators can be mirrored")
    return dataclasses.replace(
        op,
        form=t.OperatorForm.DiscreteForwardBase,
        ratio=t.RationalFunction(op.ratio.num.reflect(), op.ratio.den.reflect()),
        boundary=-op.boundary,
    )


def apply_stein(op: SteinOp, q: t.Poly, allow_rational: bool = False):
    """Apply A exactly; rational results raise unless `allow_rational`."""
    if op.form is t.OperatorForm.ContinuousD1:
        return op.phi * q.diff() + op.psi * q
    if op.form is t.OperatorForm.PearsonOrd:
        return op.phi * q.backward_diff() + op.psi * q

    step = -1 if op.form is t.OperatorForm.DiscreteBackwardBase else 1
    num, den = op.ratio.num, op.ratio.den
    image = t.RationalFunction(-(den * q) * op.m - num * q.shift(step), den)
    try:
        return image.to_poly()
    except OperatorMismatch:
        if allow_rational:
            return image
        raise


def _derivative(op: SteinOp, q: t.Poly) -> t.Poly:
    if op.form is t.OperatorForm.ContinuousD1:
        return q.diff()
    if op.form is t.OperatorForm.DiscreteForwardBase:
        return -q.backward_diff()
    return q.forward_diff()


def apply_stein_markov(op: SteinOp, q: t.Poly) -> t.Poly:
    """Apply the Stein-Markov operator A D (D = d/dx, delta or -nabla)."""
    return apply_stein(op, _derivative(op, q))


def operator_derivative(op: SteinOp, q: t.Poly) -> t.Poly:
    """The D of A D for this operator form."""
    return _derivative(op, q)


def _ratio_values(op: SteinOp, x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape)
    if op.form is t.OperatorForm.DiscreteBackwardBase:
        inside = x > op.boundary
    else:
        inside = x < op.boundary
    if np.any(inside):
        out[inside] = op.ratio.values(x[inside])
    return out


def stein_values(op: SteinOp, q: t.Poly, x, k: int = 1) -> np.ndarray:
    """Values of A^k q at integer points, for operators with rational ratios."""
    x = np.asarray(x, dtype=int)
    m = float(op.m)
    if op.form is t.OperatorForm.DiscreteBackwardBase:
        grid = np.arange(x.min() - k, x.max() + 1)
        offset = k
    elif op.form is t.OperatorForm.DiscreteForwardBase:
        grid = np.arange(x.min(), x.max() + k + 1)
        offset = 0
    else:
        image = q
        for _ in range(k):
            image = apply_stein(op, image)
        return image.values(x)

    ratio = _ratio_values(op, grid)
    values = q.values(grid)
    for _ in range(k):
        neighbour = np.zeros_like(values)
        if op.form is t.OperatorForm.DiscreteBackwardBase:
            neighbour[1:] = values[:-1]
        else:
            neighbour[:-1] = values[1:]
        values = -m * values - ratio * neighbour
    return values[x - x.min() + offset]


def _iterated_values(op: SteinOp, q: t.Poly, k: int):
    if not op.polynomial:
        def pointwise(x):
            return np.vstack([stein_values(op, q, x, k), q.values(x)])

        return pointwise, q.degree + k

    image = q
    for _ in range(k):
        image = apply_stein(op, image)

    def exact(x):
        return np.vstack([np.atleast_1d(image.values(x)), np.atleast_1d(q.values(x))])

    return exact, image.degree


def stein_identity_residual(fam, q: t.Poly, z) -> float:
    """Absolute |E[A q | Z = z] + rho(z) E[q | Z = z]|."""
    return iterated_identity_residual(fam, q, z, 1)


def iterated_identity_residual(fam, q: t.Poly, z, k: int) -> float:
    """Absolute |E[A^k q | Z = z] - (-rho(z))^k E[q | Z = z]|.

    Compare it with identity_bound, which scales the tolerance by the size
    of E[q | Z = z].
    """
    if k < 1:
        raise InvalidArgument(f"Iteration count must be positive, got {k}")
    if q.is_zero():
        return 0.0

    point = fam.check_z(z)
    op = stein_operator(fam, point.z1)
    rho = fam.identity_rate(point)
    evaluator, degree = _iterated_values(op, q, k)
    image, base = quadrature.integrate(fam, evaluator, point, degree)

    expected = (-rho) ** k * base
    LOGGER.debug("%s: k=%d E[A^k q]=%.17g expected=%.17g", fam.name, k,
                  image, expected)
    return float(abs(image - expected))


def identity_bound(fam, q: t.Poly, z, k: int = 1, tol: float = None) -> float:
    """tol * (1 + |E[q | Z = z]|), tol defaulting to the stein or iterated one."""
    if tol is None:
        tol = TOLERANCES["stein" if k == 1 else "iterated"]
    if q.is_zero():
        return float(tol)
    (mean,) = quadrature.expect(fam, [q], z)
    return float(tol * (1.0 + abs(mean)))


def ratio_consistency_residual(fam, z1=()) -> float:
    """max |r(x) s(x) - s(x - 1)| / max s over the first lattice points."""
    op = stein_operator(fam, z1)
    if op.ratio is None:
        raise UnsupportedOperation(f"{fam.name} has no lattice ratio")
    x = np.arange(op.boundary, op.boundary + RATIO_CHECK_POINTS)
    s = fam.weight_s(x, z1)
    previous = fam.weight_s(x - 1, z1)
    ratio = _ratio_values(op, x)
    return float(np.max(np.abs(ratio * s - previous)) / np.max(s))


def ord_relation_residual(fam, phi: t.Poly, psi: t.Poly, z1=()) -> float:
    """Scaled max |delta[phi f] - psi f| of the mu = 0 law over 100 points."""
    point = fam.base_instrument(z1)
    lo, hi = fam.lattice_bounds(point)
    stop = lo + ORD_CHECK_POINTS if hi is None else min(hi + 1, lo + ORD_CHECK_POINTS)
    x = np.arange(lo, stop)
    f = np.exp(fam.log_pmf(x, point))
    f_next = np.exp(fam.log_pmf(x + 1, point))
    lhs = phi.values(x + 1) * f_next - phi.values(x) * f
    rhs = psi.values(x) * f
    scale = np.max(np.abs(phi.values(x) * f)) + np.max(np.abs(rhs)) + 1e-300
    return float(np.max(np.abs(lhs - rhs)) / scale)


def pearson_ord_shifted(fam, J: int, mu_values, c=None, phi=None, psi=None) -> list:
    """Check E[A_mu Q_j | Z] = 0 and lambda_j E[Q_j | Z] = -c mu E[D Q_j | Z].

    The Ord relation of the base law is verified first; (phi, psi, c) default
    to the family's own values.  Returns a list of Residual records.
    """
    from steinpoly import families

    if getattr(fam, "coupling", None) is None:
        raise UnsupportedOperation(f"{fam.name} is not a Pearson / Ord shift family")

    base_phi, base_psi = fam.phi_psi_ord()
    phi = base_phi if phi is None else phi
    psi = base_psi if psi is None else psi
    c = as_fraction(getattr(fam, "coupling", None) if c is None else c)

    ord_residual = ord_relation_residual(fam, phi, psi)
    if ord_residual > TOLERANCES["pearson_ord"]:
        raise NotPearsonOrd(
            f"{fam.name} fails delta[phi f] = psi f (residual {ord_residual:.3g})")

    op = SteinOp(t.OperatorForm.PearsonOrd, phi=phi, psi=psi, c=c)
    basis = families.build_basis(fam, J)
    tol = TOLERANCES["pearson_ord"]
    results = []
    for mu in mu_values:
        point = fam.check_z(mu)
        shifted = op.shifted(point.scalar)
        for j, (q, lam) in enumerate(zip(basis.polys, basis.raw_eigenvalues)):
            image = apply_stein(shifted, q)
            dq = q.forward_diff()
            e_image, e_q, e_dq = quadrature.expect(fam, [image, q, dq], point)

            shift = float(c) * point.scalar * e_dq
            stein_res = abs(e_image) / (1.0 + abs(float(lam) * e_q) + abs(shift))
            eigen_res = abs(float(lam) * e_q + shift) / (
                1.0 + abs(float(lam) * e_q) + abs(shift))

            results.append(t.Residual(fam.name, "ord_shift_stein", j,
                                      point.as_list(), float(stein_res), tol))
            results.append(t.Residual(fam.name, "ord_shift_eigen", j,
                                      point.as_list(), float(eigen_res), tol))
    return results


def self_adjoint_residual(fam, u: t.Poly, v: t.Poly, z1=()) -> float:
    """Scaled |<A D u, v> - <u, A D v>| under the mu = 0 law."""
    op = markov_operator(fam, z1)
    au = apply_stein_markov(op, u)
    av = apply_stein_markov(op, v)
    left, right = quadrature.integrate(
        fam,
        lambda x: np.vstack([au.values(x) * v.values(x), u.values(x) * av.values(x)]),
        fam.base_instrument(z1),
        u.degree + v.degree,
    )
    return float(abs(left - right) / (1.0 + abs(left) + abs(right)))


def boundary_guard(fam, q: t.Poly, z, steps: int = 40) -> dict:
    """Evaluate q f / tau' along geometric sequences approaching both ends.

    The values must tend to 0 for the Stein identity to hold.
    """
    if fam.DISCRETE or fam.dim != 1:
        raise UnsupportedOperation(f"No continuous boundary for {fam.name}")

    point = fam.check_z(z)
    phi, _ = fam.phi_psi_raw(point.z1)
    support = fam.support(point.z1, point)
    k = np.arange(1, steps + 1, dtype=float)

    def approach(end, inward):
        if math.isinf(end):
            x = math.copysign(1.0, end) * 2.0 ** k
        else:
            x = end + inward * 2.0 ** -k
        density = fam.density(x, point)
        # tau' = -1 / phi
        return np.abs(q.demote().values(x) * density * -phi.demote().values(x))

    lower = approach(support.lo, 1.0)
    upper = approach(support.hi, -1.0)
    vanishes = bool(lower[-1] < TOLERANCES["stein"] and upper[-1] < TOLERANCES["stein"])
    return {
        "lower": float(lower[-1]),
        "upper": float(upper[-1]),
        "vanishes": vanishes,
    }


def markov_degree(op: SteinOp, q: t.Poly) -> int:
    """Degree of A D q, raising when it exceeds the degree of q."""
    image = apply_stein_markov(op, q)
    if image.degree > q.degree:
        raise OperatorMismatch(
            f"A D raised the degree from {q.degree} to {image.degree}")
    return image.degree

