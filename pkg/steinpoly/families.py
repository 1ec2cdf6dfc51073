"""Polynomial eigenbases of the Stein-Markov operators of the catalog."""
from __future__ import annotations

import math
import logging
import threading
import dataclasses
from fractions import Fraction

import steinpoly.types as t
from steinpoly import stein
from steinpoly.config import MAX_DEGREE, MAX_DIMENSION
from steinpoly.utils import rising, as_fraction
from steinpoly.exceptions import (
    InvalidArgument,
    NoPolynomialBasis,
    NotAnEigenfunction,
    UnsupportedOperation,
)

LOGGER = logging.getLogger(__name__)

MV_MAX_ORDER = 10

_BASIS_CACHE = {}
_BASIS_LOCK = threading.Lock()


def classify(phi: t.Poly, psi: t.Poly) -> t.PolyClass:
    """Match (phi, psi) against the Hermite, Laguerre and Jacobi conditions."""
    if phi.degree == 0 and psi.degree == 1:
        if (psi.lead > 0) != (phi.lead > 0):
            return t.PolyClass.HermiteLike
    elif phi.degree == 1 and psi.degree == 1:
        if phi.coeff(0) / phi.lead != psi.coeff(0) / psi.lead:
            return t.PolyClass.LaguerreLike
    elif phi.degree == 2 and psi.degree == 1:
        a, b, c = phi.coeff(2), phi.coeff(1), phi.coeff(0)
        if b * b - 4 * a * c > 0:
            root = -psi.coeff(0) / psi.lead
            # psi's root lies strictly between the roots of phi
            if phi(root) * a < 0:
                return t.PolyClass.JacobiLike

    return t.PolyClass.Unclassified


def phi_psi(fam, z1=()) -> t.PhiPsi:
    """(phi, psi) with phi = -1/tau' and (s phi)' = psi s, classified."""
    if fam.DISCRETE:
        raise UnsupportedOperation(f"{fam.name} is discrete, phi/psi are undefined")
    phi, psi = fam.phi_psi_raw(z1)
    return t.PhiPsi(phi, psi, classify(phi, psi))


def eigenvalue_of(op: stein.SteinOp, q: t.Poly) -> Fraction:
    """Eigenvalue of q under A D, raising when q is not an eigenfunction."""
    image = stein.apply_stein_markov(op, q)
    lam = image.coeff(q.degree) / q.lead
    residual = image - q * lam
    if not residual.is_zero():
        if q.is_exact or max(abs(float(c)) for c in residual.coeffs) > 1e-9 * (
                1 + max(abs(float(c)) for c in image.coeffs)):
            raise NotAnEigenfunction(
                f"A D {q} leaves the residual {residual} after removing {lam} q")
    return lam


def rodrigues_polys(fam, J: int, z1=()) -> list:
    """Q_j = (1/s) D^j (s phi^j) for j = 0..J, with exact coefficients."""
    pair = phi_psi(fam, z1)
    if pair.poly_class is t.PolyClass.Unclassified:
        raise NoPolynomialBasis(f"{fam.name}: (phi, psi) = ({pair.phi}, {pair.psi})")

    num, den = fam.log_weight_ratio(z1)
    polys = [t.Poly.constant(1)]
    for j in range(1, J + 1):
        q = pair.phi ** j
        for _ in range(j):
            # (1/s) D (s q) = q' + q s'/s
            q = q.diff() + (q * num) / den
        polys.append(q)
    return polys


def rodrigues_basis(fam, J: int, z1=()) -> t.EigenBasis:
    """Rodrigues eigenbasis of a continuous family."""
    polys = rodrigues_polys(fam, J, z1)
    op = stein.markov_operator(fam, z1)
    raw = [eigenvalue_of(op, q) for q in polys]
    scale = phi_psi(fam, z1).scale
    return t.EigenBasis(
        family=fam,
        z1=tuple(z1),
        polys=polys,
        eigenvalues=[lam / scale for lam in raw],
        raw_eigenvalues=raw,
        operator=op,
    )


def jacobi_hypergeometric(fam, j: int, z1=()) -> t.Poly:
    """(a)_j / j! 2F1(-j, j + a + b - 1; a; x) of the beta family."""
    if fam.KIND is not t.FamilyKind.BetaTilt:
        raise UnsupportedOperation(f"No hypergeometric Jacobi form for {fam.name}")
    a, b = fam.param("a", z1), fam.param("b", z1)
    coeffs = []
    for k in range(j + 1):
        coeffs.append(
            rising(-j, k) * rising(j + a + b - 1, k) / (rising(a, k) * math.factorial(k))
        )
    return t.Poly(coeffs) * (rising(a, j) / math.factorial(j))


def _falling_poly(base: t.Poly, k: int) -> t.Poly:
    result = t.Poly.constant(1)
    for i in range(k):
        result = result * (base - i)
    return result


def _rising_poly(base: t.Poly, k: int) -> t.Poly:
    result = t.Poly.constant(1)
    for i in range(k):
        result = result * (base + i)
    return result


def charlier(m0, j: int) -> t.Poly:
    """sum_r C(j, r) (-1)^(j-r) m0^-r x (x - 1) ... (x - r + 1)."""
    m0 = as_fraction(m0)
    x = t.Poly.x()
    total = t.Poly()
    for r in range(j + 1):
        total = total + _falling_poly(x, r) * (
            math.comb(j, r) * (-1) ** (j - r) / m0 ** r)
    return total


def meixner(beta, c, j: int) -> t.Poly:
    """sum_k (-1)^k C(j, k) x (x - 1) ... (x - k + 1) (x + beta)_(j-k) c^-k."""
    beta, c = as_fraction(beta), as_fraction(c)
    x = t.Poly.x()
    total = t.Poly()
    for k in range(j + 1):
        term = _falling_poly(x, k) * _rising_poly(x + beta, j - k)
        total = total + term * ((-1) ** k * math.comb(j, k) / c ** k)
    return total


def krawtchouk(N: int, p, j: int) -> t.Poly:
    """sum_l (-1)^(j-l) C(N - x, j - l) C(x, l) p^(j-l) (1 - p)^l."""
    if j > N:
        raise InvalidArgument(f"Krawtchouk degree {j} exceeds N = {N}")
    p = as_fraction(p)
    x = t.Poly.x()
    total = t.Poly()
    for l in range(j + 1):
        left = _falling_poly(N - x, j - l) / math.factorial(j - l)
        right = _falling_poly(x, l) / math.factorial(l)
        total = total + left * right * ((-1) ** (j - l) * p ** (j - l) * (1 - p) ** l)
    return total


def discrete_polys(fam, J: int, z1=()) -> list:
    """Explicit discrete orthogonal polynomials of a lattice family."""
    kind = fam.KIND
    if kind is t.FamilyKind.PoissonTilt:
        m0 = fam.param("m0", z1)
        return [charlier(m0, j) for j in range(J + 1)]
    if kind in (t.FamilyKind.NegBinTilt, t.FamilyKind.PascalShift):
        alpha, p = fam.param("alpha", z1), fam.param("p", z1)
        return [meixner(alpha, 1 - p, j) for j in range(J + 1)]
    if kind is t.FamilyKind.BinomialShift:
        N, p = fam.param("N", z1), fam.param("p", z1)
        return [krawtchouk(N, p, j) for j in range(J + 1)]

    raise UnsupportedOperation(f"No explicit discrete basis for {fam.name}")


def discrete_basis(fam, J: int, z1=()) -> t.EigenBasis:
    """Charlier, Meixner or Krawtchouk eigenbasis of a lattice family."""
    polys = discrete_polys(fam, J, z1)
    op = stein.markov_operator(fam, z1)
    raw = [eigenvalue_of(op, q) for q in polys]
    return t.EigenBasis(
        family=fam,
        z1=tuple(z1),
        polys=polys,
        eigenvalues=raw,
        raw_eigenvalues=raw,
        operator=op,
    )


def build_basis(fam, J: int, z1=()) -> t.EigenBasis:
    """Cached eigenbasis Q_0..Q_J of a univariate family at z1."""
    if not 0 <= J <= MAX_DEGREE:
        raise InvalidArgument(f"Truncation must lie in 0..{MAX_DEGREE}, got {J}")
    if fam.dim != 1:
        raise UnsupportedOperation(
            f"{fam.name} is multivariate, use mv_hermite_basis")

    key = (type(fam), fam.exact_params(z1), J)
    basis = _BASIS_CACHE.get(key)
    if basis is None:
        if fam.DISCRETE:
            basis = discrete_basis(fam, J, z1)
        else:
            basis = rodrigues_basis(fam, J, z1)
        LOGGER.debug("Built %s basis through degree %d", fam.name, J)
        with _BASIS_LOCK:
            basis = _BASIS_CACHE.setdefault(key, basis)

    if basis.family is not fam:
        basis = dataclasses.replace(basis, family=fam)
    return basis


def clear_cache():
    """Drop every cached basis."""
    with _BASIS_LOCK:
        _BASIS_CACHE.clear()


def mv_hermite_basis(fam, multi_j) -> t.MultiPoly:
    """(-1)^|j| e^(x'Mx/2) d^j e^(-x'Mx/2) by Q_(j+e_i) = Q_j (Mx)_i - d_i Q_j."""
    if fam.KIND is not t.FamilyKind.MvNormalLoc:
        raise UnsupportedOperation(f"{fam.name} has no multivariate Hermite basis")
    d = fam.dim
    if d > MAX_DIMENSION:
        raise UnsupportedOperation(f"Dimension {d} exceeds {MAX_DIMENSION}")

    multi_j = tuple(int(k) for k in multi_j)
    if len(multi_j) != d or any(k < 0 for k in multi_j):
        raise InvalidArgument(f"Multi-index {multi_j} does not match dimension {d}")
    if sum(multi_j) > MV_MAX_ORDER:
        raise InvalidArgument(f"Total order {sum(multi_j)} exceeds {MV_MAX_ORDER}")

    rows = fam.param("M")
    gradient = [
        sum((t.MultiPoly.variable(k, d) * rows[i][k] for k in range(d)),
            t.MultiPoly({}, d))
        for i in range(d)
    ]

    q = t.MultiPoly.constant(1, d)
    for axis, order in enumerate(multi_j):
        for _ in range(order):
            q = q * gradient[axis] - q.partial(axis)
    return q


def multi_indices(d: int, order: int) -> list:
    """All exponent tuples of length d with total order <= `order`."""
    if d == 1:
        return [(k,) for k in range(order + 1)]
    out = []
    for first in range(order + 1):
        for rest in multi_indices(d - 1, order - first):
            out.append((first,) + rest)
    return out


def ladder_coefficients(basis: t.EigenBasis, j: int) -> list:
    """a_0..a_(j-1) with D Q_j = sum_i a_i Q_i, exactly."""
    if not 0 <= j <= basis.J:
        raise InvalidArgument(f"Degree {j} outside of the basis 0..{basis.J}")
    op = basis.operator or stein.markov_operator(basis.family, basis.z1)
    dq = stein.operator_derivative(op, basis.polys[j])
    return basis.truncated(j - 1).expand(dq) if j else []


def sturm_liouville_residual(fam, basis: t.EigenBasis, j: int, z1=()) -> t.Poly:
    """phi Q_j'' + psi Q_j' + lambda_j Q_j with the raw pair, exactly."""
    pair = phi_psi(fam, z1)
    q = basis.polys[j]
    return pair.phi * q.diff().diff() + pair.psi * q.diff() + q * basis.raw_eigenvalues[j]
