from fractions import Fraction

import numpy as np
import pytest

import steinpoly.types as t
from steinpoly import stein, families, quadrature
from steinpoly.utils import parallel_map
from steinpoly.distributions import (
    BetaTilt,
    NormalLoc,
    GammaShift,
    NegBinTilt,
    MvNormalLoc,
    PascalShift,
    PoissonTilt,
    BinomialShift,
)
from steinpoly.exceptions import (
    InvalidArgument,
    NotAnEigenfunction,
    UnsupportedOperation,
)

from .conftest import make_family

EXACT_FAMILIES = ("normal", "gamma", "beta", "poisson", "negbin", "binomial")


@pytest.mark.parametrize("name", EXACT_FAMILIES)
def test_eigenrelation_is_exact(name):
    fam = make_family(name)
    basis = families.build_basis(fam, 10)
    for q, lam in zip(basis.polys, basis.raw_eigenvalues):
        assert q.is_exact
        image = stein.apply_stein_markov(basis.operator, q)
        assert (image - q * lam).is_zero()


@pytest.mark.parametrize("sigma2", [1, 2, "1/3"])
def test_normal_eigenvalues(sigma2):
    basis = families.build_basis(NormalLoc(sigma2=sigma2), 10)
    assert list(basis.eigenvalues) == [-j for j in range(11)]


@pytest.mark.parametrize("delta", ["1/2", 1, 2])
def test_gamma_eigenvalues(delta):
    basis = families.build_basis(GammaShift(r=1, delta=delta), 10)
    delta = Fraction(delta)
    assert list(basis.eigenvalues) == [-delta * j for j in range(11)]


@pytest.mark.parametrize("a, b", [(1, 1), (2, 3)])
def test_beta_eigenvalues(a, b):
    basis = families.build_basis(BetaTilt(a=a, b=b), 10)
    assert list(basis.eigenvalues) == [-j * (j + a + b - 1) for j in range(11)]


def test_discrete_eigenvalues():
    assert list(families.build_basis(PoissonTilt(m0=2), 5).eigenvalues) == [
        Fraction(-j, 2) for j in range(6)]
    for fam in (NegBinTilt(alpha=2, p="1/2"), PascalShift(alpha=3, p="1/4")):
        p = fam.param("p")
        assert list(families.build_basis(fam, 5).eigenvalues) == [
            -p * j for j in range(6)]
    assert list(families.build_basis(BinomialShift(N=10, p="3/10"), 10)
                .eigenvalues) == [-j for j in range(11)]


def test_low_degree_members():
    assert families.build_basis(GammaShift(r=1, delta=1), 1).polys[1] == t.Poly([-1, 1])
    assert families.build_basis(BetaTilt(a=2, b=3), 1).polys[1] == t.Poly([-2, 5])
    normal = families.build_basis(NormalLoc(sigma2=1), 3).polys
    assert normal[2] == t.Poly([-1, 0, 1])
    assert normal[3] == t.Poly([0, -3, 0, 1])
    assert families.charlier(1, 1) == t.Poly([-1, 1])
    assert families.meixner(2, Fraction(1, 2), 1) == t.Poly([2, -1])
    assert families.krawtchouk(10, Fraction(3, 10), 1) == t.Poly([-3, 1])


def test_krawtchouk_degree_is_bounded():
    with pytest.raises(InvalidArgument):
        families.build_basis(BinomialShift(N=3, p="1/2"), 4)


def test_truncation_limits(normal, mvnormal):
    with pytest.raises(InvalidArgument):
        families.build_basis(normal, 31)
    with pytest.raises(InvalidArgument):
        families.build_basis(normal, -1)
    with pytest.raises(UnsupportedOperation):
        families.build_basis(mvnormal, 2)


def test_jacobi_hypergeometric_matches_rodrigues():
    fam = BetaTilt(a=2, b=3)
    basis = families.build_basis(fam, 6)
    for j, q in enumerate(basis.polys):
        h = families.jacobi_hypergeometric(fam, j)
        assert h * q.lead == q * h.lead
        image = stein.apply_stein_markov(basis.operator, h)
        assert (image - h * basis.raw_eigenvalues[j]).is_zero()
    with pytest.raises(UnsupportedOperation):
        families.jacobi_hypergeometric(NormalLoc(sigma2=1), 2)


@pytest.mark.parametrize("name", ["normal", "gamma", "beta"])
def test_sturm_liouville_residual_vanishes(name):
    fam = make_family(name)
    basis = families.build_basis(fam, 8)
    for j in range(9):
        assert families.sturm_liouville_residual(fam, basis, j).is_zero()


def test_classify():
    x = t.Poly.x()
    assert families.classify(t.Poly([-1]), x) is t.PolyClass.HermiteLike
    assert families.classify(t.Poly([1]), x) is t.PolyClass.Unclassified
    assert families.classify(t.Poly([0, -1]), t.Poly([-1, 1])) is t.PolyClass.LaguerreLike
    assert families.classify(t.Poly([0, -1]), t.Poly([0, 1])) is t.PolyClass.Unclassified
    assert families.classify(t.Poly([0, -1, 1]), t.Poly([-2, 5])) is t.PolyClass.JacobiLike
    assert families.classify(t.Poly([0, 0, 1]), x) is t.PolyClass.Unclassified


def test_phi_psi(normal, poisson):
    pair = families.phi_psi(normal)
    assert pair.poly_class is t.PolyClass.HermiteLike
    assert pair.canonical().phi == t.Poly([-1])
    assert pair.canonical().psi == t.Poly.x()
    with pytest.raises(UnsupportedOperation):
        families.phi_psi(poisson)


def test_eigenvalue_of_rejects_non_eigenfunctions(normal):
    op = stein.markov_operator(normal)
    assert families.eigenvalue_of(op, t.Poly([-1, 0, 1])) == -2
    with pytest.raises(NotAnEigenfunction):
        families.eigenvalue_of(op, t.Poly([0, 0, 1]))


def test_basis_cache(normal):
    basis = families.build_basis(normal, 5)
    assert families.build_basis(normal, 5) is basis

    twin = NormalLoc(sigma2=1)
    other = families.build_basis(twin, 5)
    assert other.polys == basis.polys
    assert other.family is twin


def test_concurrent_builds_agree(threads):
    threads(4)
    bases = parallel_map(lambda _: families.build_basis(PoissonTilt(m0=1), 8), range(8))
    assert all(b.polys == bases[0].polys for b in bases)


def test_ladder_coefficients(normal):
    basis = families.build_basis(normal, 4)
    assert families.ladder_coefficients(basis, 0) == []
    assert families.ladder_coefficients(basis, 3) == [0, 0, 3]
    with pytest.raises(InvalidArgument):
        families.ladder_coefficients(basis, 5)


@pytest.mark.parametrize("name", EXACT_FAMILIES + ("pascal",))
def test_orthogonality(name):
    fam = make_family(name)
    basis = families.build_basis(fam, 10)
    gram = quadrature.gram(fam, basis.polys)
    norms = np.sqrt(np.diag(gram))
    scaled = gram / np.outer(norms, norms)
    np.testing.assert_allclose(scaled, np.eye(11), atol=1e-8)


def test_mv_hermite_low_orders(mvnormal):
    assert families.mv_hermite_basis(mvnormal, (0, 0)) == t.MultiPoly.constant(1, 2)
    assert families.mv_hermite_basis(mvnormal, (1, 0)) == t.MultiPoly({(1, 0): 2}, 2)
    assert families.mv_hermite_basis(mvnormal, (2, 0)) == t.MultiPoly(
        {(2, 0): 4, (0, 0): -2}, 2)
    assert families.mv_hermite_basis(mvnormal, (1, 1)) == t.MultiPoly({(1, 1): 2}, 2)


@pytest.mark.parametrize("M", [[[2, 0], [0, 1]], [[1, 0], [0, 3]]])
def test_mv_orthogonality(M):
    fam = MvNormalLoc(M=M)
    polys = [families.mv_hermite_basis(fam, j) for j in families.multi_indices(2, 3)]
    gram = quadrature.gram(fam, polys)
    norms = np.sqrt(np.diag(gram))
    np.testing.assert_allclose(gram / np.outer(norms, norms), np.eye(len(polys)),
                               atol=1e-6)


def test_mv_hermite_arguments(mvnormal, normal):
    assert len(families.multi_indices(2, 2)) == 6
    assert len(families.multi_indices(3, 1)) == 4
    with pytest.raises(InvalidArgument):
        families.mv_hermite_basis(mvnormal, (11, 0))
    with pytest.raises(InvalidArgument):
        families.mv_hermite_basis(mvnormal, (1,))
    with pytest.raises(UnsupportedOperation):
        families.mv_hermite_basis(normal, (1,))
