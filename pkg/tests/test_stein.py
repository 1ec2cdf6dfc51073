import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import steinpoly.types as t
from steinpoly import stein, families
from steinpoly.config import TOLERANCES
from steinpoly.exceptions import (
    NotPearsonOrd,
    InvalidArgument,
    OperatorMismatch,
    UnsupportedOperation,
)

from .conftest import make_family


def _random_z(fam, rng):
    lo, hi = fam.z_domain
    z = rng.uniform(lo, hi)
    if fam.KIND is t.FamilyKind.BinomialShift:
        z = float(round(z))
    return z


def test_stein_identity_random_pairs(univariate):
    rng = np.random.default_rng(20240917)
    for _ in range(50):
        degree = int(rng.integers(0, 6))
        q = t.Poly([int(c) for c in rng.integers(-3, 4, size=degree + 1)])
        z = _random_z(univariate, rng)
        residual = stein.stein_identity_residual(univariate, q, z)
        assert residual <= stein.identity_bound(univariate, q, z), (q, z)


def test_iterated_identity(univariate):
    rng = np.random.default_rng(5)
    basis = families.build_basis(univariate, 4)
    for z in [_random_z(univariate, rng) for _ in range(3)]:
        for j, q in enumerate(basis.polys):
            for k in range(2, 5):
                residual = stein.iterated_identity_residual(univariate, q, z, k)
                assert residual <= stein.identity_bound(univariate, q, z, k), (j, k, z)


def test_identity_residual_is_absolute(poisson, monkeypatch):
    q = t.Poly([0, 0, 1])
    z = 0.5
    rho = poisson.identity_rate(z)
    assert rho == pytest.approx(0.5)
    assert stein.stein_identity_residual(poisson, q, z) <= 1e-12

    # X ~ Poisson(1.5), E[X^2] = 1.5 + 1.5^2; a rate off by one leaves E[q] behind
    monkeypatch.setattr(poisson, "identity_rate", lambda point: rho + 1)
    assert stein.stein_identity_residual(poisson, q, z) == pytest.approx(3.75, rel=1e-9)
    assert stein.iterated_identity_residual(poisson, q, z, 2) == pytest.approx(
        abs(0.25 - 2.25) * 3.75, rel=1e-9)


def test_identity_bound(normal):
    q = t.Poly([0, 0, 1])
    # X | Z = z ~ N(z, 1) for the normal fixture, so E[X^2] = 1 + z^2
    assert stein.identity_bound(normal, q, 1.0) == pytest.approx(3e-8)
    assert stein.identity_bound(normal, q, 1.0, k=3) == pytest.approx(3e-7)
    assert stein.identity_bound(normal, q, 0.0, tol=0.5) == pytest.approx(1.0)
    assert stein.identity_bound(normal, t.Poly(), 0.0) == TOLERANCES["stein"]


def test_iterated_identity_arguments(normal):
    assert stein.iterated_identity_residual(normal, t.Poly(), 0.0, 2) == 0.0
    with pytest.raises(InvalidArgument):
        stein.iterated_identity_residual(normal, t.Poly.x(), 0.0, 0)


def test_operator_forms(normal, poisson, binomial):
    assert stein.stein_operator(normal).form is t.OperatorForm.ContinuousD1
    assert stein.stein_operator(poisson).form is t.OperatorForm.DiscreteBackwardBase
    assert stein.stein_operator(binomial).form is t.OperatorForm.PearsonOrd

    negbin = make_family("negbin")
    assert not stein.stein_operator(negbin).polynomial
    assert stein.markov_operator(negbin).form is t.OperatorForm.PearsonOrd


def test_continuous_operator_signs(normal):
    op = stein.stein_operator(normal)
    assert op.phi == t.Poly([1])
    assert op.psi == t.Poly([0, -1])
    # A D He_2 = 2 - 2 x^2
    assert stein.apply_stein_markov(op, t.Poly([-1, 0, 1])) == t.Poly([2, 0, -2])


def test_mirrored_operator_keeps_eigenvalues(poisson):
    op = stein.stein_operator(poisson)
    mirrored = stein.mirrored_operator(op)
    assert mirrored.form is t.OperatorForm.DiscreteForwardBase
    basis = families.build_basis(poisson, 5)
    for q, lam in zip(basis.polys, basis.raw_eigenvalues):
        image = stein.apply_stein_markov(mirrored, q.reflect())
        assert image == q.reflect() * lam

    with pytest.raises(UnsupportedOperation):
        stein.mirrored_operator(mirrored)


def test_ratio_consistency(poisson):
    assert stein.ratio_consistency_residual(poisson) <= 1e-12
    assert stein.ratio_consistency_residual(make_family("negbin")) <= 1e-12
    with pytest.raises(UnsupportedOperation):
        stein.ratio_consistency_residual(make_family("pascal"))


@pytest.mark.parametrize("name, mus", [("binomial", [0, 1, 2, 3, 5]),
                                       ("pascal", [0, 0.5, 1, 2, 4])])
def test_pearson_ord_shifted(name, mus):
    fam = make_family(name)
    results = stein.pearson_ord_shifted(fam, 6, mus)
    assert len(results) == 2 * 7 * len(mus)
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_pearson_ord_rejects_wrong_pair(binomial):
    with pytest.raises(NotPearsonOrd):
        stein.pearson_ord_shifted(binomial, 2, [0], psi=t.Poly([0, -1]))


def test_pearson_ord_needs_a_shift_family(poisson):
    with pytest.raises(UnsupportedOperation):
        stein.pearson_ord_shifted(poisson, 2, [0])


def test_shifted_operator(binomial, normal):
    op = stein.stein_operator(binomial)
    shifted = op.shifted(2)
    assert shifted.psi == op.psi + op.c * 2
    with pytest.raises(UnsupportedOperation):
        stein.stein_operator(normal).shifted(1)


@pytest.mark.parametrize("name", ["normal", "gamma", "beta", "poisson", "binomial"])
def test_self_adjoint(name):
    fam = make_family(name)
    u, v = t.Poly([1, 0, 1]), t.Poly([0, -1, 0, 1])
    assert stein.self_adjoint_residual(fam, u, v) <= 1e-9


@pytest.mark.parametrize("name", ["normal", "gamma", "beta"])
def test_boundary_terms_vanish(name):
    fam = make_family(name)
    guard = stein.boundary_guard(fam, t.Poly([0, 0, 1]), fam.z_domain[0] + 1)
    assert guard["vanishes"]


def test_boundary_guard_is_continuous_only(poisson):
    with pytest.raises(UnsupportedOperation):
        stein.boundary_guard(poisson, t.Poly.x(), 0.5)


def test_markov_degree(normal):
    op = stein.markov_operator(normal)
    assert stein.markov_degree(op, t.Poly([0, -3, 0, 1])) == 3
    raising = stein.SteinOp(t.OperatorForm.ContinuousD1, phi=t.Poly([0, 0, 1]),
                            psi=t.Poly([0, 0, 1]))
    with pytest.raises(OperatorMismatch):
        stein.markov_degree(raising, t.Poly([0, 1]))


def test_rational_image_of_negbin_operator():
    op = stein.stein_operator(make_family("negbin"))
    q = t.Poly([0, 0, 1])
    with pytest.raises(OperatorMismatch):
        stein.apply_stein(op, q)
    image = stein.apply_stein(op, q, allow_rational=True)
    assert isinstance(image, t.RationalFunction)
    x = np.arange(1, 6)
    np.testing.assert_allclose(image.values(x), stein.stein_values(op, q, x))


def test_stein_values_match_exact_image(poisson):
    op = stein.stein_operator(poisson)
    q = t.Poly([1, -2, 1])
    x = np.arange(0, 8)
    np.testing.assert_allclose(stein.stein_values(op, q, x),
                               stein.apply_stein(op, q).values(x))
    twice = stein.apply_stein(op, stein.apply_stein(op, q))
    np.testing.assert_allclose(stein.stein_values(op, q, x, k=2), twice.values(x))


def test_multivariate_has_no_scalar_operator(mvnormal):
    with pytest.raises(UnsupportedOperation):
        stein.stein_operator(mvnormal)


coefficients = st.lists(st.integers(-5, 5), min_size=1, max_size=5)


@settings(max_examples=50, deadline=None)
@given(coefficients, coefficients, st.integers(-4, 4))
def test_markov_operator_is_linear(a, b, k):
    op = stein.markov_operator(make_family("beta"))
    p, q = t.Poly(a), t.Poly(b)
    left = stein.apply_stein_markov(op, p * k + q)
    right = stein.apply_stein_markov(op, p) * k + stein.apply_stein_markov(op, q)
    assert left == right
