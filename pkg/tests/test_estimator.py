import numpy as np
import pandas as pd
import pytest

import steinpoly.types as t
from steinpoly import families, estimator
from steinpoly.exceptions import (
    ParseError,
    DomainError,
    SchemaError,
    EmptyDataset,
    RankDeficient,
    InvalidArgument,
    UnsupportedOperation,
)

from .conftest import make_family

G_TRUE = [1, 0.5, -0.3]


@pytest.fixture
def csv_file(tmp_path):
    def write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def test_load_csv(csv_file):
    data = estimator.load_csv(csv_file("y,x,z2\n1,0.5,0.1\n2,1.5,-0.3\n3,2,0\n"))
    assert data.n == 3
    assert data.x_columns == ("x",)
    assert data.z2_columns == ("z2",)
    assert data.z1_columns == ()
    np.testing.assert_allclose(data.y, [1, 2, 3])
    assert data.rejected == ()


def test_load_csv_numbered_columns(csv_file):
    data = estimator.load_csv(csv_file("z2,y,x,z1_2,z1_1\n0.1,1,2,5,4\n"))
    assert data.z1_columns == ("z1_1", "z1_2")
    np.testing.assert_allclose(data.z1, [[4, 5]])
    assert data.instruments()[0] == t.InstrumentPoint(z1=(4.0, 5.0), z2=(0.1,))


def test_load_csv_missing_column(csv_file):
    with pytest.raises(SchemaError):
        estimator.load_csv(csv_file("x,z2\n1,2\n"))


def test_load_csv_rejects_missing_fields(csv_file):
    data = estimator.load_csv(csv_file("y,x,z2\n1,0.5,0.1\nnan,1.5,-0.3\n3,,0\n4,1,1\n"))
    assert data.n == 2
    assert data.rejected == ((1, "missing field"), (2, "missing field"))
    np.testing.assert_allclose(data.y, [1, 4])


def test_load_csv_parse_error(csv_file):
    with pytest.raises(ParseError) as exc:
        estimator.load_csv(csv_file("y,x,z2\n1,0.5,0.1\n2,abc,0\n"))
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_load_csv_empty(csv_file):
    with pytest.raises(EmptyDataset):
        estimator.load_csv(csv_file(""))
    with pytest.raises(EmptyDataset):
        estimator.load_csv(csv_file("y,x,z2\n"))
    with pytest.raises(EmptyDataset):
        estimator.load_csv(csv_file("y,x,z2\nnan,1,1\n"))


def test_load_csv_checks_the_family(csv_file, poisson, mvnormal):
    path = csv_file("y,x,z2\n1,2,0.5\n1,-1,0.5\n1,1.5,0.5\n1,3,5\n")
    data = estimator.load_csv(path, poisson)
    assert data.n == 1
    assert [row for row, _ in data.rejected] == [1, 2, 3]
    assert "outside of the support" in data.rejected[0][1]

    with pytest.raises(SchemaError):
        estimator.load_csv(path, mvnormal)


def test_synthesize_layout(normal):
    data = estimator.synthesize(normal, G_TRUE, n=200, seed=3)
    assert list(data.frame.columns) == ["y", "x", "z2"]
    assert data.n == 200
    assert data.z2.min() >= -2 and data.z2.max() <= 2
    again = estimator.synthesize(normal, G_TRUE, n=200, seed=3)
    pd.testing.assert_frame_equal(data.frame, again.frame)


def test_synthesize_binomial_draws_integer_shifts(binomial):
    data = estimator.synthesize(binomial, [0, 1], n=100, seed=1)
    z2 = data.z2[:, 0]
    np.testing.assert_array_equal(z2, np.round(z2))
    assert np.all(data.x <= 10 + z2)


def test_endogenous_errors_correlate_with_x(normal):
    data = estimator.synthesize(normal, G_TRUE, n=2000, seed=4, endogenous=True,
                                noise_sd=0.1)
    errors = data.y - estimator.as_poly(G_TRUE).demote().values(data.x)
    assert np.corrcoef(errors, data.x)[0, 1] > 0.3


def test_synthesize_arguments(normal, mvnormal):
    with pytest.raises(SchemaError):
        estimator.synthesize(normal, G_TRUE, z_law={"dist": "weird"})
    with pytest.raises(InvalidArgument):
        estimator.synthesize(normal, G_TRUE,
                             z_law={"dist": "uniform", "lo": 0, "hi": 1, "z1": [1]})
    with pytest.raises(DomainError):
        estimator.synthesize(normal, G_TRUE, z_law={"dist": "uniform", "lo": -5, "hi": 5})
    with pytest.raises(InvalidArgument):
        estimator.synthesize(normal, G_TRUE, n=0)
    with pytest.raises(UnsupportedOperation):
        estimator.synthesize(mvnormal, G_TRUE)
    with pytest.raises(InvalidArgument):
        estimator.as_poly([])


@pytest.mark.parametrize("name, g_true", [("normal", G_TRUE), ("poisson", [1, 2, 0.5])])
def test_noiseless_reduced_form_is_recovered(name, g_true):
    fam = make_family(name)
    data = estimator.synthesize(fam, g_true, n=60, seed=2, noise_sd=0.0,
                                reduced_form=True)
    result = estimator.fit(data, fam, J=2)
    expected = [float(b) for b in families.build_basis(fam, 2).expand(
        estimator.as_poly(g_true))]
    np.testing.assert_allclose(result.beta, expected, atol=1e-8)
    assert result.rank == 3
    assert result.residual_sd < 1e-8


def test_normal_truth_in_hermite_coordinates(normal):
    basis = families.build_basis(normal, 2)
    assert basis.expand(estimator.as_poly(G_TRUE)) == pytest.approx([0.7, 0.5, -0.3])


def test_zero_response(normal):
    data = estimator.synthesize(normal, G_TRUE, n=50, seed=1)
    data.frame["y"] = 0.0
    result = estimator.fit(data, normal, J=3)
    np.testing.assert_array_equal(result.beta, np.zeros(4))


def test_rank_deficiency_and_ridge(binomial):
    data = estimator.synthesize(binomial, [1, 1], n=50, seed=0,
                                z_law={"dist": "choice", "values": [3]})
    with pytest.raises(RankDeficient):
        estimator.fit(data, binomial, J=2)
    result = estimator.fit(data, binomial, J=2, ridge=0.1)
    assert result.rank == 1
    assert result.ridge == 0.1
    assert np.all(np.isfinite(result.beta))


def test_ghat_does_not_depend_on_basis_scaling(normal):
    data = estimator.synthesize(normal, G_TRUE, n=500, seed=9)
    canonical = estimator.fit(data, normal, J=2)
    basis = families.build_basis(normal, 2).rescaled([1, 2, -3])
    scaled = estimator.fit(data, normal, basis=basis)
    x = np.linspace(-2, 2, 11)
    np.testing.assert_allclose(scaled.ghat(x), canonical.ghat(x), atol=1e-8)
    np.testing.assert_allclose(scaled.beta * [1, 2, -3], canonical.beta, atol=1e-8)


def test_fit_arguments(normal, poisson):
    data = estimator.synthesize(normal, G_TRUE, n=5, seed=1)
    with pytest.raises(InvalidArgument):
        estimator.fit(data, normal, J=2, ridge=-1)
    with pytest.raises(InvalidArgument):
        estimator.fit(data, normal, J=5)
    with pytest.raises(InvalidArgument):
        estimator.fit(data, normal, basis=families.build_basis(poisson, 2))
    with pytest.raises(InvalidArgument):
        estimator.fit(data, normal, basis=families.build_basis(normal, 1), J=2)


def test_default_truncation():
    assert estimator.default_truncation(1) == 1
    assert estimator.default_truncation(16) == 2
    assert estimator.default_truncation(17) == 3
    assert estimator.default_truncation(10 ** 6) == 10


def test_fit_uses_the_default_truncation(normal):
    data = estimator.synthesize(normal, G_TRUE, n=100, seed=6)
    assert estimator.fit(data, normal).J == 4


def test_stratify(normal):
    frame = pd.DataFrame({"y": [1.0, 2, 3], "x": [0.0, 1, 2],
                          "z1": [0.0, 1, 0], "z2": [0.1, 0.2, 0.3]})
    data = t.Dataset(frame=frame, z1_columns=("z1",))
    strata = estimator.stratify(data)
    assert list(strata) == [(0.0,), (1.0,)]
    np.testing.assert_allclose(strata[(0.0,)].y, [1, 3])
    with pytest.raises(InvalidArgument):
        estimator.fit(data, normal, J=0)


def test_evaluate_ghat(normal):
    data = estimator.synthesize(normal, G_TRUE, n=60, seed=2, noise_sd=0.0,
                                reduced_form=True)
    result = estimator.fit(data, normal, J=2)
    assert isinstance(estimator.evaluate_ghat(result, 0.5), float)
    assert estimator.evaluate_ghat(result, 0.5) == pytest.approx(1 + 0.25 - 0.075)
    assert estimator.evaluate_ghat(result, [0.0, 1.0]).shape == (2,)
    assert estimator.rmse(result, G_TRUE, np.linspace(-2, 2, 21)) < 1e-7


def test_csv_files_reload(tmp_path, normal):
    data = estimator.synthesize(normal, G_TRUE, n=20, seed=5)
    path = tmp_path / "data.csv"
    estimator.write_csv(data, path)
    reloaded = estimator.load_csv(str(path), normal)
    np.testing.assert_array_equal(reloaded.y, data.y)
    np.testing.assert_array_equal(reloaded.z2, data.z2)


@pytest.mark.slow
@pytest.mark.timeout(120)
def test_monte_carlo_accuracy(normal):
    x_grid = np.linspace(-1.5, 1.5, 101)
    results = estimator.monte_carlo(normal, G_TRUE, 5000, range(21), 2,
                                    noise_sd=0.5, endogenous=True)
    betas = np.array([r.beta for r in results])
    coefficient_errors = np.median(np.abs(betas - [0.7, 0.5, -0.3]), axis=0)
    assert np.all(coefficient_errors <= 0.05), coefficient_errors
    errors = [estimator.rmse(r, G_TRUE, x_grid) for r in results]
    assert np.median(errors) <= 0.05


@pytest.mark.slow
@pytest.mark.timeout(120)
def test_error_shrinks_with_sample_size(normal):
    x_grid = np.linspace(-1.5, 1.5, 101)
    medians = []
    for n in (500, 2000, 8000):
        results = estimator.monte_carlo(normal, G_TRUE, n, range(21), 2, noise_sd=0.5)
        medians.append(np.median([estimator.rmse(r, G_TRUE, x_grid) for r in results]))
    assert medians[0] >= medians[1] >= medians[2]
