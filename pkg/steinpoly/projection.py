"""Projections P_j(z) = E[Q_j(X) | Z = z] and their polynomial structure in mu(z)."""
from __future__ import annotations

import math
import logging
import threading

import numpy as np
import pandas as pd
import scipy.linalg

import steinpoly.types as t
from steinpoly import stein, families, quadrature
from steinpoly.utils import parallel_map, chebyshev_grid
from steinpoly.config import TOLERANCES
from steinpoly.exceptions import (
    InvalidArgument,
    IllConditionedGrid,
    UnsupportedOperation,
)

LOGGER = logging.getLogger(__name__)

_FIT_CACHE = {}
_FIT_LOCK = threading.Lock()


def _point(fam, z, z1) -> t.InstrumentPoint:
    if isinstance(z, t.InstrumentPoint):
        point = z
    else:
        point = t.InstrumentPoint(z1=tuple(z1), z2=np.atleast_1d(z).tolist())
    if point.z1 != tuple(float(v) for v in z1):
        raise InvalidArgument(f"{point} does not share z1 = {tuple(z1)} with the basis")
    return fam.check_z(point)


def project(fam, basis: t.EigenBasis, z) -> np.ndarray:
    """P_0(z)..P_J(z) by weight-matched quadrature or lattice sums."""
    point = _point(fam, z, basis.z1)
    return quadrature.expect(fam, basis.polys, point)


def closed_form_projection(fam, j: int, z):
    """Known closed form of P_j(z) for the canonical basis, None otherwise."""
    return fam.closed_form_projection(j, z)


def default_z_grid(fam, J: int) -> np.ndarray:
    """4(J + 1) Chebyshev points over the z-domain, integers for trial shifts."""
    if fam.dim != 1:
        raise UnsupportedOperation(f"No scalar z-grid for {fam.name}")
    lo, hi = fam.z_domain
    if fam.KIND is t.FamilyKind.BinomialShift:
        return np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
    return chebyshev_grid(lo, hi, 4 * (J + 1))


def fit_coordinates(coordinates, values, j: int) -> t.MuFit:
    """Least-squares degree-j fit of values against coordinates, by QR.

    The residual of the best degree j - 1 fit is kept for degree
    certification.
    """
    c = np.asarray(coordinates, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(np.unique(c)) < j + 1:
        raise IllConditionedGrid(
            f"Degree {j} fit needs {j + 1} distinct coordinates",
            {"distinct": int(len(np.unique(c))), "j": j},
        )

    lo, hi = float(c.min()), float(c.max())
    if hi > lo:
        scaled = (2 * c - (lo + hi)) / (hi - lo)
    else:
        scaled = np.zeros_like(c)

    def solve(degree):
        if degree < 0:
            return np.zeros(0), float(np.max(np.abs(v)))
        vander = np.vander(scaled, degree + 1, increasing=True)
        q, r = scipy.linalg.qr(vander, mode="economic")
        coeffs = scipy.linalg.solve_triangular(r, q.T @ v)
        return coeffs, float(np.max(np.abs(vander @ coeffs - v)))

    scaled_coeffs, residual = solve(j)
    _, lower = solve(j - 1)

    if hi > lo:
        poly = np.polynomial.Polynomial(scaled_coeffs, domain=[lo, hi], window=[-1, 1])
        coeffs = poly.convert().coef
    else:
        coeffs = scaled_coeffs
    coeffs = np.pad(coeffs, (0, max(0, j + 1 - len(coeffs))))[: j + 1]

    return t.MuFit(
        j=j,
        coeffs=tuple(float(x) for x in coeffs),
        residual=residual,
        lower_residual=lower,
        scale=float(np.max(np.abs(v))),
    )


def fit_mu_polynomial(table: t.ProjectionTable, j: int) -> t.MuFit:
    """Fit P_j as a degree-j polynomial in the projection coordinate."""
    if not 0 <= j <= table.j_max:
        raise InvalidArgument(f"Degree {j} outside of the table 0..{table.j_max}")
    return fit_coordinates(table.coordinates, table.values[j], j)


def projection_table(fam, basis: t.EigenBasis, z_grid=None,
                     fit: bool = True) -> t.ProjectionTable:
    """Tabulate P_j over a z-grid, in parallel over the columns."""
    if z_grid is None:
        z_grid = default_z_grid(fam, basis.J)
    points = [_point(fam, z, basis.z1) for z in z_grid]

    columns = parallel_map(lambda point: project(fam, basis, point), points)
    values = np.column_stack(columns)
    mu_grid = np.array([fam.mu(point) for point in points])
    coordinates = np.array([fam.projection_coordinate(point) for point in points])

    table = t.ProjectionTable(
        family=fam,
        j_max=basis.J,
        z_grid=points,
        values=values,
        mu_grid=mu_grid,
        coordinates=coordinates,
    )
    if not fit:
        return table

    distinct = len(np.unique(coordinates))
    fitted = tuple(
        fit_mu_polynomial(table, j) for j in range(min(basis.J + 1, distinct)))
    LOGGER.info("Tabulated %s projections for j <= %d over %d points",
                fam.name, basis.J, len(points))
    return t.ProjectionTable(
        family=fam,
        j_max=basis.J,
        z_grid=points,
        values=values,
        mu_grid=mu_grid,
        coordinates=coordinates,
        fitted=fitted,
    )


def certification_residuals(table: t.ProjectionTable) -> list:
    """Fit and degree certification records for every fitted j."""
    out = []
    tol = TOLERANCES["fit"]
    for fit in table.fitted:
        scaled = fit.residual / (1.0 + fit.scale)
        out.append(t.Residual(table.family.name, "fit", fit.j, None, scaled, tol))
        floor = max(fit.residual, 1e-10 * (1.0 + fit.scale))
        ratio = 100.0 * floor / fit.lower_residual if fit.lower_residual else math.inf
        out.append(t.Residual(table.family.name, "degree", fit.j, None, ratio, 1.0))
    return out


def projection_polynomials(fam, J: int, z1=()) -> tuple:
    """Cached fits of P_0..P_J in the projection coordinate over the default grid."""
    key = (type(fam), fam.exact_params(z1), fam.z_domain, J)
    fits = _FIT_CACHE.get(key)
    if fits is not None:
        return fits

    basis = families.build_basis(fam, J, z1)
    table = projection_table(fam, basis, default_z_grid(fam, J))
    if len(table.fitted) < J + 1:
        raise IllConditionedGrid(
            f"Only {len(table.fitted)} projections can be fitted on the "
            f"{fam.name} grid", {"J": J})
    for fit in table.fitted:
        if not fit.certified:
            LOGGER.warning("%s: P_%d fit is not certified (residual %.3g)",
                           fam.name, fit.j, fit.residual)

    with _FIT_LOCK:
        return _FIT_CACHE.setdefault(key, table.fitted)


def recursion_check(fam, basis: t.EigenBasis, z_grid=None) -> list:
    """Residuals of P_j = -(rho / lambda_j) sum_(i<j) a_i P_i over a grid."""
    if not stein.stein_operator(fam, basis.z1).polynomial:
        raise UnsupportedOperation(
            f"{fam.name}: the basis operator differs from the Stein operator")
    if z_grid is None:
        z_grid = default_z_grid(fam, basis.J)

    ladders = [families.ladder_coefficients(basis, j) for j in range(basis.J + 1)]
    tol = TOLERANCES["recursion"]
    results = []
    for z in z_grid:
        point = _point(fam, z, basis.z1)
        values = project(fam, basis, point)
        rho = fam.identity_rate(point)
        for j in range(basis.J + 1):
            if j == 0:
                residual = 0.0
            else:
                lam = float(basis.raw_eigenvalues[j])
                total = sum(float(a) * values[i] for i, a in enumerate(ladders[j]))
                expected = -rho / lam * total
                residual = abs(values[j] - expected) / (1.0 + abs(values[j]))
            results.append(t.Residual(
                fam.name, "recursion", j, point.as_list(), float(residual), tol))
    return results


def mv_project(fam, multi_j, z) -> float:
    """E[Q_j(X) | Z = z] for the multivariate Hermite polynomial Q_j."""
    q = families.mv_hermite_basis(fam, multi_j)
    return float(quadrature.expect(fam, [q], z)[0])


def _z_columns(table: t.ProjectionTable) -> list:
    point = table.z_grid[0]
    if not point.z1 and len(point.z2) == 1:
        return ["z"]
    return [f"z1_{i}" for i in range(len(point.z1))] + [
        f"z2_{i}" for i in range(len(point.z2))]


def table_frame(table: t.ProjectionTable) -> pd.DataFrame:
    """Long table with the columns j, z..., mu, P."""
    z_columns = _z_columns(table)
    rows = []
    for j in range(table.j_max + 1):
        for k, point in enumerate(table.z_grid):
            mu = table.mu_grid[k]
            rows.append([j] + point.as_list() + [float(np.ravel(mu)[0]),
                                                  table.values[j, k]])
    return pd.DataFrame(rows, columns=["j"] + z_columns + ["mu", "P"])


def write_table_csv(table: t.ProjectionTable, path: str):
    """Write the table as CSV with 17 significant digits."""
    table_frame(table).to_csv(path, index=False, float_format="%.17g")


def fits_as_json(table: t.ProjectionTable) -> list:
    """Fitted coefficients of every P_j as plain data."""
    return [fit.as_json() for fit in table.fitted]
