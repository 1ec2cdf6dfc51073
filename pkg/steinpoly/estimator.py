"""Series IV estimation of g over the eigenbasis with analytic projections.

The structural model is E[Y - g(X) | Z] = 0.  Writing g = sum_j beta_j Q_j
turns it into E[Y | Z] = sum_j beta_j P_j(Z), and P_j is a known polynomial
in the projection coordinate, so beta is an ordinary least-squares fit of Y on
P_0(Z)..P_J(Z) with no first stage.  Estimation runs per fixed z1 stratum.
"""
from __future__ import annotations

import math
import logging

import numpy as np
import pandas as pd
import voluptuous as vol
import scipy.linalg

import steinpoly.types as t
from steinpoly import families, projection
from steinpoly.utils import as_fraction, parallel_map
from steinpoly.config import ZLAW_SCHEMA, CONF_ZLAW_DIST, CONF_ZLAW_Z1
from steinpoly.exceptions import (
    ParseError,
    DomainError,
    SchemaError,
    EmptyDataset,
    RankDeficient,
    InvalidArgument,
    UnsupportedOperation,
)

LOGGER = logging.getLogger(__name__)

MAX_DEFAULT_TRUNCATION = 10
MISSING_MARKERS = frozenset({"", "nan", "NaN", "NA", "null"})


def column_names(prefix: str, count: int) -> list:
    """`prefix` for a single column, `prefix_1..prefix_count` otherwise."""
    if count == 1:
        return [prefix]
    return [f"{prefix}_{i}" for i in range(1, count + 1)]


def _detect(header, prefix, numbered_prefix) -> list:
    if prefix in header:
        return [prefix]
    numbered = [
        c for c in header
        if c.startswith(numbered_prefix) and c[len(numbered_prefix):].isdigit()
    ]
    return sorted(numbered, key=lambda c: int(c[len(numbered_prefix):]))


def _numeric(frame: pd.DataFrame) -> pd.DataFrame:
    out = {}
    for column in frame.columns:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        malformed = values.isna() & ~raw.isin(MISSING_MARKERS)
        if malformed.any():
            row = int(np.flatnonzero(malformed.to_numpy())[0])
            raise ParseError(
                f"column {column!r}: {frame[column].iloc[row]!r} is not a number",
                line=row + 2,
            )
        out[column] = values.astype(float)
    return pd.DataFrame(out)


def _support_violations(frame, fam, z1_columns, z2_columns, x_columns) -> list:
    rejected = []
    z1 = frame[z1_columns].to_numpy(dtype=float)
    z2 = frame[z2_columns].to_numpy(dtype=float)
    x = frame[x_columns].to_numpy(dtype=float)
    for row in range(len(frame)):
        try:
            point = fam.check_z(t.InstrumentPoint(z1=z1[row], z2=z2[row]))
        except (DomainError, InvalidArgument) as exc:
            rejected.append((row, str(exc)))
            continue
        value = x[row] if fam.dim > 1 else x[row, 0]
        if not np.all(fam.support(point.z1, point).contains(value)):
            rejected.append((row, f"x = {value} outside of the support"))
    return rejected


def load_csv(path, family=None) -> t.Dataset:
    """Read observations with columns y, x (or x1..), z1 (or z1_k), z2 (or z2_k).

    Rows with missing fields, or with x outside of the support of `family`,
    are dropped and listed in `Dataset.rejected` as (row, reason) pairs.
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataset(f"{path} is empty") from exc

    header = [str(c).strip() for c in raw.columns]
    raw.columns = header
    x_columns = _detect(header, "x", "x")
    z1_columns = _detect(header, "z1", "z1_")
    z2_columns = _detect(header, "z2", "z2_")
    missing = [name for name, found in
               (("y", "y" in header), ("x", x_columns), ("z2", z2_columns))
               if not found]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing} in {header}")
    if family is not None and (len(z1_columns) != family.z1_dim
                               or len(z2_columns) != family.z2_dim
                               or len(x_columns) != family.dim):
        raise SchemaError(f"{path}: header {header} does not fit {family.name}")
    if raw.empty:
        raise EmptyDataset(f"{path} has no data rows")

    columns = ["y"] + x_columns + z1_columns + z2_columns
    frame = _numeric(raw[columns])

    incomplete = frame.isna().any(axis=1).to_numpy()
    rejected = [(int(row), "missing field") for row in np.flatnonzero(incomplete)]
    if family is not None:
        complete = frame[~incomplete]
        positions = np.flatnonzero(~incomplete)
        rejected += [(int(positions[row]), reason) for row, reason in
                     _support_violations(complete, family, z1_columns,
                                         z2_columns, x_columns)]
        rejected.sort()

    keep = np.ones(len(frame), dtype=bool)
    keep[[row for row, _ in rejected]] = False
    if not keep.any():
        raise EmptyDataset(f"{path}: every row was rejected")
    if rejected:
        LOGGER.warning("%s: rejected %d of %d rows", path, len(rejected), len(frame))

    return t.Dataset(
        frame=frame[keep].reset_index(drop=True),
        z1_columns=tuple(z1_columns),
        z2_columns=tuple(z2_columns),
        x_columns=tuple(x_columns),
        rejected=tuple(rejected),
    )


def write_csv(data: t.Dataset, path):
    """Write the dataset with 17 significant digits."""
    data.frame.to_csv(path, index=False, float_format="%.17g")


def as_poly(g_true) -> t.Poly:
    """Structural function as a Poly in x, from a Poly or monomial coefficients."""
    if isinstance(g_true, t.Poly):
        return g_true
    coeffs = [as_fraction(c) for c in g_true]
    if not coeffs:
        raise InvalidArgument("g_true needs at least one coefficient")
    return t.Poly(coeffs)


def draw_instruments(z_law, n: int, rng) -> np.ndarray:
    """Draw n excluded instruments from a validated z-law document."""
    dist = z_law[CONF_ZLAW_DIST]
    if dist == "uniform":
        return rng.uniform(z_law["lo"], z_law["hi"], size=n)
    if dist == "normal":
        return rng.normal(z_law["mean"], z_law["sd"], size=n)
    return rng.choice(np.asarray(z_law["values"], dtype=float), size=n)


def default_z_law(fam) -> dict:
    """Uniform law over the z-domain, integer choices for trial shifts."""
    lo, hi = fam.z_domain
    if fam.KIND is t.FamilyKind.BinomialShift:
        return {"dist": "choice",
                "values": list(range(math.ceil(lo), math.floor(hi) + 1))}
    return {"dist": "uniform", "lo": lo, "hi": hi}


def synthesize(fam, g_true, z_law=None, noise_sd: float = 1.0, n: int = 1000,
               seed: int = 0, endogenous: bool = False,
               reduced_form: bool = False) -> t.Dataset:
    """Simulate (Y, X, Z) with Y = g_true(X) + eps and E[eps | Z] = 0.

    `endogenous` builds eps from the shock X - E[X | Z] plus noise so that X
    and eps are correlated.  `reduced_form` replaces g_true(X) by its
    conditional mean sum_j beta_j P_j(Z), which the estimator fits exactly.
    """
    if n < 1:
        raise InvalidArgument(f"Sample size must be positive, got {n}")
    if noise_sd < 0:
        raise InvalidArgument(f"Noise level must be non-negative, got {noise_sd}")
    if fam.dim != 1:
        raise UnsupportedOperation(f"Estimation is univariate, not {fam.name}")
    try:
        z_law = ZLAW_SCHEMA(dict(z_law or default_z_law(fam)))
    except vol.Invalid as exc:
        raise SchemaError(f"Invalid z law: {exc}") from exc

    z1 = tuple(z_law[CONF_ZLAW_Z1])
    if len(z1) != fam.z1_dim:
        raise InvalidArgument(f"{fam.name} needs {fam.z1_dim} z1 values, got {z1}")
    g = as_poly(g_true)

    rng = np.random.default_rng(seed)
    z2 = draw_instruments(z_law, n, rng)
    for value in np.unique(z2):
        fam.check_z(t.InstrumentPoint(z1=z1, z2=(value,)))

    x = np.asarray(fam.sample_conditional(z1, z2, rng), dtype=float)
    noise = noise_sd * rng.standard_normal(n)
    if endogenous:
        noise = noise + (x - fam.conditional_mean(z1, z2))

    if reduced_form:
        basis = families.build_basis(fam, g.degree, z1)
        beta = [float(b) for b in basis.expand(g)]
        signal = projection_regressors(fam, z1, z2, basis) @ np.array(beta)
    else:
        signal = g.demote().values(x)

    columns = {"y": signal + noise, "x": x}
    for name, value in zip(column_names("z1", len(z1)), z1):
        columns[name] = np.full(n, value)
    columns["z2"] = z2
    LOGGER.debug("Simulated %d rows of %s with seed %d", n, fam.name, seed)
    return t.Dataset(
        frame=pd.DataFrame(columns),
        z1_columns=tuple(column_names("z1", len(z1))),
    )


def default_truncation(n: int) -> int:
    """ceil(n^(1/4)) capped at 10."""
    return min(math.ceil(n ** 0.25), MAX_DEFAULT_TRUNCATION)


def stratify(data: t.Dataset) -> dict:
    """Split a dataset into one dataset per distinct z1 value."""
    if not data.z1_columns:
        return {(): data}
    keys = [tuple(row) for row in data.z1]
    out = {}
    for key in dict.fromkeys(keys):
        mask = np.array([k == key for k in keys])
        out[key] = t.Dataset(
            frame=data.frame[mask].reset_index(drop=True),
            z1_columns=data.z1_columns,
            z2_columns=data.z2_columns,
            x_columns=data.x_columns,
        )
    return out


def _basis_factors(basis: t.EigenBasis, canonical: t.EigenBasis) -> np.ndarray:
    return np.array([
        float(q.lead / c.lead) for q, c in zip(basis.polys, canonical.polys)])


def projection_regressors(fam, z1, z2, basis: t.EigenBasis) -> np.ndarray:
    """(n, J + 1) matrix of P_j(z) for the rows of z2, in the basis' scaling."""
    J = basis.J
    fits = projection.projection_polynomials(fam, J, z1)
    canonical = families.build_basis(fam, J, z1)
    coordinates = np.array([
        fam.projection_coordinate(t.InstrumentPoint(z1=z1, z2=(value,)))
        for value in np.asarray(z2, dtype=float).ravel()
    ])
    columns = [fit(coordinates) for fit in fits[: J + 1]]
    return np.column_stack(columns) * _basis_factors(basis, canonical)


def fit(data: t.Dataset, fam, basis: t.EigenBasis = None, J: int = None,
        ridge: float = 0.0) -> t.FitResult:
    """Least squares of y on P_0(z)..P_J(z), with an optional ridge penalty."""
    if ridge < 0:
        raise InvalidArgument(f"Ridge must be non-negative, got {ridge}")
    strata = stratify(data)
    if len(strata) != 1:
        raise InvalidArgument(
            f"Data spans {len(strata)} z1 values, fit each stratum separately")
    (z1,) = strata

    if J is None:
        J = basis.J if basis is not None else default_truncation(data.n)
    if basis is not None:
        if basis.family.KIND is not fam.KIND:
            raise InvalidArgument(f"Basis of {basis.family.name} used for {fam.name}")
        if J > basis.J:
            raise InvalidArgument(f"J = {J} exceeds the basis truncation {basis.J}")
        basis = basis.truncated(J)
    else:
        basis = families.build_basis(fam, J, z1)
    if J + 1 > data.n:
        raise InvalidArgument(f"{J + 1} coefficients need at least as many rows")

    regressors = projection_regressors(fam, z1, data.z2[:, 0], basis)
    y = data.y

    sv = scipy.linalg.svdvals(regressors)
    rank = int(np.sum(sv > sv[0] * max(regressors.shape) * np.finfo(float).eps))
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    LOGGER.debug("Regressor matrix %s: rank %d, condition %.3g",
                 regressors.shape, rank, condition)
    if ridge == 0 and rank < J + 1:
        raise RankDeficient(
            f"Regressor rank {rank} < {J + 1}: add a ridge penalty or lower J")

    if ridge > 0:
        design = np.vstack([regressors, math.sqrt(ridge) * np.eye(J + 1)])
        target = np.concatenate([y, np.zeros(J + 1)])
    else:
        design, target = regressors, y
    beta = scipy.linalg.lstsq(design, target)[0]

    residuals = y - regressors @ beta
    LOGGER.info("Fitted %d coefficients of %s on %d rows", J + 1, fam.name, data.n)
    return t.FitResult(
        beta=beta,
        J=J,
        ridge=float(ridge),
        basis=basis,
        condition=condition,
        rank=rank,
        residual_mean=float(residuals.mean()),
        residual_sd=float(residuals.std()),
    )


def evaluate_ghat(result: t.FitResult, x):
    """sum_j beta_j Q_j(x), a float for scalar x."""
    values = result.ghat(x)
    return float(values) if np.ndim(values) == 0 else values


def rmse(result: t.FitResult, g_true, x_grid) -> float:
    """Root mean squared error of g-hat against g_true over a grid."""
    x_grid = np.asarray(x_grid, dtype=float)
    error = result.ghat(x_grid) - as_poly(g_true).demote().values(x_grid)
    return float(np.sqrt(np.mean(error ** 2)))


def monte_carlo(fam, g_true, n: int, seeds, J: int, z_law=None,
                noise_sd: float = 1.0, endogenous: bool = False) -> list:
    """Fit one simulated dataset per seed, in parallel over the seeds."""
    basis = families.build_basis(fam, J, tuple((z_law or {}).get("z1", ())))

    def replicate(seed):
        data = synthesize(fam, g_true, z_law, noise_sd, n, seed, endogenous)
        return fit(data, fam, basis=basis)

    return parallel_map(replicate, seeds)
