"""Command line interface of steinpoly."""
from __future__ import annotations

import os
import sys
import math
import logging
import argparse

import numpy as np
import pandas as pd
import jsonschema
import voluptuous as vol

import steinpoly
import steinpoly.types as t
from steinpoly import (
    stein,
    families,
    estimator,
    projection,
    quadrature,
    completeness,
    distributions,
)
from steinpoly.utils import json_dumps, parse_grid, chebyshev_grid
from steinpoly.config import (
    CONF_J,
    CONF_N,
    COMMANDS,
    CONF_OUT,
    CONF_TOL,
    CONF_DATA,
    CONF_SEED,
    TOLERANCES,
    CONF_RIDGE,
    CONF_FAMILY,
    CONF_G_TRUE,
    CONF_X_GRID,
    CONF_Z_GRID,
    CONF_COMMAND,
    CONF_X_TRUNC,
    CONF_NOISE_SD,
    CONF_J_DEFAULTS,
    CONF_ENDOGENOUS,
    RUN_CONFIG_SCHEMA,
    REPORT_LOG_FILE_NAME,
)
from steinpoly.logger import report, install_console, attach_report_file
from steinpoly.exceptions import (
    DomainError,
    SchemaError,
    SteinPolyError,
    InvalidArgument,
    NotAnEigenfunction,
    UnsupportedOperation,
)

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

X_TRUNC_DEFAULT = 21
STEIN_POINTS = 5
ITERATED_MAX = 4
ORD_SHIFT_MAX_J = 6
MV_POINTS = 5
MV_MAX_CHECK_ORDER = 4
GHAT_POINTS = 101

USAGE_ERRORS = (
    SchemaError,
    DomainError,
    InvalidArgument,
    UnsupportedOperation,
    vol.Invalid,
    jsonschema.ValidationError,
)


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of the `steinpoly` command."""
    parser = argparse.ArgumentParser(
        prog="steinpoly",
        description="Stein-Markov polynomial bases, projections and IV estimation",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {steinpoly.__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--family", help="family JSON file or inline JSON")
    parser.add_argument("--J", type=int, help="truncation degree")
    parser.add_argument("--z-grid", help="instrument grid lo:hi:count")
    parser.add_argument("--x-grid", help="evaluation grid of g-hat lo:hi:count")
    parser.add_argument("--x-trunc", type=int, help="kernel support truncation")
    parser.add_argument("--n", type=int, help="simulated sample size")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--ridge", type=float, help="ridge penalty")
    parser.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="override a named tolerance (repeatable)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--data", help="CSV file for estimate")
    parser.add_argument("--g-true", help="monomial coefficients of g, comma separated")
    parser.add_argument("--noise-sd", type=float, help="noise standard deviation")
    parser.add_argument("--endogenous", action="store_true",
                        help="correlate the noise with the X shock")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    return parser


def _g_true(raw):
    if raw is None:
        return None
    return [part.strip() for part in raw.split(",") if part.strip()]


def run_config(args: argparse.Namespace) -> dict:
    """Validate parsed arguments into a run configuration."""
    raw = {
        CONF_COMMAND: args.command,
        CONF_FAMILY: args.family,
        CONF_J: args.J,
        CONF_Z_GRID: args.z_grid,
        CONF_X_GRID: args.x_grid,
        CONF_X_TRUNC: args.x_trunc,
        CONF_N: args.n,
        CONF_SEED: args.seed,
        CONF_RIDGE: args.ridge,
        CONF_TOL: args.tol,
        CONF_OUT: args.out,
        CONF_DATA: args.data,
        CONF_G_TRUE: _g_true(args.g_true),
        CONF_NOISE_SD: args.noise_sd,
        CONF_ENDOGENOUS: args.endogenous,
        "verbose": args.verbose,
        "quiet": args.quiet,
    }
    return RUN_CONFIG_SCHEMA({k: v for k, v in raw.items() if v is not None})


def _output_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise InvalidArgument(f"Output directory {path} is not writable")
    return path


def _write(out: str, name: str, text: str):
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    LOGGER.info("Wrote %s", os.path.join(out, name))


def _truncation(config, fam) -> int:
    J = config[CONF_J]
    if J is None:
        J = CONF_J_DEFAULTS[config[CONF_COMMAND]]
    if fam.KIND is t.FamilyKind.BinomialShift:
        J = min(J, fam.param("N"))
    return J


def _z_grid(config, fam, J):
    if config[CONF_Z_GRID] is not None:
        return parse_grid(config[CONF_Z_GRID])
    return projection.default_z_grid(fam, J)


# families


def _mv_basis_json(fam, J) -> list:
    order = min(J, families.MV_MAX_ORDER)
    out = []
    for multi_j in families.multi_indices(fam.dim, order):
        q = families.mv_hermite_basis(fam, multi_j)
        out.append({
            "j": list(multi_j),
            "terms": [
                {"exponent": list(exponent), "coeff": str(coeff)}
                for exponent, coeff in sorted(q.terms.items())
            ],
        })
    return out


def cmd_families(config, fam, out) -> int:
    """Dump the eigenbasis of the family to basis.json."""
    J = _truncation(config, fam)
    doc = {"family": distributions.family_to_json(fam), "J": J}
    if fam.dim > 1:
        doc["basis"] = _mv_basis_json(fam, J)
    else:
        basis = families.build_basis(fam, J)
        if not fam.DISCRETE:
            pair = families.phi_psi(fam)
            doc["phi"] = [str(c) for c in pair.phi.coeffs]
            doc["psi"] = [str(c) for c in pair.psi.coeffs]
            doc["class"] = pair.poly_class.value
        doc["basis"] = basis.as_json()
    _write(out, "basis.json", json_dumps(doc))
    return EXIT_OK


# verify


def _eigen_residuals(fam, basis) -> list:
    results = []
    op = basis.operator
    for j, q in enumerate(basis.polys):
        try:
            lam = families.eigenvalue_of(op, q)
            residual = 0.0 if lam == basis.raw_eigenvalues[j] else math.inf
        except NotAnEigenfunction as exc:
            LOGGER.warning("%s", exc)
            residual = math.inf
        results.append(t.Residual(fam.name, "eigen", j, None, residual, 0.0))
        if not fam.DISCRETE:
            sl = families.sturm_liouville_residual(fam, basis, j)
            value = max((abs(float(c)) for c in sl.coeffs), default=0.0)
            results.append(t.Residual(fam.name, "sturm_liouville", j, None, value, 0.0))
    return results


def _orthogonality_residuals(fam, polys, labels, tol) -> list:
    gram = quadrature.gram(fam, polys)
    diagonal = np.sqrt(np.abs(np.diag(gram)))
    scaled = np.abs(gram) / np.outer(diagonal, diagonal)
    np.fill_diagonal(scaled, 0.0)
    return [
        t.Residual(fam.name, "orthogonality", label, None, float(scaled[k].max()), tol)
        for k, label in enumerate(labels)
    ]


def _stein_points(fam, z_grid):
    grid = np.asarray(z_grid, dtype=float)
    if len(grid) <= STEIN_POINTS:
        return grid
    return grid[np.linspace(0, len(grid) - 1, STEIN_POINTS).round().astype(int)]


def _stein_residuals(fam, basis, z_grid) -> list:
    results = []
    for z in _stein_points(fam, z_grid):
        point = fam.check_z(z)
        for j, q in enumerate(basis.polys[1:], start=1):
            value = stein.stein_identity_residual(fam, q, point)
            results.append(t.Residual(fam.name, "stein", j, point.as_list(), value,
                                      stein.identity_bound(fam, q, point)))
            if j > ITERATED_MAX:
                continue
            for k in range(2, ITERATED_MAX + 1):
                value = stein.iterated_identity_residual(fam, q, point, k)
                results.append(t.Residual(fam.name, f"iterated_{k}", j,
                                          point.as_list(), value,
                                          stein.identity_bound(fam, q, point, k)))
    return results


def _closed_form_residuals(fam, table) -> list:
    results = []
    for k, point in enumerate(table.z_grid):
        for j in range(table.j_max + 1):
            expected = projection.closed_form_projection(fam, j, point)
            if expected is None:
                return results
            value = abs(table.values[j, k] - expected) / (1.0 + abs(expected))
            results.append(t.Residual(fam.name, "closed_form", j, point.as_list(),
                                      float(value), TOLERANCES["fit"]))
    return results


def _univariate_suite(fam, J, z_grid) -> list:
    basis = families.build_basis(fam, J)
    results = _eigen_residuals(fam, basis)
    results += _orthogonality_residuals(fam, basis.polys, range(J + 1),
                                        TOLERANCES["orthogonality"])
    results += _stein_residuals(fam, basis, z_grid)

    table = projection.projection_table(fam, basis, z_grid)
    results += projection.certification_residuals(table)
    results += _closed_form_residuals(fam, table)

    try:
        results += projection.recursion_check(fam, basis, z_grid)
    except UnsupportedOperation as exc:
        LOGGER.info("Skipping the recursion check: %s", exc)

    if hasattr(fam, "coupling"):
        lo, hi = fam.z_domain
        mu_values = [m for m in range(math.ceil(lo), math.floor(hi) + 1)][:4]
        results += stein.pearson_ord_shifted(fam, min(J, ORD_SHIFT_MAX_J), mu_values)
    return results


def _mv_points(fam, seed):
    rng = np.random.default_rng(seed)
    box = np.asarray(fam.z_domain, dtype=float).reshape(fam.dim, 2)
    return [rng.uniform(box[:, 0], box[:, 1]) for _ in range(MV_POINTS)]


def _mv_suite(fam, J, seed) -> list:
    order = min(J, MV_MAX_CHECK_ORDER)
    indices = families.multi_indices(fam.dim, order)
    results = []

    precision = np.array(fam.param("M"), dtype=float)
    if np.count_nonzero(precision - np.diag(np.diag(precision))) == 0:
        polys = [families.mv_hermite_basis(fam, j) for j in indices]
        results += _orthogonality_residuals(fam, polys, indices,
                                            TOLERANCES["mv_orthogonality"])
    else:
        LOGGER.info("%s: non-diagonal precision, orthogonality is not asserted",
                    fam.name)

    for z in _mv_points(fam, seed):
        point = fam.check_z(z)
        for j in indices:
            value = projection.mv_project(fam, j, point)
            expected = fam.closed_form_projection(j, point)
            residual = abs(value - expected) / (1.0 + abs(expected))
            results.append(t.Residual(fam.name, "mv_projection", j, point.as_list(),
                                      float(residual), TOLERANCES["mv_orthogonality"]))
    return results


def verify_family(fam, J: int, z_grid=None, seed: int = 0) -> list:
    """Run every applicable check on a family and return the residuals."""
    if fam.dim > 1:
        return _mv_suite(fam, J, seed)
    if z_grid is None:
        z_grid = projection.default_z_grid(fam, J)
    return _univariate_suite(fam, J, z_grid)


def cmd_verify(config, fam, out) -> int:
    """Write verify.json and exit 1 when any residual exceeds its tolerance."""
    J = _truncation(config, fam)
    z_grid = None if fam.dim > 1 else _z_grid(config, fam, J)
    results = verify_family(fam, J, z_grid, config[CONF_SEED])
    for r in results:
        report(r.family, r.check, r.j, r.z, r.residual, r.passed)

    failed = [r for r in results if not r.passed]
    doc = {
        "family": distributions.family_to_json(fam),
        "J": J,
        "passed": not failed,
        "failed": len(failed),
        "residuals": [r.as_json() for r in results],
    }
    _write(out, "verify.json", json_dumps(doc))
    if failed:
        LOGGER.error("%d of %d checks failed for %s", len(failed), len(results),
                     fam.name)
        return EXIT_FAILED
    LOGGER.info("All %d checks passed for %s", len(results), fam.name)
    return EXIT_OK


# project


def cmd_project(config, fam, out) -> int:
    """Write projection.csv and fitted.json."""
    J = _truncation(config, fam)
    basis = families.build_basis(fam, J)
    table = projection.projection_table(fam, basis, _z_grid(config, fam, J))
    projection.write_table_csv(table, os.path.join(out, "projection.csv"))
    doc = {
        "family": distributions.family_to_json(fam),
        "coordinate": "kappa" if fam.KIND is t.FamilyKind.NegBinTilt else "mu",
        "fits": projection.fits_as_json(table),
    }
    _write(out, "fitted.json", json_dumps(doc))
    return EXIT_OK


# complete


def cmd_complete(config, fam, out) -> int:
    """Write completeness.json for a square kernel."""
    x_trunc = config[CONF_X_TRUNC] or X_TRUNC_DEFAULT
    z_grid = None
    if config[CONF_Z_GRID] is not None:
        z_grid = parse_grid(config[CONF_Z_GRID])
    kernel = completeness.build_kernel(fam, z_grid, x_trunc)
    doc = completeness.injectivity_report(kernel).as_json()
    doc["shape"] = list(kernel.shape)
    doc["min_row_sum"] = float(kernel.row_sums.min())
    _write(out, "completeness.json", json_dumps(doc))
    return EXIT_OK


# simulate


def cmd_simulate(config, fam, out) -> int:
    """Write a simulated data.csv."""
    data = estimator.synthesize(
        fam,
        config[CONF_G_TRUE],
        noise_sd=config[CONF_NOISE_SD],
        n=config[CONF_N],
        seed=config[CONF_SEED],
        endogenous=config[CONF_ENDOGENOUS],
    )
    estimator.write_csv(data, os.path.join(out, "data.csv"))
    return EXIT_OK


# estimate


def _x_grid(config, data) -> np.ndarray:
    if config[CONF_X_GRID] is not None:
        return parse_grid(config[CONF_X_GRID])
    x = data.x
    return chebyshev_grid(float(x.min()), float(x.max()), GHAT_POINTS)


def cmd_estimate(config, fam, out) -> int:
    """Write fit.json and ghat.csv, one block per z1 stratum."""
    data = estimator.load_csv(config[CONF_DATA], fam)
    x_grid = _x_grid(config, data)
    fits, frames = [], []
    for z1, stratum in estimator.stratify(data).items():
        J = config[CONF_J]
        if J is None:
            J = estimator.default_truncation(stratum.n)
        result = estimator.fit(stratum, fam, J=J, ridge=config[CONF_RIDGE])
        doc = result.as_json()
        doc["z1"] = list(z1)
        doc["n"] = stratum.n
        fits.append(doc)

        frame = pd.DataFrame({"x": x_grid, "ghat": result.ghat(x_grid)})
        names = estimator.column_names("z1", len(z1))
        for position, (name, value) in enumerate(zip(names, z1)):
            frame.insert(position, name, value)
        frames.append(frame)

    doc = fits[0] if len(fits) == 1 else {"strata": fits}
    doc["rejected"] = [{"row": row, "reason": reason} for row, reason in data.rejected]
    _write(out, "fit.json", json_dumps(doc))
    pd.concat(frames).to_csv(os.path.join(out, "ghat.csv"), index=False,
                             float_format="%.17g")
    return EXIT_OK


COMMAND_HANDLERS = {
    "families": cmd_families,
    "verify": cmd_verify,
    "project": cmd_project,
    "complete": cmd_complete,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
}


def run(config: dict) -> int:
    """Execute a validated configuration and return the exit status."""
    fam = distributions.load_family(config[CONF_FAMILY])
    out = _output_dir(config[CONF_OUT])
    handler = attach_report_file(os.path.join(out, REPORT_LOG_FILE_NAME))

    saved = dict(TOLERANCES)
    TOLERANCES.update(config[CONF_TOL] or {})
    try:
        return COMMAND_HANDLERS[config[CONF_COMMAND]](config, fam, out)
    finally:
        TOLERANCES.clear()
        TOLERANCES.update(saved)
        handler.flush()


def main(argv=None) -> int:
    """Entry point of the `steinpoly` command."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    install_console(args.verbose, args.quiet)
    try:
        config = run_config(args)
        return run(config)
    except USAGE_ERRORS as exc:
        LOGGER.error("%s", exc)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SteinPolyError as exc:
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAILED
