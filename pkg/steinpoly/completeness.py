"""Finite-section injectivity checks of g -> E[g(X) | Z]."""
from __future__ import annotations

import math
import typing
import logging

import numpy as np
import scipy.linalg

import steinpoly.types as t
from steinpoly.utils import parallel_map
from steinpoly.config import TOLERANCES
from steinpoly.exceptions import (
    InvalidArgument,
    TruncationTooSmall,
    UnsupportedOperation,
)

LOGGER = logging.getLogger(__name__)

Exponent = typing.Callable[[np.ndarray], np.ndarray]


def default_kernel_grid(fam, x_trunc: int) -> np.ndarray:
    """x_trunc evenly spaced instrument values, integers for trial shifts."""
    lo, hi = fam.z_domain
    grid = np.linspace(lo, hi, x_trunc)
    if fam.KIND is t.FamilyKind.BinomialShift:
        grid = np.unique(np.round(grid))
    return grid


def _lattice_row(fam, point, x_points, exponent):
    if exponent is None:
        row = np.exp(fam.log_pmf(x_points, point))
        return row, float(row.sum())

    if not fam.FACTORIZED:
        raise UnsupportedOperation(
            f"{fam.name} is not a power-series tilt, the exponent cannot change")
    base = fam.mu(point) - float(fam.m(point.z1))
    log_row = np.log(fam.weight_s(x_points, point.z1)) + exponent(x_points) * math.log(base)
    row = np.exp(log_row - log_row.max())
    return row / row.sum(), 1.0


def _lattice_kernel(fam, points, x_trunc, exponent):
    lo = min(fam.lattice_bounds(point)[0] for point in points)
    x_points = np.arange(lo, lo + x_trunc)

    rows = parallel_map(lambda point: _lattice_row(fam, point, x_points, exponent),
                        points)
    entries = np.vstack([row for row, _ in rows])
    row_sums = np.array([total for _, total in rows])

    deficit = 1.0 - row_sums
    worst = int(np.argmax(deficit))
    if deficit[worst] > TOLERANCES["kernel_tail"]:
        raise TruncationTooSmall(
            f"Tail mass {deficit[worst]:.3g} beyond x = {x_points[-1]}",
            {"family": fam.name, "z": points[worst].as_list(), "x_trunc": x_trunc},
        )
    return x_points, entries, row_sums


def _quadrature_kernel(fam, points, x_trunc):
    base = fam.base_instrument(points[0].z1)
    rule = fam.gauss_rule(base, x_trunc)
    x_points = np.asarray(rule.nodes, dtype=float)
    log_base = fam.log_density(x_points, base)

    def row(point):
        return np.exp(fam.log_density(x_points, point) - log_base) * rule.weights

    entries = np.vstack(parallel_map(row, points))
    return x_points, entries, entries.sum(axis=1)


def column_normalized(entries) -> np.ndarray:
    """Divide every non-zero column by its Euclidean norm."""
    entries = np.asarray(entries, dtype=float)
    norms = np.linalg.norm(entries, axis=0)
    norms[norms == 0] = 1.0
    return entries / norms


def _singular_range(matrix) -> tuple:
    sv = scipy.linalg.svdvals(matrix)
    rows, cols = matrix.shape
    # a wide matrix always has a non-trivial null space
    min_sv = 0.0 if rows < cols else float(sv[-1])
    return min_sv, float(sv[0])


def build_kernel(fam, z_grid=None, x_trunc: int = 21,
                 exponent: Exponent = None) -> t.KernelMatrix:
    """Discretize p(x | z) over a z-grid and a truncated x-support.

    Lattice families use the pmf at the first `x_trunc` support points and
    raise TruncationTooSmall when a row misses more than the kernel tail
    tolerance.  `exponent` replaces the statistic tau(x) = x of a power-series
    tilt; rows are then renormalized over the truncated support.  Continuous
    families collocate at the Gauss nodes of the mu = 0 law, each entry being
    the density ratio times the node weight.
    """
    if x_trunc < 1:
        raise InvalidArgument(f"Truncation must be positive, got {x_trunc}")
    if fam.dim != 1:
        raise UnsupportedOperation(f"No scalar kernel for {fam.name}")
    if z_grid is None:
        z_grid = default_kernel_grid(fam, x_trunc)
    points = [fam.check_z(z) for z in z_grid]
    if not points:
        raise InvalidArgument("Kernel needs at least one instrument value")

    if fam.DISCRETE:
        x_points, entries, row_sums = _lattice_kernel(fam, points, x_trunc, exponent)
    elif exponent is not None:
        raise UnsupportedOperation(f"{fam.name} is continuous, tau cannot be folded")
    else:
        x_points, entries, row_sums = _quadrature_kernel(fam, points, x_trunc)

    rows, cols = entries.shape
    if rows < cols:
        LOGGER.warning("%s kernel has %d rows for %d columns, it cannot be injective",
                       fam.name, rows, cols)
    min_sv, max_sv = _singular_range(column_normalized(entries))
    LOGGER.debug("%s kernel %dx%d: singular values in [%.3g, %.3g]",
                 fam.name, rows, cols, min_sv, max_sv)

    return t.KernelMatrix(
        family=fam.name,
        z_grid=tuple(points),
        x_points=x_points,
        entries=entries,
        row_sums=row_sums,
        min_singular_value=min_sv,
        max_singular_value=max_sv,
    )


def injectivity_report(K, normalize: bool = True) -> t.InjectivityReport:
    """Smallest against largest singular value of a kernel.

    With `normalize` the verdict is taken on the column-normalized matrix,
    which removes the scale of each column; the unscaled extremes are
    reported next to it.
    """
    if isinstance(K, t.KernelMatrix):
        name, entries = K.family, K.entries
    else:
        name, entries = "matrix", np.atleast_2d(np.asarray(K, dtype=float))

    raw_min_sv, raw_max_sv = _singular_range(entries)
    if normalize:
        min_sv, max_sv = _singular_range(column_normalized(entries))
    else:
        min_sv, max_sv = raw_min_sv, raw_max_sv
    injective = max_sv > 0 and min_sv > TOLERANCES["injective"] * max_sv
    report = t.InjectivityReport(
        family=name,
        n=entries.shape[1],
        min_sv=min_sv,
        max_sv=max_sv,
        injective=bool(injective),
        raw_min_sv=raw_min_sv,
        raw_max_sv=raw_max_sv,
        normalized=normalize,
    )
    LOGGER.info("%s: %s (min sv %.3g)", name, report.verdict, min_sv)
    return report


def degradation_profile(fam, sizes, z_range=None) -> list:
    """Injectivity reports of square kernels of growing size."""
    lo, hi = z_range or fam.z_domain
    return [
        injectivity_report(build_kernel(fam, np.linspace(lo, hi, n), n))
        for n in sizes
    ]
