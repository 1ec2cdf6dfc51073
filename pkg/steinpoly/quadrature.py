"""Conditional expectations by weight-matched Gauss rules and lattice sums.

Continuous laws use the Gauss rule of their own weight with the node count
doubled until two successive estimates agree.  Discrete laws are summed
exactly on finite lattices and blockwise with a tail check otherwise.
"""
from __future__ import annotations

import math
import typing
import logging

import numpy as np

import steinpoly.types as t
from steinpoly.config import (
    TOLERANCES,
    LATTICE_MAX_POINTS,
    QUADRATURE_MAX_NODES,
)
from steinpoly.exceptions import NumericalFailure

LOGGER = logging.getLogger(__name__)

Evaluator = typing.Callable[[np.ndarray], np.ndarray]

TAIL_START_PROBABILITY = 1e-13


def _rows(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[np.newaxis, :] if values.ndim == 1 else values


def _node_cap(dim: int) -> int:
    cap = QUADRATURE_MAX_NODES
    while dim > 1 and cap ** dim > LATTICE_MAX_POINTS:
        cap //= 2
    return cap


def _gauss(fam, evaluator: Evaluator, point, degree: int, tol: float):
    cap = _node_cap(fam.dim)
    n = min(max(8, degree // 2 + 2), cap)

    rule = fam.gauss_rule(point, n)
    estimate = _rows(evaluator(rule.nodes)) @ rule.weights
    while 2 * n <= cap:
        finer = fam.gauss_rule(point, 2 * n)
        values = _rows(evaluator(finer.nodes))
        refined = values @ finer.weights
        scale = np.abs(values) @ finer.weights
        if np.all(np.abs(refined - estimate) <= tol * scale + 1e-300):
            LOGGER.debug("%s: Gauss rule converged with %d nodes", fam.name, 2 * n)
            return refined
        estimate = refined
        n *= 2

    raise NumericalFailure(
        "Gauss quadrature did not converge",
        {"family": fam.name, "z": point.as_list(), "nodes": n, "degree": degree},
    )


def _lattice(fam, evaluator: Evaluator, point, tol: float):
    lo, hi = fam.lattice_bounds(point)
    if hi is not None:
        x = np.arange(lo, hi + 1)
        weights = np.exp(fam.log_pmf(x, point))
        return _rows(evaluator(x)) @ weights

    quantile = fam.law(point).isf(TAIL_START_PROBABILITY)
    stop = lo + max(64, int(math.ceil(quantile)) + 32)
    x = np.arange(lo, stop)
    values = _rows(evaluator(x))
    weights = np.exp(fam.log_pmf(x, point))
    total = values @ weights
    scale = np.abs(values) @ weights

    while True:
        block = np.arange(stop, 2 * stop - lo)
        weights = np.exp(fam.log_pmf(block, point))
        values = _rows(evaluator(block))
        tail = np.abs(values) @ weights
        total = total + values @ weights
        scale = scale + tail
        if np.all(tail <= tol * scale + 1e-300):
            LOGGER.debug("%s: lattice sum truncated at %d", fam.name, block[-1])
            return total
        stop = 2 * stop - lo
        if stop - lo > LATTICE_MAX_POINTS:
            raise NumericalFailure(
                "Lattice sum tail did not vanish",
                {"family": fam.name, "z": point.as_list(), "points": stop - lo},
            )


def integrate(fam, evaluator: Evaluator, point: t.InstrumentPoint,
              degree: int = 0, tol: float = None) -> np.ndarray:
    """Return E[f_i(X) | Z = point] for the rows f_i produced by `evaluator`.

    `evaluator` maps an array of support points to a (k, npoints) array; on
    lattices it receives integers.  `degree` is the polynomial degree of the
    integrand and only sets the starting node count.
    """
    tol = TOLERANCES["quadrature"] if tol is None else tol
    if fam.DISCRETE:
        tail_tol = max(tol, TOLERANCES["tail"])
        return _lattice(fam, evaluator, point, tail_tol)
    return _gauss(fam, evaluator, point, degree, tol)


def poly_values(polys, x) -> np.ndarray:
    """Stack the values of several Poly or MultiPoly at the points x."""
    return np.vstack([np.atleast_1d(q.values(x)) for q in polys])


def expect(fam, polys, z) -> np.ndarray:
    """E[q(X) | Z = z] for every q in polys, z checked against the domain."""
    point = fam.check_z(z)
    return _expect(fam, list(polys), point)


def expect_base(fam, polys, z1=()) -> np.ndarray:
    """Expectation under the mu = 0 law that defines the inner product."""
    return _expect(fam, list(polys), fam.base_instrument(z1))


def _expect(fam, polys, point):
    degree = max((q.degree for q in polys), default=0)
    return integrate(fam, lambda x: poly_values(polys, x), point, degree)


def gram(fam, polys, z1=()) -> np.ndarray:
    """Gram matrix <Q_i, Q_j> under the mu = 0 law."""
    polys = list(polys)
    k = len(polys)
    pairs = [(i, j) for i in range(k) for j in range(i, k)]

    def products(x):
        values = poly_values(polys, x)
        return np.vstack([values[i] * values[j] for i, j in pairs])

    degree = 2 * max((q.degree for q in polys), default=0)
    flat = integrate(fam, products, fam.base_instrument(z1), degree)

    out = np.zeros((k, k))
    for (i, j), value in zip(pairs, flat):
        out[i, j] = out[j, i] = value
    return out
