"""Catalog of conditional families and their JSON documents."""
from __future__ import annotations

import os
import json
import typing
import logging

import jsonschema
import voluptuous as vol

import steinpoly.types as t
from steinpoly.config import (
    CONF_KIND,
    CONF_PARAMS,
    PARAMS_SCHEMAS,
    CONF_Z_DOMAIN,
    FAMILY_JSON_SCHEMA,
)
from steinpoly.exceptions import SchemaError

from .base import Support, GaussRule, CondFamily  # noqa: F401
from .beta import BetaTilt
from .gamma import GammaShift
from .normal import NormalLoc
from .negbin import NegBinTilt
from .pascal import PascalShift
from .poisson import PoissonTilt
from .binomial import BinomialShift
from .mvnormal import MvNormalLoc

LOGGER = logging.getLogger(__name__)

ALL_FAMILIES = [
    NormalLoc,
    MvNormalLoc,
    GammaShift,
    BetaTilt,
    PoissonTilt,
    NegBinTilt,
    BinomialShift,
    PascalShift,
]

FAMILIES_BY_KIND = {}

for family_cls in ALL_FAMILIES:
    FAMILIES_BY_KIND[family_cls.KIND] = family_cls


def family_from_json(doc: typing.Mapping) -> CondFamily:
    """Validate a {"kind", "params", "z_domain"} document and build the family."""
    try:
        jsonschema.validate(instance=doc, schema=FAMILY_JSON_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"Invalid family document at {path}: {exc.message}") from exc

    kind = t.FamilyKind(doc[CONF_KIND])
    try:
        params = PARAMS_SCHEMAS[kind.value](dict(doc[CONF_PARAMS]))
    except vol.Invalid as exc:
        raise SchemaError(f"Invalid {kind.value} parameters: {exc}") from exc

    LOGGER.debug("Loading %s family with %s", kind.value, params)
    return FAMILIES_BY_KIND[kind](z_domain=doc[CONF_Z_DOMAIN], **params)


def load_family(spec) -> CondFamily:
    """Build a family from a JSON file path, an inline JSON string or a dict."""
    if isinstance(spec, CondFamily):
        return spec
    if isinstance(spec, typing.Mapping):
        return family_from_json(spec)

    text = str(spec)
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as f:
            text = f.read()
    elif not text.lstrip().startswith("{"):
        raise SchemaError(f"Family {spec!r} is neither a file nor inline JSON")

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"Family document is not valid JSON: {exc}") from exc

    return family_from_json(doc)


def family_to_json(fam: CondFamily) -> dict:
    """Return the JSON document of a family."""
    return fam.describe()


def density(fam: CondFamily, x, z):
    """Conditional density of X at x given Z = z."""
    return fam.density(x, z)


def mu(fam: CondFamily, z):
    """Natural parameter map mu(z)."""
    return fam.mu(z)


def weight_s(fam: CondFamily, x, z1=()):
    """Orthogonality weight s(x, z1)."""
    return fam.weight_s(x, z1)


def tau(fam: CondFamily, x, z1=()):
    """Sufficient statistic tau(x, z1)."""
    return fam.tau(x, z1)


def sample(fam: CondFamily, z, n: int, seed: int):
    """Draw n i.i.d. values of X | Z = z."""
    return fam.sample(z, n, seed)
