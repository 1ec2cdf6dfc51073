"""Module responsible for configuration."""
import numbers
from fractions import Fraction

import voluptuous as vol

REPORT_LOG_FILE_NAME = "steinpoly-verify.log"
THREADS_ENV_VAR = "STEINPOLY_THREADS"

VolPositiveNumber = vol.All(numbers.Real, vol.Range(min=0))

TOLERANCES = {
    "stein": 1e-8,
    "iterated": 1e-7,
    "fit": 1e-6,
    "orthogonality": 1e-8,
    "mv_orthogonality": 1e-6,
    "recursion": 1e-7,
    "pearson_ord": 1e-8,
    "quadrature": 1e-12,
    "tail": 1e-12,
    "kernel_tail": 1e-6,
    "injective": 1e-10,
}

QUADRATURE_MAX_NODES = 512
LATTICE_MAX_POINTS = 1 << 16
MAX_DIMENSION = 3
MAX_DEGREE = 30


def cv_rational(value) -> Fraction:
    """Validate a number or rational string and return it as a Fraction."""
    if isinstance(value, bool):
        raise vol.Invalid(f"Expected a number, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Real):
        if value != value or value in (float("inf"), float("-inf")):
            raise vol.Invalid(f"Expected a finite number, got {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass

    raise vol.Invalid(f"Expected a number or a rational string, got {value!r}")


def rational_range(min=None, max=None, min_included=True, max_included=True):
    """Build a validator for a rational number inside a range."""
    return vol.All(
        cv_rational,
        vol.Range(
            min=min,
            max=max,
            min_included=min_included,
            max_included=max_included,
        ),
    )


CvPositiveRational = rational_range(min=0, min_included=False)
CvProbability = rational_range(
    min=0, max=1, min_included=False, max_included=False)
CvPositiveInt = vol.All(int, vol.Range(min=1))


def square_matrix(max_size=MAX_DIMENSION):
    """Raise an error if the value is not a square matrix of rationals."""
    def validator(value):
        if not isinstance(value, (list, tuple)) or not value:
            raise vol.Invalid("Matrix must be a non-empty list of rows")

        size = len(value)
        if size > max_size:
            raise vol.Invalid(f"Matrix dimension {size} exceeds {max_size}")

        rows = []
        for row in value:
            if not isinstance(row, (list, tuple)) or len(row) != size:
                raise vol.Invalid(f"Matrix must be {size}x{size}")
            rows.append(tuple(cv_rational(item) for item in row))

        for i in range(size):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise vol.Invalid("Matrix must be symmetric")

        return tuple(rows)

    return validator


def interval():
    """Raise an error if the value is not an ordered [lo, hi] pair."""
    def validator(value):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise vol.Invalid("Interval must be a [lo, hi] pair")

        lo, hi = (float(cv_rational(item)) for item in value)
        if hi < lo:
            raise vol.Invalid(f"Interval bounds out of order: [{lo}, {hi}]")

        return (lo, hi)

    return validator


CONF_KIND = "kind"
CONF_PARAMS = "params"
CONF_Z_DOMAIN = "z_domain"

CONF_SIGMA2 = "sigma2"
CONF_INTERCEPT = "intercept"
CONF_SLOPE = "slope"
CONF_PRECISION = "M"
CONF_SHAPE = "r"
CONF_RATE = "delta"
CONF_SHIFT = "g"
CONF_BETA_A = "a"
CONF_BETA_B = "b"
CONF_BASE_RATE = "m0"
CONF_ALPHA = "alpha"
CONF_PROB = "p"
CONF_TRIALS = "N"

PARAMS_SCHEMAS = {
    "normal": vol.Schema(
        {
            vol.Required(CONF_SIGMA2): CvPositiveRational,
            vol.Optional(CONF_INTERCEPT, default=0): cv_rational,
            vol.Optional(CONF_SLOPE, default=1): vol.All(
                cv_rational, vol.NotIn([0], msg="slope must be non-zero")
            ),
        }
    ),
    "mvnormal": vol.Schema({vol.Required(CONF_PRECISION): square_matrix()}),
    "gamma": vol.Schema(
        {
            vol.Required(CONF_SHAPE): CvPositiveRational,
            vol.Required(CONF_RATE): CvPositiveRational,
            vol.Optional(CONF_SHIFT, default=0): cv_rational,
        }
    ),
    "beta": vol.Schema(
        {
            vol.Required(CONF_BETA_A): CvPositiveRational,
            vol.Required(CONF_BETA_B): CvPositiveRational,
        }
    ),
    "poisson": vol.Schema({vol.Required(CONF_BASE_RATE): CvPositiveRational}),
    "negbin": vol.Schema(
        {
            vol.Required(CONF_ALPHA): CvPositiveInt,
            vol.Required(CONF_PROB): CvProbability,
        }
    ),
    "binomial": vol.Schema(
        {
            vol.Required(CONF_TRIALS): CvPositiveInt,
            vol.Required(CONF_PROB): CvProbability,
        }
    ),
    "pascal": vol.Schema(
        {
            vol.Required(CONF_ALPHA): CvPositiveInt,
            vol.Required(CONF_PROB): CvProbability,
        }
    ),
}

FAMILY_JSON_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [CONF_KIND, CONF_PARAMS, CONF_Z_DOMAIN],
    "additionalProperties": False,
    "properties": {
        CONF_KIND: {"type": "string", "enum": sorted(PARAMS_SCHEMAS)},
        CONF_PARAMS: {"type": "object"},
        CONF_Z_DOMAIN: {
            "oneOf": [
                {
                    "type": "array",
                    "items": {"type": ["number", "string"]},
                    "minItems": 2,
                    "maxItems": 2,
                },
                {
                    "type": "array",
                    "minItems": 1,
                    "maxItems": MAX_DIMENSION,
                    "items": {
                        "type": "array",
                        "items": {"type": ["number", "string"]},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            ]
        },
    },
}

COMMANDS = ("families", "verify", "project", "complete", "simulate", "estimate")

CONF_COMMAND = "command"
CONF_FAMILY = "family"
CONF_OUT = "out"
CONF_J = "J"
CONF_Z_GRID = "z_grid"
CONF_X_GRID = "x_grid"
CONF_X_TRUNC = "x_trunc"
CONF_N = "n"
CONF_SEED = "seed"
CONF_RIDGE = "ridge"
CONF_TOL = "tol"
CONF_DATA = "data"
CONF_G_TRUE = "g_true"
CONF_NOISE_SD = "noise_sd"
CONF_ENDOGENOUS = "endogenous"
CONF_Z_LAW = "z_law"

CONF_OUT_DEFAULT = "steinpoly-out"
CONF_SEED_DEFAULT = 0
CONF_N_DEFAULT = 1000
CONF_RIDGE_DEFAULT = 0.0
CONF_NOISE_SD_DEFAULT = 1.0
CONF_J_DEFAULTS = {
    "families": 10,
    "verify": 10,
    "project": 8,
    "complete": None,
    "simulate": 2,
    "estimate": None,
}

CONF_ZLAW_DIST = "dist"
CONF_ZLAW_LO = "lo"
CONF_ZLAW_HI = "hi"
CONF_ZLAW_MEAN = "mean"
CONF_ZLAW_SD = "sd"
CONF_ZLAW_Z1 = "z1"

ZLAW_SCHEMA = vol.Schema(
    vol.Any(
        {
            vol.Required(CONF_ZLAW_DIST): "uniform",
            vol.Required(CONF_ZLAW_LO): numbers.Real,
            vol.Required(CONF_ZLAW_HI): numbers.Real,
            vol.Optional(CONF_ZLAW_Z1, default=list): vol.All(
                [numbers.Real], vol.Coerce(tuple)),
        },
        {
            vol.Required(CONF_ZLAW_DIST): "normal",
            vol.Required(CONF_ZLAW_MEAN): numbers.Real,
            vol.Required(CONF_ZLAW_SD): VolPositiveNumber,
            vol.Optional(CONF_ZLAW_Z1, default=list): vol.All(
                [numbers.Real], vol.Coerce(tuple)),
        },
        {
            vol.Required(CONF_ZLAW_DIST): "choice",
            vol.Required("values"): vol.All([numbers.Real], vol.Length(min=1)),
            vol.Optional(CONF_ZLAW_Z1, default=list): vol.All(
                [numbers.Real], vol.Coerce(tuple)),
        },
    )
)


def tolerance_overrides(value):
    """Validate `name=value` tolerance overrides against TOLERANCES."""
    if isinstance(value, dict):
        items = value.items()
    else:
        items = []
        for entry in value or ():
            name, sep, raw = str(entry).partition("=")
            if not sep:
                raise vol.Invalid(f"Tolerance override must read name=value: {entry}")
            items.append((name.strip(), raw))

    result = dict(TOLERANCES)
    for name, raw in items:
        if name not in TOLERANCES:
            raise vol.Invalid(f"Unknown tolerance {name!r}")
        try:
            tol = float(raw)
        except (TypeError, ValueError):
            raise vol.Invalid(f"Tolerance {name} is not a number: {raw!r}")
        if not tol > 0:
            raise vol.Invalid(f"Tolerance {name} must be positive, got {tol}")
        result[name] = tol

    return result


def requires_keys(command, *keys):
    """Raise an error if `command` is selected without all of `keys`."""
    def validator(config):
        if config.get(CONF_COMMAND) != command:
            return config

        missing = [k for k in keys if config.get(k) is None]
        if missing:
            raise vol.Invalid(f"Command {command!r} requires {missing}")

        return config

    return validator


RUN_CONFIG_SCHEMA = vol.Schema(
    vol.All(
        {
            vol.Required(CONF_COMMAND): vol.In(COMMANDS),
            vol.Required(CONF_FAMILY): str,
            vol.Optional(CONF_OUT, default=CONF_OUT_DEFAULT): str,
            vol.Optional(CONF_J, default=None): vol.Any(
                None, vol.All(int, vol.Range(min=0, max=MAX_DEGREE))
            ),
            vol.Optional(CONF_Z_GRID, default=None): vol.Any(None, str),
            vol.Optional(CONF_X_GRID, default=None): vol.Any(None, str),
            vol.Optional(CONF_X_TRUNC, default=None): vol.Any(
                None, vol.All(int, vol.Range(min=1))
            ),
            vol.Optional(CONF_N, default=CONF_N_DEFAULT): vol.All(
                int, vol.Range(min=1)),
            vol.Optional(CONF_SEED, default=CONF_SEED_DEFAULT): int,
            vol.Optional(
                CONF_RIDGE, default=CONF_RIDGE_DEFAULT): VolPositiveNumber,
            vol.Optional(CONF_TOL, default=None): tolerance_overrides,
            vol.Optional(CONF_DATA, default=None): vol.Any(None, str),
            vol.Optional(CONF_G_TRUE, default=None): vol.Any(
                None, vol.All([cv_rational], vol.Length(min=1))
            ),
            vol.Optional(
                CONF_NOISE_SD, default=CONF_NOISE_SD_DEFAULT): VolPositiveNumber,
            vol.Optional(CONF_ENDOGENOUS, default=False): bool,
            vol.Optional(CONF_Z_LAW, default=None): vol.Any(None, ZLAW_SCHEMA),
            vol.Optional("verbose", default=0): int,
            vol.Optional("quiet", default=False): bool,
        },
        requires_keys("estimate", CONF_DATA),
        requires_keys("simulate", CONF_G_TRUE),
    )
)
