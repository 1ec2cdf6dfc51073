from fractions import Fraction

import pytest
import voluptuous as vol

from steinpoly import config
from steinpoly.config import (
    TOLERANCES,
    ZLAW_SCHEMA,
    RUN_CONFIG_SCHEMA,
    interval,
    cv_rational,
    square_matrix,
    tolerance_overrides,
)


def test_tolerance_overrides_from_list():
    result = tolerance_overrides(["stein=0.5", " fit = 1e-3"])
    assert result["stein"] == 0.5
    assert result["fit"] == 1e-3
    assert result["iterated"] == TOLERANCES["iterated"]
    assert TOLERANCES["stein"] == 1e-8


def test_tolerance_overrides_from_dict():
    assert tolerance_overrides({"tail": "1e-9"})["tail"] == 1e-9
    assert tolerance_overrides(None) == TOLERANCES


@pytest.mark.parametrize(
    "value",
    [["bogus=1"], ["stein"], ["stein=abc"], ["stein=0"], ["stein=-1e-3"], {"fit": None}],
)
def test_tolerance_overrides_invalid(value):
    with pytest.raises(vol.Invalid):
        tolerance_overrides(value)


def test_run_config_defaults():
    conf = RUN_CONFIG_SCHEMA({"command": "verify", "family": "f.json"})
    assert conf["out"] == config.CONF_OUT_DEFAULT
    assert conf["J"] is None
    assert conf["seed"] == 0
    assert conf["tol"] == TOLERANCES
    assert conf["tol"] is not TOLERANCES


@pytest.mark.parametrize(
    "conf",
    [
        {"command": "estimate", "family": "f.json"},
        {"command": "simulate", "family": "f.json"},
        {"command": "simulate", "family": "f.json", "g_true": []},
        {"command": "verify", "family": "f.json", "J": 31},
        {"command": "verify", "family": "f.json", "n": 0},
        {"command": "verify", "family": "f.json", "ridge": -1.0},
        {"command": "bogus", "family": "f.json"},
    ],
)
def test_run_config_rejects(conf):
    with pytest.raises(vol.Invalid):
        RUN_CONFIG_SCHEMA(conf)


def test_run_config_requirements_are_met():
    conf = RUN_CONFIG_SCHEMA({"command": "simulate", "family": "f.json",
                              "g_true": [1, "1/2"]})
    assert conf["g_true"] == [Fraction(1), Fraction(1, 2)]
    assert RUN_CONFIG_SCHEMA({"command": "estimate", "family": "f.json",
                              "data": "d.csv"})["data"] == "d.csv"


def test_zlaw_schema():
    uniform = ZLAW_SCHEMA({"dist": "uniform", "lo": -1, "hi": 1})
    assert uniform["z1"] == ()
    normal = ZLAW_SCHEMA({"dist": "normal", "mean": 0, "sd": 0.5, "z1": [1, 2]})
    assert normal["z1"] == (1, 2)
    assert ZLAW_SCHEMA({"dist": "choice", "values": [3]})["values"] == [3]

    for bad in ({"dist": "weird"}, {"dist": "normal", "mean": 0, "sd": -1},
                {"dist": "choice", "values": []}, {"dist": "uniform", "lo": 0}):
        with pytest.raises(vol.Invalid):
            ZLAW_SCHEMA(bad)


def test_cv_rational():
    assert cv_rational("3/10") == Fraction(3, 10)
    assert cv_rational(0.3) == Fraction(3, 10)
    assert cv_rational(4) == Fraction(4)
    for bad in (True, float("inf"), float("nan"), "1/0", "three", None):
        with pytest.raises(vol.Invalid):
            cv_rational(bad)


def test_family_params_schemas():
    params = config.PARAMS_SCHEMAS["binomial"]({"N": 10, "p": "3/10"})
    assert params == {"N": 10, "p": Fraction(3, 10)}
    normal = config.PARAMS_SCHEMAS["normal"]({"sigma2": 1})
    assert normal["slope"] == 1
    with pytest.raises(vol.Invalid):
        config.PARAMS_SCHEMAS["normal"]({"sigma2": 1, "slope": 0})
    with pytest.raises(vol.Invalid):
        config.PARAMS_SCHEMAS["pascal"]({"alpha": 2, "p": 1})


def test_square_matrix():
    assert square_matrix()([[2, 1], [1, "1/2"]]) == ((2, 1), (1, Fraction(1, 2)))
    for bad in ([], [[1, 2]], [[1, 2], [3, 4]], [[1, 0], [0]], "eye"):
        with pytest.raises(vol.Invalid):
            square_matrix()(bad)
    with pytest.raises(vol.Invalid):
        square_matrix(max_size=2)([[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_interval():
    assert interval()([-2, "1/2"]) == (-2.0, 0.5)
    assert interval()((1, 1)) == (1.0, 1.0)
    for bad in ([1, 0], [0], [0, 1, 2], "0:1", [0, "x"]):
        with pytest.raises(vol.Invalid):
            interval()(bad)
