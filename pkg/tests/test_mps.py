import pytest

from grouptree.errors import MpsParseError, NameOverflowError
from grouptree.model import BuildConfig, MilpModel, Variable, build_model, model_stats
from grouptree.mps import export_lp, export_mps, parse_mps
from grouptree.topology import preset
from tests.conftest import random_dataset

ALL_CONFIGS = [
    BuildConfig(),
    BuildConfig(strengthen=False),
    BuildConfig(anchor=False),
    BuildConfig(strengthen=False, drop_unused_c=False),
    BuildConfig(relax_integrality=False),
    BuildConfig(forbid_trivial_branch=True),
]


def test_round_trip_all_configs(rng):
    data = random_dataset(rng, 12, [2, 3])
    for cfg in ALL_CONFIGS:
        for name in ("depth2", "imbalanced"):
            model = build_model(data, preset(name), cfg)
            again = parse_mps(export_mps(model))
            assert model.semantically_equal(again)
            assert model_stats(model) == model_stats(again)


def test_round_trip_twice_is_stable(rng):
    data = random_dataset(rng, 10, [2, 2])
    model = build_model(data, preset("depth2"))
    text1 = export_mps(model)
    text2 = export_mps(parse_mps(text1))
    assert text1 == text2


def test_export_deterministic(rng):
    data = random_dataset(rng, 15, [3, 2])
    a = export_mps(build_model(data, preset("depth2_5")))
    b = export_mps(build_model(data, preset("depth2_5")))
    assert a == b


def test_onegrp_row_count(rng):
    data = random_dataset(rng, 4, [2, 2])
    text = export_mps(build_model(data, preset("depth2")))
    assert sum(1 for line in text.splitlines() if line.startswith(" E  ONEGRP_")) == 3


def test_truncated_input():
    data_text = "NAME          X\nROWS\n N  OBJ\n L  R1\nCOLUMNS\n    X1              R1              1\n"
    with pytest.raises(MpsParseError):
        parse_mps(data_text)  # no ENDATA


def test_minimal_hand_written():
    text = """NAME          TINY
ROWS
 N  COST
 L  CAP
COLUMNS
    X1              COST            2
    X1              CAP             1
    X2              COST            3
    X2              CAP             1
RHS
    RHS             CAP             4
BOUNDS
 UP BND             X1              2
ENDATA
"""
    model = parse_mps(text)
    assert len(model.variables) == 2
    assert len(model.constraints) == 1
    assert model.sense == "min"  # no OBJSENSE given
    assert model.variables[0].upper == 2.0
    assert dict(model.objective) == {"X1": 2.0, "X2": 3.0}


def test_bound_types():
    text = """NAME          B
ROWS
 N  OBJ
 L  R1
COLUMNS
    A               R1              1
    B               R1              1
    C               R1              1
RHS
    RHS             R1              2
BOUNDS
 FX BND             A               1
 BV BND             B
 LO BND             C               0.5
ENDATA
"""
    model = parse_mps(text)
    by_name = {v.name: v for v in model.variables}
    assert by_name["A"].lower == by_name["A"].upper == 1.0
    assert by_name["B"].is_integer and by_name["B"].upper == 1.0
    assert by_name["C"].lower == 0.5


def test_ranges_rejected():
    text = "NAME X\nROWS\n N  OBJ\nRANGES\nENDATA\n"
    with pytest.raises(MpsParseError):
        parse_mps(text)


def test_unknown_row_reports_line():
    text = """NAME          X
ROWS
 N  OBJ
COLUMNS
    A               NOPE            1
ENDATA
"""
    with pytest.raises(MpsParseError) as err:
        parse_mps(text)
    assert "line 5" in str(err.value)


def test_name_overflow():
    model = MilpModel(
        name="X",
        sense="max",
        variables=[Variable("THIS_NAME_IS_TOO_LONG", 0.0, 1.0, False, "x")],
        constraints=[],
        objective=(("THIS_NAME_IS_TOO_LONG", 1.0),),
    )
    with pytest.raises(NameOverflowError):
        export_mps(model)


def test_integrality_markers_round_trip(rng):
    data = random_dataset(rng, 10, [2, 2])
    for cfg in (BuildConfig(), BuildConfig(relax_integrality=False)):
        model = build_model(data, preset("depth3"), cfg)
        again = parse_mps(export_mps(model))
        assert [v.is_integer for v in again.variables] == [
            v.is_integer for v in model.variables
        ]


def test_lp_export_smoke(rng):
    data = random_dataset(rng, 6, [2, 2])
    model = build_model(data, preset("depth2"))
    text = export_lp(model)
    assert text.startswith("\\ written by grouptree\nMaximize")
    assert " ONEGRP_1: " in text
    assert "General" in text
    assert text.rstrip().endswith("End")
    # weighted objective renders fractional coefficients
    from fractions import Fraction

    model2 = build_model(data, preset("depth2"), BuildConfig(class_weight=Fraction(3, 2)))
    assert "1.5 C_" in export_lp(model2)


def test_fractional_coefficients_round_trip(rng):
    from fractions import Fraction

    data = random_dataset(rng, 9, [2, 2])
    model = build_model(
        data, preset("depth2"), BuildConfig(class_weight=Fraction(1, 3))
    )
    again = parse_mps(export_mps(model))
    assert model.semantically_equal(again)
