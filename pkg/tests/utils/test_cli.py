import pytest
import typer

from specine.utils import (
    Ratio,
    Variant,
    format_ratio,
    validate_variant,
    validate_variant_list,
)


def test_format_ratio():
    assert format_ratio(Ratio(159, 205)) == "159/205 (77.56%)"
    assert format_ratio(Ratio(3, 3)) == "3/3 (100.00%)"
    assert format_ratio(Ratio(0, 0)) == "-"
    assert format_ratio(None) == "-"


def test_validate_variant():
    assert validate_variant(None) is None
    assert validate_variant("woar") == Variant.WO_AR
    with pytest.raises(typer.BadParameter, match="Unknown variant"):
        validate_variant("everything")


def test_validate_variant_list():
    assert validate_variant_list("full, woT,full,,WTF") == [
        Variant.FULL,
        Variant.WO_T,
        Variant.W_TF,
    ]
    with pytest.raises(typer.BadParameter, match="at least one variant"):
        validate_variant_list(" , ")
    with pytest.raises(typer.BadParameter):
        validate_variant_list("full,bogus")
