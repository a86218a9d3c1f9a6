import json

import pytest

from tests.conftest import cyclic_table, s3_table
from tools.dsl import (
    BinomSpec,
    CyclicSpec,
    MatrixSpec,
    PolySpec,
    ProductMapSpec,
    ProductTowerSpec,
    ShiftSpec,
    SpecError,
    TablesSpec,
    TableTowerSpec,
    ZhatSpec,
    build,
    component_families,
    parse_spec,
    render,
    with_depth,
)
from tools.maps import CompatibleFamily, PrecisionMap


def test_parse_examples():
    spec = parse_spec("zp 2 depth 8; poly [1,1]")
    assert spec.tower == CyclicSpec(p=2, depth=8)
    assert spec.map == PolySpec(coeffs=[1, 1])

    spec = parse_spec("prod [zp 2 depth 3, zp 3 depth 3]; prod [poly [1,1], poly [1,1]]")
    assert isinstance(spec.tower, ProductTowerSpec)
    assert [c.p for c in spec.tower.components] == [2, 3]
    assert isinstance(spec.map, ProductMapSpec) and len(spec.map.components) == 2

    assert isinstance(parse_spec("zp 2 depth 4; shift").map, ShiftSpec)
    assert isinstance(parse_spec("zp 3 depth 2; binom").map, BinomSpec)
    assert isinstance(parse_spec("zhat depth 3; poly [1, 1]").tower, ZhatSpec)


def test_parse_matrix_and_paths():
    spec = parse_spec("prod [zp 2 depth 2, zp 2 depth 2]; matrix [[1,1],[1,0]]")
    assert spec.map == MatrixSpec(rows=[[1, 1], [1, 0]])

    spec = parse_spec('table "my towers/t.json"; tables maps.json')
    assert spec.tower == TableTowerSpec(path="my towers/t.json")
    assert spec.map == TablesSpec(path="maps.json")


def test_whitespace_and_newlines_are_free():
    spec = parse_spec("\n  zp 5\n depth 2 ;\n\tpoly [ 0 , 0 , 1 ]  ")
    assert spec.map.coeffs == [0, 0, 1]


@pytest.mark.parametrize("text, line, column", [
    ("zp 2 depth 8 poly [1,1]", 1, 14),
    ("zp 2 depth 8;\npoly [1 1]", 2, 9),
    ("zp 2 depth 8; poly [1,1] extra", 1, 26),
    ("zp 4 depth 2; poly [1]", 1, 1),
    ("zp 2 depth 0; poly [1]", 1, 12),
    ("zq 2 depth 2; shift", 1, 1),
    ("zp 2 depth 2; poly [1,", 1, 23),
    ("zp 2 depth 2; poly [-1, 1]", 1, 21),
    ("zp 2 depth 2; poly [1] @", 1, 24),
])
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(SpecError) as err:
        parse_spec(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_negative_integers_get_a_hint():
    with pytest.raises(SpecError, match="non-negative"):
        parse_spec("zp 2 depth 6; poly [-1, 1]")


@pytest.mark.parametrize("text, message", [
    ("zp 2 depth 2; matrix [[1,1],[1,0]]", "needs a product of 2 zp towers"),
    ("prod [zp 2 depth 2, zp 2 depth 2]; matrix [[1,1]]", "square"),
    ("prod [zp 2 depth 2, zp 3 depth 2]; matrix [[1,1],[1,0]]", "identical"),
    ("prod [zp 2 depth 2, zp 3 depth 2]; prod [poly [1,1]]", "has 1"),
    ("prod [zp 2 depth 2]; prod [poly [1,1], poly [1,1]]", "map has more"),
    ("prod [zp 2 depth 2, zp 3 depth 2]; prod [shift, poly [1,1]]", "factor through"),
    ("zp 2 depth 2; prod [poly [1,1]]", "product tower"),
    ("prod [zp 2 depth 2, zp 3 depth 2]; shift", "zp tower"),
    ("zhat depth 3; binom", "zp tower"),
    ("prod [zp 2 depth 2, zp 3 depth 2]; poly [1,1]", "cyclic tower"),
])
def test_arity_errors(text, message):
    with pytest.raises(SpecError, match=message):
        parse_spec(text)


@pytest.mark.parametrize("text", [
    "zp 2 depth 8; poly [1, 1]",
    "zhat depth 3; poly [0, 1, 1]",
    "prod [zp 2 depth 3, zp 3 depth 3]; prod [poly [1, 1], poly [1, 1]]",
    "prod [zp 3 depth 2, zp 3 depth 2]; matrix [[0, 1], [1, 0]]",
    "zp 2 depth 4; shift",
    'table "a b.json"; tables t.json',
])
def test_render_round_trip(text):
    spec = parse_spec(text)
    assert render(spec) == text
    assert parse_spec(render(spec)) == spec


def test_with_depth():
    spec = with_depth(parse_spec("prod [zp 2 depth 3, zhat depth 2]; prod [poly [1,1], poly [1,1]]"), 5)
    assert render(spec).startswith("prod [zp 2 depth 5, zhat depth 5]")
    with pytest.raises(SpecError):
        with_depth(spec, 0)


def test_build_families_and_precision_maps():
    tower, f = build(parse_spec("zp 2 depth 3; poly [1, 3]"))
    assert isinstance(f, CompatibleFamily)
    assert f.table(2).tolist() == [1, 0, 3, 2]

    tower, m = build(parse_spec("zp 2 depth 4; shift"))
    assert isinstance(m, PrecisionMap) and m.evaluate(5, 2) == 2

    tower, f = build(parse_spec("zp 2 depth 8; poly [1, 1]"), depth_override=3)
    assert tower.orders() == [1, 2, 4, 8]


def test_build_product_and_components():
    spec = parse_spec("prod [zp 2 depth 3, zp 3 depth 1]; prod [poly [1,1], poly [1,1]]")
    tower, f = build(spec)
    assert tower.orders() == [1, 6, 12, 24]
    families = component_families(spec, tower)
    assert [g.depth for g in families] == [3, 3]
    assert component_families(parse_spec("zp 2 depth 2; poly [1,1]"), tower) is None


def test_build_from_files(tmp_path):
    tower_path = tmp_path / "s3.json"
    tower_path.write_text(json.dumps({"tables": [cyclic_table(2), s3_table()], "transitions": [[0, 0, 0, 1, 1, 1]]}))
    maps_path = tmp_path / "maps.json"
    maps_path.write_text(json.dumps({"tables": [[1, 0], [4, 5, 3, 1, 2, 0]]}))
    tower, f = build(parse_spec(f'table "{tower_path}"; tables "{maps_path}"'))
    assert tower.orders() == [1, 2, 6]
    assert f.table(1).tolist() == [1, 0]
