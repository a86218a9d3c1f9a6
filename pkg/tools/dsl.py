# tools/dsl.py
"""
A small language for towers and maps.

    spec  := tower ";" map
    tower := "zp" INT "depth" INT | "zhat" "depth" INT
           | "prod" "[" tower ("," tower)* "]" | "table" PATH
    map   := "poly" "[" INT ("," INT)* "]" | "matrix" "[" row ("," row)* "]"
           | "shift" | "binom" | "prod" "[" map ("," map)* "]" | "tables" PATH
    row   := "[" INT ("," INT)* "]"

Integers are decimal and non-negative; polynomial coefficients run from the
constant term up and are reduced mod each level order. PATH is a bare word
or a double-quoted string.
"""
from __future__ import annotations

import re
from typing import Annotated, List, Literal, NoReturn, Optional, Tuple, Union

import sympy
from pydantic import BaseModel, Field

from tools.maps import (
    AnyMap,
    binomial_map,
    from_level_tables,
    from_polynomial,
    load_tables,
    matrix_family,
    product_map,
    shift_map,
)
from tools.tower import Tower, load_tower, make_cyclic_tower, make_factorial_tower, make_product_tower


class SpecError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})" if line else message)


# --- spec models ------------------------------------------------------------

class CyclicSpec(BaseModel):
    kind: Literal["zp"] = "zp"
    p: int
    depth: int


class ZhatSpec(BaseModel):
    kind: Literal["zhat"] = "zhat"
    depth: int


class ProductTowerSpec(BaseModel):
    kind: Literal["prod"] = "prod"
    components: List["TowerSpec"]


class TableTowerSpec(BaseModel):
    kind: Literal["table"] = "table"
    path: str


TowerSpec = Annotated[
    Union[CyclicSpec, ZhatSpec, ProductTowerSpec, TableTowerSpec], Field(discriminator="kind")
]


class PolySpec(BaseModel):
    type: Literal["poly"] = "poly"
    coeffs: List[int]


class MatrixSpec(BaseModel):
    type: Literal["matrix"] = "matrix"
    rows: List[List[int]]


class ShiftSpec(BaseModel):
    type: Literal["shift"] = "shift"


class BinomSpec(BaseModel):
    type: Literal["binom"] = "binom"


class ProductMapSpec(BaseModel):
    type: Literal["prod"] = "prod"
    components: List["MapExpr"]


class TablesSpec(BaseModel):
    type: Literal["tables"] = "tables"
    path: str


MapExpr = Annotated[
    Union[PolySpec, MatrixSpec, ShiftSpec, BinomSpec, ProductMapSpec, TablesSpec], Field(discriminator="type")
]


class MapSpec(BaseModel):
    tower: TowerSpec
    map: MapExpr


ProductTowerSpec.model_rebuild()
ProductMapSpec.model_rebuild()
MapSpec.model_rebuild()


# --- scanner ----------------------------------------------------------------

_TOKEN = re.compile(r'\s*(?:(?P<punct>[\[\],;])|"(?P<string>[^"\n]*)"|(?P<word>[^\s\[\],;"]+))')
KEYWORDS = {"zp", "zhat", "depth", "prod", "table", "poly", "matrix", "shift", "binom", "tables"}


class Scanner:
    def __init__(self, text: str):
        self.text = text
        self.tokens: List[Tuple[str, str, int]] = []  # (kind, value, offset)
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if m is None:
                if text[pos:].strip():
                    raise SpecError(f"unexpected character {text[pos:].lstrip()[0]!r}",
                                    *self.position(len(text) - len(text[pos:].lstrip())))
                break
            if m.group("punct"):
                self.tokens.append((m.group("punct"), m.group("punct"), m.start("punct")))
            elif m.group("string") is not None:
                self.tokens.append(("PATH", m.group("string"), m.start("string") - 1))
            else:
                word = m.group("word")
                kind = word if word in KEYWORDS else "INT" if word.isdigit() else "WORD"
                self.tokens.append((kind, word, m.start("word")))
            pos = m.end()
        self.index = 0

    def position(self, offset: int) -> Tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        column = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, column

    @property
    def token(self) -> Optional[str]:
        return self.tokens[self.index][0] if self.index < len(self.tokens) else None

    @property
    def value(self) -> str:
        return self.tokens[self.index][1] if self.index < len(self.tokens) else ""

    def mark(self) -> Tuple[int, int]:
        offset = self.tokens[self.index][2] if self.index < len(self.tokens) else len(self.text)
        return self.position(offset)

    def lex(self) -> None:
        self.index += 1


# --- parser -----------------------------------------------------------------

class Parser:
    def __init__(self, text: str):
        self.scanner = Scanner(text)

    def parse(self) -> MapSpec:
        tower = self._tower()
        self.expect(";")
        map_ = self._map(tower)
        if self.scanner.token is not None:
            self.error(f"unexpected {self.scanner.value!r} after the map")
        return MapSpec(tower=tower, map=map_)

    def peek(self, token: str) -> bool:
        return self.scanner.token == token

    def accept(self, token: str) -> bool:
        if self.peek(token):
            self.scanner.lex()
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.accept(token):
            found = repr(self.scanner.value) if self.scanner.token else "end of input"
            self.error(f"expected {token!r}, found {found}")

    def error(self, message: str, at: Optional[Tuple[int, int]] = None) -> NoReturn:
        raise SpecError(message, *(at or self.scanner.mark()))

    def _int(self) -> int:
        if self.peek("INT"):
            value = int(self.scanner.value)
            self.scanner.lex()
            return value
        if self.scanner.value.startswith("-") and self.scanner.value[1:].isdigit():
            self.error("integers are non-negative; write -a as the residue m - a")
        self.error(f"expected an integer, found {self.scanner.value or 'end of input'!r}")

    def _int_list(self) -> List[int]:
        self.expect("[")
        values = [self._int()]
        while self.accept(","):
            values.append(self._int())
        self.expect("]")
        return values

    def _path(self) -> str:
        if self.peek("PATH") or self.peek("WORD") or self.peek("INT"):
            value = self.scanner.value
            self.scanner.lex()
            return value
        self.error("expected a file path")

    def _depth(self) -> int:
        self.expect("depth")
        at = self.scanner.mark()
        depth = self._int()
        if depth < 1:
            self.error("depth must be at least 1", at)
        return depth

    def _tower(self) -> TowerSpec:
        at = self.scanner.mark()
        if self.accept("zp"):
            p = self._int()
            if not sympy.isprime(p):
                self.error(f"zp needs a prime, got {p}", at)
            return CyclicSpec(p=p, depth=self._depth())
        if self.accept("zhat"):
            return ZhatSpec(depth=self._depth())
        if self.accept("prod"):
            self.expect("[")
            components = [self._tower()]
            while self.accept(","):
                components.append(self._tower())
            self.expect("]")
            return ProductTowerSpec(components=components)
        if self.accept("table"):
            return TableTowerSpec(path=self._path())
        self.error(f"expected a tower (zp, zhat, prod, table), found {self.scanner.value or 'end of input'!r}")

    def _map(self, tower: TowerSpec) -> MapExpr:
        at = self.scanner.mark()
        if self.accept("poly"):
            coeffs = self._int_list()
            if not isinstance(tower, (CyclicSpec, ZhatSpec)):
                self.error(f"poly needs a cyclic tower, the tower is {render_tower(tower)}", at)
            return PolySpec(coeffs=coeffs)
        if self.accept("matrix"):
            self.expect("[")
            rows = [self._int_list()]
            while self.accept(","):
                rows.append(self._int_list())
            self.expect("]")
            k = len(rows)
            if any(len(r) != k for r in rows):
                self.error(f"matrix must be square, got rows of lengths {[len(r) for r in rows]}", at)
            if not (isinstance(tower, ProductTowerSpec) and len(tower.components) == k):
                self.error(f"a {k}x{k} matrix needs a product of {k} zp towers", at)
            if any(not isinstance(c, CyclicSpec) for c in tower.components) or len(
                {(c.p, c.depth) for c in tower.components}
            ) != 1:
                self.error("matrix components must be identical zp towers", at)
            return MatrixSpec(rows=rows)
        for keyword, spec in (("shift", ShiftSpec), ("binom", BinomSpec)):
            if self.accept(keyword):
                if not isinstance(tower, CyclicSpec):
                    self.error(f"{keyword} needs a zp tower, the tower is {render_tower(tower)}", at)
                return spec()
        if self.accept("prod"):
            if not isinstance(tower, ProductTowerSpec):
                self.error("a product map needs a product tower", at)
            self.expect("[")
            components = []
            while True:
                idx = len(components)
                if idx >= len(tower.components):
                    self.error(f"the tower has {len(tower.components)} components, the map has more")
                comp_at = self.scanner.mark()
                comp = self._map(tower.components[idx])
                if isinstance(comp, (ShiftSpec, BinomSpec)):
                    self.error(f"product components must factor through the levels; {comp.type} does not", comp_at)
                components.append(comp)
                if not self.accept(","):
                    break
            self.expect("]")
            if len(components) != len(tower.components):
                self.error(f"the tower has {len(tower.components)} components, the map has {len(components)}", at)
            return ProductMapSpec(components=components)
        if self.accept("tables"):
            return TablesSpec(path=self._path())
        self.error(f"expected a map (poly, matrix, shift, binom, prod, tables), found "
                   f"{self.scanner.value or 'end of input'!r}")


def parse_spec(text: str) -> MapSpec:
    return Parser(text).parse()


# --- render / transform / build ---------------------------------------------

_BARE = re.compile(r'[^\s\[\],;"]+')


def _render_path(path: str) -> str:
    bare = _BARE.fullmatch(path) and path not in KEYWORDS
    return path if bare else f'"{path}"'


def _ints(values: List[int]) -> str:
    return "[" + ", ".join(map(str, values)) + "]"


def render_tower(t: TowerSpec) -> str:
    if isinstance(t, CyclicSpec):
        return f"zp {t.p} depth {t.depth}"
    if isinstance(t, ZhatSpec):
        return f"zhat depth {t.depth}"
    if isinstance(t, ProductTowerSpec):
        return "prod [" + ", ".join(render_tower(c) for c in t.components) + "]"
    return f"table {_render_path(t.path)}"


def render_map(m: MapExpr) -> str:
    if isinstance(m, PolySpec):
        return f"poly {_ints(m.coeffs)}"
    if isinstance(m, MatrixSpec):
        return "matrix [" + ", ".join(_ints(r) for r in m.rows) + "]"
    if isinstance(m, ProductMapSpec):
        return "prod [" + ", ".join(render_map(c) for c in m.components) + "]"
    if isinstance(m, TablesSpec):
        return f"tables {_render_path(m.path)}"
    return m.type


def render(spec: MapSpec) -> str:
    return f"{render_tower(spec.tower)}; {render_map(spec.map)}"


def _tower_with_depth(t: TowerSpec, depth: int) -> TowerSpec:
    if isinstance(t, (CyclicSpec, ZhatSpec)):
        return t.model_copy(update={"depth": depth})
    if isinstance(t, ProductTowerSpec):
        return ProductTowerSpec(components=[_tower_with_depth(c, depth) for c in t.components])
    return t


def with_depth(spec: MapSpec, depth: int) -> MapSpec:
    """Every zp/zhat tower in the spec at the given depth; table towers are resized at build time."""
    if depth < 1:
        raise SpecError("depth override must be at least 1")
    return MapSpec(tower=_tower_with_depth(spec.tower, depth), map=spec.map)


def build_tower(t: TowerSpec, depth: Optional[int] = None) -> Tower:
    if isinstance(t, CyclicSpec):
        return make_cyclic_tower(t.p, t.depth)
    if isinstance(t, ZhatSpec):
        return make_factorial_tower(t.depth)
    if isinstance(t, ProductTowerSpec):
        return make_product_tower([build_tower(c, depth) for c in t.components])
    tower = load_tower(t.path)
    return tower.with_depth(depth) if depth is not None else tower


def build_map(m: MapExpr, t: Tower, tower_spec: TowerSpec) -> AnyMap:
    if isinstance(m, PolySpec):
        return from_polynomial(t, m.coeffs)
    if isinstance(m, MatrixSpec):
        return matrix_family(t, m.rows)
    if isinstance(m, ShiftSpec):
        return shift_map(tower_spec.p, t)
    if isinstance(m, BinomSpec):
        return binomial_map(tower_spec.p, t)
    if isinstance(m, ProductMapSpec):
        families = [build_map(c, comp, cs) for c, comp, cs in zip(m.components, t.components, tower_spec.components)]
        return product_map(families, tower=t)
    return from_level_tables(t, load_tables(m.path), name=f"tables({m.path})")


def build(spec: MapSpec, depth_override: Optional[int] = None) -> Tuple[Tower, AnyMap]:
    if depth_override is not None:
        spec = with_depth(spec, depth_override)
    tower = build_tower(spec.tower, depth_override)
    return tower, build_map(spec.map, tower, spec.tower)


def component_families(spec: MapSpec, tower: Tower) -> Optional[List[AnyMap]]:
    """The per-component families of a product map, built on the product's (padded) components."""
    if not isinstance(spec.map, ProductMapSpec):
        return None
    return [build_map(c, comp, cs) for c, comp, cs in zip(spec.map.components, tower.components, spec.tower.components)]
