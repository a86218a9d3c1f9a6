# tools/maps.py
"""
Dynamics on a tower.

CompatibleFamily holds one dense table per level with every square
    transition(i+1 -> i) o T_{i+1} == T_i o transition(i+1 -> i)
commuting; it is the finite-precision form of a quotient-preserving map.
PrecisionMap covers maps that do not factor through the projections (the
digit shift, x -> C(x, p)): output at level i needs input at level j(i) >= i.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from config.settings import get_settings
from tools.tower import (
    CapacityError,
    Element,
    Tower,
    make_cyclic_tower,
    make_product_tower,
)

log = logging.getLogger(__name__)


class MapError(ValueError):
    ...


class UnsupportedMapError(MapError):
    ...


class CompatibilityError(MapError):
    def __init__(self, level: int, element: int, message: str = ""):
        self.level = level
        self.element = element
        super().__init__(message or f"compatibility fails at level {level}, element {element}")


class PrecisionError(RuntimeError):
    def __init__(self, required_level: int, depth: int, message: str = ""):
        self.required_level = required_level
        self.depth = depth
        super().__init__(
            message or f"precision exhausted: input at level {required_level} needed, tower depth is {depth}"
        )


# --- compatible families ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class CompatibleFamily:
    tower: Tower
    level_maps: Tuple[np.ndarray, ...]  # level_maps[i]: G_i -> G_i
    name: str = "family"
    recipe: Dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return self.tower.depth

    def table(self, i: int) -> np.ndarray:
        self.tower._check_level(i)
        return self.level_maps[i]

    def __call__(self, x: Element, i: int) -> Element:
        out = self.table(i)[np.asarray(x, dtype=np.int64)]
        return int(out) if np.ndim(out) == 0 else out


class CompatibilityWitness(BaseModel):
    level: int      # the lower level i of the failing square
    element: int    # x at level i+1
    lhs: int        # transition(T_{i+1} x)
    rhs: int        # T_i(transition x)


def check_table_capacity(t: Tower) -> None:
    cap = get_settings().limits.table_order
    big = [k for k, n in enumerate(t.orders()) if n > cap]
    if big:
        raise CapacityError(f"level {big[0]} has order {t.order(big[0])}; dense tables are capped at {cap}")


def check_level_capacity(t: Tower, j: int, what: str) -> None:
    """Every element of level j is about to be enumerated."""
    cap = get_settings().limits.table_order
    if t.order(j) > cap:
        raise CapacityError(f"{what}: level {j} has order {t.order(j)}; enumeration is capped at {cap}")


def check_compatibility(f: CompatibleFamily) -> Optional[CompatibilityWitness]:
    t = f.tower
    for i in range(t.depth):
        down = t.transitions[i].table(t.order(i + 1))
        lhs = down[f.level_maps[i + 1]]
        rhs = f.level_maps[i][down]
        bad = np.nonzero(lhs != rhs)[0]
        if bad.size:
            x = int(bad[0])
            return CompatibilityWitness(level=i, element=x, lhs=int(lhs[x]), rhs=int(rhs[x]))
    return None


def _build_family(t: Tower, tables: Sequence, name: str, recipe: Optional[Dict] = None) -> CompatibleFamily:
    check_table_capacity(t)
    try:
        tables = [np.array(tab, dtype=np.int64).reshape(-1) for tab in tables]
    except (TypeError, ValueError) as e:
        raise MapError(f"{name}: level tables must be integer arrays: {e}") from e
    if len(tables) == t.depth:
        tables = [np.zeros(1, dtype=np.int64)] + tables
    if len(tables) != t.depth + 1:
        raise MapError(f"expected {t.depth} level tables for a depth-{t.depth} tower, got {len(tables)}")
    for k, tab in enumerate(tables):
        n = t.order(k)
        if tab.shape != (n,):
            raise MapError(f"level {k} table needs {n} entries, got {tab.shape[0]}")
        if tab.min() < 0 or tab.max() >= n:
            raise MapError(f"level {k} table has values outside 0..{n - 1}")
    for tab in tables:
        tab.flags.writeable = False
    if recipe is None:
        recipe = {"type": "tables", "tables": [tab.tolist() for tab in tables[1:]]}
    fam = CompatibleFamily(tower=t, level_maps=tuple(tables), name=name, recipe=recipe)
    # re-verified even when the constructor guarantees it
    witness = check_compatibility(fam)
    if witness is not None:
        raise CompatibilityError(
            witness.level,
            witness.element,
            f"{name}: transition(T_{witness.level + 1}({witness.element})) = {witness.lhs} "
            f"but T_{witness.level}(transition({witness.element})) = {witness.rhs}",
        )
    log.debug("built %s on %s (depth %d)", name, t.name, t.depth)
    return fam


def from_level_tables(t: Tower, tables: Sequence[Sequence[int]], name: str = "tables") -> CompatibleFamily:
    """One table per level 1..D (a leading level-0 table is accepted too)."""
    return _build_family(t, tables, name)


def _require_modular(t: Tower, what: str) -> Tuple[int, ...]:
    if t.moduli is None:
        raise UnsupportedMapError(f"{what} needs a cyclic tower, got {t.name}")
    return t.moduli


def from_polynomial(t: Tower, coeffs: Sequence[int]) -> CompatibleFamily:
    """T_i(x) = sum c_k x^k mod m_i, coefficients lowest degree first."""
    moduli = _require_modular(t, "a polynomial map")
    if not coeffs:
        raise MapError("a polynomial needs at least one coefficient")
    check_table_capacity(t)
    tables = []
    for m in moduli:
        xs = np.arange(m, dtype=np.int64)
        acc = np.zeros(m, dtype=np.int64)
        for c in reversed(coeffs):
            acc = (acc * xs + int(c) % m) % m
        tables.append(acc)
    terms = " + ".join(f"{c}x^{k}" if k else str(c) for k, c in enumerate(coeffs) if c)
    return _build_family(t, tables, f"poly({terms or '0'})", {"type": "polynomial", "coeffs": [int(c) for c in coeffs]})


def _matrix_shape(matrix: Sequence[Sequence[int]]) -> int:
    k = len(matrix)
    if k == 0 or any(len(row) != k for row in matrix):
        raise MapError(f"matrix must be square and non-empty, got {[len(r) for r in matrix]}")
    return k


def matrix_family(t: Tower, matrix: Sequence[Sequence[int]]) -> CompatibleFamily:
    """Matrix action on the diagonal tower of (Z/m_i)^k, vectors mixed-radix encoded."""
    k = _matrix_shape(matrix)
    if len(t.components) != k or any(c.moduli is None for c in t.components):
        raise UnsupportedMapError(f"a {k}x{k} matrix needs a product of {k} cyclic towers, got {t.name}")
    if len({c.moduli for c in t.components}) != 1:
        raise UnsupportedMapError("matrix maps need identical cyclic components (the diagonal tower)")
    check_table_capacity(t)
    moduli = t.components[0].moduli
    tables = []
    for i, m in enumerate(moduli):
        group = t.levels[i]
        xs = group.elements()
        vecs = np.asarray(group.decode(xs), dtype=np.int64).reshape(k, -1)
        mat = np.asarray([[int(a) % m for a in row] for row in matrix], dtype=np.int64)
        images = (mat @ vecs) % m
        tables.append(np.asarray(group.encode(list(images)), dtype=np.int64).reshape(-1))
    return _build_family(t, tables, f"matrix{[list(map(int, r)) for r in matrix]}",
                         {"type": "matrix", "rows": [[int(a) for a in row] for row in matrix]})


def from_matrix(p: int, matrix: Sequence[Sequence[int]], depth: int) -> CompatibleFamily:
    k = _matrix_shape(matrix)
    return matrix_family(make_product_tower([make_cyclic_tower(p, depth)] * k), matrix)


def translation_family(t: Tower, g: int) -> CompatibleFamily:
    """Left translation x -> g.x, with g given at the top level."""
    check_table_capacity(t)
    tables = []
    for i, group in enumerate(t.levels):
        gi = t.project(int(g), t.depth, i)
        tables.append(np.asarray(group.op(gi, group.elements()), dtype=np.int64))
    return _build_family(t, tables, f"translate({g})", {"type": "translation", "g": int(g)})


def _padded_tables(f: CompatibleFamily, depth: int) -> List[np.ndarray]:
    return list(f.level_maps) + [f.level_maps[-1]] * (depth - f.depth)


def product_map(families: Sequence[CompatibleFamily], tower: Optional[Tower] = None) -> CompatibleFamily:
    fams = list(families)
    if not fams:
        raise MapError("product_map needs at least one family")
    if tower is None:
        tower = make_product_tower([f.tower for f in fams])
    if len(tower.components) != len(fams):
        raise MapError(f"tower has {len(tower.components)} components but {len(fams)} families were given")
    for idx, (comp, f) in enumerate(zip(tower.components, fams)):
        if comp.orders()[: f.depth + 1] != f.tower.orders():
            raise MapError(f"component {idx} of the tower does not match the tower of {f.name}")
    check_table_capacity(tower)
    padded = [_padded_tables(f, tower.depth) for f in fams]
    tables = []
    for k, group in enumerate(tower.levels):
        parts = group.decode(group.elements())
        images = [pad[k][np.asarray(part)] for pad, part in zip(padded, parts)]
        tables.append(np.asarray(group.encode(images), dtype=np.int64))
    return _build_family(tower, tables, " x ".join(f.name for f in fams),
                         {"type": "product", "components": [f.recipe for f in fams]})


def factor_levels(t: Tower, table: Sequence[int]) -> List[int]:
    """Levels k whose projection the top-level self-map factors through (the chain part of F(T))."""
    top = np.asarray(table, dtype=np.int64)
    if top.shape != (t.top.order,):
        raise MapError(f"top-level table needs {t.top.order} entries")
    return [k for k in range(t.depth + 1) if _factor_at(t, top, k)[1] is None]


def _factor_at(t: Tower, top: np.ndarray, k: int) -> Tuple[np.ndarray, Optional[int]]:
    proj = t.projection_table(t.depth, k)
    images = proj[top]
    induced = np.zeros(t.order(k), dtype=np.int64)
    induced[proj] = images
    bad = np.nonzero(induced[proj] != images)[0]
    return induced, (int(bad[0]) if bad.size else None)


def from_top_table(t: Tower, table: Sequence[int], name: str = "top-table") -> CompatibleFamily:
    """Family induced by a top-level self-map; fails at the first level it does not factor through."""
    check_table_capacity(t)
    top = np.asarray(table, dtype=np.int64)
    if top.shape != (t.top.order,) or top.min() < 0 or top.max() >= t.top.order:
        raise MapError(f"top-level table must be a self-map of a group of order {t.top.order}")
    tables = []
    for k in range(t.depth + 1):
        induced, bad = _factor_at(t, top, k)
        if bad is not None:
            raise CompatibilityError(k, bad, f"{name} does not factor through level {k} (element {bad})")
        tables.append(induced)
    return _build_family(t, tables, name)


def random_compatible_family(t: Tower, rng: np.random.Generator, bijective: bool = False) -> CompatibleFamily:
    """Random lifts level by level; bijective mode lifts fibre bijections so every level is a permutation."""
    check_table_capacity(t)
    tables = [np.zeros(1, dtype=np.int64)]
    for k in range(t.depth):
        down = t.transitions[k].table(t.order(k + 1))
        fibers = np.argsort(down, kind="stable").reshape(t.order(k), -1)
        size = fibers.shape[1]
        lower = tables[-1]
        if bijective:
            upper = np.empty(t.order(k + 1), dtype=np.int64)
            for y in range(t.order(k)):
                upper[fibers[y]] = fibers[lower[y]][rng.permutation(size)]
        else:
            upper = fibers[lower[down], rng.integers(0, size, t.order(k + 1))]
        tables.append(np.asarray(upper, dtype=np.int64))
    return _build_family(t, tables, "random-bijective" if bijective else "random")


def identity_family(t: Tower) -> CompatibleFamily:
    check_table_capacity(t)
    return _build_family(t, [g.elements() for g in t.levels], "identity", {"type": "identity"})


def iterate_table(table: np.ndarray, k: int) -> np.ndarray:
    """table composed with itself k times, by repeated squaring."""
    if k < 0:
        raise MapError("iteration count must be non-negative")
    result = np.arange(table.shape[0], dtype=np.int64)
    base = np.asarray(table, dtype=np.int64)
    while k:
        if k & 1:
            result = base[result]
        base = base[base]
        k >>= 1
    return result


class TablesFile(BaseModel):
    tables: List[List[int]]


def load_tables(path: Union[str, Path]) -> List[List[int]]:
    """A bare list of per-level tables, or an object with a `tables` key."""
    with open(path, "r") as f:
        data = json.load(f)
    try:
        return TablesFile.model_validate(data if isinstance(data, dict) else {"tables": data}).tables
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(map(str, err["loc"]))
        raise MapError(f"{path}: expected a list of per-level integer arrays ({where}: {err['msg']})") from e


# --- precision-contracted maps ----------------------------------------------

@dataclass(frozen=True, eq=False)
class PrecisionMap:
    tower: Tower
    contract: Callable[[int], int]                      # output level i -> input level j(i)
    evaluate_fn: Callable[[np.ndarray, int], np.ndarray]  # (x at level j(i), i) -> level i
    name: str = "precision-map"
    recipe: Dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return self.tower.depth

    def required_level(self, i: int) -> int:
        return self.contract(i)

    def contract_chain(self, i: int, iterations: int) -> List[int]:
        """[i, j(i), j(j(i)), ...] of length iterations+1; fails before any evaluation."""
        self.tower._check_level(i)
        chain = [i]
        for _ in range(iterations):
            nxt = self.contract(chain[-1])
            if nxt < chain[-1]:
                raise MapError(f"{self.name}: contract must satisfy j(i) >= i, got j({chain[-1]}) = {nxt}")
            chain.append(nxt)
            if nxt > self.depth:
                raise PrecisionError(nxt, self.depth)
        return chain

    def evaluate(self, x: Element, i: int) -> Element:
        j = self.contract_chain(i, 1)[1]
        self.tower._check_element(x, j)
        out = np.asarray(self.evaluate_fn(np.asarray(x, dtype=np.int64), i), dtype=np.int64)
        return int(out) if out.ndim == 0 else out


def _require_prime_power_tower(p: int, t: Tower, what: str) -> None:
    moduli = _require_modular(t, what)
    if moduli != tuple(p ** k for k in range(t.depth + 1)):
        raise UnsupportedMapError(f"{what} needs the Z_{p} tower, got {t.name}")


def shift_map(p: int, t: Tower) -> PrecisionMap:
    """T(c + p d) = d: drop the lowest base-p digit."""
    _require_prime_power_tower(p, t, "the shift map")
    return PrecisionMap(
        tower=t,
        contract=lambda i: i + 1,
        evaluate_fn=lambda x, i: (x // p) % p ** i,
        name=f"shift({p})",
        recipe={"type": "shift", "p": p},
    )


def binomial_map(p: int, t: Tower) -> PrecisionMap:
    """x -> C(x, p) = x(x-1)...(x-p+1)/p!; one extra input digit pays for the single p in p!."""
    _require_prime_power_tower(p, t, "the binomial map")
    unit = factorial(p) // p  # (p-1)!, a unit mod p

    def evaluate(x: np.ndarray, i: int) -> np.ndarray:
        if i == 0:
            return np.zeros_like(x)
        m = p ** (i + 1)
        if m > 1 << 31:
            x = x.astype(object)  # products of two residues would overflow int64
        num = x * 0 + 1
        for r in range(p):
            num = (num * ((x - r) % m)) % m
        out = ((num // p) * pow(unit, -1, p ** i)) % p ** i
        return np.asarray(out, dtype=np.int64)

    return PrecisionMap(
        tower=t,
        contract=lambda i: i + 1,
        evaluate_fn=evaluate,
        name=f"binom({p})",
        recipe={"type": "binomial", "p": p},
    )


def constant_map(t: Tower, value: int = 0) -> PrecisionMap:
    return PrecisionMap(
        tower=t,
        contract=lambda i: i,
        evaluate_fn=lambda x, i: np.full_like(x, t.project(int(value), t.depth, i)),
        name=f"const({value})",
        recipe={"type": "constant", "value": int(value)},
    )


def family_as_precision_map(f: CompatibleFamily) -> PrecisionMap:
    return PrecisionMap(
        tower=f.tower,
        contract=lambda i: i,
        evaluate_fn=lambda x, i: f.level_maps[i][x],
        name=f.name,
        recipe=f.recipe,
    )


class CoherenceWitness(BaseModel):
    level: int         # coarser output level i
    finer_level: int   # output level i' > i
    element: int       # input at level j(i')


def check_precision_coherence(m: PrecisionMap) -> Optional[CoherenceWitness]:
    """Level-i outputs read off level-i' evaluations agree with direct level-i evaluation."""
    t = m.tower
    for fine in range(t.depth + 1):
        jf = m.contract(fine)
        if jf > t.depth:
            break
        if t.order(jf) > get_settings().limits.exhaustive_order:
            log.warning("coherence of %s checked up to output level %d only", m.name, fine - 1)
            break
        xs = t.levels[jf].elements()
        out_fine = m.evaluate(xs, fine)
        for i in range(fine):
            ji = m.contract(i)
            if ji > jf:
                raise MapError(f"{m.name}: contract is not monotone (j({i}) = {ji} > j({fine}) = {jf})")
            a = np.asarray(t.project(out_fine, fine, i))
            b = np.asarray(m.evaluate(t.project(xs, jf, ji), i))
            bad = np.nonzero(a != b)[0]
            if bad.size:
                return CoherenceWitness(level=i, finer_level=fine, element=int(bad[0]))
    return None


AnyMap = Union[CompatibleFamily, PrecisionMap]


def apply_at_level(
    f: AnyMap, x: int, i: int, iterations: int = 1, source_level: Optional[int] = None
) -> int:
    """The level-i image of T^k(x); x is read at `source_level` (default: the least level that suffices)."""
    if iterations < 0:
        raise MapError("iterations must be non-negative")
    if isinstance(f, CompatibleFamily):
        src = i if source_level is None else source_level
        y = f.tower.project(int(x), src, i)
        return int(iterate_table(f.table(i), iterations)[y])
    chain = f.contract_chain(i, iterations)
    required = chain[-1]
    src = required if source_level is None else source_level
    if src < required:
        raise PrecisionError(required, f.depth, f"input given at level {src}, level {required} required")
    y = f.tower.project(int(x), src, required)
    for level in reversed(chain[:-1]):
        y = f.evaluate(y, level)
    return int(y)
