# tools/tower.py
"""
Finite-quotient towers G_0 <- G_1 <- ... <- G_D.

A tower stands in for a second-countable profinite group through a nested
chain of open normal subgroups: level k is the finite quotient G/N_k, level 0
is always trivial, and Haar measure on each level is the uniform counting
measure. Elements are dense integer indices 0..order-1 everywhere.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod
from pathlib import Path
from typing import Annotated, Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from config.settings import get_settings

log = logging.getLogger(__name__)

Element = Union[int, np.ndarray]


class TowerError(ValueError):
    ...


class CapacityError(RuntimeError):
    ...


class InvalidSubgroupError(ValueError):
    ...


def _out(value, like=None):
    """Return a Python int for scalar results, an int64 array otherwise."""
    if np.ndim(value if like is None else like) == 0:
        return int(value)
    return np.asarray(value, dtype=np.int64)


def check_capacity(order: int, what: str = "level") -> None:
    cap = get_settings().limits.max_order
    if order > cap:
        raise CapacityError(f"{what} order {order} exceeds the capacity bound {cap}")


# --- finite quotients -------------------------------------------------------

class FiniteQuotient:
    """A finite group at one tower level. `op`/`inv` accept ints or int arrays."""

    @property
    def order(self) -> int:
        raise NotImplementedError

    @property
    def identity(self) -> int:
        raise NotImplementedError

    def op(self, x: Element, y: Element) -> Element:
        raise NotImplementedError

    def inv(self, x: Element) -> Element:
        raise NotImplementedError

    def elements(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    @property
    def haar_weight(self) -> Fraction:
        return Fraction(1, self.order)

    def measure(self, subset: Iterable[int]) -> Fraction:
        return Fraction(len(set(int(s) for s in subset)), self.order)


@dataclass(frozen=True)
class Cyclic(FiniteQuotient):
    n: int

    @property
    def order(self) -> int:
        return self.n

    @property
    def identity(self) -> int:
        return 0

    def op(self, x, y):
        return _out((np.asarray(x, dtype=np.int64) + np.asarray(y, dtype=np.int64)) % self.n)

    def inv(self, x):
        return _out((-np.asarray(x, dtype=np.int64)) % self.n)


@dataclass(frozen=True)
class DirectProduct(FiniteQuotient):
    components: Tuple[FiniteQuotient, ...]

    def __post_init__(self):
        if not self.components:
            raise TowerError("a direct product needs at least one component")

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(c.order for c in self.components)

    @property
    def order(self) -> int:
        return prod(self.shape)

    @property
    def identity(self) -> int:
        return self.encode([c.identity for c in self.components])

    # mixed radix, first component most significant
    def decode(self, x: Element) -> Tuple[Element, ...]:
        parts = np.unravel_index(np.asarray(x, dtype=np.int64), self.shape)
        return tuple(_out(p) for p in parts)

    def encode(self, parts: Sequence[Element]) -> Element:
        arrays = np.broadcast_arrays(*[np.asarray(p, dtype=np.int64) for p in parts])
        return _out(np.ravel_multi_index(arrays, self.shape))

    def op(self, x, y):
        xs, ys = self.decode(x), self.decode(y)
        return self.encode([c.op(a, b) for c, a, b in zip(self.components, xs, ys)])

    def inv(self, x):
        return self.encode([c.inv(a) for c, a in zip(self.components, self.decode(x))])


@dataclass(frozen=True, eq=False)
class TableGroup(FiniteQuotient):
    """Group given by its Cayley table; identity/inverses are looked up, not assumed."""

    table: np.ndarray
    _identity: int = field(init=False, default=-1)
    _inverses: np.ndarray = field(init=False, default=None)

    def __post_init__(self):
        try:
            table = np.array(self.table, dtype=np.int64)
        except (TypeError, ValueError) as e:
            raise TowerError(f"operation table is not a rectangular integer array: {e}") from e
        n = table.shape[0] if table.ndim == 2 else 0
        if table.ndim != 2 or table.shape != (n, n) or n == 0:
            raise TowerError(f"operation table must be a non-empty square array, got shape {table.shape}")
        if table.min() < 0 or table.max() >= n:
            raise TowerError("operation table has entries outside 0..n-1")
        object.__setattr__(self, "table", table)
        xs = np.arange(n)
        ident = -1
        for e in range(n):
            if np.array_equal(table[e], xs) and np.array_equal(table[:, e], xs):
                ident = e
                break
        inverses = np.full(n, -1, dtype=np.int64)
        if ident >= 0:
            rows, cols = np.nonzero((table == ident) & (table.T == ident))
            inverses[rows] = cols
        table.flags.writeable = False
        inverses.flags.writeable = False
        object.__setattr__(self, "_identity", ident)
        object.__setattr__(self, "_inverses", inverses)

    @property
    def order(self) -> int:
        return int(self.table.shape[0])

    @property
    def identity(self) -> int:
        return self._identity

    def op(self, x, y):
        return _out(self.table[np.asarray(x), np.asarray(y)])

    def inv(self, x):
        return _out(self._inverses[np.asarray(x)])

    def axiom_violations(self, triple_order: int) -> List[str]:
        out = []
        if self._identity < 0:
            return ["no two-sided identity"]
        missing = np.nonzero(self._inverses < 0)[0]
        if missing.size:
            out.append(f"element {int(missing[0])} has no two-sided inverse")
        if self.order <= triple_order:
            t = self.table
            # (xy)z vs x(yz) for all triples
            left = t[t[:, :, None], np.arange(self.order)[None, None, :]]
            right = t[np.arange(self.order)[:, None, None], t[None, :, :]]
            bad = np.argwhere(left != right)
            if bad.size:
                x, y, z = (int(v) for v in bad[0])
                out.append(f"not associative at ({x}, {y}, {z})")
        return out


# --- transitions and towers -------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransitionMap:
    """Surjective homomorphism G_j -> G_i (i < j), vectorised over element arrays."""

    source_level: int
    target_level: int
    image: Callable[[Element], Element]

    def __call__(self, x: Element) -> Element:
        return _out(self.image(x), x)

    def table(self, source_order: int) -> np.ndarray:
        return np.asarray(self.image(np.arange(source_order, dtype=np.int64)), dtype=np.int64)


def reduction(source_level: int, target_level: int, modulus: int) -> TransitionMap:
    return TransitionMap(source_level, target_level, lambda x: np.asarray(x, dtype=np.int64) % modulus)


def lookup(source_level: int, target_level: int, table: Sequence[int]) -> TransitionMap:
    arr = np.array(table, dtype=np.int64)
    arr.flags.writeable = False
    return TransitionMap(source_level, target_level, lambda x: arr[np.asarray(x, dtype=np.int64)])


def identity_transition(source_level: int, target_level: int) -> TransitionMap:
    return TransitionMap(source_level, target_level, lambda x: np.asarray(x, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class Tower:
    levels: Tuple[FiniteQuotient, ...]
    transitions: Tuple[TransitionMap, ...]  # transitions[k]: level k+1 -> level k
    name: str = "tower"
    recipe: Dict = field(default_factory=dict)
    moduli: Optional[Tuple[int, ...]] = None  # set for chains of cyclic groups Z/m_k
    components: Tuple["Tower", ...] = ()
    direct: Optional[Callable[[Element, int, int], Element]] = None  # closed-form j -> i

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def base(self) -> Optional[int]:
        return self.recipe.get("p") if self.recipe.get("kind") == "cyclic" else None

    @property
    def top(self) -> FiniteQuotient:
        return self.levels[-1]

    def order(self, k: int) -> int:
        return self.levels[k].order

    def orders(self) -> List[int]:
        return [g.order for g in self.levels]

    def level(self, k: int) -> FiniteQuotient:
        self._check_level(k)
        return self.levels[k]

    def _check_level(self, k: int) -> None:
        if not 0 <= k <= self.depth:
            raise TowerError(f"level {k} is outside 0..{self.depth}")

    def _check_element(self, x: Element, j: int) -> None:
        arr = np.asarray(x)
        if arr.size and (arr.min() < 0 or arr.max() >= self.order(j)):
            raise TowerError(f"element {x} is not an index of level {j} (order {self.order(j)})")

    def stepwise(self, x: Element, j: int, i: int) -> Element:
        y = np.asarray(x, dtype=np.int64)
        for k in range(j - 1, i - 1, -1):
            y = self.transitions[k].image(y)
        return _out(y, x)

    def project(self, x: Element, j: int, i: int) -> Element:
        self._check_level(j)
        self._check_level(i)
        if i > j:
            raise TowerError(f"invalid level order: cannot project level {j} to finer level {i}")
        self._check_element(x, j)
        if i == j:
            return _out(x, x)
        if self.direct is not None:
            return _out(self.direct(x, j, i), x)
        return self.stepwise(x, j, i)

    def projection_table(self, j: int, i: int) -> np.ndarray:
        return np.asarray(self.project(self.levels[j].elements(), j, i), dtype=np.int64)

    def with_depth(self, depth: int) -> "Tower":
        """Truncate, or pad by repeating the top level with identity transitions."""
        if depth < 0:
            raise TowerError("depth must be non-negative")
        if depth <= self.depth:
            levels = self.levels[: depth + 1]
            transitions = self.transitions[:depth]
            moduli = self.moduli[: depth + 1] if self.moduli else None
        else:
            extra = depth - self.depth
            levels = self.levels + (self.top,) * extra
            transitions = self.transitions + tuple(
                identity_transition(k + 1, k) for k in range(self.depth, depth)
            )
            moduli = self.moduli + (self.moduli[-1],) * extra if self.moduli else None
        direct = None
        if moduli is not None:
            direct = _modular_direct(moduli)
        elif self.direct is not None and depth <= self.depth:
            direct = self.direct
        recipe = dict(self.recipe)
        if depth > self.depth:
            recipe["padded_to"] = depth
        elif "depth" in recipe:
            recipe["depth"] = depth
        elif recipe.get("kind") == "modular" and moduli is not None:
            recipe["moduli"] = list(moduli[1:])
        return Tower(
            levels=levels,
            transitions=transitions,
            name=self.name,
            recipe=recipe,
            moduli=moduli,
            components=self.components,
            direct=direct,
        )


def project(t: Tower, x: Element, j: int, i: int) -> Element:
    return t.project(x, j, i)


# --- constructors -----------------------------------------------------------

def _modular_direct(moduli: Tuple[int, ...]):
    return lambda x, j, i: np.asarray(x, dtype=np.int64) % moduli[i]


def make_modular_tower(moduli: Sequence[int], name: str = "", recipe: Optional[Dict] = None) -> Tower:
    """Chain Z/m_1 <- Z/m_2 <- ... with m_k | m_{k+1}; level 0 is Z/1."""
    mods = [int(m) for m in moduli]
    if not mods:
        raise TowerError("a modular tower needs at least one level")
    if any(m < 1 for m in mods):
        raise TowerError(f"moduli must be positive, got {mods}")
    chain = (1,) + tuple(mods)
    for a, b in zip(chain, chain[1:]):
        if b % a:
            raise TowerError(f"modulus {a} does not divide {b}")
    check_capacity(chain[-1])
    levels = tuple(Cyclic(m) for m in chain)
    transitions = tuple(reduction(k + 1, k, chain[k]) for k in range(len(chain) - 1))
    return Tower(
        levels=levels,
        transitions=transitions,
        name=name or "Z/(" + ",".join(map(str, mods)) + ")",
        recipe=recipe or {"kind": "modular", "moduli": mods},
        moduli=chain,
        direct=_modular_direct(chain),
    )


def _check_chain_capacity(step: Callable[[int], int], depth: int) -> None:
    """Level k has order step(1) * ... * step(k); stop at the first level over the bound."""
    order = 1
    for k in range(1, depth + 1):
        order *= step(k)
        check_capacity(order, f"level {k}")


def make_cyclic_tower(p: int, depth: int) -> Tower:
    if p < 2:
        raise TowerError(f"base must be at least 2, got {p}")
    if depth < 1:
        raise TowerError(f"depth must be at least 1, got {depth}")
    _check_chain_capacity(lambda k: p, depth)
    return make_modular_tower(
        [p ** k for k in range(1, depth + 1)],
        name=f"Z_{p}",
        recipe={"kind": "cyclic", "p": p, "depth": depth},
    )


def make_factorial_tower(depth: int) -> Tower:
    """Z/2 <- Z/6 <- Z/24 <- ...: cofinal under divisibility, so a base for Zhat."""
    if depth < 1:
        raise TowerError(f"depth must be at least 1, got {depth}")
    _check_chain_capacity(lambda k: k + 1, depth)
    return make_modular_tower(
        [factorial(k + 1) for k in range(1, depth + 1)],
        name="Zhat",
        recipe={"kind": "factorial", "depth": depth},
    )


def pad_tower(t: Tower, depth: int) -> Tower:
    if depth < t.depth:
        raise TowerError(f"cannot pad a depth-{t.depth} tower down to {depth}")
    return t.with_depth(depth)


def make_product_tower(components: Sequence[Tower]) -> Tower:
    comps = list(components)
    if not comps:
        raise TowerError("a product tower needs at least one component")
    depth = max(c.depth for c in comps)
    padded = tuple(pad_tower(c, depth) for c in comps)
    levels = []
    for k in range(depth + 1):
        group = DirectProduct(tuple(c.levels[k] for c in padded))
        check_capacity(group.order, f"product level {k}")
        levels.append(group)

    def _componentwise(k: int):
        src, dst = levels[k + 1], levels[k]

        def image(x):
            parts = src.decode(x)
            return dst.encode([c.transitions[k].image(a) for c, a in zip(padded, parts)])

        return TransitionMap(k + 1, k, image)

    def direct(x, j, i):
        parts = levels[j].decode(x)
        return levels[i].encode([c.project(a, j, i) for c, a in zip(padded, parts)])

    return Tower(
        levels=tuple(levels),
        transitions=tuple(_componentwise(k) for k in range(depth)),
        name=" x ".join(c.name for c in comps),
        recipe={"kind": "product", "components": [c.recipe for c in comps]},
        components=padded,
        direct=direct,
    )


def make_table_tower(
    tables: Sequence[Sequence[Sequence[int]]],
    transitions: Sequence[Sequence[int]],
    validate: bool = True,
) -> Tower:
    """
    Levels 1..D from Cayley tables; `transitions[k]` maps level k+2 onto level k+1.
    Level 0 and the map onto it are implicit.
    """
    if not tables:
        raise TowerError("a table tower needs at least one level")
    if len(transitions) != len(tables) - 1:
        raise TowerError(f"expected {len(tables) - 1} transition tables for {len(tables)} levels, got {len(transitions)}")
    groups = [TableGroup(np.asarray(t)) for t in tables]
    for g in groups:
        check_capacity(g.order)
    levels = (Cyclic(1),) + tuple(groups)
    maps = [TransitionMap(1, 0, lambda x: np.zeros_like(np.asarray(x, dtype=np.int64)))]
    for k, arr in enumerate(transitions, start=1):
        arr = np.asarray(arr, dtype=np.int64)
        if arr.shape != (levels[k + 1].order,):
            raise TowerError(f"transition {k + 1}->{k} needs {levels[k + 1].order} entries, got {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= levels[k].order):
            raise TowerError(f"transition {k + 1}->{k} has images outside level {k}")
        maps.append(lookup(k + 1, k, arr))
    t = Tower(
        levels=levels,
        transitions=tuple(maps),
        name=f"table[{len(tables)}]",
        recipe={
            "kind": "table",
            "tables": [np.asarray(t).tolist() for t in tables],
            "transitions": [np.asarray(a).tolist() for a in transitions],
        },
    )
    if validate:
        report = verify_tower(t)
        if not report.clean:
            raise TowerError("invalid tower: " + "; ".join(v.message for v in report.violations))
    return t


# --- tower files ------------------------------------------------------------

class CyclicTowerFile(BaseModel):
    kind: Literal["cyclic"]
    p: int
    depth: int


class FactorialTowerFile(BaseModel):
    kind: Literal["factorial"]
    depth: int


class ModularTowerFile(BaseModel):
    kind: Literal["modular"]
    moduli: List[int]


class ProductTowerFile(BaseModel):
    kind: Literal["product"]
    components: List["TowerFile"]


class TableTowerFile(BaseModel):
    kind: Literal["table"]
    tables: List[List[List[int]]]
    transitions: List[List[int]] = []


TowerFile = Annotated[
    Union[CyclicTowerFile, FactorialTowerFile, ModularTowerFile, ProductTowerFile, TableTowerFile],
    Field(discriminator="kind"),
]

ProductTowerFile.model_rebuild()
_TOWER_FILE = TypeAdapter(TowerFile)


def _with_kind(data):
    """`kind` may be left out of table and product files."""
    if isinstance(data, dict) and "kind" not in data:
        if "components" in data:
            return {**data, "kind": "product", "components": [_with_kind(c) for c in data["components"]]}
        if "tables" in data:
            return {**data, "kind": "table"}
    if isinstance(data, dict) and data.get("kind") == "product" and isinstance(data.get("components"), list):
        return {**data, "components": [_with_kind(c) for c in data["components"]]}
    return data


def _build_from_file(spec: TowerFile) -> Tower:
    if isinstance(spec, CyclicTowerFile):
        return make_cyclic_tower(spec.p, spec.depth)
    if isinstance(spec, FactorialTowerFile):
        return make_factorial_tower(spec.depth)
    if isinstance(spec, ModularTowerFile):
        return make_modular_tower(spec.moduli)
    if isinstance(spec, ProductTowerFile):
        return make_product_tower([_build_from_file(c) for c in spec.components])
    return make_table_tower(spec.tables, spec.transitions)


def tower_from_dict(data: Dict) -> Tower:
    if not isinstance(data, dict):
        raise TowerError(f"a tower file holds a JSON object, got {type(data).__name__}")
    try:
        spec = _TOWER_FILE.validate_python(_with_kind(data))
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(map(str, err["loc"])) or "tower"
        raise TowerError(f"invalid tower file at {where}: {err['msg']}") from e
    return _build_from_file(spec)


def load_tower(path: Union[str, Path]) -> Tower:
    with open(path, "r") as f:
        return tower_from_dict(json.load(f))


def tower_to_dict(t: Tower) -> Dict:
    return dict(t.recipe)


# --- validation -------------------------------------------------------------

class TowerViolation(BaseModel):
    kind: str  # axiom | homomorphism | surjectivity | fiber | composition | trivial_base
    source: Optional[int] = None
    target: Optional[int] = None
    witness: Optional[List[int]] = None
    message: str


class TowerReport(BaseModel):
    depth: int
    orders: List[int]
    violations: List[TowerViolation] = []
    skipped: List[str] = []

    @property
    def clean(self) -> bool:
        return not self.violations


def first_homomorphism_failure(src: FiniteQuotient, dst: FiniteQuotient, img: np.ndarray) -> Optional[Tuple[int, int]]:
    xs = src.elements()
    n = src.order
    if n * n <= 1 << 22:
        lhs = img[np.asarray(src.op(xs[:, None], xs[None, :]))]
        rhs = np.asarray(dst.op(img[:, None], img[None, :]))
        bad = np.argwhere(lhs != rhs)
        return (int(bad[0][0]), int(bad[0][1])) if bad.size else None
    for x in range(n):
        lhs = img[np.asarray(src.op(x, xs))]
        rhs = np.asarray(dst.op(int(img[x]), img))
        bad = np.nonzero(lhs != rhs)[0]
        if bad.size:
            return x, int(bad[0])
    return None


def verify_tower(t: Tower) -> TowerReport:
    limits = get_settings().limits
    report = TowerReport(depth=t.depth, orders=t.orders())
    add = report.violations.append

    if t.order(0) != 1:
        add(TowerViolation(kind="trivial_base", source=0, message=f"level 0 has order {t.order(0)}, expected 1"))

    for k, g in enumerate(t.levels):
        for group in (g.components if isinstance(g, DirectProduct) else (g,)):
            if isinstance(group, TableGroup):
                for msg in group.axiom_violations(limits.triple_order):
                    add(TowerViolation(kind="axiom", source=k, message=f"level {k}: {msg}"))
                if group.order > limits.triple_order:
                    report.skipped.append(f"associativity at level {k} (order {group.order})")
    if any(v.kind == "axiom" for v in report.violations):
        return report

    for k, tr in enumerate(t.transitions):
        j, i = k + 1, k
        src, dst = t.levels[j], t.levels[i]
        img = tr.table(src.order)
        if img.size and (img.min() < 0 or img.max() >= dst.order):
            add(TowerViolation(kind="homomorphism", source=j, target=i, message=f"transition ({j}->{i}) leaves level {i}"))
            continue
        if src.order <= limits.exhaustive_order:
            bad = first_homomorphism_failure(src, dst, img)
            if bad is not None:
                add(TowerViolation(
                    kind="homomorphism", source=j, target=i, witness=list(bad),
                    message=f"transition ({j}->{i}) is not a homomorphism at (x={bad[0]}, y={bad[1]})",
                ))
        else:
            report.skipped.append(f"homomorphism check ({j}->{i}), order {src.order}")
        counts = np.bincount(img, minlength=dst.order)
        missing = np.nonzero(counts == 0)[0]
        if missing.size:
            add(TowerViolation(
                kind="surjectivity", source=j, target=i, witness=[int(missing[0])],
                message=f"transition ({j}->{i}) misses element {int(missing[0])}",
            ))
        elif src.order % dst.order or np.any(counts != src.order // dst.order):
            y = int(np.nonzero(counts != counts[0])[0][0]) if np.any(counts != counts[0]) else 0
            add(TowerViolation(
                kind="fiber", source=j, target=i, witness=[y],
                message=f"transition ({j}->{i}) has unequal fibers (element {y} has {int(counts[y])} preimages)",
            ))

    if t.direct is not None and not report.violations:
        for j in range(1, t.depth + 1):
            if t.order(j) > limits.exhaustive_order:
                report.skipped.append(f"composition consistency from level {j}")
                continue
            xs = t.levels[j].elements()
            for i in range(j):
                composed = np.asarray(t.stepwise(xs, j, i))
                closed = np.asarray(t.direct(xs, j, i))
                bad = np.nonzero(composed != closed)[0]
                if bad.size:
                    x = int(bad[0])
                    add(TowerViolation(
                        kind="composition", source=j, target=i, witness=[x],
                        message=f"projection ({j}->{i}) disagrees with composed transitions at x={x}",
                    ))
    for msg in report.skipped:
        log.warning("skipped %s", msg)
    return report


# --- subgroups --------------------------------------------------------------

@dataclass(frozen=True)
class Subgroup:
    level: int
    elements: Tuple[int, ...]  # sorted
    normal: bool

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return int(x) in set(self.elements)

    def as_set(self) -> frozenset:
        return frozenset(self.elements)

    def mask(self, order: int) -> np.ndarray:
        m = np.zeros(order, dtype=bool)
        m[list(self.elements)] = True
        return m

    def index(self, group: FiniteQuotient) -> int:
        return group.order // self.order


def is_normal(group: FiniteQuotient, elements: Iterable[int]) -> bool:
    h = np.asarray(sorted(set(int(e) for e in elements)), dtype=np.int64)
    g = group.elements()[:, None]
    conj = np.asarray(group.op(group.op(g, h[None, :]), group.inv(g)))
    return bool(np.isin(conj, h).all())


def make_subgroup(group: FiniteQuotient, elements: Iterable[int], level: int = 0) -> Subgroup:
    elems = sorted(set(int(e) for e in elements))
    if not elems or elems[0] < 0 or elems[-1] >= group.order:
        raise InvalidSubgroupError(f"subgroup elements must be indices of a group of order {group.order}")
    h = np.asarray(elems, dtype=np.int64)
    if group.identity not in elems:
        raise InvalidSubgroupError("subgroup does not contain the identity")
    if not np.isin(np.asarray(group.op(h[:, None], h[None, :])), h).all():
        raise InvalidSubgroupError(f"{elems} is not closed under the group operation")
    if not np.isin(np.asarray(group.inv(h)), h).all():
        raise InvalidSubgroupError(f"{elems} is not closed under inverses")
    return Subgroup(level=level, elements=tuple(elems), normal=is_normal(group, elems))


def generate_subgroup(group: FiniteQuotient, generators: Iterable[int], level: int = 0) -> Subgroup:
    gens = sorted(set(int(g) for g in generators))
    seen = {group.identity}
    frontier = [group.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = int(group.op(x, g))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return Subgroup(level=level, elements=tuple(sorted(seen)), normal=is_normal(group, seen))


def enumerate_subgroups(group: FiniteQuotient, level: int = 0) -> List[Subgroup]:
    """All subgroups, as joins of cyclic subgroups until nothing new appears."""
    cap = get_settings().limits.subgroup_order
    if group.order > cap:
        raise CapacityError(f"subgroup enumeration is capped at order {cap}, got {group.order}")
    cyclic = {generate_subgroup(group, [g], level).as_set() for g in range(group.order)}
    found = set(cyclic)
    queue = list(found)
    while queue:
        h = queue.pop()
        for c in cyclic:
            if c <= h:
                continue
            joined = generate_subgroup(group, h | c, level).as_set()
            if joined not in found:
                found.add(joined)
                queue.append(joined)
    out = [Subgroup(level, tuple(sorted(s)), is_normal(group, s)) for s in found]
    return sorted(out, key=lambda s: (s.order, s.elements))


def kernel(t: Tower, level: int, k: int) -> Subgroup:
    """Kernel of the projection level -> k: the base subgroup N_k seen inside G_level."""
    xs = t.level(level).elements()
    ident = t.level(k).identity
    elems = xs[np.asarray(t.project(xs, level, k)) == ident]
    return Subgroup(level=level, elements=tuple(int(e) for e in elems), normal=True)
