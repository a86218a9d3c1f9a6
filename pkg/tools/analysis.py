# tools/analysis.py
"""
Level-wise decision procedures for quotient-preserving maps.

On a finite level with uniform measure, measure preservation is bijectivity
and ergodicity is minimality, i.e. a single full cycle. Every verdict here is
relative to the levels of the supplied tower and says which levels it covers.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import get_settings
from tools.maps import (
    AnyMap,
    CompatibleFamily,
    PrecisionError,
    PrecisionMap,
    check_level_capacity,
    iterate_table,
)
from tools.tower import Tower

log = logging.getLogger(__name__)

__all__ = [
    "Verdict", "CycleStructure", "cycle_structure", "is_measure_preserving", "is_ergodic",
    "equivalence_report", "total_ergodicity_obstruction", "orbit", "orbit_matrix",
    "equidistribution_stats", "pushforward_uniform", "iterate_table", "orbit_covers",
    "analysis_report", "precision_report",
]


def ratio(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


class Verdict(BaseModel):
    holds: bool
    level: Optional[int] = None
    witness: Optional[List[int]] = None
    cycle_type: Optional[List[int]] = None
    levels_checked: List[int] = []  # [first, last]
    note: str = ""

    def __bool__(self) -> bool:
        return self.holds


class CycleStructure(BaseModel):
    level: int
    order: int
    bijective: bool
    cycle_type: Optional[List[int]] = None  # ascending
    collision: Optional[List[int]] = None   # x < y with T x == T y

    @property
    def minimal(self) -> bool:
        return self.cycle_type == [self.order]


def first_collision(table: np.ndarray) -> Optional[List[int]]:
    """Smallest y with an earlier x sharing its image, as (x, y)."""
    n = table.shape[0]
    first = np.full(n, -1, dtype=np.int64)
    first[table[::-1]] = np.arange(n - 1, -1, -1)
    dup = np.nonzero(first[table] != np.arange(n))[0]
    if not dup.size:
        return None
    y = int(dup[0])
    return [int(first[table[y]]), y]


def cycle_lengths(table: np.ndarray) -> List[int]:
    n = table.shape[0]
    seen = np.zeros(n, dtype=bool)
    lengths = []
    for start in range(n):
        if seen[start]:
            continue
        length, x = 0, start
        while not seen[x]:
            seen[x] = True
            x = int(table[x])
            length += 1
        lengths.append(length)
    return sorted(lengths)


def cycle_structure(f: CompatibleFamily, i: int) -> CycleStructure:
    table = f.table(i)
    collision = first_collision(table)
    if collision is not None:
        return CycleStructure(level=i, order=table.shape[0], bijective=False, collision=collision)
    return CycleStructure(level=i, order=table.shape[0], bijective=True, cycle_type=cycle_lengths(table))


def _checked(f: CompatibleFamily) -> List[int]:
    return [0, f.depth]


def is_measure_preserving(f: CompatibleFamily) -> Verdict:
    for i in range(f.depth + 1):
        collision = first_collision(f.table(i))
        if collision is not None:
            return Verdict(holds=False, level=i, witness=collision, levels_checked=_checked(f))
    return Verdict(holds=True, levels_checked=_checked(f))


def is_ergodic(f: CompatibleFamily) -> Verdict:
    for i in range(f.depth + 1):
        cs = cycle_structure(f, i)
        if not cs.minimal:
            return Verdict(holds=False, level=i, witness=cs.collision, cycle_type=cs.cycle_type,
                           levels_checked=_checked(f))
    return Verdict(holds=True, levels_checked=_checked(f))


def orbit_covers(table: Sequence[int], start: int = 0) -> bool:
    """Brute force: the orbit of `start` visits every point and closes up, so T is one full cycle."""
    tab = np.asarray(table, dtype=np.int64)
    n = tab.shape[0]
    seen = np.zeros(n, dtype=bool)
    x = int(start)
    for _ in range(n):
        if seen[x]:
            return False
        seen[x] = True
        x = int(tab[x])
    return x == start and bool(seen.all())


# --- the equivalence chain --------------------------------------------------

class LevelEquivalence(BaseModel):
    level: int
    order: int
    bijective: bool
    surjective: bool  # doubles as "nonsingular": on a finite uniform space they coincide
    injective: bool
    uniform_pushforward: bool
    preimage_counts: List[int]


class EquivalenceReport(BaseModel):
    levels: List[LevelEquivalence]
    consistent: bool
    monotone: bool
    disagreements: List[str] = []

    @property
    def measure_preserving(self) -> bool:
        return all(lv.bijective for lv in self.levels)


def _pushforward_weights(images: np.ndarray, n: int, total: int) -> Dict[int, Fraction]:
    counts = np.bincount(images, minlength=n)
    return {y: Fraction(int(c), total) for y, c in enumerate(counts)}


def equivalence_report(f: CompatibleFamily) -> EquivalenceReport:
    levels = []
    disagreements = []
    for i in range(f.depth + 1):
        table = f.table(i)
        n = table.shape[0]
        xs = np.arange(n)
        bijective = bool(np.array_equal(np.sort(table), xs))
        injective = bool(np.unique(table).size == n)
        counts = np.bincount(table, minlength=n)
        surjective = bool((counts > 0).all())
        weights = _pushforward_weights(table, n, n)
        uniform = all(w == Fraction(1, n) for w in weights.values())
        flags = {"bijective": bijective, "surjective": surjective, "injective": injective, "uniform": uniform}
        if len(set(flags.values())) > 1:
            msg = f"level {i}: criteria disagree {flags}"
            log.error(msg)
            disagreements.append(msg)
        levels.append(LevelEquivalence(
            level=i, order=n, bijective=bijective, surjective=surjective, injective=injective,
            uniform_pushforward=uniform, preimage_counts=counts.tolist(),
        ))
    monotone = all(levels[i].bijective or not levels[i + 1].bijective for i in range(len(levels) - 1))
    if not monotone:
        log.error("%s: a bijective level sits above a non-bijective one", f.name)
    return EquivalenceReport(levels=levels, consistent=not disagreements, monotone=monotone,
                             disagreements=disagreements)


class Obstruction(BaseModel):
    period: Optional[int] = None
    level: Optional[int] = None
    certified: bool = False  # T_level^period is the identity
    note: str = ""


def total_ergodicity_obstruction(f: CompatibleFamily) -> Obstruction:
    for i in range(1, f.depth + 1):
        n = f.tower.order(i)
        if n == 1 or not cycle_structure(f, i).minimal:
            continue
        certified = bool(np.array_equal(iterate_table(f.table(i), n), np.arange(n)))
        return Obstruction(period=n, level=i, certified=certified,
                           note=f"T^{n} factors through the identity at level {i}, so T^{n} is not ergodic")
    return Obstruction(note="no nontrivial minimal level")


# --- orbits and statistics --------------------------------------------------

def orbit_matrix(
    m: AnyMap, xs: Sequence[int], i: int, length: int, source_level: Optional[int] = None
) -> np.ndarray:
    """Row r holds [pi_i(x_r), pi_i(T x_r), ...]; the x_r are read at `source_level`."""
    xs = np.asarray(xs, dtype=np.int64).reshape(-1)
    out = np.zeros((xs.size, max(length, 0)), dtype=np.int64)
    if isinstance(m, CompatibleFamily):
        src = i if source_level is None else source_level
        y = np.asarray(m.tower.project(xs, src, i), dtype=np.int64)
        table = m.table(i)
        for k in range(length):
            out[:, k] = y
            y = table[y]
        return out
    if length <= 0:
        m.tower._check_level(i)
        return out
    chain = m.contract_chain(i, length - 1)
    required = chain[-1]
    src = required if source_level is None else source_level
    if src < required:
        raise PrecisionError(required, m.depth, f"{m.name}: input at level {src}, level {required} required")
    # z holds T^k x at level chain[length-1-k]
    z = np.asarray(m.tower.project(xs, src, required), dtype=np.int64)
    for k in range(length):
        level = chain[length - 1 - k]
        out[:, k] = m.tower.project(z, level, i)
        if k < length - 1:
            z = np.asarray(m.evaluate(z, chain[length - 2 - k]), dtype=np.int64)
    return out


def orbit(m: AnyMap, x: int, i: int, length: int, source_level: Optional[int] = None) -> List[int]:
    return orbit_matrix(m, [x], i, length, source_level)[0].tolist()


@dataclass(frozen=True)
class Equidistribution:
    level: int
    length: int
    frequencies: Dict[int, Fraction]
    max_deviation: Fraction


def equidistribution_stats(orb: Sequence[int], i: int, t: Tower) -> Equidistribution:
    n = t.level(i).order
    visits = Counter(int(s) for s in orb)
    total = len(orb)
    freqs = {y: Fraction(visits.get(y, 0), total) if total else Fraction(0) for y in range(n)}
    deviation = max(abs(w - Fraction(1, n)) for w in freqs.values())
    return Equidistribution(level=i, length=total, frequencies=freqs, max_deviation=deviation)


def pushforward_uniform(m: AnyMap, i: int) -> Dict[int, Fraction]:
    """Image of the uniform measure on the input level under the level-i output map."""
    if isinstance(m, CompatibleFamily):
        table = m.table(i)
        return _pushforward_weights(table, table.shape[0], table.shape[0])
    j = m.contract_chain(i, 1)[1]
    check_level_capacity(m.tower, j, f"pushforward of {m.name} at level {i}")
    xs = m.tower.levels[j].elements()
    images = np.asarray(m.evaluate(xs, i), dtype=np.int64)
    return _pushforward_weights(images, m.tower.order(i), xs.size)


# --- reports ----------------------------------------------------------------

class LevelSummary(BaseModel):
    level: int
    order: int
    bijective: bool
    cycle_type: Optional[List[int]] = None
    witness: Optional[List[int]] = None
    pushforward: Optional[Dict[str, str]] = None


class AnalysisReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    map: str
    tower: str
    depth: int
    levels_checked: List[int]
    measure_preserving: bool
    ergodic: Optional[bool] = None
    totally_ergodic_possible: Optional[bool] = None
    obstruction_period: Optional[int] = None
    witness_level: Optional[int] = None
    witness: Optional[List[int]] = None
    witness_cycle_type: Optional[List[int]] = None
    equivalence_consistent: bool = True
    levels: List[LevelSummary] = []
    product: Optional[Dict[str, Any]] = None
    isometry: Optional[Dict[str, Any]] = None
    cylinders: Optional[Dict[str, str]] = None
    notes: List[str] = []


def analysis_report(f: CompatibleFamily) -> AnalysisReport:
    eq = equivalence_report(f)
    mp = is_measure_preserving(f)
    erg = is_ergodic(f)
    obstruction = total_ergodicity_obstruction(f)
    levels = []
    for lv in eq.levels:
        cs = cycle_structure(f, lv.level)
        levels.append(LevelSummary(level=lv.level, order=lv.order, bijective=lv.bijective,
                                   cycle_type=cs.cycle_type, witness=cs.collision))
    failing = mp if not mp.holds else erg
    notes = [f"verdicts cover levels 0..{f.depth} of {f.tower.name}, i.e. the represented quotients only"]
    if obstruction.period is None:
        notes.append(obstruction.note)
    return AnalysisReport(
        map=f.name,
        tower=f.tower.name,
        depth=f.depth,
        levels_checked=mp.levels_checked,
        measure_preserving=mp.holds,
        ergodic=erg.holds,
        # a minimal nontrivial level always yields a non-ergodic power
        totally_ergodic_possible=erg.holds and obstruction.period is None,
        obstruction_period=obstruction.period,
        witness_level=failing.level,
        witness=failing.witness,
        witness_cycle_type=failing.cycle_type,
        equivalence_consistent=eq.consistent and eq.monotone,
        levels=levels,
        notes=notes,
    )


def precision_report(m: PrecisionMap) -> AnalysisReport:
    """Measure preservation of a precision map at every output level its contract can reach."""
    reachable = [i for i in range(1, m.depth + 1) if m.contract(i) <= m.depth]
    if not reachable:
        raise PrecisionError(m.contract(1), m.depth, f"{m.name}: depth {m.depth} leaves no level to analyse")
    cap = get_settings().limits.table_order
    checked = []
    for i in reachable:
        if m.tower.order(m.contract(i)) > cap:
            break
        checked.append(i)
    if not checked:
        check_level_capacity(m.tower, m.contract(reachable[0]), m.name)
    notes = [
        f"{m.name} does not factor through the projections; level i reads input at level j(i)",
        "ergodicity is decided for compatible families only",
    ]
    skipped = reachable[len(checked):]
    if skipped:
        j = m.contract(skipped[0])
        notes.append(f"output levels {skipped[0]}..{skipped[-1]} skipped: input level {j} "
                     f"has order {m.tower.order(j)}, above table_order {cap}")
        log.warning("%s", notes[-1])
    levels = []
    witness_level = None
    for i in checked:
        weights = pushforward_uniform(m, i)
        n = m.tower.order(i)
        uniform = all(w == Fraction(1, n) for w in weights.values())
        if not uniform and witness_level is None:
            witness_level = i
        levels.append(LevelSummary(level=i, order=n, bijective=uniform,
                                   pushforward={str(y): ratio(w) for y, w in weights.items()}))
    return AnalysisReport(
        map=m.name,
        tower=m.tower.name,
        depth=m.depth,
        levels_checked=[checked[0], checked[-1]],
        measure_preserving=witness_level is None,
        witness_level=witness_level,
        levels=levels,
        notes=notes,
    )

