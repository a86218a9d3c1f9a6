# tools/endo.py
"""
Continuous endomorphisms: families that are a group homomorphism at every level.

A homomorphism T factors through G/N exactly when N <= T^-1(N). Starting
from any normal N the intersections N, N & T^-1(N), ... shrink to the
largest such subgroup inside N. Homomorphisms fix the identity, so they are
never ergodic once a level is nontrivial.
"""
from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np
import sympy
from pydantic import BaseModel

from config.settings import get_settings
from tools.maps import CompatibleFamily
from tools.tower import (
    InvalidSubgroupError,
    Subgroup,
    enumerate_subgroups,
    first_homomorphism_failure,
    is_normal,
)

log = logging.getLogger(__name__)


class EndoError(ValueError):
    ...


class HomomorphismError(EndoError):
    def __init__(self, level: int, pair: Sequence[int]):
        self.level = level
        self.pair = tuple(pair)
        super().__init__(f"level {level} map is not a homomorphism: T(x y) != T(x) T(y) at (x, y) = {self.pair}")


# --- matrices ---------------------------------------------------------------

def is_unit_matrix(matrix: Sequence[Sequence[int]], p: int) -> bool:
    """det(M) is prime to p, i.e. M lies in GL_k(Z_p)."""
    return bool(sympy.Matrix(matrix).det() % p != 0)


def matrix_inverse_mod(matrix: Sequence[Sequence[int]], modulus: int) -> List[List[int]]:
    try:
        inv = sympy.Matrix(matrix).inv_mod(modulus)
    except ValueError as e:
        raise EndoError(f"matrix is not invertible mod {modulus}: {e}") from e
    return [[int(a) for a in row] for row in inv.tolist()]


# --- homomorphism families --------------------------------------------------

class HomomorphismWitness(BaseModel):
    level: int
    pair: List[int]


def is_homomorphism_family(f: CompatibleFamily) -> Optional[HomomorphismWitness]:
    """First level (and pair) where T_i(xy) != T_i(x)T_i(y); None when every level is a homomorphism."""
    cap = get_settings().limits.exhaustive_order
    for i, group in enumerate(f.tower.levels):
        if group.order > cap:
            log.warning("homomorphism check skipped at level %d (order %d)", i, group.order)
            continue
        bad = first_homomorphism_failure(group, group, f.table(i))
        if bad is not None:
            return HomomorphismWitness(level=i, pair=list(bad))
    return None


def require_homomorphism(f: CompatibleFamily) -> None:
    witness = is_homomorphism_family(f)
    if witness is not None:
        raise HomomorphismError(witness.level, witness.pair)


def preimage(f: CompatibleFamily, level: int, elements: Iterable[int]) -> frozenset:
    target = np.zeros(f.tower.order(level), dtype=bool)
    target[[int(e) for e in elements]] = True
    return frozenset(int(x) for x in np.nonzero(target[f.table(level)])[0])


def _require_normal(f: CompatibleFamily, n: Subgroup) -> None:
    if not is_normal(f.tower.level(n.level), n.elements):
        raise InvalidSubgroupError(f"{list(n.elements)} is not normal at level {n.level}")


def _is_surjective(f: CompatibleFamily, level: int) -> bool:
    return np.unique(f.table(level)).size == f.tower.order(level)


class FactorVerdict(BaseModel):
    holds: bool
    level: int
    preimage: List[int]
    witness: Optional[int] = None  # element of N outside T^-1(N)
    equal: Optional[bool] = None   # N == T^-1(N), recorded when T_i is surjective

    def __bool__(self) -> bool:
        return self.holds


def factors_through(f: CompatibleFamily, n: Subgroup) -> FactorVerdict:
    require_homomorphism(f)
    _require_normal(f, n)
    pre = preimage(f, n.level, n.elements)
    missing = sorted(set(n.elements) - pre)
    verdict = FactorVerdict(holds=not missing, level=n.level, preimage=sorted(pre),
                            witness=missing[0] if missing else None)
    if verdict.holds and _is_surjective(f, n.level):
        verdict.equal = pre == n.as_set()
        if not verdict.equal:
            log.error("surjective level %d map has T^-1(N) strictly larger than N", n.level)
        # a surjective homomorphism preserves the index of preimages
        if len(pre) != n.order:
            log.error("index of T^-1(N) differs from the index of N at level %d", n.level)
    return verdict


def finite_factor_closure(f: CompatibleFamily, n: Subgroup) -> Subgroup:
    """The intersection of N, T^-1(N), T^-2(N), ... at the level of N."""
    require_homomorphism(f)
    _require_normal(f, n)
    if not _is_surjective(f, n.level):
        raise EndoError(f"level {n.level} map is not surjective")
    base = n.as_set()
    current = base
    for step in range(f.tower.order(n.level) + 1):
        nxt = base & preimage(f, n.level, current)
        if nxt == current:
            log.debug("closure stable after %d steps at level %d", step, n.level)
            return Subgroup(level=n.level, elements=tuple(sorted(current)), normal=True)
        current = nxt
    raise EndoError(f"closure did not stabilise within {f.tower.order(n.level)} steps")


def finite_factor_subgroups(f: CompatibleFamily, level: int) -> List[Subgroup]:
    """Every normal N of G_level with N <= T^-1(N): the level's share of the finite factor set."""
    require_homomorphism(f)
    found = []
    for n in enumerate_subgroups(f.tower.level(level), level):
        if n.normal and n.as_set() <= preimage(f, level, n.elements):
            found.append(n)
    return found


class FixedPointWitness(BaseModel):
    level: int
    element: int


def hom_nonergodic_witness(f: CompatibleFamily) -> Optional[FixedPointWitness]:
    """The identity of the first nontrivial level is fixed, so that level map is not minimal."""
    require_homomorphism(f)
    for i, group in enumerate(f.tower.levels):
        if group.order > 1:
            e = group.identity
            if int(f.table(i)[e]) != e:
                raise EndoError(f"level {i} homomorphism moves the identity")
            return FixedPointWitness(level=i, element=e)
    return None
