# tools/product.py
"""
Products of quotient-preserving maps.

The product of ergodic components is ergodic exactly when quotient orders
taken from different components are pairwise coprime. crt_minimality_oracle
is the brute-force check for the finite case: build the product map and
follow one orbit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from math import gcd, prod
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from pydantic import BaseModel

from config.settings import get_settings
from tools.analysis import Verdict, is_ergodic, is_measure_preserving, orbit_covers
from tools.maps import CompatibleFamily
from tools.tower import CapacityError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuotientOrderSet:
    orders: FrozenSet[int]

    def sorted(self) -> List[int]:
        return sorted(self.orders)

    def primes(self) -> FrozenSet[int]:
        return frozenset(q for n in self.orders for q in sympy.primefactors(n))

    def __len__(self) -> int:
        return len(self.orders)


def quotient_order_set(f: CompatibleFamily) -> QuotientOrderSet:
    return QuotientOrderSet(orders=frozenset(n for n in f.tower.orders() if n > 1))


class ProductVerdict(BaseModel):
    holds: bool
    reason: Optional[str] = None        # "ergodicity" | "coprimality"
    witness: Optional[List[int]] = None  # (component, level) or (alpha, beta, n, m)
    note: str = "coprimality is checked over the orders on each component's chain"

    def __bool__(self) -> bool:
        return self.holds


def product_ergodicity(fs: Sequence[CompatibleFamily]) -> ProductVerdict:
    if not fs:
        raise ValueError("product_ergodicity needs at least one family")
    for idx, f in enumerate(fs):
        verdict = is_ergodic(f)
        if not verdict.holds:
            return ProductVerdict(holds=False, reason="ergodicity", witness=[idx, verdict.level])
    sets = [quotient_order_set(f).sorted() for f in fs]
    for a, b in combinations(range(len(fs)), 2):
        for n in sets[a]:
            for m in sets[b]:
                if gcd(n, m) != 1:
                    log.debug("components %d and %d share gcd(%d, %d) = %d", a, b, n, m, gcd(n, m))
                    return ProductVerdict(holds=False, reason="coprimality", witness=[a, b, n, m])
    return ProductVerdict(holds=True)


def product_measure_preserving(fs: Sequence[CompatibleFamily]) -> Verdict:
    """A product is measure preserving iff every component is; witness is (component, x, y)."""
    for idx, f in enumerate(fs):
        verdict = is_measure_preserving(f)
        if not verdict.holds:
            return Verdict(holds=False, level=verdict.level, witness=[idx, *verdict.witness],
                           note=f"component {idx} collides at level {verdict.level}")
    return Verdict(holds=True)


def shared_prime_obstruction(fs: Sequence[CompatibleFamily]) -> Optional[Tuple[int, int, int]]:
    """(alpha, beta, q) for two nontrivial components whose level orders share the prime q."""
    primes = [quotient_order_set(f).primes() for f in fs]
    for a, b in combinations(range(len(fs)), 2):
        common = primes[a] & primes[b]
        if common:
            return a, b, min(common)
    return None


def crt_minimality_oracle(maps: Sequence[Tuple[int, Sequence[int]]]) -> bool:
    """Is the product of the self-maps of S_1 x ... x S_r a single cycle on the whole product?"""
    sizes = tuple(int(size) for size, _ in maps)
    total = prod(sizes)
    cap = get_settings().limits.crt_product_size
    if total > cap:
        raise CapacityError(f"product of sizes {list(sizes)} has {total} points; the oracle is capped at {cap}")
    tables = []
    for size, table in maps:
        tab = np.asarray(table, dtype=np.int64)
        if tab.shape != (size,) or (size and (tab.min() < 0 or tab.max() >= size)):
            raise ValueError(f"table {list(table)} is not a self-map of a {size}-point set")
        tables.append(tab)
    states = np.unravel_index(np.arange(total), sizes)
    product_table = np.ravel_multi_index([tab[s] for tab, s in zip(tables, states)], sizes)
    return orbit_covers(product_table)
