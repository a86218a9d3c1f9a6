# tools/shift_factor.py
"""
Symbol-sequence factors at finite horizon.

Phi sends x to (pi_i(x), pi_i(Tx), pi_i(T^2 x), ...). For a compatible family
the first symbol fixes the whole sequence; for the digit shift it does not,
and the sequences are Bernoulli on p symbols.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from tools.analysis import Verdict, orbit_matrix
from tools.maps import AnyMap, CompatibleFamily, PrecisionError, check_level_capacity

log = logging.getLogger(__name__)

Word = Tuple[int, ...]


@dataclass(frozen=True)
class SymbolSequence:
    level: int
    symbols: Tuple[int, ...]
    source: str
    start: int
    start_level: int

    def __len__(self) -> int:
        return len(self.symbols)


def input_level(m: AnyMap, i: int, length: int) -> int:
    """Least level whose inputs determine a length-`length` sequence at level i."""
    if isinstance(m, CompatibleFamily) or length <= 1:
        return i
    return m.contract_chain(i, length - 1)[-1]


def phi_sequence(m: AnyMap, x: int, i: int, length: int, source_level: Optional[int] = None) -> SymbolSequence:
    src = input_level(m, i, length) if source_level is None else source_level
    symbols = orbit_matrix(m, [x], i, length, src)[0]
    return SymbolSequence(level=i, symbols=tuple(int(s) for s in symbols), source=m.name,
                          start=int(x), start_level=src)


def symbol_matrix(m: AnyMap, i: int, length: int, level: Optional[int] = None) -> np.ndarray:
    """Phi prefixes for every element of `level` (default: the least sufficient level), one row each."""
    src = input_level(m, i, length) if level is None else level
    if src > m.tower.depth:
        raise PrecisionError(src, m.tower.depth)
    check_level_capacity(m.tower, src, f"symbol sequences of {m.name}")
    xs = m.tower.level(src).elements()
    return orbit_matrix(m, xs, i, length, src)


def is_deterministic_factor(m: AnyMap, i: int, horizon: int, level: Optional[int] = None) -> Verdict:
    """Points with equal first symbol have equal sequences; witness is the first pair (x, y), by y then x."""
    src = (m.tower.depth if isinstance(m, CompatibleFamily) else input_level(m, i, horizon)) if level is None else level
    rows = symbol_matrix(m, i, horizon, src)
    first: Dict[int, int] = {}
    for y, row in enumerate(rows):
        if horizon == 0:
            break
        rep = first.setdefault(int(row[0]), y)
        if not np.array_equal(rows[rep], row):
            return Verdict(holds=False, level=i, witness=[rep, y], levels_checked=[i, src],
                           note=f"{rows[rep].tolist()} vs {row.tolist()}")
    return Verdict(holds=True, level=i, levels_checked=[i, src])


def cylinder_frequencies(m: AnyMap, i: int, w: int, level: Optional[int] = None) -> Dict[Word, Fraction]:
    """Exact frequency of each length-w word over all inputs at `level`; words that never occur are omitted."""
    rows = symbol_matrix(m, i, w, level)
    words, counts = np.unique(rows, axis=0, return_counts=True)
    total = rows.shape[0]
    return {tuple(int(s) for s in word): Fraction(int(c), total) for word, c in zip(words, counts)}


def is_bernoulli(freqs: Dict[Word, Fraction], symbols: int, w: int) -> bool:
    return len(freqs) == symbols ** w and all(f == Fraction(1, symbols ** w) for f in freqs.values())


def is_phi_injective(m: AnyMap, i: int, length: int, level: Optional[int] = None) -> Verdict:
    """Distinct inputs at `level` give distinct length-`length` prefixes."""
    src = input_level(m, i, length) if level is None else level
    rows = symbol_matrix(m, i, length, src)
    _, first, inverse = np.unique(rows, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    clash = np.nonzero(first[inverse] != np.arange(rows.shape[0]))[0]
    if clash.size:
        y = int(clash[0])
        return Verdict(holds=False, level=i, witness=[int(first[inverse[y]]), y], levels_checked=[i, src])
    return Verdict(holds=True, level=i, levels_checked=[i, src])


def sequence_csv(seq: SymbolSequence) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "symbol"])
    writer.writerows(enumerate(seq.symbols))
    return buf.getvalue()


def frequencies_json(freqs: Dict[Word, Fraction]) -> str:
    data = {",".join(map(str, word)): f"{f.numerator}/{f.denominator}" for word, f in sorted(freqs.items())}
    return json.dumps(data, indent=2)
