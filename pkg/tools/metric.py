# tools/metric.py
"""
The translation-invariant ultrametric a tower induces on its top level.

d(x, y) = 2^-l where l is the least level at which the projections of x and
y differ, and d(x, x) = 0. Level 0 is trivial, so distances never exceed 1/2.
The points within distance < 2^-k of the identity form the level-k kernel.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np
from pydantic import BaseModel

from config.settings import get_settings
from tools.analysis import Verdict
from tools.maps import CompatibleFamily, check_table_capacity
from tools.tower import CapacityError, Tower, kernel

log = logging.getLogger(__name__)


class MetricError(ValueError):
    ...


@dataclass(frozen=True, eq=False)
class TowerMetric:
    tower: Tower
    projections: np.ndarray  # projections[k, x] = pi_k(x) for top-level x

    @property
    def depth(self) -> int:
        return self.tower.depth

    def scale(self, k: int) -> Fraction:
        return Fraction(1, 2 ** k)

    def separation_level(self, x: int, y: int) -> Optional[int]:
        """Least level where x and y differ; None when they agree everywhere."""
        diff = np.nonzero(self.projections[:, int(x)] != self.projections[:, int(y)])[0]
        return int(diff[0]) if diff.size else None

    def distance(self, x: int, y: int) -> Fraction:
        level = self.separation_level(x, y)
        return Fraction(0) if level is None else self.scale(level)

    def separation_row(self, y: int, xs: np.ndarray) -> np.ndarray:
        """Separation levels of (x, y) for each x; depth + 1 stands for 'never'."""
        diff = self.projections[:, xs] != self.projections[:, [int(y)]]
        return np.where(diff.any(axis=0), diff.argmax(axis=0), self.depth + 1)


def build_metric(t: Tower) -> TowerMetric:
    check_table_capacity(t)
    projections = np.stack([t.projection_table(t.depth, k) for k in range(t.depth + 1)])
    return TowerMetric(tower=t, projections=projections)


def separation_level(m: TowerMetric, x: int, y: int) -> Optional[int]:
    return m.separation_level(x, y)


def distance(m: TowerMetric, x: int, y: int) -> Fraction:
    return m.distance(x, y)


def closed_ball(m: TowerMetric, center: int, radius: Fraction) -> List[int]:
    xs = np.arange(m.tower.top.order)
    levels = m.separation_row(center, xs)
    dist = [Fraction(0) if lv > m.depth else m.scale(int(lv)) for lv in levels]
    return [int(x) for x, d in zip(xs, dist) if d <= radius]


def ball(m: TowerMetric, center: int, k: int) -> List[int]:
    """Points at distance < 2^-k from `center`: the coset of the level-k kernel."""
    xs = np.arange(m.tower.top.order)
    return xs[m.separation_row(center, xs) > k].tolist()


class IsometryReport(BaseModel):
    holds: bool
    witness: Optional[List[int]] = None
    distance: Optional[str] = None        # d(x, y)
    image_distance: Optional[str] = None  # d(Tx, Ty)

    def __bool__(self) -> bool:
        return self.holds


def _ratio(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def verify_isometry(f: CompatibleFamily, m: TowerMetric) -> IsometryReport:
    """Exhaustive over top-level pairs x < y, scanned by increasing y then x."""
    if f.tower is not m.tower and f.tower.orders() != m.tower.orders():
        raise MetricError(f"metric built on {m.tower.name}, family lives on {f.tower.name}")
    cap = get_settings().limits.exhaustive_order
    if m.tower.top.order > cap:
        raise CapacityError(f"isometry check is pairwise; top order {m.tower.top.order} exceeds {cap}")
    top = f.table(f.depth)
    xs = np.arange(top.shape[0])
    for y in range(1, top.shape[0]):
        before = m.separation_row(y, xs[:y])
        after = m.separation_row(int(top[y]), top[:y])
        bad = np.nonzero(before != after)[0]
        if bad.size:
            x = int(bad[0])
            return IsometryReport(
                holds=False,
                witness=[x, y],
                distance=_ratio(m.distance(x, y)),
                image_distance=_ratio(m.distance(int(top[x]), int(top[y]))),
            )
    return IsometryReport(holds=True)


class MetricReport(BaseModel):
    ultrametric: Optional[Verdict] = None
    left_invariant: Optional[Verdict] = None
    right_invariant: Optional[Verdict] = None
    balls_are_kernels: Verdict
    skipped: List[str] = []

    @property
    def clean(self) -> bool:
        checks = [self.ultrametric, self.left_invariant, self.right_invariant, self.balls_are_kernels]
        return all(c.holds for c in checks if c is not None)


def _separation_matrix(m: TowerMetric) -> np.ndarray:
    xs = np.arange(m.tower.top.order)
    return np.stack([m.separation_row(y, xs) for y in xs], axis=1)


def verify_metric(m: TowerMetric) -> MetricReport:
    t = m.tower
    n = t.top.order
    checked = [0, t.depth]
    balls = Verdict(holds=True, levels_checked=checked)
    identity = t.top.identity
    for k in range(t.depth + 1):
        expected = list(kernel(t, t.depth, k).elements)
        if ball(m, identity, k) != expected:
            balls = Verdict(holds=False, level=k, levels_checked=checked,
                            note=f"ball of radius 2^-{k} differs from the level-{k} kernel")
            break
    if n > get_settings().limits.triple_order:
        skipped = [f"ultrametric and bi-invariance checks (order {n})"]
        log.warning("skipped %s", skipped[0])
        return MetricReport(balls_are_kernels=balls, skipped=skipped)

    # larger separation level means smaller distance
    sep = _separation_matrix(m).astype(np.int8)
    xs = np.arange(n)
    # d(x,z) <= max(d(x,y), d(y,z))  <=>  sep[x,z] >= min(sep[x,y], sep[y,z])
    violations = np.argwhere(sep[:, None, :] < np.minimum(sep[:, :, None], sep[None, :, :]))
    ultra = Verdict(holds=True, levels_checked=checked)
    if violations.size:
        ultra = Verdict(holds=False, witness=[int(v) for v in violations[0]], levels_checked=checked)

    group = t.top
    left = Verdict(holds=True, levels_checked=checked)
    right = Verdict(holds=True, levels_checked=checked)
    for g in xs:
        gx = np.asarray(group.op(int(g), xs))
        xg = np.asarray(group.op(xs, int(g)))
        if left.holds:
            bad = np.argwhere(sep[np.ix_(gx, gx)] != sep)
            if bad.size:
                left = Verdict(holds=False, witness=[int(g), *map(int, bad[0])], levels_checked=checked)
        if right.holds:
            bad = np.argwhere(sep[np.ix_(xg, xg)] != sep)
            if bad.size:
                right = Verdict(holds=False, witness=[int(g), *map(int, bad[0])], levels_checked=checked)
    return MetricReport(ultrametric=ultra, left_invariant=left, right_invariant=right, balls_are_kernels=balls)

