import random
from typing import List

import numpy as np
import pytest

from config.settings import reset_settings
from tools.tower import (
    Tower,
    make_cyclic_tower,
    make_factorial_tower,
    make_modular_tower,
    make_product_tower,
    make_table_tower,
)

SEED = 20240611


@pytest.fixture(autouse=True)
def fresh_settings():
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def rnd() -> random.Random:
    return random.Random(SEED)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


# --- small groups -----------------------------------------------------------

def cyclic_table(n: int) -> List[List[int]]:
    return [[(a + b) % n for b in range(n)] for a in range(n)]


def s3_table() -> List[List[int]]:
    """S3 with elements 0..2 the rotations r^k and 3..5 the reflections s r^k."""
    def mul(a, b):
        sa, ka = divmod(a, 3)
        sb, kb = divmod(b, 3)
        k = (kb + ka) % 3 if sb == 0 else (kb - ka) % 3
        return 3 * ((sa + sb) % 2) + k
    return [[mul(a, b) for b in range(6)] for a in range(6)]


def s3_tower() -> Tower:
    """Z/2 <- S3 via the sign map."""
    return make_table_tower([cyclic_table(2), s3_table()], [[0, 0, 0, 1, 1, 1]])


# --- random towers ----------------------------------------------------------

def random_tower(rnd: random.Random, max_order: int = 256) -> Tower:
    kind = rnd.choice(["cyclic", "modular", "product", "factorial", "cyclic"])
    if kind == "cyclic":
        p = rnd.choice([2, 3, 5, 7])
        top = 1
        depth = 0
        while top * p <= max_order and depth < 6:
            top *= p
            depth += 1
        return make_cyclic_tower(p, rnd.randint(1, depth))
    if kind == "modular":
        moduli, m = [], 1
        for _ in range(rnd.randint(1, 4)):
            nxt = m * rnd.choice([2, 2, 3, 4, 5])
            if nxt > max_order:
                break
            moduli.append(nxt)
            m = nxt
        return make_modular_tower(moduli or [2])
    if kind == "factorial":
        return make_factorial_tower(rnd.randint(1, 4))
    a = make_cyclic_tower(2, rnd.randint(1, 3))
    b = make_cyclic_tower(rnd.choice([2, 3]), rnd.randint(1, 2))
    return make_product_tower([a, b])


# --- oracles, independent of the library code paths -------------------------

def brute_is_bijection(table) -> bool:
    return sorted(int(v) for v in table) == list(range(len(table)))


def brute_single_cycle(table) -> bool:
    n = len(table)
    x, visited = 0, set()
    for _ in range(n):
        visited.add(x)
        x = int(table[x])
    return x == 0 and len(visited) == n


def brute_power(table, k: int) -> List[int]:
    out = list(range(len(table)))
    for _ in range(k):
        out = [int(table[v]) for v in out]
    return out
