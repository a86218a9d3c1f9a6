import random
from math import gcd

import numpy as np
import pytest

from config.settings import reset_settings
from tests.conftest import brute_single_cycle
from tools.analysis import is_ergodic
from tools.maps import from_level_tables, from_polynomial, product_map, random_compatible_family
from tools.product import (
    crt_minimality_oracle,
    product_ergodicity,
    product_measure_preserving,
    quotient_order_set,
    shared_prime_obstruction,
)
from tools.tower import CapacityError, make_cyclic_tower, make_modular_tower


def plus_one(p, depth):
    return from_polynomial(make_cyclic_tower(p, depth), [1, 1])


def test_quotient_order_sets():
    assert quotient_order_set(plus_one(2, 3)).sorted() == [2, 4, 8]
    assert quotient_order_set(plus_one(3, 2)).sorted() == [3, 9]
    orders = quotient_order_set(from_polynomial(make_modular_tower([2, 6, 12]), [1, 1]))
    assert orders.primes() == {2, 3}


def test_product_ergodicity_examples():
    assert product_ergodicity([plus_one(2, 3), plus_one(3, 3)])

    verdict = product_ergodicity([plus_one(2, 1), plus_one(2, 1)])
    assert not verdict
    assert (verdict.reason, verdict.witness) == ("coprimality", [0, 1, 2, 2])

    verdict = product_ergodicity([from_polynomial(make_cyclic_tower(2, 2), [1, 3]), plus_one(3, 1)])
    assert (verdict.reason, verdict.witness) == ("ergodicity", [0, 2])


def test_product_ergodicity_needs_families():
    with pytest.raises(ValueError):
        product_ergodicity([])


@pytest.mark.parametrize("components", [
    [(2, 3), (3, 3)],
    [(2, 2), (2, 2)],
    [(2, 2), (3, 1), (5, 1)],
    [(3, 2), (3, 1)],
    [(5, 2)],
])
def test_criterion_agrees_with_product_map(components):
    fs = [plus_one(p, d) for p, d in components]
    assert product_ergodicity(fs).holds == is_ergodic(product_map(fs)).holds


def test_product_of_non_ergodic_components():
    affine = from_polynomial(make_cyclic_tower(2, 2), [1, 3])
    fs = [affine, plus_one(3, 2)]
    assert not product_ergodicity(fs)
    assert not is_ergodic(product_map(fs))


def test_product_measure_preservation():
    squares = from_polynomial(make_cyclic_tower(5, 1), [0, 0, 1])
    verdict = product_measure_preserving([plus_one(2, 2), squares])
    assert not verdict
    assert verdict.level == 1 and verdict.witness == [1, 2, 3]
    assert product_measure_preserving([plus_one(2, 2), plus_one(3, 1)])


def test_shared_prime_obstruction():
    mixed = from_polynomial(make_modular_tower([2, 6]), [1, 1])
    assert shared_prime_obstruction([plus_one(2, 2), plus_one(3, 2), mixed]) == (0, 2, 2)
    assert shared_prime_obstruction([plus_one(2, 2), plus_one(3, 2)]) is None
    fs = [plus_one(3, 2), mixed]
    assert shared_prime_obstruction(fs) is not None
    assert not is_ergodic(product_map(fs))


# --- CRT oracle -------------------------------------------------------------

def rotation(n):
    return [(x + 1) % n for x in range(n)]


def test_crt_oracle_examples():
    assert crt_minimality_oracle([(2, rotation(2)), (3, rotation(3))])
    assert not crt_minimality_oracle([(2, rotation(2)), (2, rotation(2))])
    assert crt_minimality_oracle([(5, rotation(5))])


@pytest.mark.parametrize("n", range(1, 13))
def test_crt_oracle_on_rotations(n):
    for m in range(1, 13):
        assert crt_minimality_oracle([(n, rotation(n)), (m, rotation(m))]) == (gcd(n, m) == 1)


def test_crt_oracle_on_random_self_maps(rnd):
    for _ in range(300):
        n, m = rnd.randint(1, 12), rnd.randint(1, 12)
        a = [rnd.randrange(n) for _ in range(n)] if rnd.random() < 0.3 else rnd.sample(range(n), n)
        b = rnd.sample(range(m), m)
        expected = brute_single_cycle(a) and brute_single_cycle(b) and gcd(n, m) == 1
        assert crt_minimality_oracle([(n, a), (m, b)]) == expected


@pytest.mark.parametrize("seed", range(20))
def test_crt_oracle_agrees_level_by_level(seed):
    rng = np.random.default_rng(seed)
    r = random.Random(seed)
    f = random_compatible_family(make_cyclic_tower(2, 3), rng, bijective=True)
    g = random_compatible_family(make_cyclic_tower(r.choice([2, 3]), 2), rng, bijective=True)
    pm = product_map([f, g])
    for k in range(1, 3):
        oracle = crt_minimality_oracle([(f.tower.order(k), f.table(k)), (g.tower.order(k), g.table(k))])
        assert oracle == brute_single_cycle(pm.table(k))


def test_crt_oracle_capacity(monkeypatch):
    monkeypatch.setenv("PROFDYN_CRT_PRODUCT_SIZE", "10")
    reset_settings()
    with pytest.raises(CapacityError):
        crt_minimality_oracle([(4, rotation(4)), (3, rotation(3))])


def test_crt_oracle_rejects_bad_tables():
    with pytest.raises(ValueError):
        crt_minimality_oracle([(3, [0, 1, 3])])


def test_level_tables_product():
    swap = from_level_tables(make_cyclic_tower(2, 1), [[1, 0]])
    assert product_ergodicity([swap, plus_one(3, 1), plus_one(5, 1)])
