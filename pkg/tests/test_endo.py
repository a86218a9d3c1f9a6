import numpy as np
import pytest

from tests.conftest import s3_tower
from tools.analysis import is_ergodic, is_measure_preserving
from tools.endo import (
    EndoError,
    HomomorphismError,
    factors_through,
    finite_factor_closure,
    finite_factor_subgroups,
    hom_nonergodic_witness,
    is_homomorphism_family,
    is_unit_matrix,
    matrix_inverse_mod,
    preimage,
)
from tools.maps import from_matrix, from_polynomial, identity_family
from tools.tower import InvalidSubgroupError, enumerate_subgroups, make_cyclic_tower, make_subgroup


@pytest.fixture
def swap():
    """Coordinate swap on (Z/3)^2, (a, b) encoded as 3a + b."""
    return from_matrix(3, [[0, 1], [1, 0]], 1)


def sub(f, level, elements):
    return make_subgroup(f.tower.level(level), elements, level=level)


# --- matrices ---------------------------------------------------------------

def test_unit_matrix_examples():
    assert is_unit_matrix([[1, 1], [1, 0]], 2)
    assert not is_unit_matrix([[3, 0], [0, 1]], 3)
    for p in (2, 3, 5):
        assert is_unit_matrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]], p)


def test_matrix_inverse_mod():
    inv = matrix_inverse_mod([[1, 1], [1, 0]], 8)
    assert inv == [[0, 1], [1, 7]]
    with pytest.raises(EndoError):
        matrix_inverse_mod([[2, 0], [0, 1]], 8)


def test_unit_matrices_induce_bijections_with_matching_inverse():
    m = [[2, 1], [1, 1]]
    f = from_matrix(3, m, 2)
    g = from_matrix(3, matrix_inverse_mod(m, 9), 2)
    assert is_measure_preserving(f)
    assert np.array_equal(g.table(2)[f.table(2)], np.arange(81))


# --- homomorphism checks ----------------------------------------------------

def test_homomorphism_detection():
    assert is_homomorphism_family(from_polynomial(make_cyclic_tower(3, 2), [0, 2])) is None
    witness = is_homomorphism_family(from_polynomial(make_cyclic_tower(2, 2), [1, 1]))
    assert (witness.level, witness.pair) == (1, [0, 0])
    assert is_homomorphism_family(identity_family(s3_tower())) is None


def test_non_homomorphism_is_rejected():
    f = from_polynomial(make_cyclic_tower(3, 2), [1, 1])
    with pytest.raises(HomomorphismError) as err:
        factors_through(f, sub(f, 2, [0, 3, 6]))
    assert err.value.level == 1


# --- factor criterion -------------------------------------------------------

def test_factor_examples(swap):
    verdict = factors_through(swap, sub(swap, 1, [0, 1, 2]))
    assert not verdict
    assert verdict.preimage == [0, 3, 6]
    assert verdict.witness == 1

    assert factors_through(swap, sub(swap, 1, [0]))

    double = from_polynomial(make_cyclic_tower(3, 2), [0, 2])
    verdict = factors_through(double, sub(double, 2, [0, 3, 6]))
    assert verdict and verdict.equal


def test_factor_requires_normal_subgroup():
    f = identity_family(s3_tower())
    with pytest.raises(InvalidSubgroupError):
        factors_through(f, sub(f, 2, [0, 3]))


def test_preimage_index_matches_for_surjective_maps():
    f = from_matrix(2, [[1, 1], [1, 0]], 2)
    for n in finite_factor_subgroups(f, 2):
        pre = preimage(f, 2, n.elements)
        assert len(pre) == n.order


# --- closure ----------------------------------------------------------------

def test_closure_examples(swap):
    assert finite_factor_closure(swap, sub(swap, 1, [0, 1, 2])).elements == (0,)

    ident = identity_family(make_cyclic_tower(2, 3))
    n = sub(ident, 3, [0, 4])
    assert finite_factor_closure(ident, n).elements == (0, 4)

    double = from_polynomial(make_cyclic_tower(3, 2), [0, 2])
    assert finite_factor_closure(double, sub(double, 2, [0, 3, 6])).elements == (0, 3, 6)


def test_closure_needs_surjective_level():
    triple = from_polynomial(make_cyclic_tower(3, 2), [0, 3])
    with pytest.raises(EndoError):
        finite_factor_closure(triple, sub(triple, 2, [0, 3, 6]))


@pytest.mark.parametrize("matrix, p", [
    ([[0, 1], [1, 0]], 3),
    ([[1, 1], [1, 0]], 2),
    ([[1, 1], [0, 1]], 3),
    ([[2, 0], [0, 1]], 3),
])
def test_closure_is_largest_invariant_subgroup(matrix, p):
    f = from_matrix(p, matrix, 1)
    invariant = finite_factor_subgroups(f, 1)
    for n in invariant:
        assert finite_factor_closure(f, n).elements == n.elements
    for n in enumerate_subgroups(f.tower.level(1), 1):
        closed = finite_factor_closure(f, n)
        assert closed.as_set() <= n.as_set()
        assert factors_through(f, closed)
        best = max((s for s in invariant if s.as_set() <= n.as_set()), key=lambda s: s.order)
        assert closed.elements == best.elements


def test_swap_invariant_subgroups(swap):
    found = finite_factor_subgroups(swap, 1)
    assert [s.elements for s in found] == [(0,), (0, 4, 8), (0, 5, 7), tuple(range(9))]


# --- non-ergodicity ---------------------------------------------------------

def test_homomorphisms_fix_the_identity(swap):
    witness = hom_nonergodic_witness(from_polynomial(make_cyclic_tower(3, 2), [0, 2]))
    assert (witness.level, witness.element) == (1, 0)
    fib = from_matrix(2, [[1, 1], [1, 0]], 2)
    assert hom_nonergodic_witness(fib).element == 0
    assert not is_ergodic(fib)
    assert hom_nonergodic_witness(swap).element == 0
