import json
from fractions import Fraction

import pytest

from config.settings import reset_settings
from tools.maps import PrecisionError, binomial_map, from_polynomial, identity_family, shift_map
from tools.shift_factor import (
    SymbolSequence,
    cylinder_frequencies,
    frequencies_json,
    input_level,
    is_bernoulli,
    is_deterministic_factor,
    is_phi_injective,
    phi_sequence,
    sequence_csv,
    symbol_matrix,
)
from tools.tower import CapacityError, make_cyclic_tower


def z(p, depth):
    return make_cyclic_tower(p, depth)


def test_phi_sequence_examples():
    shift = shift_map(2, z(2, 5))
    seq = phi_sequence(shift, 13, 1, 4, source_level=5)
    assert seq.symbols == (1, 0, 1, 1)
    assert (seq.start, seq.start_level, seq.level) == (13, 5, 1)

    assert phi_sequence(from_polynomial(z(2, 3), [1, 1]), 0, 1, 4).symbols == (0, 1, 0, 1)
    assert phi_sequence(binomial_map(2, z(2, 3)), 3, 1, 2, source_level=3).symbols == (1, 1)


def test_phi_sequence_reports_required_level():
    shift = shift_map(2, z(2, 3))
    assert input_level(shift, 1, 3) == 3
    with pytest.raises(PrecisionError) as err:
        phi_sequence(shift, 5, 1, 4)
    assert err.value.required_level == 4
    with pytest.raises(PrecisionError):
        symbol_matrix(shift, 1, 4)


def test_deterministic_factor_examples():
    assert is_deterministic_factor(from_polynomial(z(2, 3), [1, 1]), 1, 6)
    for i in range(4):
        assert is_deterministic_factor(identity_family(z(3, 3)), i, 3)

    verdict = is_deterministic_factor(shift_map(2, z(2, 3)), 1, 2)
    assert not verdict
    assert verdict.witness == [0, 2]
    assert verdict.levels_checked == [1, 2]


@pytest.mark.parametrize("coeffs", [[1, 1], [0, 0, 1], [3, 5, 2], [0, 2]])
def test_families_factor_through_first_symbol(coeffs):
    f = from_polynomial(z(3, 3), coeffs)
    for i in range(1, 4):
        assert is_deterministic_factor(f, i, 8).holds


def test_cylinder_examples():
    freqs = cylinder_frequencies(shift_map(2, z(2, 4)), 1, 3, level=4)
    assert len(freqs) == 8
    assert set(freqs.values()) == {Fraction(1, 8)}

    freqs = cylinder_frequencies(binomial_map(2, z(2, 3)), 1, 1, level=2)
    assert freqs == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}

    freqs = cylinder_frequencies(from_polynomial(z(2, 2), [1, 1]), 1, 2, level=2)
    assert freqs == {(0, 1): Fraction(1, 2), (1, 0): Fraction(1, 2)}
    assert not is_bernoulli(freqs, 2, 2)


@pytest.mark.parametrize("w", [1, 2, 3, 4, 5])
def test_shift_cylinders_are_bernoulli(w):
    assert is_bernoulli(cylinder_frequencies(shift_map(2, z(2, 6)), 1, w), 2, w)


def test_cylinders_on_deep_towers_are_capped(monkeypatch):
    monkeypatch.setenv("PROFDYN_TABLE_ORDER", "64")
    reset_settings()
    shift = shift_map(2, z(2, 30))
    assert is_bernoulli(cylinder_frequencies(shift, 1, 3), 2, 3)
    with pytest.raises(CapacityError):
        cylinder_frequencies(shift, 1, 3, level=30)


def test_shift_on_three_symbols_is_bernoulli():
    assert is_bernoulli(cylinder_frequencies(shift_map(3, z(3, 4)), 1, 3), 3, 3)


@pytest.mark.parametrize("p, w", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
def test_binomial_cylinders_are_bernoulli_at_small_words(p, w):
    assert is_bernoulli(cylinder_frequencies(binomial_map(p, z(p, 4)), 1, w), p, w)


def test_phi_injectivity():
    for k in range(1, 6):
        assert is_phi_injective(shift_map(2, z(2, 6)), 1, k)
    verdict = is_phi_injective(from_polynomial(z(2, 3), [1, 1]), 1, 4, level=3)
    assert not verdict
    assert verdict.witness == [0, 2]


def test_sequence_csv():
    seq = SymbolSequence(level=1, symbols=(1, 1, 0, 1), source="shift(2)", start=11, start_level=4)
    assert sequence_csv(seq) == "step,symbol\n0,1\n1,1\n2,0\n3,1\n"
    empty = SymbolSequence(level=1, symbols=(), source="shift(2)", start=11, start_level=4)
    assert sequence_csv(empty) == "step,symbol\n"


def test_frequencies_json():
    data = json.loads(frequencies_json({(0, 1, 1): Fraction(1, 8), (0, 0, 0): Fraction(7, 8)}))
    assert data == {"0,0,0": "7/8", "0,1,1": "1/8"}
    assert list(data) == ["0,0,0", "0,1,1"]
