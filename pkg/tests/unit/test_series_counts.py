"""Tests for series_counts."""

import math

import pytest

from k3_monodromy.errors import DomainError, UsageError
from k3_monodromy.series_counts import (
    CuspType,
    IntSeries,
    beauville_multiplicity,
    discriminant_series,
    euler_factor_power,
    genus_two_count,
    plucker_count,
    series_mul,
    yau_zaslow_counts,
    yau_zaslow_series,
)


def test_difference_of_squares() -> None:
    """Test (1+q)(1-q) = 1 - q^2 at order 2."""
    a = IntSeries((1, 1, 0))
    b = IntSeries((1, -1, 0))
    assert series_mul(a, b).coeffs == (1, 0, -1)


def test_multiply_by_one() -> None:
    """Test multiplication by the constant series."""
    a = IntSeries((3, -2, 7, 11))
    assert a * IntSeries.one(3) == a


def test_order_mismatch() -> None:
    """Test order mismatch is a usage error."""
    with pytest.raises(UsageError):
        series_mul(IntSeries((1, 1)), IntSeries((1, 1, 1)))


def test_product_never_extends_order() -> None:
    """Test products stay at the operands' order."""
    a = IntSeries((1, 1, 1))
    assert (a * a).order == 2


def test_shift_truncates() -> None:
    """Test shifting drops coefficients past the order."""
    assert IntSeries((1, 2, 3)).shift(1).coeffs == (0, 1, 2)


def test_exponent_zero() -> None:
    """Test exponent 0 gives the constant series."""
    assert euler_factor_power(6, 0) == IntSeries.one(6)


def test_yau_zaslow_constants() -> None:
    """Test the first five coefficients of the inverse 24th power."""
    assert euler_factor_power(4, -24).coeffs == (1, 24, 324, 3200, 25650)


def test_euler_pentagonal() -> None:
    """Test exponent 1 against Euler's pentagonal number theorem."""
    assert euler_factor_power(12, 1).coeffs == (1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1)


@pytest.mark.parametrize("order", [0, 1, 7, 32, 128])
def test_inverse_identity(order: int) -> None:
    """Test positive and negative 24th powers cancel exactly."""
    product = euler_factor_power(order, 24) * euler_factor_power(order, -24)
    assert product == IntSeries.one(order)


def test_discriminant_leading_terms() -> None:
    """Test Delta(q) = q - 24q^2 + 252q^3 - 1472q^4 + ..."""
    assert discriminant_series(5).coeffs == (0, 1, -24, 252, -1472, 4830)


def test_negative_order() -> None:
    """Test negative truncation order is rejected."""
    with pytest.raises(UsageError):
        euler_factor_power(-1, 24)


def test_first_counts() -> None:
    """Test counts up to genus 4."""
    assert yau_zaslow_counts(4) == [1, 24, 324, 3200, 25650]


def test_genus_zero() -> None:
    """Test g_max = 0."""
    assert yau_zaslow_counts(0) == [1]


def test_times_discriminant_is_q() -> None:
    """Test (Σ n_g q^g) · Δ(q) = q to order 64."""
    order = 64
    product = yau_zaslow_series(order) * discriminant_series(order)
    assert product == IntSeries.monomial(1, order)
    assert product.coeffs == (0, 1) + (0,) * (order - 1)


def test_genus_ten_oracle() -> None:
    """Test g_max = 10 against the defining identity at order 11."""
    counts = yau_zaslow_counts(10)
    series = IntSeries(tuple(counts) + (0,))
    product = series * discriminant_series(11)
    assert product.coeffs[:11] == (0, 1) + (0,) * 9


def test_counts_positive() -> None:
    """Test every count is a positive integer."""
    assert all(n > 0 for n in yau_zaslow_counts(40))


def test_genus_two_matches_sextic_bitangents() -> None:
    """Test n_2 equals the number of bitangents of a smooth sextic."""
    assert genus_two_count() == plucker_count(6) == 324


@pytest.mark.parametrize(
    ("p", "q", "expected"),
    [(2, 3, 2), (1, 2, 1), (2, 5, 3), (3, 4, 5)],
)
def test_known_values(p: int, q: int, expected: int) -> None:
    """Test exact values for small cusps."""
    assert beauville_multiplicity(CuspType(p, q)) == expected


def test_integral_for_all_small_coprime_pairs() -> None:
    """Test integrality for every coprime pair with p + q <= 60."""
    for total in range(2, 61):
        for p in range(1, total):
            q = total - p
            if math.gcd(p, q) == 1:
                value = beauville_multiplicity(CuspType(p, q))
                assert value * total == math.comb(total, q)


def test_non_coprime_rejected() -> None:
    """Test non-coprime exponents are a domain error."""
    with pytest.raises(DomainError):
        beauville_multiplicity(CuspType(2, 4))


def test_plucker_counts() -> None:
    """Test bitangent counts for small degrees."""
    assert [plucker_count(d) for d in (3, 4, 5, 6)] == [0, 28, 120, 324]
