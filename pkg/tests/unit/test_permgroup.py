"""Tests for permgroup."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from k3_monodromy.errors import UnsupportedError, UsageError
from k3_monodromy.exact import make_rng
from k3_monodromy.permgroup import (
    NOT_FOUND,
    GroupReport,
    Permutation,
    certify_symmetric,
    find_transposition,
    orbits,
    schreier_sims_order,
    two_transitive,
)


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixture for a seeded generator."""
    return make_rng(3)


def cyc(n: int, *cycles: tuple[int, ...]) -> Permutation:
    """Shorthand for a permutation from cycles."""
    return Permutation.from_cycles(n, cycles)


def random_permutation(rng: np.random.Generator, n: int) -> Permutation:
    """Uniform random permutation."""
    return Permutation(tuple(int(i) for i in rng.permutation(n)))


def test_rejects_non_bijection() -> None:
    """Test repeated images are rejected."""
    with pytest.raises(UsageError):
        Permutation((0, 0, 1))


def test_composition_order() -> None:
    """Test a * b applies a first."""
    a, b = cyc(3, (0, 1)), cyc(3, (1, 2))
    assert (a * b)(0) == b(a(0)) == 2


def test_inverse_cancels(rng: np.random.Generator) -> None:
    """Test (a b) b^-1 = a for random permutations."""
    for _ in range(20):
        a, b = random_permutation(rng, 9), random_permutation(rng, 9)
        assert (a * b) * b.inverse() == a


def test_associative(rng: np.random.Generator) -> None:
    """Test (a b) c = a (b c)."""
    a, b, c = (random_permutation(rng, 7) for _ in range(3))
    assert (a * b) * c == a * (b * c)


def test_cycle_type_and_order() -> None:
    """Test a 2-cycle times a disjoint 3-cycle."""
    g = cyc(6, (0, 1), (2, 3, 4))
    assert g.cycle_type() == (3, 2, 1)
    assert g.order() == 6
    assert g.power(3) == cyc(6, (0, 1))


def test_power_matches_repeated_product(rng: np.random.Generator) -> None:
    """Test power(k) against k-fold multiplication."""
    g = random_permutation(rng, 8)
    product = Permutation.identity(8)
    for _ in range(5):
        product = product * g
    assert g.power(5) == product


def test_product_degree_mismatch() -> None:
    """Test multiplying permutations of different degree."""
    with pytest.raises(UsageError):
        cyc(3, (0, 1)) * cyc(4, (0, 1))


def test_single_orbit() -> None:
    """Test (0 1), (1 2) on 3 points."""
    assert orbits([cyc(3, (0, 1)), cyc(3, (1, 2))]) == [[0, 1, 2]]


def test_orbits_no_generators() -> None:
    """Test the trivial group has singleton orbits."""
    assert orbits([], 4) == [[0], [1], [2], [3]]


def test_orbits_degree_mismatch() -> None:
    """Test generators on different point sets."""
    with pytest.raises(UsageError):
        orbits([cyc(3, (0, 1)), cyc(4, (0, 1))])


def test_redundant_generator(rng: np.random.Generator) -> None:
    """Test adding a product of generators leaves the orbits unchanged."""
    gens = [cyc(8, (0, 1, 2)), cyc(8, (4, 5)), cyc(8, (2, 3))]
    assert orbits([*gens, gens[0] * gens[2]]) == orbits(gens) == [[0, 1, 2, 3], [4, 5], [6], [7]]


def test_two_transitive_symmetric() -> None:
    """Test S5 is 2-transitive."""
    assert two_transitive([cyc(5, (0, 1, 2, 3, 4)), cyc(5, (0, 1))])


def test_two_transitive_cyclic() -> None:
    """Test a 4-cycle is not."""
    assert not two_transitive([cyc(4, (0, 1, 2, 3))])


def test_dihedral_pentagon() -> None:
    """Test the dihedral group of order 10 is transitive but not 2-transitive."""
    gens = [cyc(5, (0, 1, 2, 3, 4)), cyc(5, (1, 4), (2, 3))]
    assert len(orbits(gens)) == 1
    assert not two_transitive(gens)


def test_affine_group_of_order_twenty() -> None:
    """Test x -> 2x + 1 mod 5 generates a sharply 2-transitive group."""
    gens = [cyc(5, (0, 1, 2, 3, 4)), Permutation(tuple((2 * i) % 5 for i in range(5)))]
    assert two_transitive(gens)


def test_transposition_generator() -> None:
    """Test a generator that is a transposition."""
    assert find_transposition([cyc(5, (0, 1, 2, 3, 4)), cyc(5, (0, 1))]) == cyc(5, (0, 1))


def test_transposition_odd_order() -> None:
    """Test a group of odd order has none."""
    assert find_transposition([cyc(3, (0, 1, 2))], word_budget=50) is NOT_FOUND


def test_power_of_generator() -> None:
    """Test a 2-cycle times an odd cycle yields the 2-cycle."""
    found = find_transposition([cyc(7, (0, 1), (2, 3, 4, 5, 6))])
    assert found == cyc(7, (0, 1))


def test_random_word(rng: np.random.Generator) -> None:
    """Test a transposition reached only through products."""
    gens = [cyc(4, (0, 1, 2, 3)), cyc(4, (0, 1), (2, 3))]
    found = find_transposition(gens, word_budget=500, rng=rng)
    assert isinstance(found, Permutation)
    assert found.is_transposition()


def test_transposition_no_generators() -> None:
    """Test the empty list."""
    assert find_transposition([]) is NOT_FOUND


def test_s4() -> None:
    """Test <(0 1), (0 1 2 3)> has order 24."""
    assert schreier_sims_order([cyc(4, (0, 1)), cyc(4, (0, 1, 2, 3))]) == 24


def test_cyclic_seven() -> None:
    """Test a 7-cycle."""
    assert schreier_sims_order([cyc(7, (0, 1, 2, 3, 4, 5, 6))]) == 7


def test_schreier_sims_too_large() -> None:
    """Test n > 64 is unsupported."""
    with pytest.raises(UnsupportedError):
        schreier_sims_order([Permutation.identity(65)])


def test_s5() -> None:
    """Test {(0 1 2 3 4), (0 1)} is certified with order 120."""
    report = certify_symmetric([cyc(5, (0, 1, 2, 3, 4)), cyc(5, (0, 1))])
    assert report.certified_symmetric
    assert report.order == 120
    assert report.transposition == [1, 0, 2, 3, 4]


def test_cyclic_not_certified() -> None:
    """Test a single 5-cycle is transitive only."""
    report = certify_symmetric([cyc(5, (0, 1, 2, 3, 4))], word_budget=50)
    assert report.transitive
    assert not report.two_transitive
    assert not report.certified_symmetric
    assert report.order == 5


def test_large_degree_order() -> None:
    """Test a certified group on 70 points reports 70!."""
    n = 70
    report = certify_symmetric([cyc(n, tuple(range(n))), cyc(n, (0, 1))])
    assert report.certified_symmetric
    assert report.order == math.factorial(n)


def test_report_invariant() -> None:
    """Test a report cannot claim certification without its parts."""
    with pytest.raises(ValidationError):
        GroupReport(
            n=3,
            generator_count=1,
            transitive=True,
            two_transitive=False,
            has_transposition=True,
            certified_symmetric=True,
        )
