"""Exact rational linear algebra and seeded random draws.

Matrices are handled as sympy ``DomainMatrix`` objects over ``QQ``. Dense input is
given as rows of ``Fraction``; sparse input as ``{row: {col: Fraction}}``.
"""

import logging
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction

import numpy as np
import sympy
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from k3_monodromy.constants import RATIONAL_BOUND
from k3_monodromy.errors import UsageError

logger = logging.getLogger(__name__)

RationalLike = Fraction | int | str | sympy.Rational


def to_fraction(value: RationalLike) -> Fraction:
    """Convert an int, string, Fraction or sympy Rational to a Fraction.

    Raises:
        UsageError: If the value is not an exact rational.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise UsageError(f"Not a rational number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise UsageError(f"Not a rational number: {value!r}") from e
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    raise UsageError(f"Not a rational number: {value!r}")


def to_sympy(value: Fraction) -> sympy.Rational:
    """Convert a Fraction to a sympy Rational."""
    return sympy.Rational(value.numerator, value.denominator)


def _to_qq(value: Fraction) -> object:
    return QQ(value.numerator, value.denominator)


def _from_qq(value: object) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))  # type: ignore[attr-defined]


def make_rng(seed: int) -> np.random.Generator:
    """Create the root generator for a run from a 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def spawn_rng(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Split independent child generators off ``rng``."""
    return rng.spawn(count)


def random_rational(rng: np.random.Generator, bound: int = RATIONAL_BOUND) -> Fraction:
    """Draw a rational whose numerator and denominator lie in [-bound, bound] without 0."""
    num, den = (int(v) for v in rng.integers(1, bound + 1, size=2))
    signs = rng.integers(0, 2, size=2)
    num = -num if signs[0] else num
    den = -den if signs[1] else den
    return Fraction(num, den)


def random_rationals(rng: np.random.Generator, count: int, bound: int = RATIONAL_BOUND) -> list[Fraction]:
    """Draw ``count`` independent rationals with :func:`random_rational`."""
    return [random_rational(rng, bound) for _ in range(count)]


def random_small_rational(rng: np.random.Generator) -> Fraction:
    """Draw a rational with numerator in [-9, 9] and denominator in [1, 9]."""
    return Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10)))


def dense_matrix(rows: Sequence[Sequence[RationalLike]], ncols: int | None = None) -> DomainMatrix:
    """Build a dense DomainMatrix over QQ."""
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    data = [[_to_qq(to_fraction(v)) for v in row] for row in rows]
    for row in data:
        if len(row) != ncols:
            raise UsageError(f"Row of length {len(row)} in a matrix with {ncols} columns")
    return DomainMatrix(data, (len(rows), ncols), QQ)


def sparse_matrix(entries: Mapping[int, Mapping[int, Fraction]], shape: tuple[int, int]) -> DomainMatrix:
    """Build a sparse DomainMatrix over QQ from ``{row: {col: value}}``."""
    data = {i: {j: _to_qq(v) for j, v in row.items() if v} for i, row in entries.items()}
    return DomainMatrix({i: row for i, row in data.items() if row}, shape, QQ)


def rank(matrix: DomainMatrix | Sequence[Sequence[RationalLike]]) -> int:
    """Exact rank of a rational matrix."""
    if not isinstance(matrix, DomainMatrix):
        matrix = dense_matrix(matrix)
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        return 0
    return int(matrix.rank())


def nullspace(rows: Sequence[Sequence[RationalLike]], ncols: int) -> list[list[Fraction]]:
    """Basis of the right kernel ``{v : rows · v = 0}``.

    Args:
        rows: Matrix rows, each of length ``ncols``
        ncols: Number of unknowns

    Returns:
        Kernel basis vectors (an empty list for a trivial kernel)
    """
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    kernel = dense_matrix(rows, ncols).nullspace()
    return [[_from_qq(v) for v in row] for row in kernel.to_list()]


def solve_affine(rows: Sequence[Sequence[RationalLike]], rhs: Sequence[RationalLike]) -> list[Fraction] | None:
    """Particular solution of ``rows · v = rhs`` or None when inconsistent."""
    ncols = len(rows[0])
    augmented = [[*row, -to_fraction(b)] for row, b in zip(rows, rhs, strict=True)]
    kernel = nullspace(augmented, ncols + 1)
    for vector in kernel:
        if vector[-1] != 0:
            scale = vector[-1]
            return [v / scale for v in vector[:-1]]
    return None


def combine(vectors: Sequence[Sequence[Fraction]], weights: Iterable[Fraction]) -> list[Fraction]:
    """Linear combination ``Σ weight_i · vector_i``."""
    result = [Fraction(0)] * len(vectors[0])
    for vector, weight in zip(vectors, weights, strict=True):
        result = [r + weight * v for r, v in zip(result, vector, strict=True)]
    return result


def determinant(rows: Sequence[Sequence[RationalLike]]) -> Fraction:
    """Exact determinant of a square rational matrix."""
    return _from_qq(dense_matrix(rows).det())
