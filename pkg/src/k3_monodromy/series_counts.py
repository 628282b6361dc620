"""Exact truncated power series: Yau-Zaslow counts and Beauville multiplicities."""

import logging
import math
from dataclasses import dataclass
from functools import cache

from k3_monodromy.errors import DomainError, InternalInconsistencyError, UsageError

logger = logging.getLogger(__name__)

DISCRIMINANT_EXPONENT = 24


@dataclass(frozen=True)
class IntSeries:
    """Power series in q with exact integer coefficients, valid for exponents 0..order."""

    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise UsageError("IntSeries needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def one(cls, order: int) -> "IntSeries":
        """Constant series 1 truncated at ``order``."""
        return cls((1,) + (0,) * order)

    @classmethod
    def monomial(cls, exponent: int, order: int, coeff: int = 1) -> "IntSeries":
        """Series ``coeff · q^exponent`` truncated at ``order``."""
        coeffs = [0] * (order + 1)
        if exponent <= order:
            coeffs[exponent] = coeff
        return cls(tuple(coeffs))

    def _check(self, other: "IntSeries") -> None:
        if self.order != other.order:
            raise UsageError(f"Series order mismatch: {self.order} != {other.order}")

    def __add__(self, other: "IntSeries") -> "IntSeries":
        self._check(other)
        return IntSeries(tuple(a + b for a, b in zip(self.coeffs, other.coeffs, strict=True)))

    def __sub__(self, other: "IntSeries") -> "IntSeries":
        self._check(other)
        return IntSeries(tuple(a - b for a, b in zip(self.coeffs, other.coeffs, strict=True)))

    def __mul__(self, other: "IntSeries") -> "IntSeries":
        return series_mul(self, other)

    def scale(self, factor: int) -> "IntSeries":
        return IntSeries(tuple(factor * c for c in self.coeffs))

    def shift(self, k: int) -> "IntSeries":
        """Multiply by q^k, dropping terms past the order."""
        if k < 0:
            raise UsageError("Negative shifts would need coefficients below the constant term")
        return IntSeries(((0,) * k + self.coeffs)[: self.order + 1])


def series_mul(a: IntSeries, b: IntSeries) -> IntSeries:
    """Cauchy product of two series of the same order.

    Raises:
        UsageError: If the orders differ.
    """
    a._check(b)
    n = a.order
    result = [0] * (n + 1)
    for i, ai in enumerate(a.coeffs):
        if ai == 0:
            continue
        for j in range(n + 1 - i):
            result[i + j] += ai * b.coeffs[j]
    return IntSeries(tuple(result))


def euler_factor_power(n_max: int, exponent: int) -> IntSeries:
    """Expand ∏_{n≥1} (1 - q^n)^exponent up to q^n_max.

    Negative exponents multiply by the geometric series 1/(1 - q^n) repeatedly, positive
    ones use the binomial expansion of each factor.

    Args:
        n_max: Truncation order
        exponent: Power applied to every Euler factor

    Returns:
        The truncated product
    """
    if n_max < 0:
        raise UsageError(f"Truncation order must be non-negative, got {n_max}")
    coeffs = [0] * (n_max + 1)
    coeffs[0] = 1
    for n in range(1, n_max + 1):
        if exponent < 0:
            for _ in range(-exponent):
                # in-place division by (1 - q^n)
                for i in range(n, n_max + 1):
                    coeffs[i] += coeffs[i - n]
        elif exponent > 0:
            factor = [0] * (n_max + 1)
            for k in range(min(exponent, n_max // n) + 1):
                factor[n * k] = (-1) ** k * math.comb(exponent, k)
            coeffs = list(series_mul(IntSeries(tuple(coeffs)), IntSeries(tuple(factor))).coeffs)
    return IntSeries(tuple(coeffs))


def discriminant_series(order: int) -> IntSeries:
    """Δ(q) = q ∏ (1 - q^n)^24 truncated at ``order``."""
    if order < 0:
        raise UsageError(f"Truncation order must be non-negative, got {order}")
    return euler_factor_power(order, DISCRIMINANT_EXPONENT).shift(1)


@cache
def yau_zaslow_series(g_max: int) -> IntSeries:
    """Generating series Σ n_g q^g = q/Δ(q) truncated at ``g_max``."""
    return euler_factor_power(g_max, -DISCRIMINANT_EXPONENT)


def yau_zaslow_counts(g_max: int) -> list[int]:
    """Return [n_0, ..., n_g_max], the counts of rational curves in genus-g linear systems.

    Example:
        >>> yau_zaslow_counts(4)
        [1, 24, 324, 3200, 25650]
    """
    if g_max < 0:
        raise UsageError(f"g_max must be non-negative, got {g_max}")
    counts = list(yau_zaslow_series(g_max).coeffs)
    logger.debug(f"Yau-Zaslow counts up to genus {g_max}: {counts[-1]} at the top")
    return counts


def genus_two_count() -> int:
    """n_2, the number of rational curves in a genus-2 linear system."""
    return yau_zaslow_counts(2)[2]


def plucker_count(d: int) -> int:
    """Number of bitangents of a smooth plane curve of degree d."""
    if d < 1:
        raise UsageError(f"Degree must be positive, got {d}")
    return d * (d - 2) * (d - 3) * (d + 3) // 2


@dataclass(frozen=True)
class CuspType:
    """Singularity type x^p - y^q."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.q < 1:
            raise DomainError(f"Cusp exponents must be positive, got ({self.p}, {self.q})")
        if math.gcd(self.p, self.q) != 1:
            raise DomainError(f"Cusp exponents must be coprime, got ({self.p}, {self.q})")


def beauville_multiplicity(c: CuspType) -> int:
    """Multiplicity binom(p+q, q)/(p+q) of a curve with a singularity of type x^p - y^q.

    Raises:
        InternalInconsistencyError: If the division is not exact.
    """
    total = c.p + c.q
    numerator = math.comb(total, c.q)
    value, remainder = divmod(numerator, total)
    if remainder:
        raise InternalInconsistencyError(f"binom({total}, {c.q}) = {numerator} is not divisible by {total}")
    return value
