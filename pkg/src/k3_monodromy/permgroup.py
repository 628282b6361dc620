"""Permutation groups generated by monodromy permutations.

A group is certified to be the full symmetric group once it is transitive, 2-transitive
and contains a transposition. Points are labelled 0..n-1.
"""

import logging
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from functools import reduce

import numpy as np
from pydantic import BaseModel, model_validator
from sympy.combinatorics import Permutation as SympyPermutation
from sympy.combinatorics import PermutationGroup

from k3_monodromy.config import settings
from k3_monodromy.constants import SCHREIER_SIMS_MAX_DEGREE
from k3_monodromy.errors import UnsupportedError, UsageError
from k3_monodromy.exact import make_rng

logger = logging.getLogger(__name__)

MAX_WORD_LENGTH = 24


@dataclass(frozen=True)
class Permutation:
    """Bijection of {0, ..., n-1}; the product a * b applies a first, then b."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise UsageError(f"Not a permutation of 0..{len(images) - 1}: {list(images)}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Sequence[Sequence[int]]) -> "Permutation":
        """Build from disjoint cycles, e.g. ``from_cycles(4, [(0, 1), (2, 3)])``."""
        images = list(range(n))
        for cycle in cycles:
            for k, point in enumerate(cycle):
                images[point] = cycle[(k + 1) % len(cycle)]
        return cls(tuple(images))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, point: int) -> int:
        return self.images[point]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.degree != other.degree:
            raise UsageError(f"Degree mismatch: {self.degree} != {other.degree}")
        return Permutation(tuple(other.images[i] for i in self.images))

    def inverse(self) -> "Permutation":
        images = [0] * self.degree
        for i, j in enumerate(self.images):
            images[j] = i
        return Permutation(tuple(images))

    def power(self, k: int) -> "Permutation":
        """k-th power, computed cycle by cycle."""
        images = list(range(self.degree))
        for cycle in self.cycles():
            length = len(cycle)
            for pos, point in enumerate(cycle):
                images[point] = cycle[(pos + k) % length]
        return Permutation(tuple(images))

    def cycles(self) -> list[tuple[int, ...]]:
        """All cycles including fixed points, each starting at its smallest point."""
        seen = [False] * self.degree
        result = []
        for start in range(self.degree):
            if seen[start]:
                continue
            cycle = []
            point = start
            while not seen[point]:
                seen[point] = True
                cycle.append(point)
                point = self.images[point]
            result.append(tuple(cycle))
        return result

    def cycle_type(self) -> tuple[int, ...]:
        """Cycle lengths in decreasing order."""
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))

    def order(self) -> int:
        return reduce(math.lcm, self.cycle_type(), 1)

    def is_transposition(self) -> bool:
        return Counter(self.cycle_type()) == Counter({2: 1, 1: self.degree - 2})

    def to_json(self) -> list[int]:
        return list(self.images)


class NotFound:
    """Marker for a search that exhausted its budget; not a proof of absence."""

    def __repr__(self) -> str:
        return "NotFound"


NOT_FOUND = NotFound()


def _degree(gens: Sequence[Permutation], degree: int | None) -> int:
    degrees = {g.degree for g in gens}
    if degree is not None:
        degrees.add(degree)
    if len(degrees) > 1:
        raise UsageError(f"Generators act on different numbers of points: {sorted(degrees)}")
    if not degrees:
        raise UsageError("The degree is needed when there are no generators")
    return degrees.pop()


def orbits(gens: Sequence[Permutation], degree: int | None = None) -> list[list[int]]:
    """Orbit partition of {0, ..., n-1} by breadth-first closure, sorted by smallest point.

    Raises:
        UsageError: If the generators have different degrees.
    """
    n = _degree(gens, degree)
    label = [-1] * n
    result: list[list[int]] = []
    for start in range(n):
        if label[start] >= 0:
            continue
        label[start] = len(result)
        orbit, frontier = [start], [start]
        while frontier:
            nxt = []
            for point in frontier:
                for g in gens:
                    image = g.images[point]
                    if label[image] < 0:
                        label[image] = len(result)
                        orbit.append(image)
                        nxt.append(image)
            frontier = nxt
        result.append(sorted(orbit))
    return result


def is_transitive(gens: Sequence[Permutation], degree: int | None = None) -> bool:
    return len(orbits(gens, degree)) == 1


def two_transitive(gens: Sequence[Permutation], degree: int | None = None) -> bool:
    """True when the group is transitive on ordered pairs of distinct points.

    Pair (i, j) is encoded as i·n + j and the closure runs over numpy index arrays.
    """
    n = _degree(gens, degree)
    if n < 2:
        return n == 1
    if not gens:
        return False
    idx_i, idx_j = np.divmod(np.arange(n * n), n)
    maps = [np.asarray(g.images)[idx_i] * n + np.asarray(g.images)[idx_j] for g in gens]
    visited = np.zeros(n * n, dtype=bool)
    visited[1] = True
    frontier = np.array([1])
    count = 1
    while frontier.size:
        images = np.unique(np.concatenate([m[frontier] for m in maps]))
        new = images[~visited[images]]
        visited[new] = True
        count += new.size
        frontier = new
    logger.debug(f"Pair orbit of (0, 1) has size {count} of {n * (n - 1)}")
    return count == n * (n - 1)


def _transposition_power(g: Permutation) -> Permutation | None:
    """A power of g that is a transposition, if one exists.

    g^k is a transposition exactly when g has a single 2-cycle, every other cycle length
    is odd and k is the lcm of the other lengths.
    """
    lengths = g.cycle_type()
    counts = Counter(lengths)
    if counts.get(2, 0) != 1 or any(length % 2 == 0 for length in lengths if length != 2):
        return None
    k = reduce(math.lcm, (length for length in lengths if length != 2), 1)
    return g.power(k)


def find_transposition(
    gens: Sequence[Permutation],
    word_budget: int | None = None,
    rng: np.random.Generator | None = None,
) -> Permutation | NotFound:
    """Search generators, their powers, then random words for a transposition."""
    if not gens:
        return NOT_FOUND
    budget = word_budget if word_budget is not None else settings.word_budget
    rng = rng if rng is not None else make_rng(0)
    for g in gens:
        if g.is_transposition():
            return g
    for g in gens:
        power = _transposition_power(g)
        if power is not None:
            logger.debug(f"Transposition found as a power of a generator of cycle type {g.cycle_type()[:4]}")
            return power
    letters = [*gens, *(g.inverse() for g in gens)]
    for attempt in range(budget):
        length = int(rng.integers(2, MAX_WORD_LENGTH + 1))
        word = reduce(Permutation.__mul__, (letters[int(i)] for i in rng.integers(0, len(letters), size=length)))
        power = _transposition_power(word)
        if power is not None:
            logger.debug(f"Transposition found from a random word after {attempt + 1} words")
            return power
    logger.info(f"No transposition found within {budget} random words")
    return NOT_FOUND


def schreier_sims_order(gens: Sequence[Permutation], degree: int | None = None) -> int:
    """Exact group order from a base and strong generating set.

    Raises:
        UnsupportedError: If the degree exceeds the supported bound.
    """
    n = _degree(gens, degree)
    if n > SCHREIER_SIMS_MAX_DEGREE:
        raise UnsupportedError(f"Group orders are computed for degree <= {SCHREIER_SIMS_MAX_DEGREE}, got {n}")
    if not gens:
        return 1
    group = PermutationGroup([SympyPermutation(list(g.images)) for g in gens])
    return int(group.order())


class GroupReport(BaseModel):
    """Outcome of the symmetric-group certification chain."""

    n: int
    generator_count: int
    transitive: bool
    two_transitive: bool
    has_transposition: bool
    certified_symmetric: bool
    order: int | None = None
    transposition: list[int] | None = None

    @model_validator(mode="after")
    def check_certification(self) -> "GroupReport":
        if self.certified_symmetric and not (self.transitive and self.two_transitive and self.has_transposition):
            raise ValueError("certified_symmetric requires transitivity, 2-transitivity and a transposition")
        return self


def certify_symmetric(
    gens: Sequence[Permutation],
    degree: int | None = None,
    word_budget: int | None = None,
    rng: np.random.Generator | None = None,
) -> GroupReport:
    """Run transitivity, 2-transitivity and the transposition search.

    The order is exact from Schreier-Sims for n <= 64, n! for larger certified groups and
    left empty otherwise.
    """
    n = _degree(gens, degree)
    transitive = is_transitive(gens, n)
    doubly = transitive and two_transitive(gens, n)
    found = find_transposition(gens, word_budget, rng)
    has_transposition = isinstance(found, Permutation)
    certified = transitive and doubly and has_transposition
    if n <= SCHREIER_SIMS_MAX_DEGREE:
        order: int | None = schreier_sims_order(gens, n)
    else:
        order = math.factorial(n) if certified else None
    logger.info(
        f"Group on {n} points: transitive={transitive}, 2-transitive={doubly}, "
        f"transposition={has_transposition}, certified={certified}"
    )
    return GroupReport(
        n=n,
        generator_count=len(gens),
        transitive=transitive,
        two_transitive=doubly,
        has_transposition=has_transposition,
        certified_symmetric=certified,
        order=order,
        transposition=found.to_json() if isinstance(found, Permutation) else None,
    )
