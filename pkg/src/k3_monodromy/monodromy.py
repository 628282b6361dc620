"""Bitangent lines of plane curves and the monodromy of their fibres.

A line y = m·x + c in the working chart (z = 1) is bitangent to f when
g(x) = f(x, m·x + c, 1) is divisible by (x^2 - e1·x + e2)^2. The remainder of g modulo
that square has degree at most 3 and its four coefficients are the equations in the
unknowns (e1, e2, m, c). They are linear in the coefficients of f, so every curve of a
given degree is a parameter value of one shared LinearFamily and a monodromy loop is a
closed path of curve coefficients.
"""

import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from functools import cached_property, lru_cache
from typing import Any

import numpy as np
import sympy
from pydantic import BaseModel

from k3_monodromy.config import settings
from k3_monodromy.constants import (
    CHART_CONDITION_MAX,
    CHART_RETRIES,
    CIRCLE_VERTICES,
    COLLISION_REACH,
    FILL_CONFIRM_LOOPS,
    FILL_STALL_LIMIT,
    HUNT_CANDIDATES,
    HUNT_RADIUS,
    HUNT_RETRIES,
    ISOLATION_RATIO,
    LINE_RESIDUAL_TOL,
    MATCH_TOL_SHRINK,
    ORDER_STABLE_WINDOW,
    PENCIL_SAMPLES,
    PERTURB_SCALE,
    RETRACK_ATTEMPTS,
    SCHREIER_SIMS_MAX_DEGREE,
    SECANT_ITERS,
    SECANT_PROBE,
)
from k3_monodromy.errors import DomainError, LoopRejectedError, PathFailureError, UnsupportedError, UsageError
from k3_monodromy.exact import make_rng, random_rationals
from k3_monodromy.homotopy import (
    LinearFamily,
    MPoly,
    ParameterHomotopy,
    PathResult,
    PathStatus,
    PolySystem,
    SolutionSet,
    TermMatrix,
    TrackerConfig,
    dedupe,
    match_fibres,
    solve,
    track,
)
from k3_monodromy.local_rings import parse_polynomial
from k3_monodromy.permgroup import GroupReport, Permutation, certify_symmetric, schreier_sims_order
from k3_monodromy.series_counts import plucker_count

logger = logging.getLogger(__name__)

X, Y, Z = sympy.symbols("x y z")
E1, E2, M, C = sympy.symbols("e1 e2 m c")
UNKNOWNS = (E1, E2, M, C)

METHODS = ("auto", "total_degree", "monodromy")
SUPPORTED_DEGREES = (4, 5, 6)


@lru_cache(maxsize=None)
def plane_monomials(degree: int) -> tuple[tuple[int, int, int], ...]:
    """Exponents (i, j, k) of x^i·y^j·z^k with i + j + k = degree, in descending lex order."""
    return tuple((i, j, degree - i - j) for i in range(degree, -1, -1) for j in range(degree - i, -1, -1))


@dataclass(frozen=True, eq=False)
class PlaneCurve:
    """Homogeneous polynomial in (x, y, z) with dense complex coefficients."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise UsageError(f"Curve degree must be positive, got {self.degree}")
        coeffs = np.asarray(self.coeffs, dtype=complex)
        expected = len(plane_monomials(self.degree))
        if coeffs.shape != (expected,):
            raise UsageError(f"A degree {self.degree} curve has {expected} coefficients, got shape {coeffs.shape}")
        if not np.any(coeffs):
            raise DomainError("The curve polynomial is identically zero")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_sympy(cls, expr: sympy.Expr) -> "PlaneCurve":
        poly = sympy.Poly(sympy.expand(expr), X, Y, Z)
        if poly.is_zero:
            raise DomainError("The curve polynomial is identically zero")
        if not poly.is_homogeneous:
            raise UsageError(f"Curve polynomial is not homogeneous: {expr}")
        degree = poly.total_degree()
        index = {e: k for k, e in enumerate(plane_monomials(degree))}
        coeffs = np.zeros(len(index), dtype=complex)
        for exponent, coeff in poly.terms():
            coeffs[index[exponent]] = complex(coeff)
        return cls(degree, coeffs)

    @classmethod
    def parse(cls, text: str) -> "PlaneCurve":
        """Parse a homogeneous polynomial in x, y, z with rational coefficients."""
        return cls.from_sympy(parse_polynomial(text, (X, Y, Z)).as_expr())

    @classmethod
    def random(cls, degree: int, rng: np.random.Generator) -> "PlaneCurve":
        """Curve with standard complex normal coefficients."""
        n = len(plane_monomials(degree))
        return cls(degree, rng.normal(size=n) + 1j * rng.normal(size=n))

    @classmethod
    def random_rational(cls, degree: int, rng: np.random.Generator) -> "PlaneCurve":
        n = len(plane_monomials(degree))
        return cls(degree, np.array([float(v) for v in random_rationals(rng, n)], dtype=complex))

    @cached_property
    def _system(self) -> PolySystem:
        return PolySystem((MPoly(3, dict(zip(plane_monomials(self.degree), self.coeffs, strict=True))),))

    def evaluate(self, v: Sequence[complex] | np.ndarray) -> complex:
        return complex(self._system.evaluate(v)[0])

    def gradient(self, v: Sequence[complex] | np.ndarray) -> np.ndarray:
        return self._system.jacobian(v)[0]

    def normalized(self) -> "PlaneCurve":
        return PlaneCurve(self.degree, self.coeffs / np.linalg.norm(self.coeffs))

    def transformed(self, matrix: np.ndarray) -> "PlaneCurve":
        """The curve v ↦ f(M·v)."""
        one = MPoly(3, {(0, 0, 0): 1.0})
        forms = [MPoly(3, {(1, 0, 0): row[0], (0, 1, 0): row[1], (0, 0, 1): row[2]}) for row in matrix]
        powers = []
        for form in forms:
            table = [one]
            for _ in range(self.degree):
                table.append(table[-1] * form)
            powers.append(table)
        total = MPoly(3, {})
        for (i, j, k), coeff in zip(plane_monomials(self.degree), self.coeffs, strict=True):
            if coeff != 0:
                total = total + (powers[0][i] * powers[1][j] * powers[2][k]).scale(coeff)
        coeffs = np.array([total.terms.get(e, 0j) for e in plane_monomials(self.degree)], dtype=complex)
        return PlaneCurve(self.degree, coeffs)

    def looks_smooth(self, rng: np.random.Generator, lines: int = 3) -> bool:
        """Spot check that the gradient does not vanish where random lines meet the curve."""
        d = self.degree
        nodes = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))
        scale = float(np.linalg.norm(self.coeffs))
        for _ in range(lines):
            a = rng.normal(size=3) + 1j * rng.normal(size=3)
            b = rng.normal(size=3) + 1j * rng.normal(size=3)
            values = np.array([self.evaluate(a + t * b) for t in nodes])
            ascending = np.fft.fft(values) / (d + 1)
            for t in np.roots(ascending[::-1]):
                v = a + t * b
                if np.linalg.norm(self.gradient(v)) < 1e-8 * scale * np.linalg.norm(v) ** (d - 1):
                    return False
        return True

    def to_json(self) -> dict[str, object]:
        return {
            "degree": self.degree,
            "monomials": [list(e) for e in plane_monomials(self.degree)],
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }


def _power_remainders(degree: int) -> list[list[sympy.Expr]]:
    """Coefficients (of 1, x, x^2, x^3) of x^k mod (x^2 - e1·x + e2)^2 for k = 0..degree."""
    # x^4 = 2·e1·x^3 - (e1^2 + 2·e2)·x^2 + 2·e1·e2·x - e2^2 modulo the square
    reduction = [-(E2**2), 2 * E1 * E2, -(E1**2 + 2 * E2), 2 * E1]
    powers: list[list[sympy.Expr]] = [[sympy.Integer(int(i == k)) for i in range(4)] for k in range(4)]
    for _ in range(4, degree + 1):
        prev = powers[-1]
        shifted = [sympy.Integer(0), prev[0], prev[1], prev[2]]
        powers.append([sympy.expand(shifted[i] + prev[3] * reduction[i]) for i in range(4)])
    return powers


@lru_cache(maxsize=None)
def bitangent_family(degree: int) -> LinearFamily:
    """The bitangent equations of all degree-d curves as a family linear in the coefficients.

    For the monomial x^i·y^j·z^k the contribution to g is x^i·(m·x + c)^j, reduced term by
    term with the table of x^k remainders.
    """
    if degree < 3:
        raise UsageError(f"Bitangents need a curve of degree at least 3, got {degree}")
    powers = _power_remainders(degree)
    rows: list[list[sympy.Poly]] = []
    for i, j, _ in plane_monomials(degree):
        coeffs: list[sympy.Expr] = [sympy.Integer(0)] * 4
        for a in range(j + 1):
            weight = sympy.binomial(j, a) * M**a * C ** (j - a)
            for k in range(4):
                coeffs[k] += weight * powers[i + a][k]
        rows.append([sympy.Poly(sympy.expand(cf), *UNKNOWNS) for cf in coeffs])
    exponents = sorted({e for row in rows for p in row for e, c in p.terms() if c != 0})
    terms = TermMatrix(exponents, len(UNKNOWNS))
    basis = np.zeros((len(rows), 4, len(terms)), dtype=complex)
    for n, row in enumerate(rows):
        for k, poly in enumerate(row):
            for exponent, coeff in poly.terms():
                if coeff != 0:
                    basis[n, k, terms.index[exponent]] = complex(coeff)
    logger.debug(f"Bitangent family of degree {degree}: {len(terms)} monomials in (e1, e2, m, c)")
    return LinearFamily(terms, basis)


@dataclass(frozen=True, eq=False)
class BitangentSystem:
    """Four equations in (e1, e2, m, c) for the bitangents of one curve."""

    curve: PlaneCurve
    family: LinearFamily

    @cached_property
    def system(self) -> PolySystem:
        return self.family.system(self.curve.coeffs)

    def residual(self, point: Sequence[complex] | np.ndarray) -> float:
        return self.system.residual(point)


def bitangent_system(curve: PlaneCurve) -> BitangentSystem:
    """Bitangent equations of ``curve`` in its own coordinates.

    Raises:
        UsageError: If the degree is below 3.
    """
    return BitangentSystem(curve, bitangent_family(curve.degree))


def random_chart(rng: np.random.Generator) -> np.ndarray:
    """Well-conditioned random complex change of coordinates."""
    for _ in range(100):
        matrix = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        if np.linalg.cond(matrix) < CHART_CONDITION_MAX:
            return matrix
    raise DomainError("Could not draw a well-conditioned chart")


@dataclass(frozen=True, eq=False)
class BitangentFibre:
    """All bitangents of a curve, solved in a random working chart.

    ``working`` is the curve v ↦ f(chart·v) scaled to unit coefficient norm; solutions are
    sorted lexicographically and their order fixes the labels used by every loop.
    """

    curve: PlaneCurve
    chart: np.ndarray
    working: PlaneCurve
    solutions: SolutionSet

    def __len__(self) -> int:
        return len(self.solutions)

    @property
    def degree(self) -> int:
        return self.curve.degree

    @property
    def params(self) -> np.ndarray:
        return self.working.coeffs

    @property
    def points(self) -> np.ndarray:
        return self.solutions.array().reshape(-1, len(UNKNOWNS))

    def lines(self) -> np.ndarray:
        """Line coefficients (a, b, c) of a·x + b·y + c·z = 0 in the original coordinates."""
        inverse = np.linalg.inv(self.chart)
        result = []
        for _, _, m, c in self.points:
            line = np.array([m, -1.0, c]) @ inverse
            result.append(line / line[np.argmax(np.abs(line))])
        return np.array(result, dtype=complex).reshape(-1, 3)

    def tangency_points(self) -> np.ndarray:
        """The two tangency points of each bitangent in original coordinates, shape (n, 2, 3)."""
        result = []
        for e1, e2, m, c in self.points:
            pair = [self.chart @ np.array([x, m * x + c, 1.0]) for x in np.roots([1.0, -e1, e2])]
            result.append(pair)
        return np.array(result, dtype=complex).reshape(-1, 2, 3)

    def to_json(self) -> dict[str, object]:
        return {
            "degree": self.degree,
            "count": len(self),
            "chart": [[[float(v.real), float(v.imag)] for v in row] for row in self.chart],
            "solutions": self.solutions.to_json(),
            "lines": [[[float(v.real), float(v.imag)] for v in line] for line in self.lines()],
        }


def bitangent_lines(fibre: BitangentFibre) -> np.ndarray:
    """Bitangent lines of the original curve, one row (a, b, c) per solution."""
    return fibre.lines()


def _contains(points: Sequence[np.ndarray], point: np.ndarray, tol: float) -> bool:
    scale = 1 + float(np.linalg.norm(point))
    return any(float(np.linalg.norm(point - q)) <= tol * scale for q in points)


def _regular(solutions: SolutionSet, cfg: TrackerConfig) -> SolutionSet:
    """Finite, well-conditioned, distinct solutions."""
    finite = solutions.finite()
    keep = [i for i, suspect in enumerate(finite.suspect) if not suspect]
    return dedupe(finite.subset(keep), cfg.dedupe_tol)


def _perturbed(params: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    direction = np.array([float(v) for v in random_rationals(rng, len(params))])
    return params + PERTURB_SCALE * np.linalg.norm(params) * direction / np.linalg.norm(direction)


def _seeded_parameters(
    family: LinearFamily, target: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """A curve near ``target`` together with one of its bitangents.

    A random line and tangency pair are drawn first; the equations are linear in the curve
    coefficients, so the minimum-norm correction making them hold is a least-squares solve.
    """
    x1, x2, m, c = rng.normal(size=4) + 1j * rng.normal(size=4)
    point = np.array([x1 + x2, x1 * x2, m, c])
    mons = family.terms.monomials(point)
    linear = (family.basis @ mons).T
    shift, *_ = np.linalg.lstsq(linear, linear @ target + family.base @ mons, rcond=None)
    return target - shift, point


def _track_loop(
    family: LinearFamily,
    loop: "LoopSpec",
    points: np.ndarray,
    cfg: TrackerConfig,
    threads: int | None,
) -> list[PathResult]:
    """Carry every point around the loop segment by segment; failed paths stop early."""
    states = [
        PathResult(i, PathStatus.SUCCESS, np.asarray(p, dtype=complex), 0.0, 0.0, 0) for i, p in enumerate(points)
    ]
    for a, b in loop.segments():
        if np.array_equal(a, b):
            continue
        alive = [i for i, state in enumerate(states) if state.status is PathStatus.SUCCESS]
        if not alive:
            break
        paths = track(ParameterHomotopy(family, a, b), [states[i].point for i in alive], cfg, threads)
        for i, path in zip(alive, paths, strict=True):
            states[i] = replace(path, start_index=i)
    return states


def _monodromy_fill(
    family: LinearFamily,
    target: np.ndarray,
    expected: int,
    cfg: TrackerConfig,
    rng: np.random.Generator,
    threads: int | None,
) -> SolutionSet:
    """Solve the family at ``target`` by closing loops from a seeded solution.

    Loops around the seeded parameters add every new endpoint to the fibre. Filling stops
    after FILL_STALL_LIMIT loops without a new point, or FILL_CONFIRM_LOOPS once the fibre
    holds ``expected`` points, so a fibre larger than ``expected`` still shows up. The fibre
    then moves to ``target`` along a straight parameter segment.
    """
    base, seed_point = _seeded_parameters(family, target, rng)
    fibre = [seed_point]
    stalls = loops = 0
    while stalls < (FILL_CONFIRM_LOOPS if len(fibre) >= expected else FILL_STALL_LIMIT):
        loop = LoopSpec.random_polygon(base, rng)
        grown = False
        for state in _track_loop(family, loop, np.array(fibre), cfg, threads):
            if state.status is PathStatus.SUCCESS and not _contains(fibre, state.point, cfg.dedupe_tol):
                fibre.append(state.point)
                grown = True
        stalls = 0 if grown else stalls + 1
        loops += 1
        logger.debug(f"Fill loop {loops}: {len(fibre)} of {expected} solutions")
    logger.info(f"Monodromy fill reached {len(fibre)} of {expected} solutions after {loops} loops")
    paths = track(ParameterHomotopy(family, base, target), fibre, cfg, threads)
    return SolutionSet.from_paths(paths)


def _lines_on_curve(
    family: LinearFamily,
    params: np.ndarray,
    cfg: TrackerConfig,
    rng: np.random.Generator,
    threads: int | None,
) -> list[np.ndarray]:
    """Lines y = m·x + c contained in a cubic, as points (0, 0, m, c).

    Below degree 4 the remainder is g itself and the equations only involve (m, c). The
    x^0 and x^3 coefficients form a square system solved by total degree; a solution is a
    line on the curve when the other two coefficients vanish there too.
    """
    full = family.system(params)
    if any(e[0] or e[1] for eq in full.equations for e in eq.terms):
        raise UsageError("Line search only applies to cubics")
    square = PolySystem(tuple(MPoly(2, {e[2:]: c for e, c in full.equations[k].terms.items()}) for k in (0, 3)))
    lines = []
    for m, c in solve(square, cfg, rng, threads).points:
        candidate = np.array([0, 0, m, c], dtype=complex)
        if full.residual(candidate) < LINE_RESIDUAL_TOL:
            lines.append(candidate)
    return lines


def solve_bitangents(
    curve: PlaneCurve,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
    method: str = "auto",
    threads: int | None = None,
) -> BitangentFibre:
    """All bitangents of a generic curve.

    Each attempt uses a fresh random chart. Attempts after the first solve at a random
    rational perturbation of the curve and track the solutions back to it. A cubic has no
    bitangents; its equations are solved anyway and the fibre holds the lines it contains.

    Raises:
        UsageError: For an unknown method or a degree below 3.
        PathFailureError: If every chart attempt finds the wrong number of bitangents.
    """
    if method not in METHODS:
        raise UsageError(f"Unknown method {method!r}; expected one of {', '.join(METHODS)}")
    cfg = cfg if cfg is not None else TrackerConfig.from_settings()
    rng = rng if rng is not None else make_rng(settings.seed)
    family = bitangent_family(curve.degree)
    expected = plucker_count(curve.degree)
    if not curve.looks_smooth(rng):
        logger.warning("Curve looks singular; the bitangent count may be deficient")
    if expected == 0:
        chart = random_chart(rng)
        working = curve.transformed(chart).normalized()
        lines = _lines_on_curve(family, working.coeffs, cfg, rng, threads)
        if lines:
            logger.warning(f"Curve contains {len(lines)} lines; it is reducible")
        return BitangentFibre(curve, chart, working, SolutionSet.from_points(lines).sorted())

    log: list[dict[str, object]] = []
    for attempt in range(CHART_RETRIES):
        chart = random_chart(rng)
        working = curve.transformed(chart).normalized()
        target = working.coeffs
        start = target if attempt == 0 else _perturbed(target, rng)
        if method == "total_degree":
            found = solve(family.system(start), cfg, rng, threads)
        else:
            found = _monodromy_fill(family, start, expected, cfg, rng, threads)
        if start is not target:
            found = SolutionSet.from_paths(
                track(ParameterHomotopy(family, start, target), list(found.finite().points), cfg, threads)
            )
        regular = _regular(found, cfg)
        if len(regular) == expected:
            logger.info(f"Found all {expected} bitangents of a degree {curve.degree} curve")
            return BitangentFibre(curve, chart, working, regular.sorted())
        logger.warning(f"Chart {attempt + 1}: found {len(regular)} of {expected} bitangents")
        log.append({"attempt": attempt, "found": len(regular), "expected": expected, "method": method})
    raise PathFailureError(f"Bitangent count differed from {expected} on {CHART_RETRIES} charts", log)


class LoopKind(StrEnum):
    """Shape of a monodromy loop."""

    CONSTANT = "constant"
    POLYGON = "polygon"
    CIRCLE = "circle"


@dataclass(frozen=True, eq=False)
class LoopSpec:
    """Closed piecewise-linear path of parameters that starts and ends at the base point."""

    kind: LoopKind
    points: tuple[np.ndarray, ...]
    radius: float = 0.0
    seed: int | None = None
    center: complex | None = None

    def __post_init__(self) -> None:
        points = tuple(np.asarray(p, dtype=complex) for p in self.points)
        if len(points) < 2:
            raise UsageError("A loop needs at least two points")
        if not np.allclose(points[0], points[-1]):
            raise UsageError("Loop is not closed")
        object.__setattr__(self, "points", points)

    @property
    def base(self) -> np.ndarray:
        return self.points[0]

    @classmethod
    def constant(cls, base: np.ndarray) -> "LoopSpec":
        return cls(LoopKind.CONSTANT, (base, base))

    @classmethod
    def random_polygon(
        cls,
        base: np.ndarray,
        rng: np.random.Generator | None = None,
        seed: int | None = None,
        radius: float | None = None,
        vertices: int | None = None,
    ) -> "LoopSpec":
        """Polygon whose vertices are random complex directions at ``radius`` times the base norm.

        The vertices are drawn from ``seed``; without one a seed is taken from ``rng``.
        """
        if seed is None:
            seed = int((rng if rng is not None else make_rng(settings.seed)).integers(2**63))
        local = make_rng(seed)
        radius = radius if radius is not None else settings.loop_radius
        count = vertices or int(local.integers(settings.loop_min_vertices, settings.loop_max_vertices + 1))
        base = np.asarray(base, dtype=complex)
        scale = radius * float(np.linalg.norm(base))
        corners = []
        for _ in range(count):
            u = local.normal(size=base.shape) + 1j * local.normal(size=base.shape)
            corners.append(base + scale * u / np.linalg.norm(u))
        return cls(LoopKind.POLYGON, (base, *corners, base), radius, seed)

    @classmethod
    def pencil_circle(
        cls,
        p0: np.ndarray,
        p1: np.ndarray,
        via: float,
        center: complex,
        radius: float,
        vertices: int = CIRCLE_VERTICES,
    ) -> "LoopSpec":
        """Loop in the pencil p0 + s·(p1 - p0): out to ``via``, once around ``center``, and back."""
        offset = via - center
        direction = offset / abs(offset) if offset != 0 else 1.0
        ring = [center + radius * direction * np.exp(2j * np.pi * k / vertices) for k in range(vertices + 1)]
        path = [0.0, via, *ring, via, 0.0]
        p0, p1 = np.asarray(p0, dtype=complex), np.asarray(p1, dtype=complex)
        return cls(LoopKind.CIRCLE, tuple(p0 + s * (p1 - p0) for s in path), radius, center=complex(center))

    def segments(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.points, self.points[1:]))

    def reversed(self) -> "LoopSpec":
        return replace(self, points=tuple(reversed(self.points)))

    def to_json(self) -> dict[str, object]:
        data: dict[str, object] = {"kind": str(self.kind), "vertices": len(self.points) - 1, "radius": self.radius}
        if self.seed is not None:
            data["seed"] = self.seed
        if self.center is not None:
            data["center"] = [self.center.real, self.center.imag]
        return data


def loop_permutation(
    family: LinearFamily,
    loop: LoopSpec,
    base_points: np.ndarray,
    cfg: TrackerConfig | None = None,
    threads: int | None = None,
) -> Permutation:
    """Permutation of ``base_points`` induced by carrying them around ``loop``.

    Point i is sent to the label of the base point its path ends on. A failed path or an
    ambiguous matching triggers re-tracking with tighter steps; after an ambiguous matching
    the matching tolerance also shrinks by MATCH_TOL_SHRINK.

    Raises:
        LoopRejectedError: If no attempt yields a bijection.
    """
    cfg = cfg if cfg is not None else TrackerConfig.from_settings()
    base_points = np.asarray(base_points, dtype=complex)
    attempt_cfg = cfg
    tol = settings.match_tol
    failed: list[PathResult] = []
    for attempt in range(RETRACK_ATTEMPTS + 1):
        states = _track_loop(family, loop, base_points, attempt_cfg, threads)
        failed = [s for s in states if s.status is not PathStatus.SUCCESS]
        if not failed:
            moved = np.array([s.point for s in states]).reshape(base_points.shape)
            perm = match_fibres(base_points, moved, tol)
            if perm is not None:
                return Permutation(tuple(perm))
            tol /= MATCH_TOL_SHRINK
        logger.warning(f"{loop.kind} loop unmatched on attempt {attempt + 1} ({len(failed)} failed paths)")
        attempt_cfg = attempt_cfg.tightened()
    raise LoopRejectedError(f"{loop.kind} loop rejected: {len(failed)} failed paths or no bijective matching")


def monodromy_loop(
    spec: LoopSpec,
    fibre: BitangentFibre,
    cfg: TrackerConfig | None = None,
    threads: int | None = None,
) -> Permutation:
    """Permutation of the bitangent labels induced by a loop of working-chart curves."""
    if spec.base.shape != fibre.params.shape or not np.allclose(spec.base, fibre.params):
        raise UsageError("Loop is not based at the fibre's curve")
    return loop_permutation(bitangent_family(fibre.degree), spec, fibre.points, cfg, threads)


@dataclass(frozen=True, eq=False)
class HuntResult:
    """A loop around a simple collision and the transposition it induces."""

    loop: LoopSpec
    permutation: Permutation
    pair: tuple[int, int]
    s_star: complex
    pencil_end: np.ndarray
    attempts: int = 1

    def to_json(self) -> dict[str, object]:
        return {
            "loop": self.loop.to_json(),
            "permutation": self.permutation.to_json(),
            "pair": list(self.pair),
            "s_star": [self.s_star.real, self.s_star.imag],
            "attempts": self.attempts,
        }


def _collision_candidates(fibres: Sequence[np.ndarray]) -> list[tuple[float, int, int, int]]:
    """Closest pairs that stand out from every other pair, best sample per pair.

    Returns (distance, sample, i, j) sorted by distance.
    """
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for k, pts in enumerate(fibres):
        if k == 0 or len(pts) < 3:
            continue
        dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        rows, cols = np.triu_indices(len(pts), 1)
        flat = dist[rows, cols]
        order = np.argsort(flat)
        first, second = float(flat[order[0]]), float(flat[order[1]])
        if second < ISOLATION_RATIO * first:
            continue
        pair = (int(rows[order[0]]), int(cols[order[0]]))
        if pair not in best or first < best[pair][0]:
            best[pair] = (first, k)
    return sorted((d, k, i, j) for (i, j), (d, k) in best.items())


def _locate_collision(
    family: LinearFamily,
    pencil: Callable[[complex], np.ndarray],
    s0: float,
    xa: np.ndarray,
    xb: np.ndarray,
    cfg: TrackerConfig,
) -> complex | None:
    """Pencil value where the pair through xa, xb at s0 collides.

    One coordinate difference squared is single-valued near a simple collision and
    vanishes linearly there, so secant steps on it converge to the collision.
    """
    coord = int(np.argmax(np.abs(xa - xb)))
    start = np.array([xa, xb])

    def separation(s: complex) -> complex | None:
        paths = track(ParameterHomotopy(family, pencil(s0), pencil(s)), start, cfg, threads=1)
        if any(p.status is not PathStatus.SUCCESS for p in paths):
            return None
        return complex((paths[0].point[coord] - paths[1].point[coord]) ** 2)

    s_prev, d_prev = complex(s0), complex((xa[coord] - xb[coord]) ** 2)
    s_cur = s_prev + SECANT_PROBE
    for _ in range(SECANT_ITERS):
        d_cur = separation(s_cur)
        if d_cur is None:
            # tracking into the collision itself; good enough once steps are tiny
            return s_cur if abs(s_cur - s_prev) < 1e-2 * HUNT_RADIUS else None
        if d_cur == d_prev:
            return None
        s_next = s_cur - d_cur * (s_cur - s_prev) / (d_cur - d_prev)
        if abs(s_next - s0) > COLLISION_REACH:
            return None
        s_prev, d_prev, s_cur = s_cur, d_cur, s_next
        if abs(s_cur - s_prev) < settings.bisect_tol:
            return s_cur
    return None


def pencil_hunt(
    family: LinearFamily,
    p0: np.ndarray,
    p1: np.ndarray,
    base_points: np.ndarray,
    cfg: TrackerConfig | None = None,
    threads: int | None = None,
    samples: int = PENCIL_SAMPLES,
) -> HuntResult:
    """Find a transposition on the pencil p0 + s·(p1 - p0).

    The fibre is carried along s ∈ [0, 1]; isolated close pairs are refined to a collision
    value s*, and a small circle around s* must swap exactly that pair, also at half the
    radius.

    Raises:
        LoopRejectedError: If no candidate on this pencil gives a simple transposition.
    """
    cfg = cfg if cfg is not None else TrackerConfig.from_settings()
    p0, p1 = np.asarray(p0, dtype=complex), np.asarray(p1, dtype=complex)
    base_points = np.asarray(base_points, dtype=complex)
    n = len(base_points)

    def pencil(s: complex) -> np.ndarray:
        return p0 + s * (p1 - p0)

    grid = np.linspace(0.0, 1.0, samples + 1)
    fibres = [base_points]
    for a, b in zip(grid, grid[1:]):
        paths = track(ParameterHomotopy(family, pencil(a), pencil(b)), fibres[-1], cfg, threads)
        if any(p.status is not PathStatus.SUCCESS for p in paths):
            logger.debug(f"Pencil scan stopped at s = {a:.3f}")
            break
        fibres.append(np.array([p.point for p in paths]))

    for distance, k, i, j in _collision_candidates(fibres)[:HUNT_CANDIDATES]:
        s0 = float(grid[k])
        s_star = _locate_collision(family, pencil, s0, fibres[k][i], fibres[k][j], cfg)
        if s_star is None:
            logger.debug(f"No collision found for pair ({i}, {j}) at distance {distance:.3g}")
            continue
        expected = Permutation.from_cycles(n, [(i, j)])
        loops = [LoopSpec.pencil_circle(p0, p1, s0, s_star, r) for r in (HUNT_RADIUS, HUNT_RADIUS / 2)]
        try:
            perms = [loop_permutation(family, loop, base_points, cfg, threads) for loop in loops]
        except LoopRejectedError:
            continue
        if all(perm == expected for perm in perms):
            logger.info(f"Transposition ({i} {j}) around s* = {s_star:.6g}")
            return HuntResult(loops[0], perms[0], (i, j), s_star, p1)
        logger.debug(f"Collision at s* = {s_star:.6g} gave cycle type {perms[0].cycle_type()[:4]}")
    raise LoopRejectedError("No simple transposition on this pencil")


def transposition_hunt(
    fibre: BitangentFibre,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
    threads: int | None = None,
) -> HuntResult:
    """Transposition of two bitangents from a loop around a collision on a random pencil.

    Raises:
        DomainError: If the fibre has fewer than two points.
        LoopRejectedError: If HUNT_RETRIES pencils give no simple transposition.
    """
    if len(fibre) < 2:
        raise DomainError(f"A fibre of {len(fibre)} points has no transpositions")
    rng = rng if rng is not None else make_rng(settings.seed)
    family = bitangent_family(fibre.degree)
    p0 = fibre.params
    for attempt in range(HUNT_RETRIES):
        p1 = PlaneCurve.random(fibre.degree, rng).coeffs
        p1 = p1 * np.linalg.norm(p0) / np.linalg.norm(p1)
        try:
            result = pencil_hunt(family, p0, p1, fibre.points, cfg, threads)
        except LoopRejectedError:
            logger.info(f"Pencil {attempt + 1} of {HUNT_RETRIES} gave no transposition")
            continue
        return replace(result, attempts=attempt + 1)
    raise LoopRejectedError(f"No simple transposition found on {HUNT_RETRIES} random pencils")


class CoverReport(BaseModel):
    """Monodromy certification run for the bitangents of a random plane curve."""

    degree: int
    seed: int
    fibre_size: int
    loops: int
    permutations: list[list[int]]
    rejected_loops: int
    order_history: list[int]
    order_stable: bool | None = None
    hunt: dict[str, Any] | None = None
    group: GroupReport
    seconds: float


def certify_cover(
    degree: int,
    loops: int,
    seed: int,
    cfg: TrackerConfig | None = None,
    threads: int | None = None,
    hunt: bool | None = None,
) -> CoverReport:
    """Solve the bitangents of a random curve, close ``loops`` loops and certify the group.

    Group orders are recorded after each loop when the fibre is small enough for
    Schreier-Sims. The transposition hunt runs by default for degree 5 and above.

    Raises:
        UnsupportedError: For degrees outside 4..6.
        UsageError: For a negative loop count.
    """
    if degree not in SUPPORTED_DEGREES:
        raise UnsupportedError(f"Monodromy certification supports degrees {SUPPORTED_DEGREES}, got {degree}")
    if loops < 0:
        raise UsageError(f"Loop count must be non-negative, got {loops}")
    started = time.perf_counter()
    rng = make_rng(seed)
    fibre = solve_bitangents(PlaneCurve.random(degree, rng), cfg, rng, threads=threads)
    n = len(fibre)
    gens: list[Permutation] = []
    history: list[int] = []
    rejected = 0
    while len(gens) < loops:
        if rejected > loops:
            raise LoopRejectedError(f"{rejected} loops rejected while collecting {loops}")
        spec = LoopSpec.random_polygon(fibre.params, rng)
        try:
            perm = monodromy_loop(spec, fibre, cfg, threads)
        except LoopRejectedError as e:
            rejected += 1
            logger.warning(f"Skipping loop with seed {spec.seed}: {e}")
            continue
        gens.append(perm)
        if n <= SCHREIER_SIMS_MAX_DEGREE:
            history.append(schreier_sims_order(gens, n))
        logger.info(f"Loop {len(gens)}/{loops}: cycle type {perm.cycle_type()[:6]}")

    hunt_record = None
    run_hunt = hunt if hunt is not None else degree >= 5 and loops > 0
    if run_hunt:
        result = transposition_hunt(fibre, cfg, rng, threads)
        gens.append(result.permutation)
        hunt_record = result.to_json()

    group = certify_symmetric(gens, n, rng=rng)
    stable = None
    if len(history) >= ORDER_STABLE_WINDOW:
        stable = len(set(history[-ORDER_STABLE_WINDOW:])) == 1
    return CoverReport(
        degree=degree,
        seed=seed,
        fibre_size=n,
        loops=loops,
        permutations=[g.to_json() for g in gens],
        rejected_loops=rejected,
        order_history=history,
        order_stable=stable,
        hunt=hunt_record,
        group=group,
        seconds=time.perf_counter() - started,
    )
