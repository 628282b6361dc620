"""Numerical polynomial systems and predictor-corrector path tracking.

Systems are stored as a shared exponent matrix E (one row per monomial) and a complex
coefficient matrix C (one row per equation), so H(x) = C · mon(x). A homotopy is a
coefficient matrix C(s) moving with s ∈ [0, 1] over a fixed exponent matrix.
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from itertools import product

import numpy as np
import sympy
from pydantic import BaseModel, PositiveFloat, PositiveInt, model_validator

from k3_monodromy.config import Settings, settings
from k3_monodromy.constants import GROW_AFTER_SUCCESSES, SUSPECT_CONDITION
from k3_monodromy.errors import DomainError, PathFailureError, UsageError
from k3_monodromy.exact import make_rng
from k3_monodromy.local_rings import parse_polynomial

logger = logging.getLogger(__name__)

Exponent = tuple[int, ...]

CORRECTOR_MAX_ITERS = 3
CONTRACTION = 0.5


@dataclass(frozen=True)
class MPoly:
    """Polynomial in ``nvars`` variables with complex coefficients."""

    nvars: int
    terms: Mapping[Exponent, complex] = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        clean: dict[Exponent, complex] = {}
        for exponent, coeff in self.terms.items():
            if len(exponent) != self.nvars or any(e < 0 for e in exponent):
                raise UsageError(f"Bad exponent {exponent} for {self.nvars} variables")
            value = complex(coeff)
            if value != 0:
                key = tuple(int(e) for e in exponent)
                clean[key] = clean.get(key, 0j) + value
        object.__setattr__(self, "terms", {k: v for k, v in clean.items() if v != 0})

    @classmethod
    def from_sympy(cls, expr: sympy.Expr | sympy.Poly, variables: Sequence[sympy.Symbol]) -> "MPoly":
        poly = expr if isinstance(expr, sympy.Poly) else sympy.Poly(sympy.expand(expr), *variables)
        return cls(len(variables), {tuple(e): complex(c) for e, c in poly.terms()})

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def __add__(self, other: "MPoly") -> "MPoly":
        result = dict(self.terms)
        for exponent, coeff in other.terms.items():
            result[exponent] = result.get(exponent, 0j) + coeff
        return MPoly(self.nvars, result)

    def __mul__(self, other: "MPoly") -> "MPoly":
        result: dict[Exponent, complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exponent = tuple(a + b for a, b in zip(e1, e2, strict=True))
                result[exponent] = result.get(exponent, 0j) + c1 * c2
        return MPoly(self.nvars, result)

    def scale(self, factor: complex) -> "MPoly":
        return MPoly(self.nvars, {e: factor * c for e, c in self.terms.items()})

    def evaluate(self, x: Sequence[complex]) -> complex:
        return complex(sum(c * np.prod([xi**ei for xi, ei in zip(x, e, strict=True)]) for e, c in self.terms.items()))


class TermMatrix:
    """Exponent matrix shared by the equations of a system or a homotopy."""

    def __init__(self, exponents: Sequence[Exponent], nvars: int) -> None:
        self.nvars = nvars
        self.exponents = np.array(exponents, dtype=np.int64).reshape(len(exponents), nvars)
        self.index = {tuple(int(v) for v in row): k for k, row in enumerate(self.exponents)}
        self.max_power = int(self.exponents.max(initial=0))
        self._columns = np.arange(nvars)

    def __len__(self) -> int:
        return len(self.exponents)

    def _power_table(self, x: np.ndarray) -> np.ndarray:
        table = np.ones((self.nvars, self.max_power + 1), dtype=complex)
        for e in range(1, self.max_power + 1):
            table[:, e] = table[:, e - 1] * x
        return table

    def monomials(self, x: np.ndarray) -> np.ndarray:
        """Values of all monomials at ``x``."""
        pows = self._power_table(x)[self._columns, self.exponents]
        return np.prod(pows, axis=1)

    def monomials_and_jacobian(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Monomial values and their partial derivatives, shapes (m,) and (m, n)."""
        table = self._power_table(x)
        pows = table[self._columns, self.exponents]
        lower = table[self._columns, np.maximum(self.exponents - 1, 0)] * self.exponents
        values = np.prod(pows, axis=1)
        jac = np.empty((len(self), self.nvars), dtype=complex)
        for k in range(self.nvars):
            others = np.delete(pows, k, axis=1)
            jac[:, k] = lower[:, k] * np.prod(others, axis=1)
        return values, jac


def _aligned(polys: Sequence[Sequence[MPoly]], nvars: int) -> tuple[TermMatrix, list[np.ndarray]]:
    """Common term matrix for several equation lists and their coefficient matrices."""
    exponents = sorted({e for eqs in polys for p in eqs for e in p.terms})
    terms = TermMatrix(exponents, nvars)
    matrices = []
    for eqs in polys:
        matrix = np.zeros((len(eqs), len(terms)), dtype=complex)
        for i, p in enumerate(eqs):
            for e, c in p.terms.items():
                matrix[i, terms.index[e]] = c
        matrices.append(matrix)
    return terms, matrices


@dataclass(frozen=True)
class PolySystem:
    """Equations in a common set of variables."""

    equations: tuple[MPoly, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "equations", tuple(self.equations))
        if not self.equations:
            raise UsageError("A system needs at least one equation")
        if len({eq.nvars for eq in self.equations}) != 1:
            raise UsageError("All equations must use the same variables")

    @classmethod
    def parse(cls, texts: Sequence[str], names: Sequence[str]) -> "PolySystem":
        """Parse equations with rational coefficients in the named variables."""
        variables = sympy.symbols(list(names))
        return cls(tuple(MPoly.from_sympy(parse_polynomial(t, variables), variables) for t in texts))

    @classmethod
    def from_matrix(cls, terms: TermMatrix, matrix: np.ndarray) -> "PolySystem":
        equations = []
        for row in matrix:
            equations.append(MPoly(terms.nvars, {tuple(terms.exponents[k]): c for k, c in enumerate(row) if c != 0}))
        return cls(tuple(equations))

    @property
    def nvars(self) -> int:
        return self.equations[0].nvars

    @property
    def is_square(self) -> bool:
        return len(self.equations) == self.nvars

    def degrees(self) -> list[int]:
        return [eq.degree() for eq in self.equations]

    @cached_property
    def _matrix(self) -> tuple[TermMatrix, np.ndarray]:
        terms, (matrix,) = _aligned([self.equations], self.nvars)
        return terms, matrix

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.nvars,):
            raise UsageError(f"Point of shape {x.shape} for a system in {self.nvars} variables")
        return x

    def evaluate(self, x: Sequence[complex] | np.ndarray) -> np.ndarray:
        terms, matrix = self._matrix
        return matrix @ terms.monomials(self._check(np.asarray(x)))

    def jacobian(self, x: Sequence[complex] | np.ndarray) -> np.ndarray:
        terms, matrix = self._matrix
        _, jac = terms.monomials_and_jacobian(self._check(np.asarray(x)))
        return matrix @ jac

    def residual(self, x: Sequence[complex] | np.ndarray) -> float:
        """Relative backward error max_i |F_i(x)| / (1 + Σ_k |c_ik x^k|)."""
        terms, matrix = self._matrix
        mons = terms.monomials(self._check(np.asarray(x)))
        return float(np.max(np.abs(matrix @ mons) / (1.0 + np.abs(matrix) @ np.abs(mons))))


class TrackerConfig(BaseModel):
    """Step-size and tolerance settings for path tracking."""

    newton_tol: PositiveFloat = 1e-12
    corrector_tol: PositiveFloat = 1e-9
    max_newton_iters: PositiveInt = 6
    initial_step: PositiveFloat = 0.05
    min_step: PositiveFloat = 1e-8
    max_step: PositiveFloat = 0.1
    step_grow: PositiveFloat = 1.5
    step_shrink: PositiveFloat = 0.5
    success_residual: PositiveFloat = 1e-10
    sharpen_iters: PositiveInt = 3
    infinity_norm: PositiveFloat = 1e8
    dedupe_tol: PositiveFloat = 1e-6
    max_failure_fraction: PositiveFloat = 0.05

    @model_validator(mode="after")
    def check_steps(self) -> "TrackerConfig":
        if self.min_step >= self.initial_step:
            raise ValueError(f"min_step {self.min_step} must be below initial_step {self.initial_step}")
        if not 0 < self.step_shrink < 1 or self.step_grow <= 1:
            raise ValueError("step_shrink must lie in (0, 1) and step_grow above 1")
        return self

    @classmethod
    def from_settings(cls, source: Settings | None = None) -> "TrackerConfig":
        source = source if source is not None else settings
        return cls(**{name: getattr(source, name) for name in cls.model_fields})

    def tightened(self) -> "TrackerConfig":
        """Half the step sizes and a tighter corrector, used for re-tracking."""
        return self.model_copy(
            update={
                "initial_step": self.initial_step / 2,
                "max_step": self.max_step / 2,
                "corrector_tol": self.corrector_tol / 10,
                "min_step": min(self.min_step, self.initial_step / 4),
            }
        )


class Homotopy(ABC):
    """H(x, s) = C(s) · mon(x) over a fixed term matrix."""

    def __init__(self, terms: TermMatrix) -> None:
        self.terms = terms

    @property
    def nvars(self) -> int:
        return self.terms.nvars

    @abstractmethod
    def coefficients(self, s: float) -> np.ndarray:
        """Coefficient matrix C(s)."""

    @abstractmethod
    def derivative(self, s: float) -> np.ndarray:
        """dC/ds at s."""

    def evaluate(self, x: np.ndarray, s: float) -> np.ndarray:
        return self.coefficients(s) @ self.terms.monomials(x)

    def newton_step(self, x: np.ndarray, s: float) -> np.ndarray:
        """Newton update dx with H(x - dx, s) ≈ 0."""
        mons, jac = self.terms.monomials_and_jacobian(x)
        matrix = self.coefficients(s)
        return np.linalg.solve(matrix @ jac, matrix @ mons)

    def velocity(self, x: np.ndarray, s: float) -> np.ndarray:
        """dx/ds = -H_x⁻¹ H_s along the solution path."""
        mons, jac = self.terms.monomials_and_jacobian(x)
        return -np.linalg.solve(self.coefficients(s) @ jac, self.derivative(s) @ mons)

    def residual(self, x: np.ndarray, s: float) -> float:
        matrix = self.coefficients(s)
        mons = self.terms.monomials(x)
        return float(np.max(np.abs(matrix @ mons) / (1.0 + np.abs(matrix) @ np.abs(mons))))

    def condition(self, x: np.ndarray, s: float) -> float:
        _, jac = self.terms.monomials_and_jacobian(x)
        return float(np.linalg.cond(self.coefficients(s) @ jac))


class LinearHomotopy(Homotopy):
    """H = (1 - s)·γ·G + s·F between a start system G and a target system F."""

    def __init__(self, start: PolySystem, target: PolySystem, gamma: complex = 1.0) -> None:
        if start.nvars != target.nvars or len(start.equations) != len(target.equations):
            raise UsageError("Start and target systems must have the same shape")
        terms, (g_matrix, f_matrix) = _aligned([start.equations, target.equations], start.nvars)
        super().__init__(terms)
        self._start = complex(gamma) * g_matrix
        self._target = f_matrix

    def coefficients(self, s: float) -> np.ndarray:
        return (1 - s) * self._start + s * self._target

    def derivative(self, s: float) -> np.ndarray:
        return self._target - self._start


class LinearFamily:
    """Systems whose coefficient matrix is affine in a parameter vector p.

    C(p) = base + Σ_j p_j · basis[j] over a shared term matrix.
    """

    def __init__(self, terms: TermMatrix, basis: np.ndarray, base: np.ndarray | None = None) -> None:
        self.terms = terms
        self.basis = np.asarray(basis, dtype=complex)
        self.base = np.zeros(self.basis.shape[1:], dtype=complex) if base is None else np.asarray(base, dtype=complex)

    @property
    def nparams(self) -> int:
        return int(self.basis.shape[0])

    def linear_part(self, p: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(p, dtype=complex), self.basis, axes=1)

    def coefficients(self, p: np.ndarray) -> np.ndarray:
        return self.base + self.linear_part(p)

    def system(self, p: np.ndarray) -> PolySystem:
        return PolySystem.from_matrix(self.terms, self.coefficients(p))


class ParameterHomotopy(Homotopy):
    """Straight segment p(s) = (1 - s)·p0 + s·p1 in the parameters of a linear family."""

    def __init__(self, family: LinearFamily, p0: np.ndarray, p1: np.ndarray) -> None:
        super().__init__(family.terms)
        self.family = family
        self.p0 = np.asarray(p0, dtype=complex)
        self.p1 = np.asarray(p1, dtype=complex)
        self._velocity = family.linear_part(self.p1 - self.p0)

    def coefficients(self, s: float) -> np.ndarray:
        return self.family.coefficients((1 - s) * self.p0 + s * self.p1)

    def derivative(self, s: float) -> np.ndarray:
        return self._velocity


class PathStatus(StrEnum):
    """Outcome of tracking one path."""

    SUCCESS = "success"
    AT_INFINITY = "at_infinity"
    FAILED = "failed"


@dataclass(frozen=True)
class PathResult:
    """Endpoint and diagnostics for one tracked path."""

    start_index: int
    status: PathStatus
    point: np.ndarray
    residual: float
    s_reached: float
    steps: int
    suspect: bool = False
    message: str = ""

    def to_json(self) -> dict[str, object]:
        return {
            "start_index": self.start_index,
            "status": str(self.status),
            "point": [[float(v.real), float(v.imag)] for v in self.point],
            "residual": self.residual,
            "s_reached": self.s_reached,
            "steps": self.steps,
            "suspect": self.suspect,
            "message": self.message,
        }


def _norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def _rk4(h: Homotopy, x: np.ndarray, s: float, step: float) -> np.ndarray:
    k1 = h.velocity(x, s)
    k2 = h.velocity(x + 0.5 * step * k1, s + 0.5 * step)
    k3 = h.velocity(x + 0.5 * step * k2, s + 0.5 * step)
    k4 = h.velocity(x + step * k3, s + step)
    return x + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _correct(h: Homotopy, x: np.ndarray, s: float, cfg: TrackerConfig) -> np.ndarray | None:
    """Newton corrector; None unless it converges quickly with contracting updates."""
    previous = np.inf
    for _ in range(min(CORRECTOR_MAX_ITERS, cfg.max_newton_iters)):
        dx = h.newton_step(x, s)
        x = x - dx
        size = _norm(dx)
        if not np.isfinite(size) or size > CONTRACTION * previous and previous < np.inf:
            return None
        if size <= cfg.corrector_tol * (1 + _norm(x)):
            return x
        previous = size
    return None


def track_path(h: Homotopy, start: np.ndarray, cfg: TrackerConfig, index: int = 0) -> PathResult:
    """Follow one solution of H(·, 0) to s = 1.

    RK4 predicts along dx/ds and Newton corrects at the new s; the step grows after
    repeated successes and shrinks after a rejected step. Paths whose norm exceeds
    ``infinity_norm`` are reported at infinity.
    """
    x = np.asarray(start, dtype=complex).copy()
    s, step, streak, steps = 0.0, cfg.initial_step, 0, 0
    while s < 1.0:
        step = min(step, cfg.max_step, 1.0 - s)
        steps += 1
        try:
            corrected = _correct(h, _rk4(h, x, s, step), s + step, cfg)
        except np.linalg.LinAlgError:
            corrected = None
        if corrected is None:
            step *= cfg.step_shrink
            streak = 0
            if step < cfg.min_step:
                # a pole at s = 1 stalls the tracker before the norm cutoff is reached
                if _norm(x) > np.sqrt(cfg.infinity_norm):
                    return PathResult(index, PathStatus.AT_INFINITY, x, np.inf, s, steps, message="diverging")
                logger.debug(f"Path {index} failed at s = {s:.6g}")
                return PathResult(index, PathStatus.FAILED, x, np.inf, s, steps, message="step size underflow")
            continue
        x, s = corrected, (1.0 if 1.0 - (s + step) < cfg.min_step else s + step)
        if _norm(x) > cfg.infinity_norm:
            return PathResult(index, PathStatus.AT_INFINITY, x, np.inf, s, steps)
        streak += 1
        if streak >= GROW_AFTER_SUCCESSES:
            step *= cfg.step_grow
            streak = 0

    try:
        for _ in range(cfg.sharpen_iters):
            dx = h.newton_step(x, 1.0)
            x = x - dx
            if _norm(dx) <= cfg.newton_tol * (1 + _norm(x)):
                break
        suspect = h.condition(x, 1.0) > SUSPECT_CONDITION
    except np.linalg.LinAlgError:
        return PathResult(index, PathStatus.FAILED, x, np.inf, 1.0, steps, True, "singular endpoint")
    residual = h.residual(x, 1.0)
    if _norm(x) > cfg.infinity_norm:
        return PathResult(index, PathStatus.AT_INFINITY, x, residual, 1.0, steps, suspect)
    status = PathStatus.SUCCESS if residual < cfg.success_residual else PathStatus.FAILED
    message = "" if status is PathStatus.SUCCESS else f"residual {residual:.3g} after sharpening"
    return PathResult(index, status, x, residual, 1.0, steps, suspect, message)


def track(
    h: Homotopy,
    starts: Sequence[np.ndarray] | np.ndarray,
    cfg: TrackerConfig | None = None,
    threads: int | None = None,
) -> list[PathResult]:
    """Track every start point; results are returned in start order.

    Paths are split into contiguous chunks run on a thread pool, so the output does not
    depend on scheduling.
    """
    cfg = cfg if cfg is not None else TrackerConfig.from_settings()
    workers = max(1, threads if threads is not None else settings.threads)
    points = [np.asarray(p, dtype=complex) for p in starts]
    for p in points:
        if p.shape != (h.nvars,):
            raise UsageError(f"Start point of shape {p.shape} for {h.nvars} variables")
    if workers == 1 or len(points) < 2:
        return [track_path(h, p, cfg, i) for i, p in enumerate(points)]

    chunks = [c for c in np.array_split(np.arange(len(points)), workers) if c.size]

    def run(chunk: np.ndarray) -> list[PathResult]:
        return [track_path(h, points[i], cfg, int(i)) for i in chunk]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, chunks))
    return [r for chunk_results in results for r in chunk_results]


@dataclass(frozen=True)
class SolutionSet:
    """Points with residuals, suspect flags, start indices and path statuses."""

    points: tuple[np.ndarray, ...]
    residuals: tuple[float, ...]
    suspect: tuple[bool, ...]
    provenance: tuple[int, ...]
    statuses: tuple[PathStatus, ...]

    @classmethod
    def from_paths(cls, paths: Sequence[PathResult]) -> "SolutionSet":
        return cls(
            tuple(p.point for p in paths),
            tuple(p.residual for p in paths),
            tuple(p.suspect for p in paths),
            tuple(p.start_index for p in paths),
            tuple(p.status for p in paths),
        )

    @classmethod
    def from_points(cls, points: Sequence[np.ndarray], residuals: Sequence[float] | None = None) -> "SolutionSet":
        residuals = residuals if residuals is not None else [0.0] * len(points)
        n = len(points)
        return cls(
            tuple(np.asarray(p, dtype=complex) for p in points),
            tuple(float(r) for r in residuals),
            (False,) * n,
            tuple(range(n)),
            (PathStatus.SUCCESS,) * n,
        )

    def __len__(self) -> int:
        return len(self.points)

    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    def finite(self) -> "SolutionSet":
        """Only the successfully tracked points."""
        keep = [i for i, status in enumerate(self.statuses) if status is PathStatus.SUCCESS]
        return self.subset(keep)

    def subset(self, indices: Sequence[int]) -> "SolutionSet":
        return SolutionSet(
            tuple(self.points[i] for i in indices),
            tuple(self.residuals[i] for i in indices),
            tuple(self.suspect[i] for i in indices),
            tuple(self.provenance[i] for i in indices),
            tuple(self.statuses[i] for i in indices),
        )

    def sorted(self) -> "SolutionSet":
        """Lexicographic order by real parts, then imaginary parts, coordinate by coordinate."""
        keys = [tuple(v for z in p for v in (round(z.real, 9), round(z.imag, 9))) for p in self.points]
        return self.subset(sorted(range(len(self)), key=lambda i: keys[i]))

    def to_json(self) -> list[dict[str, object]]:
        return [
            {
                "point": [[float(v.real), float(v.imag)] for v in point],
                "residual": residual,
                "status": str(status),
                "suspect": suspect,
                "start_index": index,
            }
            for point, residual, status, suspect, index in zip(
                self.points, self.residuals, self.statuses, self.suspect, self.provenance, strict=True
            )
        ]


def dedupe(solutions: SolutionSet, tol: float) -> SolutionSet:
    """Drop points within ``tol`` (relative to 1 + norm) of an earlier kept point."""
    kept: list[int] = []
    for i, p in enumerate(solutions.points):
        scale = 1 + _norm(p)
        if all(_norm(p - solutions.points[j]) > tol * scale for j in kept):
            kept.append(i)
    return solutions.subset(kept)


def match_fibres(base: np.ndarray, moved: np.ndarray, tol: float) -> list[int] | None:
    """Bijection sending moved[i] to base[perm[i]] by mutual nearest neighbours.

    Returns None when some point has no mutual nearest neighbour within ``tol`` relative
    to 1 + its norm, or when the matching is not a bijection.
    """
    base, moved = np.asarray(base), np.asarray(moved)
    if base.shape != moved.shape:
        return None
    if len(base) == 0:
        return []
    distances = np.linalg.norm(moved[:, None, :] - base[None, :, :], axis=2)
    forward = np.argmin(distances, axis=1)
    backward = np.argmin(distances, axis=0)
    perm = [int(j) for j in forward]
    for i, j in enumerate(perm):
        if backward[j] != i or distances[i, j] > tol * (1 + _norm(base[j])):
            return None
    if len(set(perm)) != len(perm):
        return None
    return perm


def total_degree_start(sys: PolySystem) -> tuple[PolySystem, list[np.ndarray]]:
    """Start system x_i^(d_i) - 1 and its ∏ d_i solutions built from roots of unity.

    Raises:
        UsageError: If the system is not square.
        DomainError: If an equation has degree below 1.
    """
    if not sys.is_square:
        raise UsageError(f"{len(sys.equations)} equations in {sys.nvars} unknowns is not square")
    degrees = sys.degrees()
    if any(d < 1 for d in degrees):
        raise DomainError(f"Equation degrees {degrees} include a constant equation")
    n = sys.nvars
    equations = []
    for i, d in enumerate(degrees):
        exponent = tuple(d if k == i else 0 for k in range(n))
        equations.append(MPoly(n, {exponent: 1.0, (0,) * n: -1.0}))
    roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in degrees]
    starts = [np.array(combo, dtype=complex) for combo in product(*roots)]
    return PolySystem(tuple(equations)), starts


def _random_gamma(rng: np.random.Generator) -> complex:
    return complex(np.exp(2j * np.pi * rng.random()))


def check_failures(paths: Sequence[PathResult], cfg: TrackerConfig) -> None:
    """Raise PathFailureError when too many paths failed."""
    failed = [p for p in paths if p.status is PathStatus.FAILED]
    if paths and len(failed) > cfg.max_failure_fraction * len(paths):
        logger.error(f"{len(failed)} of {len(paths)} paths failed")
        raise PathFailureError(
            f"{len(failed)} of {len(paths)} paths failed (limit {cfg.max_failure_fraction:.0%})",
            [p.to_json() for p in failed],
        )


def solve(
    sys: PolySystem,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
    threads: int | None = None,
) -> SolutionSet:
    """All finite isolated solutions by a total-degree homotopy with a random γ.

    Raises:
        PathFailureError: If more than ``max_failure_fraction`` of the paths fail.
    """
    cfg = cfg if cfg is not None else TrackerConfig.from_settings()
    rng = rng if rng is not None else make_rng(settings.seed)
    start, starts = total_degree_start(sys)
    h = LinearHomotopy(start, sys, _random_gamma(rng))
    logger.info(f"Tracking {len(starts)} paths for a system of degrees {sys.degrees()}")
    paths = track(h, starts, cfg, threads)
    check_failures(paths, cfg)
    at_infinity = sum(p.status is PathStatus.AT_INFINITY for p in paths)
    solutions = dedupe(SolutionSet.from_paths(paths).finite(), cfg.dedupe_tol)
    logger.info(f"{len(solutions)} finite solutions, {at_infinity} paths at infinity")
    return solutions
