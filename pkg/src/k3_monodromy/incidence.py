"""Rational curves through prescribed points: incidence matrices, sampling and singularities.

Parametrizations are binary forms in (a, b). A form of degree d is stored as its
coefficient list ``(c_0, ..., c_d)`` with ``c_k`` the coefficient of a^(d-k) b^k, so the
affine parameter is t = b/a and [0:1] is t = ∞.

Plane quartics (target ``P2``) send [0:1], [1:0], [1:1] to [0:1:0], [1:0:0], [1:1:0]
and each [1:λ_i] to [1:μ_i:0]. Curves of bidegree (3, 3) on ℙ¹×ℙ¹ (target ``QUADRIC``)
send [0:1], [1:0], [1:1] to ([0:1],[0:1]), ([1:0],[1:0]), ([1:1],[1:1]) and each [1:λ_i]
to ([1:μ_i],[1:μ_i]).
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

import numpy as np
import sympy
from mpmath.libmp.libhyper import NoConvergence

from k3_monodromy.constants import MAX_REDRAWS
from k3_monodromy.errors import DomainError, InternalInconsistencyError, UsageError
from k3_monodromy.exact import (
    RationalLike,
    combine,
    determinant,
    make_rng,
    nullspace,
    random_rational,
    random_rationals,
    rank,
    to_fraction,
    to_sympy,
)
from k3_monodromy.local_rings import Singularity, classify_singularity, local_equation

logger = logging.getLogger(__name__)

A, B, T = sympy.symbols("a b t")
S_PAIR, T_PAIR = sympy.symbols("s u")
CX, CY = sympy.symbols("X Y")

ParamPoint = tuple[complex, complex]
"""Projective parameter normalized to (1, t) or (0, 1)."""

ROOT_DIGITS = 30
PAIR_TOL = 1e-6
INFINITY = (0j, 1 + 0j)


class Target(StrEnum):
    """Target surface of a parametrized rational curve."""

    P2 = "P2"
    QUADRIC = "quadric"


FORM_DEGREE = {Target.P2: 4, Target.QUADRIC: 3}
FORM_COUNT = {Target.P2: 3, Target.QUADRIC: 4}


def _check_distinct_generic(values: Sequence[Fraction], name: str) -> None:
    if len(set(values)) != len(values):
        raise DomainError(f"{name} values must be pairwise distinct, got {[str(v) for v in values]}")
    if any(v in (0, 1) for v in values):
        raise DomainError(f"{name} values must avoid 0 and 1, got {[str(v) for v in values]}")


@dataclass(frozen=True)
class PointConfigP2:
    """Extra points [1:μ_i:0] on the line z = 0, optionally with their preimages [1:λ_i]."""

    mu: tuple[Fraction, ...]
    lambdas: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        mu = tuple(to_fraction(m) for m in self.mu)
        _check_distinct_generic(mu, "mu")
        object.__setattr__(self, "mu", mu)
        if self.lambdas is not None:
            lambdas = tuple(to_fraction(v) for v in self.lambdas)
            if len(lambdas) != len(mu):
                raise UsageError(f"Got {len(lambdas)} preimages for {len(mu)} points")
            _check_distinct_generic(lambdas, "lambda")
            object.__setattr__(self, "lambdas", lambdas)


@dataclass(frozen=True)
class PointConfigQuadric:
    """Three diagonal points ([1:μ_i],[1:μ_i]) with preimages [1:λ_i]."""

    mu: tuple[Fraction, Fraction, Fraction]
    lambdas: tuple[Fraction, Fraction, Fraction]

    def __post_init__(self) -> None:
        mu = tuple(to_fraction(m) for m in self.mu)
        lambdas = tuple(to_fraction(v) for v in self.lambdas)
        if len(mu) != 3 or len(lambdas) != 3:
            raise UsageError("A quadric configuration has exactly three points")
        _check_distinct_generic(mu, "mu")
        _check_distinct_generic(lambdas, "lambda")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lambdas", lambdas)


def _distinct_generic_draw(rng: np.random.Generator, count: int) -> tuple[Fraction, ...]:
    while True:
        values = tuple(random_rationals(rng, count))
        if len(set(values)) == count and not any(v in (0, 1) for v in values):
            return values


def random_quadric_config(rng: np.random.Generator) -> PointConfigQuadric:
    """Draw a random rational configuration of three diagonal points."""
    return PointConfigQuadric(_distinct_generic_draw(rng, 3), _distinct_generic_draw(rng, 3))  # type: ignore[arg-type]


def random_p2_config(rng: np.random.Generator, points: int = 1) -> PointConfigP2:
    """Draw ``points`` random values μ_i with preimages left free."""
    return PointConfigP2(_distinct_generic_draw(rng, points))


@dataclass(frozen=True)
class IncidenceMatrix:
    """Rational constraint matrix with labelled rows and columns."""

    entries: tuple[tuple[Fraction, ...], ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.col_labels)

    def rank(self) -> int:
        return rank(self.entries)

    def columns(self, indices: Sequence[int]) -> list[list[Fraction]]:
        return [[row[j] for j in indices] for row in self.entries]

    def kernel(self) -> list[list[Fraction]]:
        return nullspace(self.entries, len(self.col_labels))


QUADRIC_COLUMNS = ("p0", "p1", "p2", "q1", "q2", "q3")


def _quadric_rows(mu: Sequence[Fraction], lambdas: Sequence[Fraction]) -> list[tuple[Fraction, ...]]:
    rows = [(Fraction(1),) * 3 + (Fraction(-1),) * 3]
    for m, lam in zip(mu, lambdas, strict=True):
        rows.append((m, m * lam, m * lam**2, -lam, -(lam**2), -(lam**3)))
    return rows


def build_A(cfg: PointConfigQuadric) -> IncidenceMatrix:
    """4×6 matrix of point conditions on (p0, p1, p2, q1, q2, q3) once p3 = q0 = 0.

    Row 1 is the condition at [1:1]; row i+1 is μ_i·p(1, λ_i) = q(1, λ_i).
    """
    rows = _quadric_rows(cfg.mu, cfg.lambdas)
    labels = ("[1:1]",) + tuple(f"[1:{lam}]" for lam in cfg.lambdas)
    return IncidenceMatrix(tuple(rows), labels, QUADRIC_COLUMNS)


@dataclass(frozen=True)
class GammaMinors:
    """Minors of the last three columns of A and the determinant of the Γ system.

    ``m[i]`` deletes row i+1 of the 4×3 matrix; ``det_check`` is the determinant of the
    coefficient matrix of μ in the three equations det(column c | last three columns) = 0.
    The identity det_check · λ1λ2λ3 = -M1·M2·M3·M4 fixes the sign convention.
    """

    m: tuple[Fraction, Fraction, Fraction, Fraction]
    det_check: Fraction
    coefficients: tuple[tuple[Fraction, Fraction, Fraction], ...]


def _last_columns(lambdas: Sequence[Fraction]) -> list[list[Fraction]]:
    rows = [[Fraction(-1)] * 3]
    rows += [[-lam, -(lam**2), -(lam**3)] for lam in lambdas]
    return rows


def gamma_minors(lambdas: Sequence[RationalLike]) -> GammaMinors:
    """Minors M1..M4 of the Vandermonde-like block of A and the Γ determinant.

    Raises:
        DomainError: If the λ_i are not distinct or hit 0 or 1.
        InternalInconsistencyError: If the determinant identity fails or a value is 0.
    """
    lam = tuple(to_fraction(v) for v in lambdas)
    if len(lam) != 3:
        raise UsageError("Exactly three preimages are needed")
    _check_distinct_generic(lam, "lambda")
    block = _last_columns(lam)
    minors = tuple(determinant([row for k, row in enumerate(block) if k != i]) for i in range(4))
    m1, m2, m3, m4 = minors
    coefficients = tuple((-(lam[0] ** e) * m2, lam[1] ** e * m3, -(lam[2] ** e) * m4) for e in range(3))
    det_check = determinant(coefficients)
    if det_check * lam[0] * lam[1] * lam[2] != -m1 * m2 * m3 * m4:
        raise InternalInconsistencyError(f"Γ determinant {det_check} does not match the minors {minors}")
    if det_check == 0 or 0 in minors:
        raise InternalInconsistencyError(f"Vanishing minor for λ = {[str(v) for v in lam]}")
    return GammaMinors(minors, det_check, coefficients)  # type: ignore[arg-type]


def gamma_solve(lambdas: Sequence[RationalLike]) -> PointConfigQuadric:
    """The unique μ for which the incidence matrix of (μ, λ) drops to rank 3.

    Raises:
        DomainError: If that μ collides or hits 0 or 1.
    """
    minors = gamma_minors(lambdas)
    m1 = minors.m[0]
    augmented = [[*row, m1] for row in minors.coefficients]
    kernel = nullspace(augmented, 4)
    if len(kernel) != 1 or kernel[0][3] == 0:
        raise InternalInconsistencyError("Γ system is not uniquely solvable")
    mu = tuple(v / kernel[0][3] for v in kernel[0][:3])
    return PointConfigQuadric(mu, tuple(to_fraction(v) for v in lambdas))  # type: ignore[arg-type]


F_SYMBOLS = sympy.symbols("r1 r3 p1 p2 p3 q1 q2 q3 q4")
R1, R3, P1, P2_, P3, Q1, Q2, Q3, Q4 = F_SYMBOLS


@dataclass(frozen=True)
class FCertificate:
    """Outcome of the irreducibility argument for F."""

    linear_in_coefficients: bool
    remainder_mod_r3: sympy.Expr
    value_at_r1_eq_r3: sympy.Expr
    content: sympy.Expr

    @property
    def passed(self) -> bool:
        return (
            self.linear_in_coefficients
            and self.remainder_mod_r3 != 0
            and self.value_at_r1_eq_r3 != 0
            and self.content.is_number
        )


def _f_expression(mu: Fraction) -> sympy.Expr:
    lam = sympy.Symbol("lambda")
    q_sum = Q1 + Q2 + Q3 + Q4
    p0 = q_sum - P1 - P2_ - P3
    p_at = p0 + P1 * lam + P2_ * lam**2 + P3 * lam**3
    q_at = Q1 * lam + Q2 * lam**2 + Q3 * lam**3 + Q4 * lam**4
    cleared = R3**4 * (to_sympy(mu) * p_at - q_at)
    return sympy.expand(sympy.cancel(cleared.subs(lam, R1 / R3)))


def certify_F(poly: sympy.Poly, mu: Fraction) -> FCertificate:
    """Run the structural checks showing F is irreducible."""
    coefficient_vars = (P1, P2_, P3, Q1, Q2, Q3, Q4)
    expr = poly.as_expr()
    in_coefficients = sympy.Poly(expr, *coefficient_vars)
    linear = in_coefficients.total_degree() <= 1 and in_coefficients.coeff_monomial(1) == 0
    content = sympy.Integer(0)
    for coeff in in_coefficients.coeffs():
        content = sympy.gcd(content, coeff)
    return FCertificate(
        linear_in_coefficients=bool(linear),
        remainder_mod_r3=sympy.expand(expr.subs(R3, 0)),
        value_at_r1_eq_r3=sympy.factor(expr.subs(R1, R3)),
        content=content,
    )


def build_F(mu: RationalLike) -> sympy.Poly:
    """Polynomial F in (r1, r3, p1, p2, p3, q1, q2, q3, q4) cutting out one free point.

    F is the point condition μ·p(1, λ) = q(1, λ) after eliminating λ = r1/r3 and
    p0 = q1 + q2 + q3 + q4 - p1 - p2 - p3 and clearing r3^4.

    Raises:
        DomainError: If μ is 0 or 1.
        InternalInconsistencyError: If a certification step fails.
    """
    m = to_fraction(mu)
    if m in (0, 1):
        raise DomainError(f"mu must avoid 0 and 1, got {m}")
    poly = sympy.Poly(_f_expression(m), *F_SYMBOLS, domain=sympy.QQ)
    if poly.total_degree() != 5:
        raise InternalInconsistencyError(f"F has degree {poly.total_degree()}, expected 5")
    cert = certify_F(poly, m)
    if not cert.passed:
        raise InternalInconsistencyError(f"F fails certification for mu = {m}: {cert}")
    logger.debug(f"F certified for mu = {m}")
    return poly


@dataclass(frozen=True)
class ParamCurve:
    """Rational curve [a:b] ↦ forms of equal degree (3 forms into ℙ², 4 into ℙ¹×ℙ¹)."""

    target: Target
    polys: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        target = Target(self.target)
        polys = tuple(tuple(to_fraction(c) for c in poly) for poly in self.polys)
        if len(polys) != FORM_COUNT[target] or any(len(p) != FORM_DEGREE[target] + 1 for p in polys):
            raise UsageError(f"A {target} curve needs {FORM_COUNT[target]} forms of degree {FORM_DEGREE[target]}")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "polys", polys)
        self._validate()

    @property
    def degree(self) -> int:
        return FORM_DEGREE[self.target]

    def forms(self) -> list[sympy.Expr]:
        """The forms as sympy expressions in (a, b)."""
        d = self.degree
        return [
            sum((to_sympy(c) * A ** (d - k) * B**k for k, c in enumerate(poly)), sympy.Integer(0))
            for poly in self.polys
        ]

    def affine(self, var: sympy.Symbol = T) -> list[sympy.Poly]:
        """The forms at a = 1 as polynomials in ``var``."""
        return [sympy.Poly([to_sympy(c) for c in reversed(poly)], var, domain=sympy.QQ) for poly in self.polys]

    def blocks(self) -> list[tuple[int, ...]]:
        """Index groups of forms giving one projective coordinate each."""
        return [(0, 1, 2)] if self.target is Target.P2 else [(0, 1), (2, 3)]

    def evaluate(self, a: RationalLike, b: RationalLike) -> tuple[Fraction, ...]:
        fa, fb = to_fraction(a), to_fraction(b)
        d = self.degree
        return tuple(sum((c * fa ** (d - k) * fb**k for k, c in enumerate(poly)), Fraction(0)) for poly in self.polys)

    def reparametrized(self, matrix: Sequence[Sequence[RationalLike]]) -> "ParamCurve":
        """Precompose with (a, b) ↦ (m00·a + m01·b, m10·a + m11·b)."""
        (m00, m01), (m10, m11) = ((to_sympy(to_fraction(v)) for v in row) for row in matrix)
        subs = {A: m00 * A + m01 * B, B: m10 * A + m11 * B}
        polys = []
        for form in self.forms():
            poly = sympy.Poly(sympy.expand(form.subs(subs, simultaneous=True)), A, B, domain=sympy.QQ)
            d = self.degree
            polys.append(tuple(to_fraction(poly.coeff_monomial(A ** (d - k) * B**k)) for k in range(d + 1)))
        return ParamCurve(self.target, tuple(polys))

    def _validate(self) -> None:
        forms = self.forms()
        for block in self.blocks():
            if any(all(c == 0 for c in self.polys[i]) for i in block):
                raise DomainError("A coordinate form is identically zero")
            common = sympy.Integer(0)
            for i in block:
                common = sympy.gcd(common, forms[i])
            if sympy.Poly(common, A, B).total_degree() > 0:
                raise DomainError(f"Forms {block} share the factor {common}")

    def to_json(self) -> dict[str, object]:
        return {"target": str(self.target), "polys": [[str(c) for c in poly] for poly in self.polys]}

    @classmethod
    def from_json(cls, data: dict[str, object]) -> "ParamCurve":
        polys = data["polys"]
        if not isinstance(polys, list):
            raise UsageError("Curve JSON needs a 'polys' list")
        return cls(Target(str(data["target"])), tuple(tuple(to_fraction(str(c)) for c in poly) for poly in polys))


def _passes(curve: ParamCurve, a: Fraction, b: Fraction, image: Sequence[Sequence[Fraction]]) -> bool:
    values = curve.evaluate(a, b)
    for block, point in zip(curve.blocks(), image, strict=True):
        vector = [values[i] for i in block]
        if all(v == 0 for v in vector):
            return False
        # proportional iff all 2x2 minors vanish
        for i in range(len(vector)):
            for j in range(i + 1, len(vector)):
                if vector[i] * point[j] != vector[j] * point[i]:
                    return False
    return True


P2_COLUMNS = tuple(f"{name}{k}" for name in "pqr" for k in range(5))


def build_p2_matrix(cfg: PointConfigP2, lambdas: Sequence[Fraction]) -> IncidenceMatrix:
    """Point conditions on the 15 coefficients of (p, q, r)."""
    rows: list[tuple[Fraction, ...]] = []
    labels: list[str] = []

    def unit(name: str, k: int) -> tuple[Fraction, ...]:
        return tuple(Fraction(int(col == f"{name}{k}")) for col in P2_COLUMNS)

    # [0:1] -> [0:1:0] and [1:0] -> [1:0:0]
    for name, k, label in (("p", 4, "[0:1]"), ("r", 4, "[0:1]"), ("q", 0, "[1:0]"), ("r", 0, "[1:0]")):
        rows.append(unit(name, k))
        labels.append(label)

    def values_at(name: str, lam: Fraction, weight: Fraction) -> dict[str, Fraction]:
        return {f"{name}{k}": weight * lam**k for k in range(5)}

    def row(entries: dict[str, Fraction]) -> tuple[Fraction, ...]:
        return tuple(entries.get(col, Fraction(0)) for col in P2_COLUMNS)

    one = Fraction(1)
    rows.append(row(values_at("p", one, one) | values_at("q", one, -one)))
    rows.append(row(values_at("r", one, one)))
    labels += ["[1:1]", "[1:1]"]
    for m, lam in zip(cfg.mu, lambdas, strict=True):
        rows.append(row(values_at("p", lam, m) | values_at("q", lam, -one)))
        rows.append(row(values_at("r", lam, one)))
        labels += [f"[1:{lam}]", f"[1:{lam}]"]
    return IncidenceMatrix(tuple(rows), tuple(labels), P2_COLUMNS)


def _random_kernel_element(kernel: Sequence[Sequence[Fraction]], rng: np.random.Generator) -> list[Fraction]:
    return combine(kernel, random_rationals(rng, len(kernel)))


def _sample_p2(cfg: PointConfigP2, rng: np.random.Generator) -> ParamCurve:
    for attempt in range(MAX_REDRAWS):
        lambdas = cfg.lambdas if cfg.lambdas is not None else _distinct_generic_draw(rng, len(cfg.mu))
        matrix = build_p2_matrix(cfg, lambdas)
        if matrix.rank() != matrix.shape[0]:
            logger.warning(f"Rank defect for λ = {[str(v) for v in lambdas]}, redrawing")
            if cfg.lambdas is not None:
                break
            continue
        coeffs = _random_kernel_element(matrix.kernel(), rng)
        try:
            curve = ParamCurve(Target.P2, (tuple(coeffs[0:5]), tuple(coeffs[5:10]), tuple(coeffs[10:15])))
        except DomainError as e:
            logger.warning(f"Degenerate draw on attempt {attempt}: {e}")
            continue
        images = [((0, 1), [0, 1, 0]), ((1, 0), [1, 0, 0]), ((1, 1), [1, 1, 0])]
        images += [((1, lam), [1, m, 0]) for m, lam in zip(cfg.mu, lambdas, strict=True)]
        for (a, b), point in images:
            if not _passes(curve, Fraction(a), Fraction(b), [[Fraction(v) for v in point]]):
                raise InternalInconsistencyError(f"Sampled curve misses the image of [{a}:{b}]")
        return curve
    raise DomainError(f"No full-rank configuration found for mu = {[str(m) for m in cfg.mu]}")


def _quadric_images(cfg: PointConfigQuadric) -> list[tuple[tuple[Fraction, Fraction], list[list[Fraction]]]]:
    zero, one = Fraction(0), Fraction(1)
    images = [((zero, one), [[zero, one]] * 2), ((one, zero), [[one, zero]] * 2), ((one, one), [[one, one]] * 2)]
    images += [((one, lam), [[one, m]] * 2) for m, lam in zip(cfg.mu, cfg.lambdas, strict=True)]
    return images


def _block_to_forms(vector: Sequence[Fraction]) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    p0, p1, p2, q1, q2, q3 = vector
    zero = Fraction(0)
    return (p0, p1, p2, zero), (zero, q1, q2, q3)


def _check_quadric(curve: ParamCurve, cfg: PointConfigQuadric) -> None:
    for (a, b), image in _quadric_images(cfg):
        if not _passes(curve, a, b, image):
            raise InternalInconsistencyError(f"Sampled curve misses the image of [{a}:{b}]")


def _sample_quadric(cfg: PointConfigQuadric, rng: np.random.Generator) -> ParamCurve:
    matrix = build_A(cfg)
    if matrix.rank() != 4:
        raise DomainError(f"Incidence matrix has rank {matrix.rank()} for λ = {[str(v) for v in cfg.lambdas]}")
    kernel = matrix.kernel()
    for attempt in range(MAX_REDRAWS):
        first = _block_to_forms(_random_kernel_element(kernel, rng))
        second = _block_to_forms(_random_kernel_element(kernel, rng))
        try:
            curve = ParamCurve(Target.QUADRIC, (*first, *second))
        except DomainError as e:
            logger.warning(f"Degenerate draw on attempt {attempt}: {e}")
            continue
        _check_quadric(curve, cfg)
        return curve
    raise DomainError("Could not draw coprime coordinate pairs")


def sample_curve(cfg: PointConfigP2 | PointConfigQuadric, rng: np.random.Generator | None = None) -> ParamCurve:
    """Draw a random rational curve through the configured points.

    The point conditions are solved exactly; the curve is a random rational element of
    the kernel and is checked to pass through every point with zero residual.
    """
    rng = rng if rng is not None else make_rng(0)
    if isinstance(cfg, PointConfigQuadric):
        return _sample_quadric(cfg, rng)
    return _sample_p2(cfg, rng)


def _complex_roots(poly: sympy.Poly) -> list[complex]:
    if poly.degree() <= 0:
        return []
    for maxsteps in (100, 400, 1600):
        try:
            return [complex(r) for r in poly.nroots(n=ROOT_DIGITS, maxsteps=maxsteps)]
        except NoConvergence:
            logger.debug(f"nroots did not converge with maxsteps={maxsteps}")
    raise InternalInconsistencyError(f"Root isolation failed for a degree-{poly.degree()} polynomial")


def _normalize_param(a: complex, b: complex) -> ParamPoint:
    if abs(a) <= 1e-12 * max(abs(b), 1.0):
        return INFINITY
    return (1 + 0j, complex(b / a))


def _homogeneous_common_roots(forms: Sequence[sympy.Expr]) -> list[ParamPoint]:
    common = sympy.Integer(0)
    for form in forms:
        common = sympy.gcd(common, sympy.expand(form))
    if sympy.Poly(common, A, B).total_degree() <= 0:
        return []
    roots: list[ParamPoint] = []
    if sympy.expand(common.subs({A: 0, B: 1})) == 0:
        roots.append(INFINITY)
    affine = sympy.Poly(sympy.expand(common.subs(A, 1)), B)
    if affine.degree() > 0:
        roots += [(1 + 0j, r) for r in _complex_roots(sympy.Poly(sympy.sqf_part(affine.as_expr()), B))]
    return roots


def _jacobian_minor(f: sympy.Expr, g: sympy.Expr) -> sympy.Expr:
    return sympy.diff(f, A) * sympy.diff(g, B) - sympy.diff(f, B) * sympy.diff(g, A)


def non_immersion_points(c: ParamCurve) -> list[ParamPoint]:
    """Parameters where the differential of the parametrization vanishes.

    These are the common zeros of the 2×2 minors of the Jacobian of each coordinate block
    in (a, b), found by an exact gcd and then numerical root isolation. The parameter
    [0:1] is reported as (0, 1).
    """
    forms = c.forms()
    minors = []
    for block in c.blocks():
        for i_pos, i in enumerate(block):
            for j in block[i_pos + 1 :]:
                minors.append(_jacobian_minor(forms[i], forms[j]))
    return _homogeneous_common_roots(minors)


@dataclass(frozen=True)
class DoublePoint:
    """Two parameters with the same image."""

    params: tuple[ParamPoint, ParamPoint]
    image: tuple[complex, ...]
    kind: str
    unresolved: bool = False


def _symmetrized(f: sympy.Poly, g: sympy.Poly) -> sympy.Poly:
    fs, fu = f.as_expr().subs(T, S_PAIR), f.as_expr().subs(T, T_PAIR)
    gs, gu = g.as_expr().subs(T, S_PAIR), g.as_expr().subs(T, T_PAIR)
    numerator = sympy.Poly(sympy.expand(fs * gu - fu * gs), S_PAIR, T_PAIR, domain=sympy.QQ)
    quotient, remainder = sympy.div(numerator, sympy.Poly(S_PAIR - T_PAIR, S_PAIR, T_PAIR, domain=sympy.QQ))
    if not remainder.is_zero:
        raise InternalInconsistencyError("Symmetrized form is not divisible by s - u")
    return quotient


def _pair_forms(affine: Sequence[sympy.Poly], blocks: Sequence[tuple[int, ...]]) -> list[sympy.Poly]:
    forms = []
    for block in blocks:
        for i_pos, i in enumerate(block):
            for j in block[i_pos + 1 :]:
                forms.append(_symmetrized(affine[i], affine[j]))
    return forms


def _evaluate_complex(poly: sympy.Poly, value: complex) -> complex:
    return complex(np.polyval(np.array([complex(c) for c in poly.all_coeffs()]), value))


def _coefficients_in_u(form: sympy.Poly, s: complex) -> np.ndarray:
    """Coefficients (highest first) of form(s, u) as a polynomial in u."""
    degree = form.degree(T_PAIR)
    coeffs = np.zeros(degree + 1, dtype=complex)
    for (i, j), c in form.terms():
        coeffs[degree - j] += complex(c) * s**i
    return coeffs


def _relative_value(form: sympy.Poly, s: complex, u: complex) -> float:
    terms = np.array([complex(c) * s**i * u**j for (i, j), c in form.terms()])
    return float(abs(terms.sum()) / (1.0 + np.abs(terms).sum()))


def _tangents(affine: Sequence[sympy.Poly], c: ParamCurve, u: complex, pivots: Sequence[int]) -> list[np.ndarray]:
    """Tangent data per block: the tangent line in ℙ², or dX/du in the chart of ``pivot``."""
    values = [_evaluate_complex(p, u) for p in affine]
    derivs = [_evaluate_complex(p.diff(T), u) for p in affine]
    tangents = []
    for block, pivot in zip(c.blocks(), pivots, strict=True):
        v = np.array([values[i] for i in block])
        dv = np.array([derivs[i] for i in block])
        if len(block) == 3:
            tangents.append(np.cross(v, dv))
        else:
            other = 1 - pivot
            tangents.append(np.array([(v[pivot] * dv[other] - dv[pivot] * v[other]) / v[pivot] ** 2]))
    return tangents


def _is_node(c: ParamCurve, affine: Sequence[sympy.Poly], s: complex, u: complex) -> bool:
    """True when the two branches through the image point have distinct tangents."""
    values = [_evaluate_complex(p, s) for p in affine]
    pivots = [int(np.argmax(np.abs([values[i] for i in block]))) for block in c.blocks()]
    first = _tangents(affine, c, s, pivots)
    second = _tangents(affine, c, u, pivots)
    if c.target is Target.P2:
        d1, d2 = first[0], second[0]
        wedge = np.linalg.norm(np.cross(d1, d2))
    else:
        d1 = np.array([first[0][0], first[1][0]])
        d2 = np.array([second[0][0], second[1][0]])
        wedge = abs(d1[0] * d2[1] - d1[1] * d2[0])
    scale = np.linalg.norm(d1) * np.linalg.norm(d2)
    return bool(scale > 0 and wedge > PAIR_TOL * scale)


def _image(affine: Sequence[sympy.Poly], c: ParamCurve, u: complex) -> tuple[complex, ...]:
    values = [_evaluate_complex(p, u) for p in affine]
    image: list[complex] = []
    for block in c.blocks():
        vector = np.array([values[i] for i in block])
        pivot = vector[int(np.argmax(np.abs(vector)))]
        image.extend(complex(v / pivot) for v in vector)
    return tuple(image)


def _partners(roots: Sequence[complex], forms: Sequence[sympy.Poly]) -> dict[int, int | None]:
    partner: dict[int, int | None] = {}
    for k, s in enumerate(roots):
        best, best_score = None, np.inf
        for u in np.roots(_coefficients_in_u(forms[0], s)):
            if abs(u - s) <= PAIR_TOL * (1 + abs(s)):
                continue
            score = max(_relative_value(form, s, complex(u)) for form in forms)
            if score < best_score:
                best, best_score = complex(u), score
        if best is None or best_score > PAIR_TOL:
            partner[k] = None
            continue
        j = min(range(len(roots)), key=lambda idx: abs(roots[idx] - best))
        close = abs(roots[j] - best) <= 1e3 * PAIR_TOL * (1 + abs(best))
        partner[k] = j if j != k and close else None
    return partner


def double_points(c: ParamCurve, rng: np.random.Generator | None = None) -> list[DoublePoint]:
    """Unordered parameter pairs {s, u}, s ≠ u, with the same image point.

    Pairs are the common zeros of the symmetrized forms (f(s)g(u) - f(u)g(s))/(s - u)
    of each block, eliminated exactly by resultants over the rationals. The curve is
    first precomposed with a random shear so no pair sits at the parameter ∞.
    """
    rng = rng if rng is not None else make_rng(0)
    shear = random_rational(rng, 9)
    sheared = c.reparametrized(((1, shear), (0, 1)))
    affine = sheared.affine()
    forms = _pair_forms(affine, sheared.blocks())
    eliminated: sympy.Poly | None = None
    for other in forms[1:]:
        res = sympy.Poly(sympy.resultant(forms[0].as_expr(), other.as_expr(), T_PAIR), S_PAIR, domain=sympy.QQ)
        eliminated = res if eliminated is None else sympy.gcd(eliminated, res)
    if eliminated is None or eliminated.is_zero:
        raise InternalInconsistencyError("Symmetrized forms have a common component")
    roots = _complex_roots(sympy.Poly(sympy.sqf_part(eliminated.as_expr()), S_PAIR))
    logger.debug(f"{len(roots)} candidate parameters for double points")

    partner = _partners(roots, forms)
    result: list[DoublePoint] = []
    seen: set[frozenset[int]] = set()
    for k, j in partner.items():
        if j is None or frozenset((k, j)) in seen:
            continue
        seen.add(frozenset((k, j)))
        s, u = roots[k], roots[j]
        kind = "node" if _is_node(sheared, affine, s, u) else "cusp-adjacent"
        params = sorted((_normalize_param(1 + shear * v, v) for v in (s, u)), key=_param_key)
        result.append(DoublePoint((params[0], params[1]), _image(affine, sheared, s), kind, partner.get(j) != k))
    logger.info(f"Found {len(result)} double points on a {c.target} curve")
    return result


def _param_key(point: ParamPoint) -> tuple[bool, float, float]:
    return (point[0] == 0, point[1].real, point[1].imag)


@dataclass(frozen=True)
class CuspSample:
    """A (3, 3) curve with a forced simple cusp and the configuration it realizes."""

    curve: ParamCurve
    config: PointConfigQuadric
    cusp_param: Fraction
    cusp_image: tuple[Fraction, Fraction]
    milnor: int


def image_point(c: ParamCurve, a: RationalLike, b: RationalLike) -> tuple[Fraction, ...]:
    """Exact image of [a:b], each projective block scaled so its first nonzero entry is 1."""
    values = c.evaluate(a, b)
    image: list[Fraction] = []
    for block in c.blocks():
        vector = [values[i] for i in block]
        lead = next((v for v in vector if v != 0), None)
        if lead is None:
            raise DomainError(f"[{a}:{b}] is a base point of block {block}")
        image.extend(v / lead for v in vector)
    return tuple(image)


def implicit_equation(c: ParamCurve) -> sympy.Poly:
    """Equation of the image in affine coordinates (X, Y).

    For a plane curve the chart is X = p/r, Y = q/r; on the quadric it is X = q/p,
    Y = s/r. The equation is the resultant eliminating the parameter.
    """
    if c.target is Target.P2:
        p, q, r = (poly.as_expr() for poly in c.affine())
        return sympy.Poly(sympy.resultant(p - CX * r, q - CY * r, T), CX, CY, domain=sympy.QQ)
    p, q, r, s = (poly.as_expr() for poly in c.affine())
    return sympy.Poly(sympy.resultant(q - CX * p, s - CY * r, T), CX, CY, domain=sympy.QQ)


def _wronskian_at(first: sympy.Expr, second: sympy.Expr, value: sympy.Expr) -> sympy.Expr:
    w = first * sympy.diff(second, T) - sympy.diff(first, T) * second
    return sympy.expand(w.subs(T, value))


def _cusp_block(rng: np.random.Generator) -> tuple[list[Fraction], Fraction, Fraction]:
    t0, x0 = random_rational(rng, 9), random_rational(rng, 9)
    rows = [
        [Fraction(1)] * 3 + [Fraction(-1)] * 3,
        [-x0, -x0 * t0, -x0 * t0**2, t0, t0**2, t0**3],
        [Fraction(0), -x0, -2 * x0 * t0, Fraction(1), 2 * t0, 3 * t0**2],
    ]
    return _random_kernel_element(nullspace(rows, 6), rng), t0, x0


def cusp_sample(cfg: PointConfigQuadric, rng: np.random.Generator | None = None) -> CuspSample:
    """Sample a (3, 3) curve through the diagonal points with a simple cusp.

    The cusp sits at a random rational parameter t0: (q - x0·p) vanishes to order 2 at
    t0, which forces the first Wronskian to vanish there, and the second block is the
    member of its kernel pencil whose Wronskian also vanishes at t0. The preimages λ_i of
    ``cfg`` are kept and the μ_i are read off the sampled (p, q).

    Raises:
        DomainError: If no valid sample is found after bounded redraws.
    """
    rng = rng if rng is not None else make_rng(0)
    alpha = sympy.Symbol("alpha")
    for attempt in range(MAX_REDRAWS):
        vector, t0, x0 = _cusp_block(rng)
        p_form, q_form = _block_to_forms(vector)
        p_poly = sum((to_sympy(c) * T**k for k, c in enumerate(p_form)), sympy.Integer(0))
        q_poly = sum((to_sympy(c) * T**k for k, c in enumerate(q_form)), sympy.Integer(0))
        p_values = [p_poly.subs(T, to_sympy(lam)) for lam in cfg.lambdas]
        if any(v == 0 for v in p_values):
            continue
        q_values = [q_poly.subs(T, to_sympy(lam)) for lam in cfg.lambdas]
        # cfg.mu is ignored: the cusp fixes (p, q), so the μ_i are whatever it gives at the λ_i
        mu = tuple(to_fraction(q / p) for q, p in zip(q_values, p_values, strict=True))
        try:
            realized = PointConfigQuadric(mu, cfg.lambdas)  # type: ignore[arg-type]
        except DomainError:
            continue
        kernel = build_A(realized).kernel()
        if len(kernel) != 2:
            continue
        other = next((v for v in kernel if rank([v, vector]) == 2), None)
        if other is None:
            continue
        r_form, s_form = _block_to_forms(other)
        r_expr = alpha * p_poly + sum((to_sympy(c) * T**k for k, c in enumerate(r_form)), sympy.Integer(0))
        s_expr = alpha * q_poly + sum((to_sympy(c) * T**k for k, c in enumerate(s_form)), sympy.Integer(0))
        w = sympy.Poly(_wronskian_at(r_expr, s_expr, to_sympy(t0)), alpha)
        if w.coeff_monomial(alpha**2) != 0:
            raise InternalInconsistencyError("First block is not ramified at the cusp parameter")
        slope, constant = w.coeff_monomial(alpha), w.coeff_monomial(1)
        if slope == 0:
            continue
        a_value = to_fraction(-constant / slope)
        second = tuple(to_fraction(a_value * u + v) for u, v in zip(vector, other, strict=True))
        r_final, s_final = _block_to_forms(second)
        try:
            curve = ParamCurve(Target.QUADRIC, (p_form, q_form, r_final, s_final))
        except DomainError as e:
            logger.warning(f"Degenerate cusp draw on attempt {attempt}: {e}")
            continue
        _check_quadric(curve, realized)
        if len(non_immersion_points(curve)) != 1:
            continue
        values = curve.evaluate(1, t0)
        if values[2] == 0:
            continue
        image = (x0, values[3] / values[2])
        local = local_equation(implicit_equation(curve).as_expr(), (CX, CY), image)
        if classify_singularity(local) is not Singularity.CUSP:
            logger.warning(f"Forced point at t0 = {t0} is not a simple cusp, redrawing")
            continue
        logger.info(f"Cusp sample found on attempt {attempt} at t0 = {t0}")
        return CuspSample(curve, realized, t0, image, 2)
    raise DomainError("No curve with a simple cusp found after bounded redraws")
