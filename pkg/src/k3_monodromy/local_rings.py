"""Exact computations in the formal power-series ring Q[[x, y]].

Colengths are computed by linear algebra on truncations k[x, y]/m^T. A value is only
returned once the whole degree-(T-1) slab lies in I + m^T; by Nakayama this means
m^(T-1) is contained in I, so the truncated dimension is the true colength.
"""

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from tokenize import TokenError

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    rationalize,
    standard_transformations,
)
from sympy.polys.polyerrors import CoercionFailed, PolynomialError

from k3_monodromy.config import settings
from k3_monodromy.constants import (
    COLENGTH_TRUNC_GROWTH,
    EMBEDDING_VERIFY_MAX_N,
    EMBEDDING_VERIFY_SAMPLES,
    MAX_REDRAWS,
)
from k3_monodromy.errors import DomainError, InconclusiveError, InternalInconsistencyError, UsageError
from k3_monodromy.exact import RationalLike, make_rng, random_rational, rank, sparse_matrix, to_fraction, to_sympy

logger = logging.getLogger(__name__)

X, Y = sympy.symbols("x y")

Monomial = tuple[int, int]

_TRANSFORMATIONS = (*standard_transformations, convert_xor, rationalize)


class Singularity(StrEnum):
    """Plane curve germ types handled here."""

    SMOOTH = "smooth"
    NODE = "node"
    CUSP = "cusp"


@dataclass(frozen=True)
class Unbounded:
    """Marker for an infinite colength or an identically vanishing restriction."""

    def __str__(self) -> str:
        return "unbounded"


UNBOUNDED = Unbounded()


@dataclass(frozen=True)
class Dim:
    """Dimension of a nonempty family of embeddings."""

    value: int


@dataclass(frozen=True)
class NoEmbedding:
    """Marker for an empty family of embeddings."""

    def __str__(self) -> str:
        return "no embedding"


NO_EMBEDDING = NoEmbedding()


@dataclass(frozen=True)
class BiPoly:
    """Polynomial in x, y with rational coefficients, stored sparsely."""

    terms: Mapping[Monomial, Fraction] = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        clean: dict[Monomial, Fraction] = {}
        for (i, j), coeff in self.terms.items():
            if i < 0 or j < 0:
                raise UsageError(f"Negative exponent in monomial {(i, j)}")
            value = to_fraction(coeff)
            if value:
                clean[(int(i), int(j))] = value
        object.__setattr__(self, "terms", clean)

    @classmethod
    def parse(cls, text: str) -> "BiPoly":
        return parse_bipoly(text)

    @classmethod
    def from_sympy(cls, expr: sympy.Expr, x: sympy.Symbol = X, y: sympy.Symbol = Y) -> "BiPoly":
        """Convert a sympy polynomial expression in ``x`` and ``y``."""
        try:
            poly = sympy.Poly(sympy.expand(expr), x, y, domain=sympy.QQ)
        except (PolynomialError, CoercionFailed) as e:
            raise UsageError(f"Not a rational polynomial in {x}, {y}: {expr}") from e
        return cls({(int(i), int(j)): to_fraction(c) for (i, j), c in poly.terms()})

    @classmethod
    def monomial(cls, i: int, j: int, coeff: RationalLike = 1) -> "BiPoly":
        return cls({(i, j): to_fraction(coeff)})

    def to_sympy(self) -> sympy.Expr:
        terms = (sympy.Rational(c.numerator, c.denominator) * X**i * Y**j for (i, j), c in self.terms.items())
        return sympy.Add(*terms)

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        """Lowest total degree of a term; -1 for the zero polynomial."""
        return min((i + j for i, j in self.terms), default=-1)

    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=-1)

    def constant_term(self) -> Fraction:
        return self.terms.get((0, 0), Fraction(0))

    def __add__(self, other: "BiPoly") -> "BiPoly":
        result = dict(self.terms)
        for mono, coeff in other.terms.items():
            result[mono] = result.get(mono, Fraction(0)) + coeff
        return BiPoly(result)

    def __neg__(self) -> "BiPoly":
        return self.scale(-1)

    def __sub__(self, other: "BiPoly") -> "BiPoly":
        return self + (-other)

    def __mul__(self, other: "BiPoly") -> "BiPoly":
        result: dict[Monomial, Fraction] = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                mono = (i1 + i2, j1 + j2)
                result[mono] = result.get(mono, Fraction(0)) + c1 * c2
        return BiPoly(result)

    def scale(self, factor: RationalLike) -> "BiPoly":
        f = to_fraction(factor)
        return BiPoly({mono: f * c for mono, c in self.terms.items()})

    def diff(self, var: int) -> "BiPoly":
        """Partial derivative in x (``var=0``) or y (``var=1``)."""
        result: dict[Monomial, Fraction] = {}
        for (i, j), c in self.terms.items():
            power = (i, j)[var]
            if power:
                mono = (i - 1, j) if var == 0 else (i, j - 1)
                result[mono] = c * power
        return BiPoly(result)

    def evaluate(self, x: Fraction, y: Fraction) -> Fraction:
        return sum((c * x**i * y**j for (i, j), c in self.terms.items()), Fraction(0))

    def truncate(self, trunc: int) -> "BiPoly":
        """Drop all terms of total degree >= trunc."""
        return BiPoly({(i, j): c for (i, j), c in self.terms.items() if i + j < trunc})

    def __str__(self) -> str:
        return str(self.to_sympy()) if self.terms else "0"


def parse_polynomial(text: str, variables: Sequence[sympy.Symbol]) -> sympy.Poly:
    """Parse polynomial text in the given variables with rational coefficients.

    Raises:
        UsageError: On syntax errors, unknown variables or non-polynomial input.
    """
    try:
        expr = parse_expr(text, local_dict={str(v): v for v in variables}, transformations=_TRANSFORMATIONS)
    except (SyntaxError, TokenError, TypeError, ValueError, sympy.SympifyError) as e:
        raise UsageError(f"Cannot parse polynomial {text!r}: {e}") from e
    unknown = expr.free_symbols - set(variables)
    if unknown:
        names = ", ".join(map(str, variables))
        raise UsageError(f"Unknown variables {sorted(map(str, unknown))} in {text!r}; only {names} are allowed")
    try:
        return sympy.Poly(sympy.expand(expr), *variables, domain=sympy.QQ)
    except (PolynomialError, CoercionFailed) as e:
        raise UsageError(f"Not a rational polynomial: {text!r}") from e


def parse_bipoly(text: str) -> BiPoly:
    """Parse polynomial text such as ``"x^3 - 1/2*x*y"``."""
    return BiPoly.from_sympy(parse_polynomial(text, (X, Y)).as_expr())


def parse_ideal(text: str) -> "LocalIdeal":
    """Parse a comma-separated generator list such as ``"x*y, x^3, y^2"``."""
    parts = [part for part in text.split(",") if part.strip()]
    return LocalIdeal(tuple(parse_bipoly(part) for part in parts))


def linear_form(a: RationalLike, b: RationalLike) -> BiPoly:
    """The form a·x + b·y."""
    return BiPoly({(1, 0): to_fraction(a), (0, 1): to_fraction(b)})


@dataclass(frozen=True)
class LocalIdeal:
    """Ideal of Q[[x, y]] generated by polynomials in the maximal ideal."""

    gens: tuple[BiPoly, ...]
    trunc: int = field(default_factory=lambda: settings.colength_initial_trunc)

    def __post_init__(self) -> None:
        gens = tuple(g for g in self.gens if not g.is_zero())
        for g in gens:
            if g.constant_term():
                raise DomainError(f"Generator {g} is a unit; local ideals must lie in the maximal ideal")
        if self.trunc < 2:
            raise UsageError(f"Truncation degree must be at least 2, got {self.trunc}")
        object.__setattr__(self, "gens", gens)

    def with_generators(self, *extra: BiPoly) -> "LocalIdeal":
        return LocalIdeal(self.gens + extra, self.trunc)


def _monomials_below(trunc: int) -> list[Monomial]:
    return [(d - j, j) for d in range(trunc) for j in range(d + 1)]


def _ideal_rows(gens: Sequence[BiPoly], trunc: int, index: Mapping[Monomial, int]) -> list[dict[int, Fraction]]:
    rows = []
    for g in gens:
        for a, b in _monomials_below(trunc - g.order()):
            row = {index[(i + a, j + b)]: c for (i, j), c in g.terms.items() if i + j + a + b < trunc}
            if row:
                rows.append(row)
    return rows


def _rank_of_rows(rows: Sequence[Mapping[int, Fraction]], ncols: int) -> int:
    return rank(sparse_matrix(dict(enumerate(rows)), (len(rows), ncols)))


def quotient_dimension(ideal: LocalIdeal, trunc: int) -> int:
    """dim Q[x, y]/(I + m^trunc), without any exactness certificate."""
    monomials = _monomials_below(trunc)
    index = {mono: k for k, mono in enumerate(monomials)}
    rows = _ideal_rows(ideal.gens, trunc, index)
    return len(monomials) - _rank_of_rows(rows, len(monomials))


def quotient_basis(ideal: LocalIdeal, trunc: int) -> list[Monomial]:
    """Monomials spanning Q[x, y]/(I + m^trunc), preferring low degrees."""
    monomials = sorted(_monomials_below(trunc), key=lambda m: (-(m[0] + m[1]), m))
    index = {mono: k for k, mono in enumerate(monomials)}
    rows = _ideal_rows(ideal.gens, trunc, index)
    if not rows:
        return sorted(monomials, key=lambda m: (m[0] + m[1], m))
    _, pivots = sparse_matrix(dict(enumerate(rows)), (len(rows), len(monomials))).rref()
    pivot_set = set(pivots)
    basis = [mono for k, mono in enumerate(monomials) if k not in pivot_set]
    return sorted(basis, key=lambda m: (m[0] + m[1], m))


def colength(ideal: LocalIdeal, cap: int | None = None) -> int | Unbounded:
    """Length of Q[[x, y]]/I.

    Args:
        ideal: Ideal whose working truncation is the starting degree
        cap: Largest truncation degree tried (defaults to the configured cap)

    Returns:
        The colength, or ``UNBOUNDED`` when no certificate is found up to the cap
    """
    cap = cap if cap is not None else settings.colength_trunc_cap
    if not ideal.gens:
        return UNBOUNDED
    trunc = ideal.trunc
    while trunc <= cap:
        monomials = _monomials_below(trunc)
        index = {mono: k for k, mono in enumerate(monomials)}
        rows = _ideal_rows(ideal.gens, trunc, index)
        ideal_rank = _rank_of_rows(rows, len(monomials))
        slab = [{index[(trunc - 1 - j, j)]: Fraction(1)} for j in range(trunc)]
        if _rank_of_rows(rows + slab, len(monomials)) == ideal_rank:
            value = len(monomials) - ideal_rank
            logger.debug(f"Colength {value} certified at truncation {trunc}")
            return value
        trunc *= COLENGTH_TRUNC_GROWTH
    logger.debug(f"No colength certificate up to truncation {cap}")
    return UNBOUNDED


def milnor_number(f: BiPoly) -> int | Unbounded:
    """Colength of the Jacobian ideal (f_x, f_y) at the origin.

    Returns 0 at smooth points, 1 at a node, 2 at a simple cusp and ``UNBOUNDED`` for a
    non-isolated singularity.
    """
    if f.constant_term():
        raise DomainError(f"{f} does not vanish at the origin")
    partials = [f.diff(0), f.diff(1)]
    if any(p.constant_term() for p in partials):
        return 0
    return colength(LocalIdeal(tuple(partials)))


def classify_singularity(f: BiPoly) -> Singularity | None:
    """Map Milnor numbers 0, 1, 2 to smooth, node, cusp; anything else to None."""
    mu = milnor_number(f)
    return {0: Singularity.SMOOTH, 1: Singularity.NODE, 2: Singularity.CUSP}.get(mu) if isinstance(mu, int) else None


@dataclass(frozen=True)
class Branch:
    """Parametrized branch t ↦ (x(t), y(t)) given by coefficient lists in t.

    With ``exact=True`` the lists are complete polynomials; otherwise they are series
    known up to the shorter list's last exponent.
    """

    x: tuple[Fraction, ...]
    y: tuple[Fraction, ...]
    exact: bool = False

    def __post_init__(self) -> None:
        xs = tuple(to_fraction(c) for c in self.x)
        ys = tuple(to_fraction(c) for c in self.y)
        if (xs and xs[0]) or (ys and ys[0]):
            raise DomainError("Branch must pass through the origin")
        if not any(xs) and not any(ys):
            raise DomainError("Branch is identically zero up to truncation")
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "y", ys)

    @property
    def trunc(self) -> int:
        """Highest exponent of t for which both coordinates are known."""
        if self.exact:
            return max(len(self.x), len(self.y)) - 1
        return min(len(self.x), len(self.y)) - 1

    def coefficient(self, k: int) -> tuple[Fraction, Fraction]:
        cx = self.x[k] if k < len(self.x) else Fraction(0)
        cy = self.y[k] if k < len(self.y) else Fraction(0)
        return cx, cy


def branch_hyperplane_multiplicity(branch: Branch, a: RationalLike, b: RationalLike) -> int | Unbounded:
    """Order of vanishing at t = 0 of a·x(t) + b·y(t).

    Raises:
        DomainError: If the form is zero.
        InconclusiveError: If a truncated branch makes the form vanish to its order.
    """
    fa, fb = to_fraction(a), to_fraction(b)
    if not fa and not fb:
        raise DomainError("Linear form must be nonzero")
    for k in range(branch.trunc + 1):
        cx, cy = branch.coefficient(k)
        if fa * cx + fb * cy:
            return k
    if branch.exact:
        return UNBOUNDED
    raise InconclusiveError("Linear form vanishes on the branch up to its truncation", branch.trunc)


SECTION_MODELS: dict[Singularity, BiPoly] = {
    Singularity.NODE: BiPoly({(1, 1): Fraction(1)}),
    Singularity.CUSP: BiPoly({(0, 2): Fraction(1), (3, 0): Fraction(-1)}),
}


def generic_section_length(
    sing: Singularity,
    rng: np.random.Generator | None = None,
    form: tuple[RationalLike, RationalLike] | None = None,
) -> int | Unbounded:
    """Length of the intersection of a node or cusp model with a line through the origin.

    A random form with both coefficients nonzero always gives 2. An explicit ``form`` is
    used as is, so degenerate forms such as x on the node give ``UNBOUNDED``.
    """
    if sing not in SECTION_MODELS:
        raise UsageError(f"Generic sections are defined for node and cusp, not {sing}")
    model = SECTION_MODELS[sing]
    if form is not None:
        return colength(LocalIdeal((model, linear_form(*form))))
    rng = rng if rng is not None else make_rng(settings.seed)
    for _ in range(MAX_REDRAWS):
        a, b = random_rational(rng), random_rational(rng)
        if not a or not b:
            continue
        value = colength(LocalIdeal((model, linear_form(a, b))))
        if value != 2:
            raise InternalInconsistencyError(f"Section {a}*x + {b}*y of the {sing} model has length {value}")
        return value
    raise InternalInconsistencyError(f"No nondegenerate form drawn in {MAX_REDRAWS} attempts")


EMBEDDING_MODELS: dict[Singularity, sympy.Expr] = {
    Singularity.SMOOTH: Y,
    Singularity.NODE: X * Y,
    Singularity.CUSP: X**2 - Y**3,
}


def expected_embedding_dimension(sing: Singularity, n: int) -> Dim | NoEmbedding:
    """Closed-form dimension of the space of length-n curvilinear subschemes at the point."""
    if n < 1:
        raise UsageError(f"Length must be positive, got {n}")
    if n == 1 or sing is Singularity.SMOOTH:
        return Dim(0)
    if sing is Singularity.NODE:
        return Dim(1)
    # cusp: every (x + c*y^2, y^3) contains x^2 - y^3, so n = 3 is a line of embeddings
    return Dim(1) if n <= 3 else NO_EMBEDDING


@dataclass(frozen=True)
class _ChartFamily:
    """Normal forms (lead + tail(other), other^n) with symbolic tail coefficients."""

    lead: sympy.Symbol
    other: sympy.Symbol
    params: tuple[sympy.Symbol, ...]
    first_power: int

    def tail(self, values: Sequence[sympy.Expr] | None = None) -> sympy.Expr:
        coeffs = values if values is not None else self.params
        return sum(
            (c * self.other ** (self.first_power + k) for k, c in enumerate(coeffs)),
            sympy.Integer(0),
        )

    def membership_equations(self, model: sympy.Expr, n: int) -> list[sympy.Expr]:
        residue = sympy.expand(model.subs(self.lead, -self.tail()))
        poly = sympy.Poly(residue, self.other)
        eqs = [sympy.expand(poly.coeff_monomial(self.other**k)) for k in range(n)]
        return [eq for eq in eqs if eq != 0]

    def ideal(self, values: Sequence[sympy.Expr], n: int) -> LocalIdeal:
        first = BiPoly.from_sympy(self.lead + self.tail(values))
        second = BiPoly.from_sympy(self.other**n)
        return LocalIdeal((first, second))


def _chart_families(n: int) -> list[_ChartFamily]:
    a = sympy.symbols(f"a1:{n}") if n > 1 else ()
    b = sympy.symbols(f"b2:{n}") if n > 2 else ()
    # linear part x + a1*y (any line but x = 0), then the remaining line y = 0
    return [_ChartFamily(X, Y, tuple(a), 1), _ChartFamily(Y, X, tuple(b), 2)]


def _family_components(family: _ChartFamily, model: sympy.Expr, n: int) -> list[dict[sympy.Symbol, sympy.Expr]]:
    eqs = family.membership_equations(model, n)
    if not eqs:
        return [{}]
    if not family.params:
        return []
    solutions = sympy.solve(eqs, family.params, dict=True)
    return [dict(sol) for sol in solutions]


def _sample_point(
    family: _ChartFamily, solution: Mapping[sympy.Symbol, sympy.Expr], rng: np.random.Generator
) -> list[sympy.Expr]:
    free = {p: sympy.Rational(str(random_rational(rng))) for p in family.params if p not in solution}
    return [sympy.nsimplify(solution[p].subs(free)) if p in solution else free[p] for p in family.params]


def _contains(ideal: LocalIdeal, model: BiPoly) -> bool:
    return colength(ideal) == colength(ideal.with_generators(model))


def _verify_embedding(sing: Singularity, n: int, rng: np.random.Generator) -> Dim | NoEmbedding:
    model_expr = EMBEDDING_MODELS[sing]
    model = BiPoly.from_sympy(model_expr)
    best: int | None = None
    for family in _chart_families(n):
        components = _family_components(family, model_expr, n)
        for solution in components:
            dim = len(family.params) - len(solution)
            for _ in range(EMBEDDING_VERIFY_SAMPLES):
                values = _sample_point(family, solution, rng)
                if not all(v.is_Rational for v in values):
                    continue
                ideal = family.ideal(values, n)
                if colength(ideal) != n or not _contains(ideal, model):
                    raise InternalInconsistencyError(
                        f"Normal form {ideal.gens[0]} for a {sing} of length {n} does not contain the curve"
                    )
            best = dim if best is None else max(best, dim)
        if family.params and all(len(sol) > 0 for sol in components):
            # a generic member of the chart must miss the curve
            values = [sympy.Rational(str(random_rational(rng))) for _ in family.params]
            if _contains(family.ideal(values, n), model):
                raise InternalInconsistencyError(f"Generic length-{n} scheme lies on the {sing} model")
    return NO_EMBEDDING if best is None else Dim(best)


def embedding_dimension(sing: Singularity, n: int, rng: np.random.Generator | None = None) -> Dim | NoEmbedding:
    """Dimension of the space of embeddings of Spec k[t]/(t^n) into a curve germ.

    For n up to 5 the value is recomputed from the curvilinear normal forms in both charts
    and checked on random rational members by ideal membership.

    Raises:
        InternalInconsistencyError: If the normal-form computation disagrees with the
            closed form.
    """
    expected = expected_embedding_dimension(sing, n)
    if n == 1 or n > EMBEDDING_VERIFY_MAX_N:
        return expected
    rng = rng if rng is not None else make_rng(settings.seed)
    computed = _verify_embedding(sing, n, rng)
    if computed != expected:
        raise InternalInconsistencyError(f"Embeddings for ({sing}, {n}): computed {computed}, expected {expected}")
    logger.debug(f"Embedding dimension for ({sing}, {n}) verified: {computed}")
    return computed


def local_equation(
    expr: sympy.Expr, gens: Sequence[sympy.Symbol], point: Iterable[RationalLike]
) -> BiPoly:
    """Equation of a plane curve in local coordinates centred at ``point``.

    With three generators the curve is projective; the chart is the first coordinate
    that does not vanish at the point.
    """
    coords = [to_fraction(c) for c in point]
    if len(coords) != len(gens) or len(gens) not in (2, 3):
        raise UsageError("Point and variables must both have length 2 or 3")
    if len(gens) == 3:
        k = next((i for i, c in enumerate(coords) if c), None)
        if k is None:
            raise DomainError("The zero vector is not a projective point")
        expr = expr.subs(gens[k], 1)
        coords = [c / coords[k] for i, c in enumerate(coords) if i != k]
        gens = [g for i, g in enumerate(gens) if i != k]
    u, v = sympy.symbols("u v")
    shifted = expr.subs({gens[0]: u + to_sympy(coords[0]), gens[1]: v + to_sympy(coords[1])}, simultaneous=True)
    return BiPoly.from_sympy(sympy.expand(shifted), u, v)
