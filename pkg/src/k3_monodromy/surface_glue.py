"""Glue two plane quartics into a quartic surface in ℙ³.

C = V(g) lies in the plane H = {x = 0} with coordinates (y, z, t) and C' = V(h) lies in
H' = {t = 0} with coordinates (x, y, z). When g(y, z, 0) = λ·h(0, y, z) the surface

    f = g + λ·(h - h(0, y, z)) + x·t·K(x, y, z, t)

restricts to g on H and to λ·h on H' for every quadric K. The coefficient a of t² in K
(the x·t³ term of f) and b of x² (the x³·t term) are chosen so that f is smooth at every
singular point of C and C'. Smoothness elsewhere is a generic property and is not
certified.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np
import sympy

from k3_monodromy.constants import MAX_REDRAWS
from k3_monodromy.errors import DomainError, InternalInconsistencyError, UsageError
from k3_monodromy.exact import (
    RationalLike,
    combine,
    make_rng,
    nullspace,
    random_small_rational,
    solve_affine,
    to_fraction,
    to_sympy,
)
from k3_monodromy.local_rings import Singularity, classify_singularity, local_equation, parse_polynomial

logger = logging.getLogger(__name__)

X, Y, Z, T = sympy.symbols("x y z t")
G_VARS = (Y, Z, T)
H_VARS = (X, Y, Z)
F_VARS = (X, Y, Z, T)

PlanePoint = tuple[Fraction, Fraction, Fraction]


def _monomials(variables: Sequence[sympy.Symbol], degree: int) -> list[sympy.Expr]:
    return [sympy.Mul(*combo) for combo in combinations_with_replacement(variables, degree)]


def _as_poly(form: sympy.Poly | sympy.Expr | str, variables: Sequence[sympy.Symbol]) -> sympy.Poly:
    if isinstance(form, str):
        return parse_polynomial(form, variables)
    if isinstance(form, sympy.Poly):
        form = form.as_expr()
    return sympy.Poly(sympy.expand(form), *variables, domain=sympy.QQ)


def _value(poly: sympy.Poly, point: Sequence[Fraction]) -> Fraction:
    return to_fraction(poly(*(to_sympy(c) for c in point)))


def _point(values: Sequence[RationalLike]) -> PlanePoint:
    point = tuple(to_fraction(v) for v in values)
    if len(point) != 3:
        raise UsageError(f"Plane points have three coordinates, got {len(point)}")
    if all(c == 0 for c in point):
        raise DomainError("The zero vector is not a projective point")
    return point  # type: ignore[return-value]


def _same_point(u: Sequence[Fraction], v: Sequence[Fraction]) -> bool:
    return all(u[i] * v[j] == u[j] * v[i] for i in range(len(u)) for j in range(i + 1, len(u)))


def is_singular(form: sympy.Poly, point: Sequence[Fraction]) -> bool:
    """True when every partial derivative of ``form`` vanishes at ``point``."""
    return all(_value(form.diff(v), point) == 0 for v in form.gens)


def compatibility_scale(g: sympy.Poly, h: sympy.Poly) -> Fraction:
    """The constant λ with g(y, z, 0) = λ·h(0, y, z).

    Raises:
        DomainError: If no nonzero λ exists.
    """
    g_line = sympy.Poly(g.as_expr().subs(T, 0), Y, Z, domain=sympy.QQ)
    h_line = sympy.Poly(h.as_expr().subs(X, 0), Y, Z, domain=sympy.QQ)
    if h_line.is_zero or g_line.is_zero:
        raise DomainError("A curve contains the line x = t = 0")
    monomial, coeff = h_line.terms()[0]
    scale = to_fraction(g_line.as_dict().get(monomial, sympy.Integer(0))) / to_fraction(coeff)
    if scale == 0 or not (g_line - h_line * to_sympy(scale)).is_zero:
        raise DomainError("g(y, z, 0) is not a multiple of h(0, y, z)")
    return scale


@dataclass(frozen=True)
class GlueInput:
    """Two compatible plane quartics and their rational singular points.

    ``sing_c`` holds points of H in coordinates (y, z, t) and ``sing_c_prime`` points of H'
    in coordinates (x, y, z).
    """

    g: sympy.Poly
    h: sympy.Poly
    scale: Fraction
    sing_c: tuple[PlanePoint, ...] = ()
    sing_c_prime: tuple[PlanePoint, ...] = ()

    def __post_init__(self) -> None:
        g, h = _as_poly(self.g, G_VARS), _as_poly(self.h, H_VARS)
        for name, form in (("g", g), ("h", h)):
            if not form.is_homogeneous or form.total_degree() != 4:
                raise UsageError(f"{name} must be a homogeneous quartic, got degree {form.total_degree()}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "scale", to_fraction(self.scale))
        object.__setattr__(self, "sing_c", tuple(_point(p) for p in self.sing_c))
        object.__setattr__(self, "sing_c_prime", tuple(_point(p) for p in self.sing_c_prime))
        self._validate()

    @classmethod
    def from_forms(
        cls,
        g: sympy.Poly | str,
        h: sympy.Poly | str,
        sing_c: Sequence[Sequence[RationalLike]] = (),
        sing_c_prime: Sequence[Sequence[RationalLike]] = (),
    ) -> "GlueInput":
        """Build an input, reading λ off the restrictions to the common line."""
        g_poly, h_poly = _as_poly(g, G_VARS), _as_poly(h, H_VARS)
        return cls(
            g_poly,
            h_poly,
            compatibility_scale(g_poly, h_poly),
            tuple(_point(p) for p in sing_c),
            tuple(_point(p) for p in sing_c_prime),
        )

    def _validate(self) -> None:
        g_line = self.g.as_expr().subs(T, 0)
        h_line = self.h.as_expr().subs(X, 0)
        if self.scale == 0 or sympy.expand(g_line - to_sympy(self.scale) * h_line) != 0:
            raise DomainError(f"g(y, z, 0) != {self.scale}·h(0, y, z)")
        for point in self.sing_c:
            if _value(self.g, point) != 0 or not is_singular(self.g, point):
                raise DomainError(f"{point} is not a singular point of C")
        for point in self.sing_c_prime:
            if _value(self.h, point) != 0 or not is_singular(self.h, point):
                raise DomainError(f"{point} is not a singular point of C'")
        for p in self.sing_c:
            for q in self.sing_c_prime:
                if _same_point(lift_c(p), lift_c_prime(q)):
                    raise DomainError(f"C and C' share the singular point {lift_c(p)}")


def lift_c(point: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """A point (y, z, t) of H as (0, y, z, t)."""
    return (Fraction(0), *point)


def lift_c_prime(point: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """A point (x, y, z) of H' as (x, y, z, 0)."""
    return (*point, Fraction(0))


@dataclass(frozen=True)
class CertificateEntry:
    """A singular point of C or C' and a partial of f that does not vanish there."""

    curve: str
    point: tuple[Fraction, ...]
    partial: str
    value: Fraction

    def to_json(self) -> dict[str, object]:
        return {
            "curve": self.curve,
            "point": [str(c) for c in self.point],
            "partial": self.partial,
            "value": str(self.value),
        }


@dataclass(frozen=True)
class GlueOutput:
    """The glued quartic surface with its chosen coefficients and certificate."""

    f: sympy.Poly
    a: Fraction
    b: Fraction
    certificate: tuple[CertificateEntry, ...]

    def to_json(self) -> dict[str, object]:
        return {
            "f": str(self.f.as_expr()),
            "a": str(self.a),
            "b": str(self.b),
            "certificate": [entry.to_json() for entry in self.certificate],
        }


def _glued(inp: GlueInput, quadric: sympy.Expr) -> sympy.Expr:
    h_line = inp.h.as_expr().subs(X, 0)
    return sympy.expand(inp.g.as_expr() + to_sympy(inp.scale) * (inp.h.as_expr() - h_line) + X * T * quadric)


def _smallest_valid(values: Sequence[tuple[Fraction, Fraction]], label: str) -> Fraction:
    """Smallest positive integer c with intercept + c·slope != 0 for every pair."""
    for candidate in range(1, len(values) + 2):
        if all(intercept + candidate * slope != 0 for intercept, slope in values):
            return Fraction(candidate)
    raise InternalInconsistencyError(f"No valid coefficient {label} among 1..{len(values) + 1}")


def glue(inp: GlueInput, rng: np.random.Generator | None = None) -> GlueOutput:
    """Quartic surface f with f|H = g and f|H' = λ·h, smooth at the singular points given.

    At P in Sing C off C' the partial ∂f/∂x contains a·t(P)³ and a is chosen to make it
    nonzero; at P in Sing C' off C the partial ∂f/∂t contains b·x(P)³ and b is chosen the
    same way. At singular points on the common line the nonzero partial comes from the
    other curve being smooth there.

    Raises:
        DomainError: If the input violates the gluing hypotheses.
        InternalInconsistencyError: If a certificate value is zero.
    """
    rng = rng if rng is not None else make_rng(0)
    a_sym, b_sym = sympy.symbols("a b")
    monomials = _monomials(F_VARS, 2)
    coefficients = {m: to_sympy(random_small_rational(rng)) for m in monomials}
    coefficients[T**2], coefficients[X**2] = a_sym, b_sym
    quadric = sympy.Add(*(c * m for m, c in coefficients.items()))
    symbolic = sympy.Poly(_glued(inp, quadric), *F_VARS)
    fx, ft = symbolic.diff(X), symbolic.diff(T)

    def linear_in(partial: sympy.Poly, point: Sequence[Fraction], var: sympy.Symbol) -> tuple[Fraction, Fraction]:
        value = sympy.expand(partial.as_expr().subs(dict(zip(F_VARS, map(to_sympy, point), strict=True))))
        value = value.subs({s: 0 for s in (a_sym, b_sym) if s is not var})
        return to_fraction(value.subs(var, 0)), to_fraction(sympy.diff(value, var))

    points_c = [lift_c(p) for p in inp.sing_c]
    points_c_prime = [lift_c_prime(p) for p in inp.sing_c_prime]
    off_c_prime = [p for p in points_c if p[3] != 0]
    off_c = [p for p in points_c_prime if p[0] != 0]
    a = _smallest_valid([linear_in(fx, p, a_sym) for p in off_c_prime], "a")
    b = _smallest_valid([linear_in(ft, p, b_sym) for p in off_c], "b")
    logger.debug(f"Chose a = {a}, b = {b} for {len(off_c_prime)} + {len(off_c)} constrained points")

    f = sympy.Poly(symbolic.as_expr().subs({a_sym: to_sympy(a), b_sym: to_sympy(b)}), *F_VARS, domain=sympy.QQ)
    entries = [CertificateEntry("C", p, "f_x", _value(f.diff(X), p)) for p in points_c]
    entries += [CertificateEntry("C'", p, "f_t", _value(f.diff(T), p)) for p in points_c_prime]
    output = GlueOutput(f, a, b, tuple(entries))
    verify_glue(inp, output)
    logger.info(f"Glued surface certified at {len(entries)} singular points")
    return output


def verify_glue(inp: GlueInput, out: GlueOutput) -> None:
    """Re-check the restriction identities and every certificate value from scratch.

    Raises:
        InternalInconsistencyError: On any mismatch.
    """
    f = out.f.as_expr()
    if sympy.expand(f.subs(X, 0) - inp.g.as_expr()) != 0:
        raise InternalInconsistencyError("f(0, y, z, t) != g")
    if sympy.expand(f.subs(T, 0) - to_sympy(inp.scale) * inp.h.as_expr()) != 0:
        raise InternalInconsistencyError("f(x, y, z, 0) != λ·h")
    for entry in out.certificate:
        var = X if entry.partial == "f_x" else T
        value = _value(out.f.diff(var), entry.point)
        if value == 0 or value != entry.value:
            raise InternalInconsistencyError(f"Certificate value {entry.value} at {entry.point} does not check")


def nodal_quartic(
    points: Sequence[Sequence[RationalLike]],
    rng: np.random.Generator,
    variables: Sequence[sympy.Symbol] = H_VARS,
) -> sympy.Poly:
    """Random plane quartic with a node at each of the given rational points.

    Each node imposes the three linear conditions ∇F(P) = 0; the quartic is a random
    element of the exact kernel, redrawn until every point is an ordinary node.

    Raises:
        DomainError: If no such quartic is found.
    """
    monomials = _monomials(variables, 4)
    targets = [_point(p) for p in points]
    rows = _gradient_rows(monomials, variables, targets)
    kernel = nullspace(rows, len(monomials))
    if not kernel:
        raise DomainError(f"No quartic is singular at all of {len(targets)} points")
    for _ in range(MAX_REDRAWS):
        coeffs = combine(kernel, [random_small_rational(rng) for _ in kernel])
        poly = sympy.Poly(sympy.Add(*(to_sympy(c) * m for c, m in zip(coeffs, monomials, strict=True))), *variables)
        if poly.is_zero or poly.total_degree() != 4:
            continue
        if all(_is_node(poly, p) for p in targets):
            return poly
    raise DomainError("Could not draw a quartic with ordinary nodes at the given points")


def _gradient_rows(
    monomials: Sequence[sympy.Expr], variables: Sequence[sympy.Symbol], points: Sequence[PlanePoint]
) -> list[list[Fraction]]:
    rows = []
    for point in points:
        subs = dict(zip(variables, map(to_sympy, point), strict=True))
        for var in variables:
            rows.append([to_fraction(sympy.diff(m, var).subs(subs)) for m in monomials])
    return rows


def _is_node(poly: sympy.Poly, point: PlanePoint) -> bool:
    local = local_equation(poly.as_expr(), poly.gens, point)
    return classify_singularity(local) is Singularity.NODE


def _random_plane_point(rng: np.random.Generator, last_nonzero: bool) -> PlanePoint:
    coords = [Fraction(int(rng.integers(-5, 6))) for _ in range(3)]
    if last_nonzero and coords[2] == 0:
        coords[2] = Fraction(1)
    if all(c == 0 for c in coords):
        coords[0] = Fraction(1)
    return tuple(coords)  # type: ignore[return-value]


def random_glue_input(rng: np.random.Generator, nodes_c: int = 2, nodes_c_prime: int = 1) -> GlueInput:
    """Random compatible pair with ordinary nodes off the common line.

    h is a random quartic with ``nodes_c_prime`` nodes in H' (x ≠ 0); g is then
    λ·h(0, y, z) + t·G with G a cubic solving the affine node conditions at
    ``nodes_c`` points of H with t ≠ 0.

    Raises:
        DomainError: If no valid pair is found after bounded redraws.
    """
    cubic = _monomials(G_VARS, 3)
    for attempt in range(MAX_REDRAWS):
        c_prime_points = [_random_plane_point(rng, last_nonzero=False) for _ in range(nodes_c_prime)]
        c_prime_points = [(Fraction(1), p[1], p[2]) for p in c_prime_points]
        c_points = [_random_plane_point(rng, last_nonzero=True) for _ in range(nodes_c)]
        if not (_pairwise_distinct(c_points) and _pairwise_distinct(c_prime_points)):
            continue
        try:
            h = nodal_quartic(c_prime_points, rng)
        except DomainError:
            continue
        scale = random_small_rational(rng) or Fraction(1)
        base = sympy.expand(to_sympy(scale) * h.as_expr().subs(X, 0))
        base_poly = sympy.Poly(base, *G_VARS, domain=sympy.QQ)
        shifted = [sympy.Poly(T * m, *G_VARS) for m in cubic]
        rows = _gradient_rows([s.as_expr() for s in shifted], G_VARS, c_points)
        rhs = [-v for v in _gradient_values(base_poly, c_points)]
        particular = solve_affine(rows, rhs) if rows else [Fraction(0)] * len(cubic)
        if particular is None:
            continue
        kernel = nullspace(rows, len(cubic))
        coeffs = combine([particular, *kernel], [Fraction(1)] + [random_small_rational(rng) for _ in kernel])
        g = base + T * sympy.Add(*(to_sympy(c) * m for c, m in zip(coeffs, cubic, strict=True)))
        g_poly = sympy.Poly(sympy.expand(g), *G_VARS, domain=sympy.QQ)
        if not all(_is_node(g_poly, p) for p in c_points):
            logger.warning(f"Non-nodal draw on attempt {attempt}, redrawing")
            continue
        return GlueInput(g_poly, h, scale, tuple(c_points), tuple(c_prime_points))
    raise DomainError("No compatible nodal pair found after bounded redraws")


def _gradient_values(poly: sympy.Poly, points: Sequence[PlanePoint]) -> list[Fraction]:
    return [_value(poly.diff(var), point) for point in points for var in poly.gens]


def _pairwise_distinct(points: Sequence[PlanePoint]) -> bool:
    return not any(_same_point(p, q) for i, p in enumerate(points) for q in points[i + 1 :])
