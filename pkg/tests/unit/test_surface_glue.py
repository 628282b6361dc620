"""Tests for surface_glue."""

from fractions import Fraction

import numpy as np
import pytest
import sympy

from k3_monodromy.errors import DomainError, InternalInconsistencyError, UsageError
from k3_monodromy.exact import make_rng
from k3_monodromy.surface_glue import (
    H_VARS,
    T,
    X,
    GlueInput,
    GlueOutput,
    compatibility_scale,
    glue,
    is_singular,
    nodal_quartic,
    random_glue_input,
    verify_glue,
)


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixture for a seeded generator."""
    return make_rng(5)


@pytest.fixture
def fermat() -> GlueInput:
    """Fixture for two Fermat sections agreeing on the common line."""
    return GlueInput.from_forms("y^4 + z^4 + t^4", "x^4 + y^4 + z^4")


def test_scale_read_off() -> None:
    """Test lambda is found from the common line."""
    inp = GlueInput.from_forms("2*y^4 + 2*z^4 + t^4", "x^4 + y^4 + z^4")
    assert inp.scale == 2


def test_incompatible_forms() -> None:
    """Test restrictions that are not proportional."""
    with pytest.raises(DomainError):
        GlueInput.from_forms("y^4 + t^4", "x^4 + y^4 + z^4")


def test_not_quartic() -> None:
    """Test a cubic is rejected."""
    with pytest.raises(UsageError):
        GlueInput.from_forms("y^3 + t^3", "x^3 + y^3")


def test_smooth_point_rejected(fermat: GlueInput) -> None:
    """Test a supplied point must be singular on its curve."""
    with pytest.raises(DomainError):
        GlueInput(fermat.g, fermat.h, fermat.scale, ((0, 0, 1),))


def test_common_singular_point() -> None:
    """Test both curves singular at (0:1:0:0) violates the hypothesis."""
    with pytest.raises(DomainError):
        GlueInput.from_forms(
            "y^2*z^2 + y^2*t^2 + z^4 + t^4",
            "x^2*y^2 + y^2*z^2 + z^4 + x^4",
            sing_c=[(1, 0, 0)],
            sing_c_prime=[(0, 1, 0)],
        )


def test_compatibility_scale(fermat: GlueInput) -> None:
    """Test the scale of the Fermat pair."""
    assert compatibility_scale(fermat.g, fermat.h) == 1


def test_smooth_inputs(fermat: GlueInput, rng: np.random.Generator) -> None:
    """Test smooth curves give an empty certificate."""
    out = glue(fermat, rng)
    assert out.certificate == ()
    assert out.a == out.b == 1


def test_restrictions(fermat: GlueInput, rng: np.random.Generator) -> None:
    """Test f restricts to g on x = 0 and to h on t = 0."""
    out = glue(fermat, rng)
    f = out.f.as_expr()
    assert sympy.expand(f.subs(X, 0) - fermat.g.as_expr()) == 0
    assert sympy.expand(f.subs(T, 0) - fermat.h.as_expr()) == 0


def test_node_off_common_line(rng: np.random.Generator) -> None:
    """Test a node of C at (0:0:1) is certified through the x t^3 coefficient."""
    inp = GlueInput.from_forms("y*z*t^2 + y^4 + z^4", "x^4 + y^4 + z^4", sing_c=[(0, 0, 1)])
    out = glue(inp, rng)
    (entry,) = out.certificate
    assert entry.partial == "f_x"
    assert entry.point == (0, 0, 0, 1)
    assert entry.value == out.a == 1


def test_node_on_common_line(rng: np.random.Generator) -> None:
    """Test a singular point of C on C' uses the smooth partial of h."""
    inp = GlueInput.from_forms(
        "y^2*z^2 + y^2*t^2 + z^4 + t^4",
        "x*y^3 + y^2*z^2 + z^4 + x^4",
        sing_c=[(1, 0, 0)],
    )
    (entry,) = glue(inp, rng).certificate
    assert entry.partial == "f_x"
    assert entry.value == 1


def test_random_inputs(rng: np.random.Generator) -> None:
    """Test 10 random nodal pairs give three nonzero certificate values."""
    for _ in range(10):
        inp = random_glue_input(rng)
        out = glue(inp, rng)
        assert len(out.certificate) == 3
        assert all(entry.value != 0 for entry in out.certificate)
        assert {entry.partial for entry in out.certificate} == {"f_x", "f_t"}


def test_tampered_certificate(fermat: GlueInput, rng: np.random.Generator) -> None:
    """Test re-verification catches a wrong surface."""
    out = glue(fermat, rng)
    broken = GlueOutput(sympy.Poly(out.f.as_expr() + X**4, *out.f.gens), out.a, out.b, out.certificate)
    with pytest.raises(InternalInconsistencyError):
        verify_glue(fermat, broken)


def test_json(fermat: GlueInput, rng: np.random.Generator) -> None:
    """Test the JSON form carries exact strings."""
    data = glue(fermat, rng).to_json()
    assert set(data) == {"f", "a", "b", "certificate"}
    assert data["a"] == "1"


def test_three_nodes(rng: np.random.Generator) -> None:
    """Test nodes at the coordinate points."""
    points = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    quartic = nodal_quartic(points, rng)
    assert quartic.gens == H_VARS
    assert all(is_singular(quartic, [Fraction(c) for c in p]) for p in points)


def test_too_many_points(rng: np.random.Generator) -> None:
    """Test seven nodes in general position leave no quartic."""
    points = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1), (1, 2, 3), (2, -1, 5), (3, 1, -2)]
    with pytest.raises(DomainError):
        nodal_quartic(points, rng)
