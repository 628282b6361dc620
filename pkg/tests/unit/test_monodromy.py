"""Tests for monodromy."""

import math

import numpy as np
import pytest

from k3_monodromy import monodromy
from k3_monodromy.config import settings
from k3_monodromy.constants import FILL_CONFIRM_LOOPS, HUNT_RETRIES, MATCH_TOL_SHRINK
from k3_monodromy.errors import DomainError, LoopRejectedError, PathFailureError, UnsupportedError, UsageError
from k3_monodromy.exact import make_rng
from k3_monodromy.homotopy import LinearFamily, PathResult, PathStatus, SolutionSet, TermMatrix, TrackerConfig
from k3_monodromy.monodromy import (
    HuntResult,
    LoopKind,
    LoopSpec,
    PlaneCurve,
    _monodromy_fill,
    bitangent_family,
    bitangent_lines,
    bitangent_system,
    certify_cover,
    loop_permutation,
    monodromy_loop,
    pencil_hunt,
    plane_monomials,
    random_chart,
    solve_bitangents,
    transposition_hunt,
)
from k3_monodromy.permgroup import Permutation
from k3_monodromy.series_counts import genus_two_count, plucker_count


@pytest.fixture
def rng():
    """Fixture for a seeded generator."""
    return make_rng(17)


@pytest.fixture(scope="module")
def quartic_fibre():
    """Fixture for the 28 bitangents of a random quartic, solved once per module."""
    rng = make_rng(2024)
    return solve_bitangents(PlaneCurve.random(4, rng), TrackerConfig(), rng)


@pytest.fixture
def cubic_family():
    """Fixture for the family x^3 - 3x + p, whose roots collide at p = ±2."""
    return LinearFamily(
        TermMatrix([(3,), (1,), (0,)], 1),
        basis=np.array([[[0, 0, 1]]]),
        base=np.array([[1, -3, 0]]),
    )


def cubic_roots(p):
    """Roots of x^3 - 3x + p as a (3, 1) fibre in lexicographic order."""
    roots = sorted(np.roots([1, 0, -3, p]), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    return np.array(roots, dtype=complex).reshape(3, 1)


def carried(h, starts, cfg, threads):
    """Stand-in for track that leaves every start point where it is."""
    return [PathResult(i, PathStatus.SUCCESS, np.asarray(p), 0.0, 1.0, 0) for i, p in enumerate(starts)]


class TestPlaneCurve:
    """Test plane curve handling."""

    def test_parse_fermat(self):
        """Test x^4 + y^4 + z^4 has three unit coefficients."""
        curve = PlaneCurve.parse("x^4 + y^4 + z^4")
        assert curve.degree == 4
        assert len(curve.coeffs) == len(plane_monomials(4)) == 15
        assert sorted(curve.coeffs.real) == [0] * 12 + [1, 1, 1]

    def test_not_homogeneous(self):
        """Test an affine polynomial is rejected."""
        with pytest.raises(UsageError):
            PlaneCurve.parse("x^4 + y + 1")

    def test_transformed_evaluates_composition(self, rng):
        """Test (f∘M)(v) = f(M v)."""
        curve = PlaneCurve.random(4, rng)
        chart = random_chart(rng)
        moved = curve.transformed(chart)
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert moved.evaluate(v) == pytest.approx(curve.evaluate(chart @ v), rel=1e-10)

    def test_smooth_spot_check(self, rng):
        """Test the Fermat quartic passes and a quadruple line fails."""
        assert PlaneCurve.parse("x^4 + y^4 + z^4").looks_smooth(rng)
        assert not PlaneCurve.parse("x^4").looks_smooth(rng)


class TestBitangentSystem:
    """Test the bitangent equations."""

    def test_square(self):
        """Test four equations in (e1, e2, m, c)."""
        system = bitangent_system(PlaneCurve.parse("x^4 + y^4 + z^4")).system
        assert len(system.equations) == 4
        assert system.nvars == 4

    def test_constructed_bitangent(self):
        """Test y = 2x - 1 touching at x = 1 and x = 3 solves the system."""
        curve = PlaneCurve.parse("(y - 2*x + z)*(x^3 + y^2*z - 2*z^3) + ((x - z)*(x - 3*z))^2")
        system = bitangent_system(curve)
        assert system.residual([4, 3, 2, -1]) < 1e-14
        assert system.residual([4, 3, 2, 0]) > 1e-3

    def test_cubic_system(self):
        """Test cubics still give four equations."""
        assert len(bitangent_system(PlaneCurve.parse("x^3 + y^3 + z^3")).system.equations) == 4

    def test_conic_rejected(self):
        """Test degree 2 has no bitangent system."""
        with pytest.raises(UsageError):
            bitangent_system(PlaneCurve.parse("x^2 + y^2 + z^2"))


class TestSolveBitangents:
    """Test solving for all bitangents."""

    def test_cubic_has_none(self, rng, mocker):
        """Test the equations of a smooth cubic are solved and leave no solution."""
        spy = mocker.spy(monodromy, "solve")
        fibre = solve_bitangents(PlaneCurve.random(3, rng), rng=rng)
        assert spy.call_count == 1
        assert len(spy.spy_return) == 9
        assert len(fibre) == 0

    def test_reducible_cubic_keeps_its_line(self, rng):
        """Test z·(x^2 + y^2 + z^2) yields exactly its line component z = 0."""
        fibre = solve_bitangents(PlaneCurve.parse("z*(x^2 + y^2 + z^2)"), rng=rng)
        assert len(fibre) == 1
        assert np.allclose(bitangent_lines(fibre)[0], [0, 0, 1], atol=1e-8)

    @pytest.mark.parametrize("seed", [3, 5, 88])
    def test_random_quartics(self, seed):
        """Test random quartics have 28 bitangents with small residuals."""
        rng = make_rng(seed)
        fibre = solve_bitangents(PlaneCurve.random(4, rng), TrackerConfig(), rng)
        assert len(fibre) == plucker_count(4) == 28
        assert all(r < 1e-10 for r in fibre.solutions.residuals)

    def test_quartic_count(self, quartic_fibre):
        """Test a random quartic has 28 bitangents with small residuals."""
        assert len(quartic_fibre) == plucker_count(4) == 28
        assert all(r < 1e-10 for r in quartic_fibre.solutions.residuals)
        system = bitangent_system(quartic_fibre.working)
        assert all(system.residual(p) < 1e-10 for p in quartic_fibre.points)

    def test_fermat_quartic(self, rng):
        """Test the Fermat quartic has 28 distinct bitangents, hyperflex lines included."""
        fibre = solve_bitangents(PlaneCurve.parse("x^4 + y^4 + z^4"), TrackerConfig(), rng)
        assert len(fibre) == 28
        lines = bitangent_lines(fibre)
        gaps = np.linalg.norm(lines[:, None, :] - lines[None, :, :], axis=2) + np.eye(len(lines))
        assert gaps.min() > 1e-6
        # x = ζ·y with ζ^4 = -1 meets the curve only at (ζ : 1 : 0), so its tangency points coincide
        hyperflex = [line for line in lines if abs(line[2]) < 1e-6 and abs(abs(line[0]) - abs(line[1])) < 1e-6]
        assert len(hyperflex) == 4

    def test_fill_can_exceed_expected(self, mocker):
        """Test monodromy filling keeps looking after the expected count is reached."""
        family = bitangent_family(4)

        def shifted(*args):
            points = args[2]
            step = 1.0 if len(points) < 3 else 0.0
            return [PathResult(i, PathStatus.SUCCESS, p + step, 0.0, 1.0, 0) for i, p in enumerate(points)]

        loops = mocker.patch("k3_monodromy.monodromy._track_loop", side_effect=shifted)
        mocker.patch("k3_monodromy.monodromy.track", side_effect=carried)
        target = PlaneCurve.random(4, make_rng(1)).normalized().coeffs
        found = _monodromy_fill(family, target, 2, TrackerConfig(), make_rng(2), None)
        assert len(found) == 3
        assert loops.call_count == 2 + FILL_CONFIRM_LOOPS

    def test_count_mismatch_fails(self, rng, mocker):
        """Test a fibre larger than the bitangent number is reported, not truncated."""
        extra = SolutionSet.from_points([np.full(4, k + 0.5j) for k in range(29)])
        mocker.patch("k3_monodromy.monodromy._monodromy_fill", return_value=extra)
        mocker.patch("k3_monodromy.monodromy.track", side_effect=carried)
        with pytest.raises(PathFailureError) as e:
            solve_bitangents(PlaneCurve.random(4, rng), rng=rng)
        assert [entry["found"] for entry in e.value.path_log] == [29] * 3

    @pytest.mark.slow
    def test_total_degree_quartic(self):
        """Test the total-degree homotopy alone finds the 28 bitangents of a random quartic."""
        rng = make_rng(31)
        fibre = solve_bitangents(PlaneCurve.random(4, rng), TrackerConfig(), rng, method="total_degree")
        assert len(fibre) == 28
        assert all(r < 1e-10 for r in fibre.solutions.residuals)

    @pytest.mark.slow
    def test_same_seed_same_fibre(self):
        """Test one seed gives bit-identical solutions."""
        first, second = (solve_bitangents(PlaneCurve.random(4, make_rng(6)), rng=make_rng(7)) for _ in range(2))
        assert np.array_equal(first.points, second.points)
        assert np.array_equal(first.chart, second.chart)

    def test_lines_are_bitangent(self, quartic_fibre):
        """Test each line meets the original curve tangentially at its two points."""
        curve = quartic_fibre.curve
        lines = bitangent_lines(quartic_fibre)
        for line, pair in zip(lines, quartic_fibre.tangency_points(), strict=True):
            for w in pair:
                w = w / np.linalg.norm(w)
                assert abs(curve.evaluate(w)) < 1e-7 * np.linalg.norm(curve.coeffs)
                assert abs(line @ w) < 1e-7 * np.linalg.norm(line)
                grad = curve.gradient(w)
                assert np.linalg.norm(np.cross(grad, line)) < 1e-6 * np.linalg.norm(grad) * np.linalg.norm(line)
            first, second = (w / w[np.argmax(np.abs(w))] for w in pair)
            assert np.linalg.norm(first - second) > 1e-6

    def test_distinct_lines(self, quartic_fibre):
        """Test the 28 lines are pairwise distinct."""
        lines = bitangent_lines(quartic_fibre)
        gaps = np.linalg.norm(lines[:, None, :] - lines[None, :, :], axis=2) + np.eye(len(lines))
        assert gaps.min() > 1e-6

    def test_unknown_method(self, rng):
        """Test an unknown method name."""
        with pytest.raises(UsageError):
            solve_bitangents(PlaneCurve.random(4, rng), method="guess")

    @pytest.mark.slow
    def test_quintic_count(self, rng):
        """Test a random quintic has 120 bitangents."""
        assert len(solve_bitangents(PlaneCurve.random(5, rng), rng=rng)) == 120


class TestLoops:
    """Test monodromy loops."""

    def test_constant_loop(self, quartic_fibre):
        """Test the constant loop gives the identity."""
        perm = monodromy_loop(LoopSpec.constant(quartic_fibre.params), quartic_fibre)
        assert perm == Permutation.identity(28)

    def test_polygon_and_reverse(self, quartic_fibre):
        """Test a random polygon and its reverse give inverse permutations."""
        spec = LoopSpec.random_polygon(quartic_fibre.params, seed=99)
        forward = monodromy_loop(spec, quartic_fibre)
        backward = monodromy_loop(spec.reversed(), quartic_fibre)
        assert forward * backward == Permutation.identity(28)

    def test_wrong_base(self, quartic_fibre):
        """Test a loop based elsewhere is rejected."""
        with pytest.raises(UsageError):
            monodromy_loop(LoopSpec.constant(2 * quartic_fibre.params), quartic_fibre)

    def test_polygon_from_seed(self, rng):
        """Test polygon vertices are reproducible from the loop seed."""
        base = rng.normal(size=5) + 1j
        a, b = LoopSpec.random_polygon(base, seed=4), LoopSpec.random_polygon(base, seed=4)
        assert a.kind is LoopKind.POLYGON
        assert 4 <= len(a.points) - 2 <= 8
        assert all(np.array_equal(p, q) for p, q in zip(a.points, b.points, strict=True))

    def test_open_loop(self):
        """Test a path that does not return is rejected."""
        with pytest.raises(UsageError):
            LoopSpec(LoopKind.POLYGON, (np.array([1.0]), np.array([2.0])))

    def test_circle_around_collision(self, cubic_family):
        """Test circling p = 2 swaps the two roots that meet there."""
        p0, p1 = np.array([1.5 + 0.1j]), np.array([2.5 + 0.1j])
        base = cubic_roots(p0[0])
        # the pencil reaches p = 2 at s = 0.5 - 0.1i
        loop = LoopSpec.pencil_circle(p0, p1, 0.5, 0.5 - 0.1j, 0.02)
        perm = loop_permutation(cubic_family, loop, base)
        assert perm.is_transposition()
        moved = [i for i in range(3) if perm(i) != i]
        assert all(abs(base[i][0] - 1) < 0.5 for i in moved)


    def test_ambiguous_match_shrinks_tolerance(self, cubic_family, mocker):
        """Test a retry after an ambiguous matching uses a smaller matching tolerance."""
        base = cubic_roots(1.5)
        mocker.patch("k3_monodromy.monodromy.track", side_effect=carried)
        match = mocker.patch("k3_monodromy.monodromy.match_fibres", side_effect=[None, [0, 1, 2]])
        loop = LoopSpec(LoopKind.POLYGON, (np.array([1.5 + 0j]), np.array([1.6 + 0j]), np.array([1.5 + 0j])))
        perm = loop_permutation(cubic_family, loop, base)
        assert perm == Permutation.identity(3)
        tols = [c.args[2] for c in match.call_args_list]
        assert tols == [settings.match_tol, settings.match_tol / MATCH_TOL_SHRINK]


class TestPencilHunt:
    """Test the transposition hunt on a family with a known collision."""

    def test_finds_collision(self, cubic_family):
        """Test the hunt locates p = 2 and returns the swap of the colliding roots."""
        p0, p1 = np.array([0.3 + 0.2j]), np.array([3.5 + 0.05j])
        result = pencil_hunt(cubic_family, p0, p1, cubic_roots(p0[0]))
        assert result.permutation.is_transposition()
        assert result.permutation == Permutation.from_cycles(3, [result.pair])
        assert abs(p0[0] + result.s_star * (p1[0] - p0[0]) - 2) < 1e-6
        assert result.loop.kind is LoopKind.CIRCLE

    def fake_result(self, fibre):
        """A hunt result swapping bitangents 0 and 1."""
        swap = Permutation.from_cycles(len(fibre), [(0, 1)])
        return HuntResult(LoopSpec.constant(fibre.params), swap, (0, 1), 0.5 + 0j, fibre.params)

    def test_retries_next_pencil(self, quartic_fibre, mocker, rng):
        """Test a rejected pencil moves on to a fresh one and counts the attempts."""
        hunt = mocker.patch(
            "k3_monodromy.monodromy.pencil_hunt",
            side_effect=[LoopRejectedError("no collision"), self.fake_result(quartic_fibre)],
        )
        result = transposition_hunt(quartic_fibre, rng=rng)
        assert hunt.call_count == 2
        assert result.attempts == 2
        assert result.pair == (0, 1)

    def test_gives_up(self, quartic_fibre, mocker, rng):
        """Test the hunt stops after the configured number of pencils."""
        hunt = mocker.patch("k3_monodromy.monodromy.pencil_hunt", side_effect=LoopRejectedError("no collision"))
        with pytest.raises(LoopRejectedError):
            transposition_hunt(quartic_fibre, rng=rng)
        assert hunt.call_count == HUNT_RETRIES

    def test_empty_fibre(self, rng):
        """Test a cubic has no bitangents to swap."""
        with pytest.raises(DomainError):
            transposition_hunt(solve_bitangents(PlaneCurve.random(3, rng), rng=rng))


class TestCertifyCover:
    """Test the end-to-end certification."""

    def test_unsupported_degree(self):
        """Test degree 7 is out of scope."""
        with pytest.raises(UnsupportedError):
            certify_cover(7, 1, seed=0)

    def test_negative_loops(self):
        """Test a negative loop count."""
        with pytest.raises(UsageError):
            certify_cover(4, -1, seed=0)

    def test_bitangent_count_matches_curve_count(self):
        """Test the sextic bitangent number equals the genus-two curve count."""
        assert plucker_count(6) == genus_two_count() == 324

    @pytest.mark.slow
    def test_no_loops(self):
        """Test zero loops give only trivial flags."""
        report = certify_cover(4, 0, seed=1)
        assert report.fibre_size == 28
        assert not report.group.transitive
        assert not report.group.certified_symmetric
        assert report.group.order == 1

    @pytest.mark.slow
    def test_quartic_group_is_proper(self):
        """Test the quartic group stabilizes below 28! without a transposition."""
        report = certify_cover(4, 20, seed=7)
        assert report.group.transitive
        assert not report.group.has_transposition
        assert not report.group.certified_symmetric
        assert report.order_stable
        assert report.group.order is not None and report.group.order < math.factorial(28)

    @pytest.mark.slow
    def test_quartic_order_same_for_three_seeds(self):
        """Test 20 loops reach one stable group order on three different quartics."""
        reports = [certify_cover(4, 20, seed=seed) for seed in (7, 8, 9)]
        assert all(report.order_stable for report in reports)
        orders = {report.group.order for report in reports}
        assert len(orders) == 1
        assert orders.pop() < math.factorial(28)

    @pytest.mark.slow
    def test_same_seed_same_report(self):
        """Test one seed gives the same loops, permutations and group."""
        first, second = certify_cover(4, 3, seed=12), certify_cover(4, 3, seed=12)
        assert first.permutations == second.permutations
        assert first.order_history == second.order_history
        assert first.group == second.group

    @pytest.mark.slow
    def test_sextic_count(self):
        """Test a random sextic has 324 bitangents with small residuals."""
        rng = make_rng(41)
        fibre = solve_bitangents(PlaneCurve.random(6, rng), TrackerConfig(), rng)
        assert len(fibre) == genus_two_count() == 324
        assert all(r < 1e-10 for r in fibre.solutions.residuals)

    @pytest.mark.slow
    def test_sextic_group_is_symmetric(self):
        """Test 12 loops and the hunt certify the full symmetric group on 324 points."""
        report = certify_cover(6, 12, seed=7)
        assert report.fibre_size == 324
        assert report.group.certified_symmetric
        assert report.group.order == math.factorial(324)
        assert report.hunt is not None
