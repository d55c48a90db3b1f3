import numpy as np
import pytest

from mubspectra.mubs import construct_complete_mubs
from mubspectra.oracles import (
    CostGuardError,
    PathAssignment,
    PathClass,
    assignment_stats,
    exhaustive_moments,
    expectation_exact,
    omega,
    random_assignment,
    variance_exact,
    w_exact,
    w_pair_exact,
)
from mubspectra.paths import (
    Case,
    ClosedPath,
    enumerate_path_pairs,
    enumerate_paths,
    in_gamma,
    join,
    reduce,
)
from mubspectra.sampling import keyed_stream


def P(*word):
    return ClosedPath(tuple(word))


@pytest.fixture(scope="module")
def fam3():
    return construct_complete_mubs(3)


@pytest.fixture(scope="module")
def fam5():
    return construct_complete_mubs(5)


class TestOmega:
    def test_constant_assignment(self, fam3):
        s = PathAssignment({1: (2, 1), 2: (2, 1), 3: (2, 1)})
        assert omega(P(1, 2, 3, 2, 1), s, fam3) == pytest.approx(1)

    def test_cross_basis(self, fam3):
        s = PathAssignment({1: (0, 0), 2: (1, 2)})
        value = omega(P(1, 2, 1), s, fam3)
        assert abs(value) == pytest.approx(1 / 3)

    def test_same_basis(self, fam3):
        s = PathAssignment({1: (1, 0), 2: (1, 2)})
        assert omega(P(1, 2, 1), s, fam3) == pytest.approx(0, abs=1e-15)

    def test_unassigned_vertex(self, fam3):
        with pytest.raises(ValueError, match="no assigned vector"):
            omega(P(1, 2, 1), PathAssignment({1: (0, 0)}), fam3)


class TestAssignmentStats:
    def test_equal_vectors(self):
        s = PathAssignment({1: (0, 1), 2: (0, 1)})
        assert assignment_stats(P(1, 2, 1, 2, 1), s) == (1, 0)

    def test_distinct_vectors(self):
        s = PathAssignment({1: (0, 1), 2: (1, 1)})
        distinct, crossings = assignment_stats(P(1, 2, 1, 2, 1), s)
        assert (distinct, crossings) == (2, 4)
        assert crossings >= max(distinct, 3 * distinct - 2)

    def test_all_distinct_on_reduced_path(self):
        s = PathAssignment({1: (0, 0), 2: (0, 1), 3: (0, 2)})
        assert assignment_stats(P(1, 2, 3, 1, 2, 3, 1), s) == (3, 6)


def test_crossing_lower_bound_on_reduced_paths():
    reduced = [
        path
        for ell in range(2, 7)
        for path in enumerate_paths(ell)
        if path.is_reduced()
    ]
    rng = keyed_stream(4242)
    cases = 0
    while cases < 10_000:
        path = reduced[rng.integers(len(reduced))]
        s = random_assignment(path, 2, 2, rng)
        distinct, crossings = assignment_stats(path, s)
        if distinct < 2:
            continue
        cases += 1
        v = path.vertex_count
        assert crossings >= max(distinct, 3 * distinct - v), (path, s)


class TestWExact:
    def test_single_loop(self, fam3):
        value = w_exact(P(1, 1), fam3)
        assert value.value == pytest.approx(1)
        assert value.path_class is PathClass.GAMMA_MEMBER

    def test_two_vertices(self, fam3):
        value = w_exact(P(1, 2, 1), fam3)
        assert value.value == pytest.approx(1 / 3, abs=1e-12)
        assert value.predicted == pytest.approx(1 / 3)
        assert value.bound is None
        assert value.within()

    def test_non_member(self, fam3):
        value = w_exact(P(1, 2, 1, 2, 1), fam3)
        assert value.path_class is PathClass.NON_MEMBER
        assert value.value == pytest.approx(1 / 6, abs=1e-12)
        assert value.bound == pytest.approx(7 / 36)
        assert value.observed_constant == pytest.approx(6 / 7)
        assert value.predicted is None
        assert value.within(constant=1.0)

    def test_three_vertices(self, fam3):
        assert w_exact(P(1, 2, 1, 3, 1), fam3).value == pytest.approx(1 / 9, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5])
    def test_w_values_up_to_length_four(self, n):
        fam = construct_complete_mubs(n)
        for ell in range(1, 5):
            for path in enumerate_paths(ell):
                value = w_exact(path, fam)
                scale = float(n) ** (1 - path.vertex_count)
                if value.path_class is PathClass.GAMMA_MEMBER:
                    assert abs(value.value - scale) <= 1e-10, path
                else:
                    bound = 4 * scale * (1 / fam.m + 1 / n)
                    assert abs(value.value) <= bound, path

    def test_cost_guard(self):
        fam = construct_complete_mubs(13)
        with pytest.raises(CostGuardError, match="exceeds the cap"):
            w_exact(P(1, 2, 3, 4, 1), fam)
        assert issubclass(CostGuardError, ValueError)


class TestReductionIdentities:
    @staticmethod
    def steps_with_inputs(path):
        trace = reduce(path)
        before = path
        for step in trace.steps:
            yield before, step
            before = step.result

    def test_repeat_step_preserves_omega(self, fam3):
        rng = keyed_stream(7)
        for ell in range(2, 5):
            for path in enumerate_paths(ell):
                for before, step in self.steps_with_inputs(path):
                    if step.case is not Case.REPEAT:
                        continue
                    for _ in range(20):
                        s = random_assignment(before, fam3.m, fam3.n, rng)
                        assert omega(before, s, fam3) == pytest.approx(
                            omega(step.result, s, fam3), abs=1e-14
                        )

    def test_single_visit_step_divides_by_n(self, fam3):
        for ell in range(2, 5):
            for path in enumerate_paths(ell):
                for before, step in self.steps_with_inputs(path):
                    if step.case is not Case.SINGLE_VISIT:
                        continue
                    lhs = w_exact(before, fam3).value
                    rhs = w_exact(step.result, fam3).value / fam3.n
                    assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_both_orders_give_the_same_w(self, fam3):
        for ell in range(1, 5):
            for path in enumerate_paths(ell):
                direct = w_exact(path, fam3).value
                for from_end in (False, True):
                    trace = reduce(path, from_end=from_end)
                    reduced = w_exact(trace.final, fam3).value
                    assert direct == pytest.approx(
                        reduced / fam3.n**trace.w, abs=1e-12
                    )


class TestPairs:
    def test_pairs_match_join(self, fam3):
        for first, second in enumerate_path_pairs(2, 2):
            paired = w_pair_exact(first, second, fam3)
            if first.vertices & second.vertices:
                expected = w_exact(join(first, second), fam3).value
            else:
                expected = (
                    w_exact(first, fam3).value * np.conj(w_exact(second, fam3).value)
                )
            assert abs(paired - expected) <= 1e-12, (first, second)

    def test_shared_two_vertex_paths(self, fam3):
        assert w_pair_exact(P(1, 2, 1), P(1, 2, 1), fam3) == pytest.approx(1 / 6)

    def test_sharing_one_vertex(self, fam3):
        assert w_pair_exact(P(1, 2, 1), P(1, 3, 1), fam3) == pytest.approx(1 / 9)

    @pytest.mark.parametrize("n", [3, 5])
    def test_covariance(self, n):
        fam = construct_complete_mubs(n)
        for first, second in enumerate_path_pairs(2, 2):
            w1 = w_exact(first, fam).value
            w2 = w_exact(second, fam).value
            covariance = w_pair_exact(first, second, fam) - w1 * np.conj(w2)
            if not first.vertices & second.vertices:
                assert abs(covariance) <= 1e-12, (first, second)
                continue
            if in_gamma(join(first, second)):
                assert abs(covariance) <= 1e-12, (first, second)
            else:
                v = len(first.vertices | second.vertices)
                bound = 4 * float(n) ** (1 - v) * (1 / fam.m + 1 / n)
                assert abs(covariance) <= bound, (first, second)


class TestMoments:
    @pytest.mark.parametrize("p", [1, 2, 5])
    def test_first_moment(self, fam3, p):
        assert expectation_exact(1, p, fam3) == pytest.approx(1)

    def test_second_moment_n3(self, fam3):
        exact = expectation_exact(2, 2, fam3)
        mean, _ = exhaustive_moments(2, 2, fam3)
        assert abs(exact - 4 / 3) <= 1e-10
        assert abs(mean - 4 / 3) <= 1e-10

    def test_second_moment_n5(self, fam5):
        assert expectation_exact(2, 2, fam5) == pytest.approx(1.2, abs=1e-10)

    @pytest.mark.parametrize("ell", [3, 4])
    def test_matches_exhaustive(self, fam3, ell):
        mean, _ = exhaustive_moments(ell, 2, fam3)
        assert abs(expectation_exact(ell, 2, fam3) - mean) <= 1e-10

    def test_matches_exhaustive_with_three_rows(self, fam3):
        mean, _ = exhaustive_moments(3, 3, fam3)
        assert abs(expectation_exact(3, 3, fam3) - mean) <= 1e-10

    def test_order_cap(self, fam3):
        with pytest.raises(ValueError, match="Exact moments"):
            expectation_exact(7, 2, fam3)

    def test_exhaustive_guard(self, fam5):
        with pytest.raises(CostGuardError):
            exhaustive_moments(2, 5, fam5)


class TestVariance:
    def test_first_moment_has_no_variance(self, fam3):
        assert variance_exact(1, 2, fam3) == pytest.approx(0, abs=1e-12)

    def test_second_moment(self, fam3, fam5):
        small = variance_exact(2, 2, fam3)
        large = variance_exact(2, 2, fam5)
        assert small == pytest.approx(1 / 18, abs=1e-10)
        assert large == pytest.approx(2 / 75, abs=1e-10)
        assert large < small

    def test_third_moment_agrees(self, fam3):
        _, direct = exhaustive_moments(3, 2, fam3)
        assert variance_exact(3, 2, fam3) == pytest.approx(direct, abs=1e-10)

    def test_order_cap(self, fam3):
        with pytest.raises(ValueError, match="Exact variance"):
            variance_exact(4, 2, fam3)

    def test_guard(self, fam5):
        with pytest.raises(CostGuardError):
            variance_exact(2, 5, fam5)

    def test_disagreement_with_exhaustion_raises(self, fam3, monkeypatch):
        monkeypatch.setattr(
            "mubspectra.oracles.exhaustive_moments", lambda *args: (0.0, 1.0)
        )
        with pytest.raises(ValueError, match="disagrees"):
            variance_exact(2, 2, fam3)
