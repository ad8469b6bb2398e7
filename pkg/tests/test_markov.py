import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from poisson_additive import (
    AbsoluteContinuityError,
    MarkovModel,
    RandomStream,
    ValidationError,
    abs_continuity_check,
    fit_markov,
    markov_log_ratio,
    markov_martingale_residual,
    simulate_markov,
)
from poisson_additive.markov import simulate_markov_ensemble

STICKY = MarkovModel([[0.9, 0.1], [0.1, 0.9]], [0.5, 0.5])
UNIFORM2 = MarkovModel.uniform(2)


@st.composite
def chains(draw, n=None, positive=False):
    n = draw(st.integers(2, 5)) if n is None else n
    lo = 0.05 if positive else 0.0
    rows = [draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n).filter(lambda r: sum(r) > 0))
            for _ in range(n)]
    p = np.array(rows)
    p /= p.sum(axis=1, keepdims=True)
    p[:, -1] = 1 - p[:, :-1].sum(axis=1)
    return MarkovModel(np.clip(p, 0, 1), np.full(n, 1.0 / n))


class TestLogRatio:
    def test_example(self):
        assert markov_log_ratio([0, 0, 0], STICKY, UNIFORM2) == pytest.approx(2 * math.log(1.8), abs=1e-15)

    def test_same_model(self):
        assert markov_log_ratio([0, 1, 1, 0], STICKY, STICKY) == 0.0

    def test_forbidden_under_p(self):
        p = MarkovModel([[1.0, 0.0], [0.5, 0.5]], [0.5, 0.5])
        assert markov_log_ratio([0, 1], p, UNIFORM2) == -math.inf

    def test_forbidden_under_reference(self):
        p0 = MarkovModel(np.eye(2), [0.5, 0.5])
        with pytest.raises(AbsoluteContinuityError):
            markov_log_ratio([0, 1], STICKY, p0)

    def test_exhaustive_normalization(self):
        total = math.fsum(
            UNIFORM2.path_probability(x) * math.exp(markov_log_ratio(x, STICKY, UNIFORM2))
            for x in itertools.product(range(2), repeat=5)
        )
        assert abs(total - 1) < 1e-12

    @given(chains(n=3, positive=True), chains(n=3, positive=True), st.lists(st.integers(0, 2), min_size=1, max_size=20))
    def test_antisymmetry(self, p, q, path):
        assert markov_log_ratio(path, p, q) == pytest.approx(-markov_log_ratio(path, q, p), abs=1e-12)

    @pytest.mark.parametrize("path", [[], [0, 2], [0.5, 1]])
    def test_rejects_paths(self, path):
        with pytest.raises(ValidationError):
            markov_log_ratio(np.asarray(path), STICKY, UNIFORM2)

    def test_rejects_different_v0(self):
        with pytest.raises(ValidationError):
            markov_log_ratio([0, 1], MarkovModel(STICKY.p, [1.0, 0.0]), UNIFORM2)


class TestAbsContinuity:
    def test_same(self):
        assert abs_continuity_check(STICKY, STICKY).passed

    def test_absorbing_reference(self):
        v = abs_continuity_check(STICKY, MarkovModel(np.eye(2), [0.5, 0.5]))
        assert not v.passed and v.witness[0] == 1

    @given(chains(), st.data())
    def test_positive_reference_passes(self, p, data):
        q = data.draw(chains(n=p.n, positive=True))
        assert abs_continuity_check(p, q).passed

    def test_periodic_supports_terminate(self):
        cycle = MarkovModel([[0, 1, 0], [0, 0, 1], [1, 0, 0]], [1 / 3] * 3)
        v = abs_continuity_check(cycle, cycle)
        assert v.passed and v.powers_checked == 3

    @given(chains(), st.data())
    def test_one_step_inclusion_decides(self, p, data):
        # boolean products preserve inclusion, so any violation shows at m = 1
        q = data.draw(chains(n=p.n))
        v = abs_continuity_check(p, q)
        assert v.passed == bool(np.all((q.p > 0) | (p.p == 0)))
        assert v.passed or v.witness[0] == 1


class TestResidual:
    def test_constant_z_gives_zero(self):
        assert np.all(markov_martingale_residual([0, 1, 1, 0], STICKY, [2.0, 2.0]) == 0)

    def test_zero_one_step_drift(self, rng):
        p = MarkovModel(rng.dirichlet(np.ones(4), size=4), np.full(4, 0.25))
        for _ in range(100):
            z = rng.normal(size=4)
            for x in range(4):
                for k, path_head in enumerate(([x], [1, x], [3, 2, x])):
                    base = markov_martingale_residual(path_head, p, z)[-1]
                    incs = [markov_martingale_residual(path_head + [y], p, z)[-1] - base for y in range(4)]
                    assert abs(float(np.dot(p.p[x], incs))) < 1e-12

    def test_starts_at_zero(self):
        assert markov_martingale_residual([1, 0, 1], STICKY, [0.3, -2.0])[0] == 0.0

    def test_rejects_bad_z(self):
        with pytest.raises(ValidationError):
            markov_martingale_residual([0, 1], STICKY, [1.0])


class TestFitAndSimulate:
    def test_fit_converges(self):
        paths = simulate_markov_ensemble(STICKY, 200, 200, seed=5)
        fit = fit_markov(list(paths), 2)
        assert np.allclose(fit.model.p, STICKY.p, atol=0.01)
        assert fit.undetermined == ()

    def test_unvisited_rows_are_uniform(self):
        fit = fit_markov([[0, 0, 1]], 3)
        assert fit.undetermined == (1, 2)
        assert np.allclose(fit.model.p[2], 1 / 3)

    def test_simulate_is_reproducible(self):
        a = simulate_markov(STICKY, 50, RandomStream(3, 2))
        assert np.array_equal(a, simulate_markov(STICKY, 50, RandomStream(3, 2)))
        assert np.array_equal(a, simulate_markov_ensemble(STICKY, 50, 3, seed=3)[2])

    @pytest.mark.parametrize(
        "p,v0", [([[0.5, 0.6], [0.5, 0.5]], [0.5, 0.5]), ([[1.0]], [1.0]), ([[1, 0], [0, 1]], [0.6, 0.6])]
    )
    def test_model_rejects(self, p, v0):
        with pytest.raises(ValidationError):
            MarkovModel(p, v0)

    def test_dict_round_trip(self):
        back = MarkovModel.from_dict(STICKY.to_dict())
        assert np.array_equal(back.p, STICKY.p) and np.array_equal(back.v0, STICKY.v0)
