import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from poisson_additive import (
    CompensatorPath,
    ConstantRate,
    DeterministicBaseline,
    DomainError,
    EventSequence,
    Exponential,
    HawkesConst,
    HawkesExp,
    HazardSpec,
    OneShot,
    PiecewiseCdf,
    PointMass,
    RandomStream,
    ValidationError,
    compensator_eval,
    intensity_at,
    make_model,
)
from poisson_additive.core import Defective, law_from_dict

FIG1 = HawkesConst(DeterministicBaseline(0.3, 0.2, 0.1), 0.2)

event_lists = st.lists(
    st.floats(0.001, 9.999, allow_nan=False), min_size=0, max_size=30, unique=True
).map(sorted)

models = st.one_of(
    st.floats(0.01, 5).map(ConstantRate),
    st.tuples(st.floats(0, 3), st.floats(0, 3), st.floats(0, 2)).map(lambda p: DeterministicBaseline(*p)),
    st.tuples(st.floats(0, 3), st.floats(0, 1)).map(lambda p: HawkesConst(DeterministicBaseline(p[0]), p[1])),
    st.tuples(st.floats(0, 3), st.floats(0, 2), st.floats(0.01, 3)).map(
        lambda p: HawkesExp(DeterministicBaseline(p[0]), p[1], p[2])
    ),
    st.floats(0.01, 5).map(OneShot),
)


class TestEventSequence:
    def test_counts_are_right_continuous(self):
        seq = EventSequence(2.0, [0.5, 1.0])
        assert seq.count(1.0) == 2
        assert seq.count_before(1.0) == 1
        assert seq.count(0.0) == 0

    def test_arrays_are_read_only(self):
        seq = EventSequence(1.0, [0.5])
        with pytest.raises(ValueError):
            seq.times[0] = 0.1

    @pytest.mark.parametrize(
        "times", [[0.5, 0.5], [0.7, 0.2], [0.0], [1.5], [math.nan]]
    )
    def test_rejects_bad_times(self, times):
        with pytest.raises(ValidationError):
            EventSequence(1.0, times)

    def test_restrict(self):
        seq = EventSequence(3.0, [0.5, 1.5, 2.5]).restrict(2.0)
        assert seq.horizon == 2.0 and list(seq.times) == [0.5, 1.5]


class TestIntensityAt:
    def test_hawkes_const_uses_left_limit(self):
        seq = EventSequence(10.0, [1.0, 2.0])
        mu2 = 0.3 + 0.2 * math.exp(-0.2)
        assert intensity_at(FIG1, seq, 2.0) == pytest.approx(mu2 + 0.2, abs=1e-15)
        assert intensity_at(FIG1, seq, 2.0, right=True) == pytest.approx(mu2 + 0.4, abs=1e-15)

    def test_hawkes_exp(self):
        model = HawkesExp(DeterministicBaseline(1.0), 0.5, 2.0)
        seq = EventSequence(5.0, [1.0])
        assert intensity_at(model, seq, 1.5) == pytest.approx(1 + 0.5 * math.exp(-1.0), abs=1e-15)

    def test_one_shot_switches_off(self):
        seq = EventSequence(5.0, [1.0])
        assert intensity_at(OneShot(3.0), seq, 1.0) == 3.0
        assert intensity_at(OneShot(3.0), seq, 1.2) == 0.0

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            intensity_at(ConstantRate(1.0), EventSequence(1.0, []), 1.5)

    @given(models, event_lists, st.floats(0, 10))
    def test_nonnegative(self, model, times, t):
        assert intensity_at(model, EventSequence(10.0, times), t) >= 0

    @given(models, event_lists, st.floats(0.01, 10))
    def test_predictable(self, model, times, t):
        # the value at t ignores events at or after t
        full = EventSequence(10.0, times)
        past = EventSequence(10.0, [x for x in times if x < t])
        assert intensity_at(model, full, t) == intensity_at(model, past, t)

    @given(models, event_lists, st.floats(0, 10))
    def test_cumulative_matches_quadrature(self, model, times, t):
        from scipy.integrate import quad

        seq = EventSequence(10.0, times)
        pts = [x for x in times if x < t]
        val = sum(
            quad(lambda s: intensity_at(model, seq, s), lo, hi)[0]
            for lo, hi in zip([0.0] + pts, pts + [t])
        )
        assert model.cumulative(seq.times, t) == pytest.approx(val, rel=1e-7, abs=1e-9)


class TestMakeModel:
    def test_round_trip(self):
        m = make_model("hawkes_exp", {"a": 1, "b": 0.5, "c": 2, "alpha": 0.3, "beta": 1.5})
        assert m == HawkesExp(DeterministicBaseline(1, 0.5, 2), 0.3, 1.5)
        assert make_model(m.kind, m.params()) == m

    @pytest.mark.parametrize(
        "kind,params",
        [("nope", {}), ("constant", {}), ("constant", {"rate": -1}), ("constant", {"rate": "x"}),
         ("hawkes_const", {"a": 1}), ("constant", {"rate": 1, "beta": 2})],
    )
    def test_rejects(self, kind, params):
        with pytest.raises(ValidationError):
            make_model(kind, params)


class TestCompensatorPath:
    def test_linear_interpolation(self):
        path = CompensatorPath([0, 1, 3], [0, 1, 2])
        assert compensator_eval(path, 0.5) == 0.5
        assert compensator_eval(path, 2.0) == 1.5
        assert compensator_eval(path, 3.0) == 2.0

    def test_constant_segment_jumps_at_right_end(self):
        path = CompensatorPath([0, 1, 2], [0, 0.5, 2.0], ("linear", "constant"))
        assert compensator_eval(path, 1.5) == 0.5
        assert compensator_eval(path, 2.0) == 2.0

    def test_domain(self):
        path = CompensatorPath.linear(1.0, 2.0)
        with pytest.raises(DomainError):
            compensator_eval(path, 2.5)
        with pytest.raises(DomainError):
            compensator_eval(path, -0.1)

    @pytest.mark.parametrize(
        "bp,vals", [([0, 1], [0, -1]), ([0.5, 1], [0, 1]), ([0, 1], [1, 2]), ([0, 1, 1], [0, 1, 2])]
    )
    def test_rejects(self, bp, vals):
        with pytest.raises(ValidationError):
            CompensatorPath(bp, vals)

    @given(st.lists(st.floats(0, 5), min_size=1, max_size=20), st.lists(st.floats(0, 1), min_size=2, max_size=10))
    def test_monotone(self, incs, us):
        bp = np.arange(len(incs) + 1, dtype=float)
        path = CompensatorPath(bp, np.concatenate(([0.0], np.cumsum(incs))))
        ts = np.sort(np.asarray(us) * bp[-1])
        assert np.all(np.diff(path(ts)) >= -1e-12)

    def test_scaled(self):
        path = CompensatorPath.linear(1.5, 2.0).scaled(2.0)
        assert path(1.0) == 3.0 and path.values[-1] == 6.0


class TestWaitingLaws:
    def test_exponential(self):
        law = Exponential(2.0)
        assert law.cdf(1.0) == pytest.approx(1 - math.exp(-2), abs=1e-15)
        assert law.cumulative_hazard(0.7) == 1.4
        assert law.certain_by == math.inf

    def test_piecewise_quantile_is_generalized_inverse(self):
        law = PiecewiseCdf([0, 1, 2, 3], [0, 0.5, 0.5, 1.0])
        assert law.quantile(0.25) == 0.5
        assert law.quantile(0.5) == 1.0
        assert law.certain_by == 3.0
        assert law.cumulative_hazard(3.0) == math.inf

    def test_piecewise_hazard(self):
        law = PiecewiseCdf([0, 2], [0, 0.5])
        # F = x/4 on [0, 2]: hazard = -log(1 - x/4)
        assert law.cumulative_hazard(1.0) == pytest.approx(-math.log(0.75), rel=1e-9)

    def test_point_mass(self):
        law = PointMass(1.5)
        assert law.cdf(1.4) == 0 and law.cdf(1.5) == 1
        assert law.cdf_left(1.5) == 0
        # an atom of full mass contributes F(dx) / (1 - F(x-)) = 1
        assert law.cumulative_hazard(1.5) == 1.0
        assert law.sample(0.3) == 1.5

    def test_defective_may_never_fire(self):
        law = Defective(0.4, Exponential(1.0))
        assert law.sample(0.5) is None
        assert law.sample(0.2) == pytest.approx(-math.log(0.5), abs=1e-15)
        assert law.cdf(1e9) == pytest.approx(0.4)

    def test_from_dict(self):
        law = law_from_dict({"kind": "exponential", "rate": 3})
        assert law == Exponential(3.0)
        with pytest.raises(ValidationError):
            law_from_dict({"kind": "weibull"})

    def test_hazard_spec_repeats_last_law(self):
        spec = HazardSpec([Exponential(1.0), Exponential(2.0)])
        assert spec.law(5) == Exponential(2.0)
        assert HazardSpec.from_dict(spec.to_dict()) == spec


class TestRandomStream:
    def test_reproducible(self):
        a = RandomStream(42, 3).generator().random(5)
        b = RandomStream(42, 3).generator().random(5)
        assert np.array_equal(a, b)

    def test_indices_differ(self):
        a = RandomStream(42, 0).generator().random(5)
        b = RandomStream(42, 1).generator().random(5)
        assert not np.array_equal(a, b)

    def test_factory_matches_stream(self):
        from poisson_additive.core import _StreamFactory

        f = _StreamFactory(7)
        for i in (0, 5, 2**40):
            assert np.array_equal(f.generator(i).random(4), RandomStream(7, i).generator().random(4))

    def test_rejects_negative_seed(self):
        with pytest.raises(ValidationError):
            RandomStream(-1)
