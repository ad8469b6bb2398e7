import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import solve_ivp

from poisson_additive import (
    ConstantRate,
    DeterministicBaseline,
    ExplosionError,
    Exponential,
    HawkesConst,
    HawkesExp,
    HazardSpec,
    OneShot,
    PointMass,
    RandomStream,
    ValidationError,
    simulate_ensemble,
    simulate_from_hazard,
    simulate_thinning,
)
from poisson_additive.core import Defective

FIG1 = HawkesConst(DeterministicBaseline(0.3, 0.2, 0.1), 0.2)
# E[N_10] for FIG1 from m' = mu(t) + 0.2 m, m(0) = 0
FIG1_MEAN_10 = 14.264368586907255


def counts(ensemble):
    return np.array([len(s) for s in ensemble])


def test_mean_oracle_is_current():
    sol = solve_ivp(
        lambda t, m: [0.3 + 0.2 * math.exp(-0.1 * t) + 0.2 * m[0]], (0, 10), [0.0], rtol=1e-12, atol=1e-12
    )
    assert sol.y[0, -1] == pytest.approx(FIG1_MEAN_10, rel=1e-9)


def test_hawkes_const_mean_matches_ode():
    n = counts(simulate_ensemble(FIG1, 10.0, 20_000, seed=11))
    se = n.std(ddof=1) / math.sqrt(n.size)
    assert abs(n.mean() - FIG1_MEAN_10) < 4 * se


def test_poisson_mean_and_variance():
    n = counts(simulate_ensemble(ConstantRate(3.0), 2.0, 20_000, seed=3))
    assert abs(n.mean() - 6.0) < 4 * math.sqrt(6.0 / n.size)
    # var of the sample variance for Poisson(6): (mu + 2 mu^2) / n approximately
    assert abs(n.var(ddof=1) - 6.0) < 4 * math.sqrt((6.0 + 2 * 36.0) / n.size)


def test_poisson_law_of_large_numbers():
    seq = simulate_thinning(ConstantRate(2.0), 2000.0, RandomStream(5))
    assert len(seq) / 2000.0 == pytest.approx(2.0, abs=4 * math.sqrt(2.0 / 2000.0))


def test_hawkes_exp_mean_matches_stationary_rate():
    # stationary rate mu / (1 - alpha / beta); start-up transient is small at T = 200
    model = HawkesExp(DeterministicBaseline(1.0), 0.5, 2.0)
    n = counts(simulate_ensemble(model, 200.0, 400, seed=9))
    expected = 200.0 / (1 - 0.25) - 0.25 / (1 - 0.25) ** 2 / 1.5 * (1 - math.exp(-1.5 * 200))
    se = n.std(ddof=1) / math.sqrt(n.size)
    assert abs(n.mean() - expected) < 4 * se


def test_events_inside_horizon_and_sorted():
    for seq in simulate_ensemble(FIG1, 10.0, 200, seed=1):
        assert np.all(np.diff(seq.times) > 0)
        assert seq.times.size == 0 or (seq.times[0] > 0 and seq.times[-1] <= 10.0)


def test_one_shot_has_at_most_one_event():
    assert max(counts(simulate_ensemble(OneShot(5.0), 10.0, 500, seed=2))) == 1


def test_deterministic_per_seed_and_workers():
    a = simulate_ensemble(FIG1, 10.0, 300, seed=4)
    b = simulate_ensemble(FIG1, 10.0, 300, seed=4, workers=3)
    assert all(np.array_equal(x.times, y.times) for x, y in zip(a, b))
    assert np.array_equal(a[17].times, simulate_thinning(FIG1, 10.0, RandomStream(4, 17)).times)


def test_thinning_and_hazard_agree_in_law():
    n1 = counts(simulate_ensemble(ConstantRate(2.0), 3.0, 5000, seed=21))
    n2 = counts(simulate_ensemble(HazardSpec([Exponential(2.0)]), 3.0, 5000, seed=22))
    assert stats.ks_2samp(n1, n2).pvalue > 0.001


def test_hazard_point_masses_are_deterministic():
    seq = simulate_from_hazard(HazardSpec([PointMass(1.0)]), 3.5, RandomStream(0))
    assert list(seq.times) == [1.0, 2.0, 3.0]


def test_hazard_defective_law_can_stop():
    spec = HazardSpec([Defective(0.5, Exponential(1.0))])
    n = counts(simulate_ensemble(spec, 1e6, 4000, seed=8))
    # geometric number of events with success probability 1/2
    assert n.mean() == pytest.approx(1.0, abs=4 * math.sqrt(2.0 / n.size))


def test_max_events_truncates_at_stopping_time():
    seq = simulate_thinning(FIG1, 1e3, RandomStream(1), max_events=50)
    assert len(seq) == 50 and seq.horizon == seq.times[-1]


def test_explosion_guard():
    with pytest.raises(ExplosionError):
        simulate_thinning(HawkesConst(DeterministicBaseline(0.5), 0.2), 200.0, RandomStream(0))


def test_zero_baseline_gives_no_events():
    seq = simulate_thinning(HawkesConst(DeterministicBaseline(0.0), 1.0), 50.0, RandomStream(0))
    assert len(seq) == 0


@pytest.mark.parametrize("horizon", [0.0, -1.0, math.inf])
def test_rejects_bad_horizon(horizon):
    with pytest.raises(ValidationError):
        simulate_thinning(ConstantRate(1.0), horizon, RandomStream(0))
