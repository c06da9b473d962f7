"""Tests for ROC curves, closed-form references, GLRT statistics, and the
change-detection Monte Carlo."""

import math

import numpy as np
import pytest

from rationet.data import GaussianSpec, MarkovSpec, feedback_map
from rationet.errors import (
    DegenerateVarianceError,
    DimensionError,
    EmptyInputError,
    ParamError,
)
from rationet.evaluation import (
    DelayCurve,
    ExactConditional,
    classification_error,
    cusum_monte_carlo,
    gaussian_kl,
    gaussian_log_lr,
    gaussian_mutual_information,
    glrt_estimated_nominal,
    glrt_known_nominal,
    markov_conditional_log_lr,
    optimum_log_lr,
    roc,
)
from rationet.markov import CusumState, cusum_advance


def test_roc_perfect_separation():
    curve = roc(np.zeros(10), np.ones(10))
    assert curve.auc == pytest.approx(1.0)
    assert curve.detection_at(0.0) == pytest.approx(1.0)


def test_roc_identical_scores_is_diagonal():
    s = np.arange(1, 21, dtype=float)
    curve = roc(s, s.copy())
    assert curve.auc == pytest.approx(0.5)
    for x, y in curve.points:
        assert x == pytest.approx(y)


def test_roc_equals_pairwise_ordering_probability():
    """Trapezoidal AUC must equal the rank statistic
    P(S1 > S0) + P(S1 = S0)/2, ties included."""
    rng = np.random.default_rng(5)
    s0 = rng.integers(0, 6, size=37).astype(float)
    s1 = rng.integers(1, 7, size=29).astype(float)
    curve = roc(s0, s1)
    brute = np.mean((s1[:, None] > s0[None, :]) + 0.5 * (s1[:, None] == s0[None, :]))
    assert curve.auc == pytest.approx(float(brute), abs=1e-12)


def test_roc_invariant_under_monotone_transform():
    rng = np.random.default_rng(7)
    s0 = rng.standard_normal(50)
    s1 = rng.standard_normal(60) + 0.5
    a = roc(s0, s1)
    b = roc(np.arctan(s0), np.arctan(s1))
    assert np.allclose(a.false_alarm, b.false_alarm)
    assert np.allclose(a.detection, b.detection)


def test_roc_curve_shape_and_csv():
    curve = roc(np.array([0.0, 1.0]), np.array([0.5, 2.0]))
    assert np.all(np.diff(curve.false_alarm) >= 0)
    assert np.all(np.diff(curve.detection) >= 0)
    assert curve.false_alarm[-1] == 1.0 and curve.detection[-1] == 1.0
    text = curve.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "threshold,false_alarm,detection"
    assert len(lines) == 1 + len(curve.thresholds)
    with pytest.raises(EmptyInputError):
        roc(np.empty(0), np.ones(3))


def test_roc_auc_close_to_gaussian_closed_form():
    """Scores x under N(0,1) vs N(1,1): AUC = Phi(1/sqrt(2))."""
    rng = np.random.default_rng(19)
    s0 = rng.standard_normal(20_000)
    s1 = rng.standard_normal(20_000) + 1.0
    truth = 0.5 * (1.0 + math.erf(0.5))
    assert roc(s0, s1).auc == pytest.approx(truth, abs=0.01)


def test_detection_at_interpolates():
    curve = roc(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
    # pfa grid collapses to {0, .5, 1} with best detections {.5, 1, 1}
    vals = curve.detection_at([0.0, 0.25, 0.5, 1.0])
    assert np.allclose(vals, [0.5, 0.75, 1.0, 1.0])


def test_gaussian_log_lr_hand_value():
    spec0 = GaussianSpec(0.0, 1.0)
    spec1 = GaussianSpec(0.4, 1.2)
    expected = -0.5 * math.log(1.2) + 0.08  # at x = 0.4
    assert gaussian_log_lr(spec0, spec1, 0.4) == pytest.approx(expected, abs=1e-12)
    batch = gaussian_log_lr(spec0, spec1, np.array([0.4, 0.4]))
    assert np.allclose(batch, expected)


def test_gaussian_log_lr_shapes():
    spec0 = GaussianSpec((0.0, 0.0), 1.0)
    spec1 = GaussianSpec((1.0, 1.0), 1.0)
    single = gaussian_log_lr(spec0, spec1, np.array([0.5, 0.5]))
    assert isinstance(single, float)
    batch = gaussian_log_lr(spec0, spec1, np.ones((3, 2)))
    assert batch.shape == (3,)
    with pytest.raises(DimensionError):
        gaussian_log_lr(spec0, spec1, np.ones(3))
    with pytest.raises(DimensionError):
        gaussian_log_lr(spec0, GaussianSpec(0.0, 1.0), 0.5)


def test_gaussian_kl_pins():
    kl = gaussian_kl(GaussianSpec(0.4, 1.2), GaussianSpec(0.0, 1.0))
    assert kl == pytest.approx(0.5 * (1.2 + 0.16 - 1.0 - math.log(1.2)), abs=1e-12)
    assert kl == pytest.approx(0.08883922157244822, abs=1e-9)
    assert gaussian_kl(GaussianSpec(0.0), GaussianSpec(0.0)) == 0.0
    # KL grows with dimension for repeated coordinates
    k3 = gaussian_kl(GaussianSpec((0.4,) * 3, 1.2), GaussianSpec((0.0,) * 3, 1.0))
    assert k3 == pytest.approx(3 * kl)


def test_gaussian_mi_pin():
    assert gaussian_mutual_information(0.5) == pytest.approx(
        -0.5 * math.log(0.75), abs=1e-12)
    assert gaussian_mutual_information(0.5) == pytest.approx(0.14384103622589045)
    assert gaussian_mutual_information(0.0) == 0.0


def test_markov_conditional_log_lr_hand_values():
    """iid nominal against the sqrt feedback regime, unit noise variance."""
    spec0 = MarkovSpec("iid_standard_normal")
    spec1 = MarkovSpec("sqrt_feedback")
    # x_prev = 4 puts the changed conditional mean at 2.
    assert markov_conditional_log_lr(spec0, spec1, [1.0, 4.0]) == pytest.approx(0.0)
    assert markov_conditional_log_lr(spec0, spec1, [2.0, 4.0]) == pytest.approx(2.0)
    W = np.array([[1.0, 4.0], [2.0, 4.0]])
    assert np.allclose(markov_conditional_log_lr(spec0, spec1, W), [0.0, 2.0])
    with pytest.raises(DimensionError):
        markov_conditional_log_lr(spec0, spec1, np.ones((2, 3)))


def test_exact_conditional_wraps_closed_form():
    spec0 = MarkovSpec("iid_standard_normal")
    spec1 = MarkovSpec("sqrt_feedback")
    cond = ExactConditional(spec0, spec1)
    assert cond.order == 1
    W = np.array([[0.3, -2.0], [1.0, 4.0]])
    assert np.allclose(cond.increments(W),
                       markov_conditional_log_lr(spec0, spec1, W))


def test_optimum_log_lr_dispatch():
    g0, g1 = GaussianSpec(0.0), GaussianSpec(1.0)
    m0, m1 = MarkovSpec(), MarkovSpec("sqrt_feedback")
    assert optimum_log_lr(g0, g1, 0.5) == gaussian_log_lr(g0, g1, 0.5)
    assert optimum_log_lr(m0, m1, [1.0, 4.0]) == pytest.approx(0.0)
    with pytest.raises(ParamError):
        optimum_log_lr(g0, m1, 0.5)


def test_glrt_known_nominal_hand_value():
    """Block {0, 2}: fitted N(1,1) gains exactly 1 nat over N(0,1)."""
    stat = glrt_known_nominal(GaussianSpec(0.0, 1.0), np.array([0.0, 2.0]))
    assert stat == pytest.approx(1.0, abs=1e-12)


def test_glrt_guards():
    with pytest.raises(DimensionError):
        glrt_known_nominal(GaussianSpec((0.0, 0.0)), np.array([0.0, 2.0]))
    with pytest.raises(ParamError):
        glrt_known_nominal(GaussianSpec(0.0), np.array([1.0]))
    with pytest.raises(DegenerateVarianceError):
        glrt_known_nominal(GaussianSpec(0.0), np.array([3.0, 3.0, 3.0]))


def test_glrt_estimated_consistency():
    """With identical data the estimated-nominal statistic vanishes, and a
    huge nominal sample reproduces the known-nominal statistic."""
    block = np.array([0.3, -0.5, 1.2, 0.7, -0.1])
    assert glrt_estimated_nominal(block, block) == pytest.approx(0.0, abs=1e-12)

    rng = np.random.default_rng(3)
    nominal_data = rng.standard_normal(200_000)
    test_block = rng.standard_normal(50) + 0.4
    a = glrt_known_nominal(GaussianSpec(0.0, 1.0), test_block)
    b = glrt_estimated_nominal(nominal_data, test_block)
    assert abs(a - b) < 0.05


def test_classification_error_basics():
    labels = np.array([1, 1, -1, -1])
    always_yes = lambda X: np.ones(4)
    assert classification_error(always_yes, None, labels) == pytest.approx(0.5)
    perfect = lambda X: np.array([1, 1, -1, -1])
    assert classification_error(perfect, None, labels) == 0.0
    relabeled = classification_error(perfect, None, np.array([9, 9, 4, 4]),
                                     positive_label=9)
    assert relabeled == 0.0
    with pytest.raises(EmptyInputError):
        classification_error(always_yes, None, np.empty(0))


class ConstCond:
    """Order-0 conditional returning a fixed increment for every sample."""

    def __init__(self, value):
        self.order = 0
        self.value = value

    def increments(self, windows):
        W = np.asarray(windows, dtype=float)
        n = W.shape[0] if W.ndim == 2 else 1
        return np.full(n, self.value)


class DriftCond:
    """Order-0 conditional with increments x - shift on the raw samples."""

    def __init__(self, shift):
        self.order = 0
        self.shift = shift

    def increments(self, windows):
        W = np.asarray(windows, dtype=float).reshape(-1, 1)
        return W[:, 0] - self.shift


IID = MarkovSpec("iid_standard_normal")


def test_cusum_ramp_stops_exactly_at_threshold_count():
    """Unit increments accumulate t, so threshold nu stops at ceil(nu).

    block_len below the stopping time forces the statistic to carry across
    block boundaries.
    """
    curve = cusum_monte_carlo(ConstCond(1.0), IID, IID,
                              thresholds=[2.0, 5.0], trials=6, horizon=50,
                              seed=0, block_len=3)
    assert np.allclose(curve.false_alarm_period, [2.0, 5.0])
    assert np.allclose(curve.detection_delay, [2.0, 5.0])
    assert np.all(curve.censored_false_alarm == 0)
    assert np.all(curve.censored_delay == 0)


def test_cusum_fractional_ramp_crosses_after_ceiling():
    # 0.3 per step: 8 steps reach 2.4, nine are needed for 2.5.
    curve = cusum_monte_carlo(ConstCond(0.3), IID, IID,
                              thresholds=[2.5], trials=4, horizon=40,
                              seed=0, block_len=4)
    assert np.allclose(curve.false_alarm_period, [9.0])
    assert np.allclose(curve.detection_delay, [9.0])


def test_cusum_negative_drift_censors_at_horizon():
    curve = cusum_monte_carlo(ConstCond(-1.0), IID, IID,
                              thresholds=[1.0], trials=5, horizon=30,
                              seed=0, block_len=7)
    assert np.allclose(curve.false_alarm_period, [30.0])
    assert np.allclose(curve.detection_delay, [30.0])
    assert np.all(curve.censored_false_alarm == 5)
    assert np.all(curve.censored_delay == 5)


def test_cusum_lockstep_matches_scalar_recursion():
    """Replay the vectorized Monte Carlo against the one-step recursion.

    With an order-0 statistic the sampled series is exactly the block of
    standard normals drawn from default_rng([seed, run]), so each trial can
    be re-run through cusum_advance and must stop at the same time.
    """
    trials, horizon, seed = 40, 400, 77
    thresholds = [1.5, 3.0]
    cond = DriftCond(0.25)
    curve = cusum_monte_carlo(cond, IID, IID, thresholds=thresholds,
                              trials=trials, horizon=horizon, seed=seed,
                              block_len=1000)

    for run, (period, censored) in enumerate([
            (curve.false_alarm_period, curve.censored_false_alarm),
            (curve.detection_delay, curve.censored_delay)]):
        X = np.random.default_rng([seed, run]).standard_normal((trials, horizon))
        for j, nu in enumerate(thresholds):
            stops, censored_count = [], 0
            for i in range(trials):
                state = CusumState(s_hat=0.0, threshold=nu, t=0)
                for x in X[i]:
                    state = cusum_advance(state, x - 0.25)
                    if state.stopped:
                        break
                if state.stopped:
                    stops.append(state.stopped_at)
                else:
                    stops.append(horizon)
                    censored_count += 1
            assert period[j] == pytest.approx(np.mean(stops)), (run, nu)
            assert censored[j] == censored_count, (run, nu)


def test_cusum_exact_conditional_orderings():
    """Delays grow with the threshold and stay far below false-alarm periods."""
    spec0 = MarkovSpec("iid_standard_normal")
    spec1 = MarkovSpec("sqrt_feedback")
    curve = cusum_monte_carlo(ExactConditional(spec0, spec1), spec0, spec1,
                              thresholds=[0.5, 1.5, 3.0], trials=200,
                              horizon=20_000, seed=4, block_len=256)
    assert np.all(np.diff(curve.detection_delay) > 0)
    assert np.all(curve.false_alarm_period > curve.detection_delay)
    assert np.all(curve.censored_delay == 0)
    assert np.all(curve.detection_delay >= 1.0)


def test_cusum_validation():
    with pytest.raises(EmptyInputError):
        cusum_monte_carlo(ConstCond(1.0), IID, IID, thresholds=[],
                          trials=3, horizon=10)
    with pytest.raises(ParamError):
        cusum_monte_carlo(ConstCond(1.0), IID, IID, thresholds=[1.0],
                          trials=0, horizon=10)
    with pytest.raises(ParamError):
        cusum_monte_carlo(ConstCond(1.0), IID, IID, thresholds=[1.0],
                          trials=3, horizon=0)


def test_delay_curve_interpolation_and_csv():
    curve = DelayCurve(
        thresholds=np.array([1.0, 2.0]),
        false_alarm_period=np.array([10.0, 100.0]),
        detection_delay=np.array([5.0, 20.0]),
        censored_false_alarm=np.zeros(2, dtype=int),
        censored_delay=np.zeros(2, dtype=int),
        trials=100,
        horizon=1000,
    )
    # log-log interpolation: the geometric midpoint maps to sqrt(5 * 20).
    mid = math.sqrt(10.0 * 100.0)
    assert curve.delay_at(mid)[0] == pytest.approx(10.0)
    text = curve.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "threshold,false_alarm_period,detection_delay"
    assert len(lines) == 3
    assert curve.points == [(10.0, 5.0), (100.0, 20.0)]
