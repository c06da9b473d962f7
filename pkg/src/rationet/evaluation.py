"""Metrics and reference statistics: ROC curves, closed-form optima,
Gaussian GLRT statistics, classification error, and the CUSUM delay /
false-alarm Monte Carlo.

The Monte Carlo runs all trials in lockstep over vectorized time blocks.
That works because the CUSUM path over a block can be written in terms of
cumulative sums: with entering statistic s and increments c_1..c_L,

    S_t = C_t - min(-max(s,0), C_1, ..., C_{t-1}),   C_t = c_1 + ... + c_t

which equals the positive-part recursion applied step by step.  One pass
over the path serves every threshold at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data import GaussianSpec, MarkovSpec, feedback_map
from .errors import (
    DegenerateVarianceError,
    DimensionError,
    EmptyInputError,
    ParamError,
)

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class RocCurve:
    """Empirical ROC: one point per unique pooled score, sweep descending."""

    thresholds: np.ndarray
    false_alarm: np.ndarray
    detection: np.ndarray

    @property
    def points(self):
        return list(zip(self.false_alarm.tolist(), self.detection.tolist()))

    @property
    def auc(self) -> float:
        x = np.concatenate([[0.0], self.false_alarm])
        y = np.concatenate([[0.0], self.detection])
        return float(np.trapezoid(y, x))

    def detection_at(self, false_alarm_targets) -> np.ndarray:
        """Interpolated detection probability at given false-alarm levels."""
        targets = np.atleast_1d(np.asarray(false_alarm_targets, dtype=float))
        xs = np.concatenate([[0.0], self.false_alarm, [1.0]])
        ys = np.concatenate([[0.0], self.detection, [1.0]])
        # collapse duplicate false-alarm values to their best detection
        best: dict[float, float] = {}
        for x, y in zip(xs, ys):
            best[x] = max(best.get(x, 0.0), y)
        grid = np.array(sorted(best))
        vals = np.array([best[g] for g in grid])
        return np.interp(targets, grid, vals)

    def to_csv(self) -> str:
        lines = ["threshold,false_alarm,detection"]
        for nu, x, y in zip(self.thresholds, self.false_alarm, self.detection):
            lines.append("%.17g,%.17g,%.17g" % (nu, x, y))
        return "\n".join(lines) + "\n"


def roc(scores0, scores1) -> RocCurve:
    """Empirical ROC of the decision rule score >= threshold."""
    s0 = np.asarray(scores0, dtype=float).ravel()
    s1 = np.asarray(scores1, dtype=float).ravel()
    if s0.size == 0 or s1.size == 0:
        raise EmptyInputError("both score lists must be non-empty")
    thresholds = np.unique(np.concatenate([s0, s1]))[::-1]
    sorted0 = np.sort(s0)
    sorted1 = np.sort(s1)
    pfa = 1.0 - np.searchsorted(sorted0, thresholds, side="left") / s0.size
    pd = 1.0 - np.searchsorted(sorted1, thresholds, side="left") / s1.size
    return RocCurve(thresholds=thresholds, false_alarm=pfa, detection=pd)


def _gaussian_logpdf(x, mean, var):
    return -0.5 * (_LOG_2PI + np.log(var)) - (x - mean) ** 2 / (2.0 * var)


def gaussian_log_lr(spec0: GaussianSpec, spec1: GaussianSpec, x):
    """Exact per-sample log f1/f0 for spherical Gaussian pairs."""
    if spec0.k != spec1.k:
        raise DimensionError("the two specs must share a dimension")
    arr = np.asarray(x, dtype=float)
    single = False
    if arr.ndim == 0:
        X = arr.reshape(1, 1)
        single = True
    elif arr.ndim == 1:
        if spec0.k == 1:
            X = arr.reshape(-1, 1)
        elif arr.size == spec0.k:
            X = arr.reshape(1, -1)
            single = True
        else:
            raise DimensionError(
                f"expected {spec0.k} coordinates, got {arr.size}"
            )
    else:
        X = arr
    if X.shape[1] != spec0.k:
        raise DimensionError(f"expected {spec0.k} coordinates, got {X.shape[1]}")
    terms = _gaussian_logpdf(X, spec1.mean_array, spec1.variance_scale) \
        - _gaussian_logpdf(X, spec0.mean_array, spec0.variance_scale)
    out = terms.sum(axis=1)
    return float(out[0]) if single else out


def gaussian_kl(spec_from: GaussianSpec, spec_to: GaussianSpec) -> float:
    """Closed-form KL(f_a || f_b) for spherical Gaussians, expectation
    under f_a of log f_a/f_b."""
    if spec_from.k != spec_to.k:
        raise DimensionError("the two specs must share a dimension")
    ratio = spec_from.variance_scale / spec_to.variance_scale
    shift = (spec_from.mean_array - spec_to.mean_array) ** 2 \
        / spec_to.variance_scale
    return float(0.5 * np.sum(ratio + shift - 1.0 - math.log(ratio)))


def gaussian_mutual_information(correlation: float) -> float:
    """MI of a bivariate standard Gaussian with the given correlation."""
    return -0.5 * math.log1p(-correlation ** 2)


def _conditional_mean(spec: MarkovSpec, past):
    if spec.regime == "sqrt_feedback":
        return feedback_map(past)
    return np.zeros_like(np.asarray(past, dtype=float))


def markov_conditional_log_lr(spec0: MarkovSpec, spec1: MarkovSpec, windows):
    """Exact conditional log-ratio log f1(x_t|x_{t-1})/f0(x_t|x_{t-1}).

    Windows are newest-first rows [x_t, x_{t-1}].  Both regimes are
    conditionally Gaussian with unit variance, so only the conditional
    means differ.
    """
    W = np.asarray(windows, dtype=float)
    single = W.ndim == 1
    W = W.reshape(1, -1) if single else W
    if W.shape[1] != 2:
        raise DimensionError("windows must be [x_t, x_prev] pairs")
    x_t, x_prev = W[:, 0], W[:, 1]
    out = _gaussian_logpdf(x_t, _conditional_mean(spec1, x_prev), 1.0) \
        - _gaussian_logpdf(x_t, _conditional_mean(spec0, x_prev), 1.0)
    return float(out[0]) if single else out


def optimum_log_lr(spec0, spec1, x):
    """Closed-form log-ratio dispatch for the supported spec families."""
    if isinstance(spec0, GaussianSpec) and isinstance(spec1, GaussianSpec):
        return gaussian_log_lr(spec0, spec1, x)
    if isinstance(spec0, MarkovSpec) and isinstance(spec1, MarkovSpec):
        return markov_conditional_log_lr(spec0, spec1, x)
    raise ParamError("specs must both be Gaussian or both Markov")


class ExactConditional:
    """Oracle drop-in for a fitted ConditionalLr using exact densities."""

    def __init__(self, spec0: MarkovSpec, spec1: MarkovSpec):
        self.order = 1
        self.spec0 = spec0
        self.spec1 = spec1

    def increments(self, windows) -> np.ndarray:
        return np.atleast_1d(
            markov_conditional_log_lr(self.spec0, self.spec1, windows)
        )


def _ml_fit(samples, what: str):
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ParamError(f"{what} needs at least 2 samples, got {x.size}")
    mu = float(np.mean(x))
    var = float(np.mean((x - mu) ** 2))
    if var <= 0.0:
        raise DegenerateVarianceError(f"{what} has zero sample variance")
    return x, mu, var


def glrt_known_nominal(nominal: GaussianSpec, block) -> float:
    """GLRT statistic with exact nominal density and ML-fitted alternative."""
    if nominal.k != 1:
        raise DimensionError("the GLRT baselines are scalar-family only")
    x, mu, var = _ml_fit(block, "test block")
    fitted = _gaussian_logpdf(x, mu, var)
    nominal_ll = _gaussian_logpdf(x, nominal.mean_array[0], nominal.variance_scale)
    return float(np.sum(fitted - nominal_ll))


def glrt_estimated_nominal(nominal_data, block) -> float:
    """GLRT variant that must estimate the nominal from a finite sample."""
    x, mu, var = _ml_fit(block, "test block")
    _, mu0, var0 = _ml_fit(nominal_data, "nominal data")
    return float(np.sum(_gaussian_logpdf(x, mu, var) - _gaussian_logpdf(x, mu0, var0)))


def classification_error(decide, X, labels, positive_label=1) -> float:
    """Fraction of sign decisions disagreeing with the labels."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyInputError("empty test set")
    truth = np.where(labels == positive_label, 1, -1)
    predicted = np.asarray(decide(X)).ravel()
    return float(np.mean(predicted != truth))


@dataclass
class DelayCurve:
    """Average stopping times per threshold: false-alarm period under the
    nominal regime, detection delay under the changed regime."""

    thresholds: np.ndarray
    false_alarm_period: np.ndarray
    detection_delay: np.ndarray
    censored_false_alarm: np.ndarray
    censored_delay: np.ndarray
    trials: int
    horizon: int

    @property
    def points(self):
        return list(zip(self.false_alarm_period.tolist(),
                        self.detection_delay.tolist()))

    def delay_at(self, false_alarm_targets) -> np.ndarray:
        """Delay interpolated at given false-alarm periods (log-log)."""
        targets = np.atleast_1d(np.asarray(false_alarm_targets, dtype=float))
        order = np.argsort(self.false_alarm_period)
        xs = np.log(self.false_alarm_period[order])
        ys = np.log(self.detection_delay[order])
        return np.exp(np.interp(np.log(targets), xs, ys))

    def to_csv(self) -> str:
        lines = ["threshold,false_alarm_period,detection_delay"]
        for row in zip(self.thresholds, self.false_alarm_period,
                       self.detection_delay):
            lines.append("%.17g,%.17g,%.17g" % row)
        return "\n".join(lines) + "\n"


def _series_block(spec: MarkovSpec, prev, length: int, rng) -> np.ndarray:
    """Continue each trial's series by `length` samples (rows = trials)."""
    m = prev.shape[0]
    w = rng.standard_normal((m, length))
    if spec.regime == "iid_standard_normal":
        return w
    block = np.empty((m, length))
    last = prev
    for j in range(length):
        last = feedback_map(last) + w[:, j]
        block[:, j] = last
    return block


def _initial_history(spec: MarkovSpec, k: int, trials: int, rng) -> np.ndarray:
    """The k samples consumed before the statistic starts, time-ascending."""
    if k == 0:
        return np.empty((trials, 0))
    first = rng.standard_normal(trials)
    hist = np.empty((trials, k))
    hist[:, 0] = first
    for j in range(1, k):
        hist[:, j] = feedback_map(hist[:, j - 1]) + rng.standard_normal(trials) \
            if spec.regime == "sqrt_feedback" else rng.standard_normal(trials)
    return hist


def _stopping_times(cond, spec: MarkovSpec, thresholds: np.ndarray,
                    trials: int, horizon: int, rng, block_len: int):
    """First-passage times (1-based increment counts) for every threshold.

    Trials run in lockstep; a trial retires once it has crossed the largest
    threshold.  Unfinished trials are censored at the horizon.
    """
    k = cond.order
    n_thr = thresholds.size
    times = np.full((n_thr, trials), -1, dtype=np.int64)

    ids = np.arange(trials)
    hist = _initial_history(spec, k, trials, rng)
    s = np.zeros(trials)
    steps_done = 0

    while ids.size and steps_done < horizon:
        length = min(block_len, horizon - steps_done)
        block = _series_block(spec, hist[:, -1] if k else np.zeros(ids.size),
                              length, rng)
        ext = np.concatenate([hist, block], axis=1)
        windows = sliding_window_view(ext, k + 1, axis=1)[:, -length:, ::-1]
        incs = cond.increments(windows.reshape(-1, k + 1)) \
            .reshape(ids.size, length)

        cum = np.cumsum(incs, axis=1)
        floor = np.minimum.accumulate(
            np.concatenate([-np.maximum(s, 0.0)[:, None], cum[:, :-1]], axis=1),
            axis=1,
        )
        path = cum - floor

        running_max = np.maximum.accumulate(path, axis=1)
        for j in range(n_thr):
            row = times[j]
            open_mask = row[ids] < 0
            if not np.any(open_mask):
                continue
            hit = running_max[open_mask, -1] >= thresholds[j]
            if not np.any(hit):
                continue
            sub = np.flatnonzero(open_mask)[hit]
            first = np.argmax(path[sub] >= thresholds[j], axis=1)
            row[ids[sub]] = steps_done + first + 1

        s = path[:, -1]
        steps_done += length
        if k:
            hist = ext[:, -k:]
        keep = times[-1][ids] < 0
        if not np.all(keep):
            ids = ids[keep]
            s = s[keep]
            if k:
                hist = hist[keep]
            else:
                hist = hist[:keep.sum()]

    censored = np.count_nonzero(times < 0, axis=1)
    np.place(times, times < 0, horizon)
    return times, censored


def cusum_monte_carlo(cond, spec0: MarkovSpec, spec1: MarkovSpec, thresholds,
                      trials: int, horizon: int = 1_000_000, seed=0,
                      block_len: int = 256) -> DelayCurve:
    """Average false-alarm period and detection delay per threshold.

    Under spec0 the statistic should drift down and stop rarely (long
    periods); under spec1, with the change at time zero, it should stop
    fast.  Trials hitting the horizon enter the averages at the horizon
    value and are counted in the censoring fields.
    """
    nus = np.sort(np.asarray(thresholds, dtype=float).ravel())
    if nus.size == 0:
        raise EmptyInputError("no thresholds given")
    if trials < 1:
        raise ParamError(f"trials must be positive, got {trials}")
    if horizon < 1:
        raise ParamError(f"horizon must be positive, got {horizon}")
    t0, c0 = _stopping_times(cond, spec0, nus, trials, horizon,
                             np.random.default_rng([seed, 0]), block_len)
    t1, c1 = _stopping_times(cond, spec1, nus, trials, horizon,
                             np.random.default_rng([seed, 1]), block_len)
    return DelayCurve(
        thresholds=nus,
        false_alarm_period=t0.mean(axis=1),
        detection_delay=t1.mean(axis=1),
        censored_false_alarm=c0,
        censored_delay=c1,
        trials=trials,
        horizon=horizon,
    )
