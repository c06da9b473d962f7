"""Conditional log-ratio estimation for order-k Markov series.

For an order-k homogeneous process, the conditional log-ratio of a new
sample given its past is the difference of two joint log-ratios:

    log f1(x_t | x_{t-1}..x_{t-k}) / f0(...) = u_{k+1}(window) - u_k(past)

where u_m is the log-ratio of m consecutive samples.  Both u's are fitted
as ordinary two-sample problems on sliding windows; the difference then
drives the SPRT and CUSUM recursions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionError,
    InsufficientDataError,
    StoppedError,
    TargetError,
)
from .estimators import RatioEstimator
from .losses import LossPair
from .network import Mlp2, identity_output
from .training import TrainConfig, train_two_sample


def make_windows(series, width: int) -> np.ndarray:
    """Sliding windows of a scalar series, newest sample first.

    Row i is [x_t, x_{t-1}, ..., x_{t-width+1}] for t = width-1+i, so the
    column order matches the estimator input convention.
    """
    series = np.asarray(series, dtype=float).ravel()
    n = series.size
    if width < 1:
        raise DimensionError("window width must be at least 1")
    if n < width:
        raise InsufficientDataError(
            f"series of length {n} yields no windows of width {width}"
        )
    return np.column_stack(
        [series[width - 1 - j:n - j] for j in range(width)]
    )


@dataclass
class ConditionalLr:
    """The pair of window estimators behind a conditional log-ratio."""

    order: int
    joint: RatioEstimator
    marginal: RatioEstimator | None = None

    def __post_init__(self):
        if self.order < 0:
            raise DimensionError("order must be nonnegative")
        if self.joint.target != "log_likelihood_ratio":
            raise TargetError("joint estimator must carry a log-ratio target")
        if self.order == 0:
            if self.marginal is not None:
                raise TargetError("order 0 has no past; marginal must be None")
        else:
            if self.marginal is None:
                raise TargetError(f"order {self.order} needs a marginal estimator")
            if self.marginal.target != "log_likelihood_ratio":
                raise TargetError("marginal estimator must carry a log-ratio target")

    def increments(self, windows) -> np.ndarray:
        """Conditional log-ratio for each row [x_t, ..., x_{t-k}]."""
        windows = np.asarray(windows, dtype=float)
        if windows.ndim == 1:
            windows = windows.reshape(1, -1)
        if windows.shape[1] != self.order + 1:
            raise DimensionError(
                f"windows must have {self.order + 1} columns, got {windows.shape[1]}"
            )
        out = np.asarray(self.joint.log_lr(windows), dtype=float)
        if self.order > 0:
            out = out - np.asarray(self.marginal.log_lr(windows[:, 1:]), dtype=float)
        return out


def conditional_increment(clr: ConditionalLr, window) -> float:
    window = np.asarray(window, dtype=float).ravel()
    if window.size != clr.order + 1:
        raise DimensionError(
            f"window must hold {clr.order + 1} samples, got {window.size}"
        )
    return float(clr.increments(window.reshape(1, -1))[0])


def fit_conditional(train0, train1, k: int, pair: LossPair, cfg: TrainConfig,
                    hidden_joint: int = 50, hidden_marginal: int = 20,
                    ) -> ConditionalLr:
    """Fit u_{k+1} and u_k on sliding windows of the two training series."""
    if pair.omega is None or pair.omega.name != "log":
        raise TargetError(
            "conditional estimation needs a pair trained toward log r"
        )
    train0 = np.asarray(train0, dtype=float).ravel()
    train1 = np.asarray(train1, dtype=float).ravel()
    for series in (train0, train1):
        if series.size - k < 2:
            raise InsufficientDataError(
                f"series of length {series.size} yields fewer than 2 "
                f"windows of width {k + 1}"
            )

    def fit(width: int, hidden: int, salt: int) -> RatioEstimator:
        net = Mlp2.init(width, hidden, identity_output(), seed=[cfg.seed, salt])
        trained, _ = train_two_sample(
            net, pair,
            make_windows(train0, width), make_windows(train1, width),
            replace(cfg, seed=cfg.seed + salt),
        )
        return RatioEstimator.from_network(
            trained, "log_likelihood_ratio",
            provenance={"preset": pair.name, "window": width,
                        "iterations": cfg.iterations, "mode": cfg.mode,
                        "step_size": cfg.step_size, "seed": cfg.seed},
        )

    joint = fit(k + 1, hidden_joint, 1)
    marginal = fit(k, hidden_marginal, 2) if k > 0 else None
    return ConditionalLr(order=k, joint=joint, marginal=marginal)


def sprt_update(l_hat: float, clr: ConditionalLr, window) -> float:
    """One step of the sequential log-ratio accumulation."""
    return float(l_hat) + conditional_increment(clr, window)


@dataclass(frozen=True)
class CusumState:
    """Running change-detection statistic; a small immutable value."""

    s_hat: float = 0.0
    threshold: float = 1.0
    t: int = 0
    stopped_at: int | None = None

    @property
    def stopped(self) -> bool:
        return self.stopped_at is not None


def cusum_init(threshold: float, start_time: int = 0) -> CusumState:
    return CusumState(s_hat=0.0, threshold=float(threshold), t=start_time)


def cusum_advance(state: CusumState, increment: float) -> CusumState:
    """Positive-part recursion s <- max(s, 0) + increment on a raw increment.

    The reset happens before the addition, so the stored statistic can dip
    below zero for one step; the next update discards the negative part.
    """
    if state.stopped:
        raise StoppedError(
            f"statistic already stopped at time {state.stopped_at}"
        )
    s_new = max(state.s_hat, 0.0) + float(increment)
    t_new = state.t + 1
    return CusumState(
        s_hat=s_new,
        threshold=state.threshold,
        t=t_new,
        stopped_at=t_new if s_new >= state.threshold else None,
    )


def cusum_step(state: CusumState, clr: ConditionalLr, window) -> CusumState:
    return cusum_advance(state, conditional_increment(clr, window))
