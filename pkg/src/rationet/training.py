"""Gradient-descent training loops for the paired losses.

All loops share one update rule: the gradient of the empirical cost is
normalized elementwise by the square root of an exponentially smoothed
average of its square,

    m_t = smoothing * m_{t-1} + (1 - smoothing) * g_t**2
    theta_t = theta_{t-1} - step_size * g_t / sqrt(m_t + epsilon)

with m_0 = 0.  Three costs are covered: the two-sample cost
mean phi(u(X0)) + mean psi(u(X1)), the mutual-information cost whose phi
term runs over all n^2 cross pairings, and the data-driven local cost that
needs only samples from the null density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import network
from .errors import (
    DimensionError,
    EmptyDatasetError,
    NonFiniteError,
    PairDomainError,
    ParamError,
)
from .losses import REAL, LossPair
from .network import Mlp2

MODES = ("full_batch", "stochastic_paired")


@dataclass
class TrainConfig:
    iterations: int
    step_size: float = 2e-4
    smoothing: float = 0.99
    mode: str = "full_batch"
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ParamError("step_size must be positive")
        if not 0.0 <= self.smoothing < 1.0:
            raise ParamError("smoothing must lie in [0, 1)")
        if self.iterations < 1:
            raise ParamError("iterations must be at least 1")
        if self.mode not in MODES:
            raise ParamError(f"mode must be one of {MODES}")
        if self.epsilon <= 0:
            raise ParamError("epsilon must be positive")


@dataclass
class TrainTrace:
    """Per-iteration costs plus optional metric-hook values."""

    costs: np.ndarray
    metric_iterations: list[int] = field(default_factory=list)
    metric_values: list[float] = field(default_factory=list)

    def to_csv(self, path=None) -> str:
        metrics = dict(zip(self.metric_iterations, self.metric_values))
        lines = ["iteration,cost,metric" if metrics else "iteration,cost"]
        for i, cost in enumerate(self.costs, start=1):
            row = f"{i},{cost:.17g}"
            if metrics:
                row += f",{metrics[i]:.17g}" if i in metrics else ","
            lines.append(row)
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _as_batch(net: Mlp2, data, label: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        if net.k == 1:
            arr = arr.reshape(-1, 1)
        elif arr.shape[0] == net.k:
            arr = arr.reshape(1, -1)
        else:
            raise DimensionError(
                f"{label} has shape {arr.shape}, incompatible with k={net.k}"
            )
    if arr.ndim != 2 or arr.shape[1] != net.k:
        raise DimensionError(
            f"{label} has shape {arr.shape}, expected (n, {net.k})"
        )
    if arr.shape[0] == 0:
        raise EmptyDatasetError(f"{label} is empty")
    return arr


class _IndexStream:
    """Cycles through a data set in reshuffled epochs."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def next(self) -> int:
        if self.pos == self.n:
            self.order = self.rng.permutation(self.n)
            self.pos = 0
        idx = int(self.order[self.pos])
        self.pos += 1
        return idx


def _descend(
    net: Mlp2,
    cfg: TrainConfig,
    cost_and_grad: Callable[[Mlp2, int], tuple[float, np.ndarray]],
    metric_hook=None,
    metric_stride: int = 1,
) -> tuple[Mlp2, TrainTrace]:
    """Run the normalized-gradient loop over a cost/gradient closure.

    The closure receives a 1-based call number so stochastic modes can
    advance their sample streams; full-batch closures ignore it.  Each
    evaluation serves double duty: it records the post-update cost of the
    iteration just finished and supplies the gradient for the next one.
    """
    theta = net.to_vector()
    m = np.zeros_like(theta)
    costs = np.empty(cfg.iterations)
    trace = TrainTrace(costs=costs)
    current = net.with_vector(theta)
    _, grad = cost_and_grad(current, 1)
    for t in range(1, cfg.iterations + 1):
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError("gradient became non-finite", iteration=t)
        m = cfg.smoothing * m + (1.0 - cfg.smoothing) * grad * grad
        theta = theta - cfg.step_size * grad / np.sqrt(m + cfg.epsilon)
        current = current.with_vector(theta)
        cost, grad = cost_and_grad(current, t + 1)
        if not np.isfinite(cost):
            raise NonFiniteError("cost became non-finite", iteration=t)
        costs[t - 1] = cost
        if metric_hook is not None and (t % metric_stride == 0 or t == cfg.iterations):
            trace.metric_iterations.append(t)
            trace.metric_values.append(float(metric_hook(current)))
    return current, trace


def train_two_sample(
    net: Mlp2,
    pair: LossPair,
    data0,
    data1,
    cfg: TrainConfig,
    metric_hook=None,
    metric_stride: int = 1,
) -> tuple[Mlp2, TrainTrace]:
    """Minimize mean phi(u(X0)) + mean psi(u(X1)).

    In stochastic mode one sample from each set is used per iteration, each
    set cycling through independent reshuffled epochs, and the recorded cost
    is the instantaneous pair cost rather than the full-batch value.
    """
    X0 = _as_batch(net, data0, "data0")
    X1 = _as_batch(net, data1, "data1")
    n0, n1 = X0.shape[0], X1.shape[0]

    if cfg.mode == "full_batch":

        def cost_and_grad(current: Mlp2, _t: int):
            u0 = current.forward(X0)
            u1 = current.forward(X1)
            cost = float(np.mean(pair.phi_values(u0)) + np.mean(pair.psi_values(u1)))
            grad = network.weighted_grad_sum(
                current, X0, pair.phi_prime(u0) / n0
            ) + network.weighted_grad_sum(current, X1, pair.psi_prime(u1) / n1)
            return cost, grad

        return _descend(net, cfg, cost_and_grad, metric_hook, metric_stride)

    rng = np.random.default_rng(cfg.seed)
    stream0 = _IndexStream(n0, rng)
    stream1 = _IndexStream(n1, rng)

    def cost_and_grad(current: Mlp2, _t: int):
        i, j = stream0.next(), stream1.next()
        x0 = X0[i : i + 1]
        x1 = X1[j : j + 1]
        u0 = current.forward(x0)
        u1 = current.forward(x1)
        cost = float(pair.phi_values(u0)[0] + pair.psi_values(u1)[0])
        grad = network.weighted_grad_sum(
            current, x0, pair.phi_prime(u0)
        ) + network.weighted_grad_sum(current, x1, pair.psi_prime(u1))
        return cost, grad

    return _descend(net, cfg, cost_and_grad, metric_hook, metric_stride)


def _mi_phi_term(
    net: Mlp2, pair: LossPair, x: np.ndarray, y: np.ndarray, chunk_rows: int
):
    """Cost contribution and gradient of the all-pairs phi term."""
    n = x.shape[0]
    scale = 1.0 / (n * n)
    total_cost = 0.0
    total_grad = np.zeros(net.param_count)
    step = max(1, chunk_rows // n)
    for a in range(0, n, step):
        b = min(n, a + step)
        block_x = np.repeat(x[a:b], n, axis=0)
        block_y = np.tile(y, (b - a, 1))
        block = np.hstack([block_x, block_y])
        u = net.forward(block)
        total_cost += float(np.sum(pair.phi_values(u)))
        total_grad += network.weighted_grad_sum(net, block, pair.phi_prime(u) * scale)
    return total_cost * scale, total_grad


def train_mutual_information(
    net: Mlp2,
    pair: LossPair,
    x,
    y,
    cfg: TrainConfig,
    metric_hook=None,
    metric_stride: int = 1,
    chunk_rows: int = 200_000,
) -> tuple[Mlp2, TrainTrace]:
    """Train u(x, y) toward the pointwise mutual-information transform.

    The phi term averages over all n^2 cross pairings (x_i, y_j), exactly as
    the cost is defined; the psi term averages over the n observed pairs.
    The network input dimension must equal dim(x) + dim(y).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if x.shape[0] != y.shape[0]:
        raise DimensionError("x and y must pair up one-to-one")
    if x.shape[0] == 0:
        raise EmptyDatasetError("no observed pairs")
    if x.shape[1] + y.shape[1] != net.k:
        raise DimensionError(
            f"network expects k={net.k}, got dim(x)+dim(y)="
            f"{x.shape[1] + y.shape[1]}"
        )
    n = x.shape[0]
    diag = np.hstack([x, y])

    if cfg.mode == "full_batch":

        def cost_and_grad(current: Mlp2, _t: int):
            phi_cost, phi_grad = _mi_phi_term(current, pair, x, y, chunk_rows)
            u_diag = current.forward(diag)
            cost = phi_cost + float(np.mean(pair.psi_values(u_diag)))
            grad = phi_grad + network.weighted_grad_sum(
                current, diag, pair.psi_prime(u_diag) / n
            )
            return cost, grad

        return _descend(net, cfg, cost_and_grad, metric_hook, metric_stride)

    rng = np.random.default_rng(cfg.seed)
    stream_i = _IndexStream(n, rng)
    stream_j = _IndexStream(n, rng)
    stream_d = _IndexStream(n, rng)

    def cost_and_grad(current: Mlp2, _t: int):
        i, j, d = stream_i.next(), stream_j.next(), stream_d.next()
        cross = np.hstack([x[i : i + 1], y[j : j + 1]])
        diag_row = diag[d : d + 1]
        u_cross = current.forward(cross)
        u_diag = current.forward(diag_row)
        cost = float(pair.phi_values(u_cross)[0] + pair.psi_values(u_diag)[0])
        grad = network.weighted_grad_sum(
            current, cross, pair.phi_prime(u_cross)
        ) + network.weighted_grad_sum(current, diag_row, pair.psi_prime(u_diag))
        return cost, grad

    return _descend(net, cfg, cost_and_grad, metric_hook, metric_stride)


def train_local(
    net: Mlp2,
    pair: LossPair,
    local_spec,
    data,
    cfg: TrainConfig,
    metric_hook=None,
    metric_stride: int = 1,
) -> tuple[Mlp2, TrainTrace]:
    """Fit a local-statistic ratio using samples from the null density only.

    The per-sample cost is

        phi(u) + psi(u) * (d(x) - div p(x)) - psi'(u) * p(x) . grad_x u(x),

    whose parameter gradient needs psi'' = rho'; the pair must be built for
    the identity transform on the whole real line.
    """
    if pair.omega is None or pair.omega.name != "identity" or pair.omega.domain != REAL:
        raise PairDomainError(
            "local statistics need a pair built for the identity transform on R"
        )
    X = _as_batch(net, data, "data")
    n = X.shape[0]
    d_all = np.asarray(local_spec.d(X), dtype=float)
    div_all = np.asarray(local_spec.p_div(X), dtype=float)
    P_all = local_spec.p_matrix(X)
    if P_all.shape != X.shape:
        raise DimensionError(
            f"direction field returns shape {P_all.shape}, expected {X.shape}"
        )

    def batch_cost_and_grad(current: Mlp2, rows: np.ndarray):
        Xb, Pb = X[rows], P_all[rows]
        db, divb = d_all[rows], div_all[rows]
        count = Xb.shape[0]
        u = current.forward(Xb)
        slope = np.sum(Pb * network.grad_input_batch(current, Xb), axis=1)
        psi_p = pair.psi_prime(u)
        cost = float(
            np.mean(pair.phi_values(u) + pair.psi_values(u) * (db - divb) - psi_p * slope)
        )
        w_main = (
            pair.phi_prime(u)
            + psi_p * (db - divb)
            - pair.psi_second_values(u) * slope
        ) / count
        grad = network.weighted_grad_sum(current, Xb, w_main)
        grad -= network.weighted_mixed_grad_sum(current, Xb, Pb, psi_p / count)
        return cost, grad

    if cfg.mode == "full_batch":
        all_rows = np.arange(n)

        def cost_and_grad(current: Mlp2, _t: int):
            return batch_cost_and_grad(current, all_rows)

        return _descend(net, cfg, cost_and_grad, metric_hook, metric_stride)

    rng = np.random.default_rng(cfg.seed)
    stream = _IndexStream(n, rng)

    def cost_and_grad(current: Mlp2, _t: int):
        return batch_cost_and_grad(current, np.array([stream.next()]))

    return _descend(net, cfg, cost_and_grad, metric_hook, metric_stride)
