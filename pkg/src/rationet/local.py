"""Local statistics of the form r(X) = d(X) + p(X)'grad f0(X) / f0(X).

These arise from a first-order expansion of a parametric family around the
nominal density.  The density gradient is unknown, but integration by parts
turns the training cost into an expectation of known terms only:

    Omega(x) = phi(u) + psi(u) (d(x) - div p(x)) - psi'(u) p(x)'grad_x u(x)

which is what `train_local` minimizes.  This module holds the statistic
descriptions, the two stock constructions (translation and scale), and the
pointwise Omega evaluation used for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import network
from .errors import (
    DimensionError,
    MissingClosedFormError,
    PairDomainError,
)
from .losses import REAL, LossPair
from .network import Mlp2


@dataclass
class LocalSpec:
    """A local statistic d(X) + sum_l p_l(X) d_l f0 / f0 with known pieces.

    d and each p_l map a batch (n, k) to (n,).  p_div must be the exact
    divergence sum_l dp_l/dx_l; it is the caller's obligation that the
    boundary terms f0 p_l psi(u) vanish at infinity (true for the stock
    specs under any density with tails).
    """

    d: Callable[[np.ndarray], np.ndarray]
    p: Sequence[Callable[[np.ndarray], np.ndarray]]
    p_div: Callable[[np.ndarray], np.ndarray]
    k: int
    name: str = "custom"

    def __post_init__(self):
        if len(self.p) != self.k:
            raise DimensionError(
                f"need {self.k} coordinate maps, got {len(self.p)}"
            )

    def p_matrix(self, X) -> np.ndarray:
        """Stack the coordinate maps into an (n, k) array."""
        X = np.asarray(X, dtype=float)
        cols = [np.broadcast_to(np.asarray(p_l(X), dtype=float), (X.shape[0],))
                for p_l in self.p]
        return np.column_stack(cols)


def translation_spec(delta) -> LocalSpec:
    """Shift family Y = X + eps*delta: d = 0, p_l = -delta_l, div p = 0."""
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    k = delta.size
    return LocalSpec(
        d=lambda X: np.zeros(X.shape[0]),
        p=[(lambda X, v=-delta[l]: np.full(X.shape[0], v)) for l in range(k)],
        p_div=lambda X: np.zeros(X.shape[0]),
        k=k,
        name="translation",
    )


def scale_spec(k: int) -> LocalSpec:
    """Scale family Y = (1+eps) X: d = 1, p_l(X) = x_l, div p = k."""
    return LocalSpec(
        d=lambda X: np.ones(X.shape[0]),
        p=[(lambda X, l=l: X[:, l]) for l in range(k)],
        p_div=lambda X: np.full(X.shape[0], float(k)),
        k=k,
        name="scale",
    )


def standard_normal_ratio(spec: LocalSpec, X) -> np.ndarray:
    """Closed-form r(X) when f0 is the standard normal: grad f0/f0 = -X."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, spec.k)
    return spec.d(X) - np.sum(spec.p_matrix(X) * X, axis=1)


def divergence_mismatch(spec: LocalSpec, rng, count: int = 100,
                        step: float = 1e-5) -> float:
    """Max |FD divergence - p_div| / max(1, |p_div|) at random points."""
    X = rng.standard_normal((count, spec.k))
    fd = np.zeros(count)
    for l in range(spec.k):
        hi = X.copy()
        lo = X.copy()
        hi[:, l] += step
        lo[:, l] -= step
        fd += (np.asarray(spec.p[l](hi)) - np.asarray(spec.p[l](lo))) / (2 * step)
    claimed = np.asarray(spec.p_div(X), dtype=float)
    claimed = np.broadcast_to(claimed, (count,))
    return float(np.max(np.abs(fd - claimed) / np.maximum(1.0, np.abs(claimed))))


def _require_real_closed_form(pair: LossPair) -> None:
    if pair.omega is None or pair.omega.degenerate or pair.omega.name != "identity" \
            or pair.omega.domain != REAL or pair.z_interval != REAL:
        raise PairDomainError(
            "the local cost needs a pair built for the raw ratio on the whole line"
        )
    if not pair.has_closed_forms:
        raise MissingClosedFormError(
            f"pair {pair.name!r} lacks closed-form phi and psi"
        )


def omega_cost(spec: LocalSpec, pair: LossPair, net: Mlp2, x) -> float | np.ndarray:
    """Evaluate Omega(x) pointwise; accepts a single point or a batch."""
    _require_real_closed_form(pair)
    X, single = net.prepare_input(x)
    if X.shape[1] != spec.k:
        raise DimensionError(
            f"statistic is {spec.k}-dimensional, input is {X.shape[1]}"
        )
    u = net.forward(X)
    slope = np.sum(spec.p_matrix(X) * network.grad_input_batch(net, X), axis=1)
    vals = (
        pair.phi_values(u)
        + pair.psi_values(u) * (spec.d(X) - spec.p_div(X))
        - pair.psi_prime(u) * slope
    )
    return float(vals[0]) if single else vals


def direct_cost(spec: LocalSpec, pair: LossPair, net: Mlp2, X) -> np.ndarray:
    """phi(u) + r(X) psi(u) with the standard-normal closed-form r(X).

    The sample mean of this must agree with the sample mean of omega_cost
    on standard normal data; the difference of the two arrays on the same
    sample is the sharpest way to test that.
    """
    _require_real_closed_form(pair)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, spec.k)
    u = net.forward(X)
    return pair.phi_values(u) + standard_normal_ratio(spec, X) * pair.psi_values(u)
