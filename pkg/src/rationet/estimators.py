"""Ratio estimators: a scoring function plus the target it was trained for.

The same trained network can represent the ratio itself, its logarithm, the
class posterior, or only the sign of the log-ratio, depending on the loss
pair that produced it.  `RatioEstimator` records that target, converts
scores to log-ratios where possible, and backs the downstream divergence
estimates: the mean log-ratio over f1 samples estimates the KL divergence,
and the mean over observed (x, y) pairs estimates mutual information.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import network
from .errors import (
    DimensionError,
    DomainError,
    EmptyDatasetError,
    FormatError,
    SignError,
    TargetError,
)
from .network import Mlp2

TARGETS = (
    "likelihood_ratio",
    "log_likelihood_ratio",
    "posterior",
    "sign_log_lr",
)

_COMPATIBLE_RANGES = {
    "likelihood_ratio": ("positive", "nonnegative"),
    "log_likelihood_ratio": ("real",),
    "posterior": ("unit",),
    "sign_log_lr": ("symmetric_unit",),
}


def target_for_omega(omega_name: str) -> str:
    """Which estimation target a transform's trained output represents."""
    if omega_name.startswith("sign_limit"):
        return "sign_log_lr"
    try:
        return {
            "identity": "likelihood_ratio",
            "log": "log_likelihood_ratio",
            "posterior": "posterior",
        }[omega_name]
    except KeyError:
        raise TargetError(f"no estimation target for transform {omega_name!r}")


@dataclass
class RatioEstimator:
    """A scoring function tagged with the quantity its output represents."""

    target: str
    net: Mlp2 | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.target not in TARGETS:
            raise TargetError(f"unknown target {self.target!r}; valid: {TARGETS}")
        if (self.net is None) == (self.fn is None):
            raise TargetError("exactly one of net or fn must be supplied")
        if self.net is not None:
            allowed = _COMPATIBLE_RANGES[self.target]
            if self.net.g0.range_label not in allowed:
                raise TargetError(
                    f"output nonlinearity {self.net.g0.spec!r} has range "
                    f"{self.net.g0.range_label!r}, incompatible with target "
                    f"{self.target!r}"
                )

    @classmethod
    def from_network(cls, net: Mlp2, target: str, provenance: dict | None = None):
        return cls(target=target, net=net, provenance=provenance or {})

    @classmethod
    def from_function(cls, fn, target: str, provenance: dict | None = None):
        """Wrap an exact scoring function, e.g. a closed-form log-ratio."""
        return cls(target=target, fn=fn, provenance=provenance or {})

    def score(self, x):
        if self.net is not None:
            return self.net.forward(x)
        out = self.fn(np.asarray(x, dtype=float))
        return out if np.ndim(out) else float(out)

    def log_lr(self, x):
        """Convert the score to a log-likelihood-ratio value."""
        if self.target == "sign_log_lr":
            raise SignError(
                "a sign-only estimator carries no log-ratio magnitude"
            )
        u = self.score(x)
        if self.target == "likelihood_ratio":
            if np.any(np.asarray(u) <= 0.0):
                raise DomainError("ratio estimate must be positive to take logs")
            return np.log(u)
        if self.target == "posterior":
            arr = np.asarray(u, dtype=float)
            if np.any(arr <= 0.0) or np.any(arr >= 1.0):
                raise DomainError("posterior estimate must lie strictly in (0, 1)")
            out = np.log(arr) - np.log1p(-arr)
            return out if np.ndim(u) else float(out)
        return u

    def decide(self, x):
        """Sign decision: +1 for the alternative, -1 for the null."""
        if self.target == "sign_log_lr":
            s = self.score(x)
        else:
            s = self.log_lr(x)
        return np.where(np.asarray(s) >= 0, 1, -1)


def to_log_lr(est: RatioEstimator, x):
    return est.log_lr(x)


def block_log_lr(est: RatioEstimator, block) -> float:
    """Sum of log-ratios over an i.i.d. block of samples."""
    block = np.asarray(block, dtype=float)
    if block.size == 0:
        raise EmptyDatasetError("empty block")
    return float(np.sum(est.log_lr(block)))


def kl_estimate(est: RatioEstimator, data1) -> float:
    """Mean log-ratio over samples from f1 estimates KL(f1 || f0)."""
    if est.target != "log_likelihood_ratio":
        raise TargetError("KL estimation needs a log-likelihood-ratio estimator")
    data1 = np.asarray(data1, dtype=float)
    if data1.size == 0:
        raise EmptyDatasetError("no f1 samples")
    return float(np.mean(est.score(data1)))


def mi_estimate(est: RatioEstimator, x, y) -> float:
    """Mean log-ratio over observed (x, y) pairs estimates mutual information."""
    if est.target != "log_likelihood_ratio":
        raise TargetError("MI estimation needs a log-likelihood-ratio estimator")
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
    return float(np.mean(est.score(np.hstack([x, y]))))


def save_bundle(est: RatioEstimator, path) -> None:
    """Write target, provenance, and the model record as one text file."""
    if est.net is None:
        raise TargetError("only network-backed estimators can be saved")
    header = (
        "ratio-estimator\n"
        f"target {est.target}\n"
        f"provenance {json.dumps(est.provenance, sort_keys=True)}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(network.serialize(est.net))


def load_bundle(path) -> RatioEstimator:
    with open(path, "rb") as fh:
        text = fh.read().decode("ascii", errors="replace")
    lines = text.splitlines()
    try:
        if lines[0].strip() != "ratio-estimator":
            raise FormatError(f"bad bundle header {lines[0]!r}")
        _, _, target = lines[1].partition(" ")
        _, _, prov_json = lines[2].partition(" ")
        provenance = json.loads(prov_json)
    except (IndexError, json.JSONDecodeError) as exc:
        raise FormatError(f"estimator bundle does not parse: {exc}") from exc
    net = network.deserialize("\n".join(lines[3:]))
    return RatioEstimator.from_network(net, target.strip(), provenance)
