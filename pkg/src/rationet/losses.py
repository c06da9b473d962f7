"""Paired loss functions for likelihood-ratio estimation.

A pair of losses (phi, psi) applied to samples from two densities f0, f1
defines the empirical cost

    J(u) = mean_i phi(u(X0_i)) + mean_j psi(u(X1_j)),

whose population minimizer is u*(x) = omega(f1(x)/f0(x)) for a chosen strictly
increasing transform omega.  Any such pair can be generated from a strictly
negative function rho on the transformed interval:

    psi'(z) = rho(z),        phi'(z) = -omega_inverse(z) * rho(z),

which makes phi'(z) + omega_inverse(z) * psi'(z) = 0, the identity that pins
the minimizer.  This module provides the construction (`make_loss`), numeric
verification helpers (`check_unique_minimum`, `check_convexity`), and a
catalog of ready-made pairs (`preset`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainError,
    MissingClosedFormError,
    NegativityError,
    NonUniqueError,
    PairDomainError,
    ParamError,
    UnknownPresetError,
)

Interval = tuple[float, float]

REAL: Interval = (-math.inf, math.inf)
POSITIVE: Interval = (0.0, math.inf)
UNIT: Interval = (0.0, 1.0)

# Infinite interval endpoints are truncated here before any grid is built.
GRID_CLIP = 50.0
# Grids stay this fraction of the interval width away from each endpoint, so
# integrable endpoint singularities (log, powers) never get evaluated at the
# boundary itself.
GRID_INSET = 1e-6


def truncate_interval(interval: Interval) -> Interval:
    lo, hi = interval
    return max(lo, -GRID_CLIP), min(hi, GRID_CLIP)


def verification_grid(interval: Interval, size: int = 1000) -> np.ndarray:
    """Evaluation grid strictly inside a (possibly infinite) interval."""
    lo, hi = truncate_interval(interval)
    width = hi - lo
    return np.linspace(lo + GRID_INSET * width, hi - GRID_INSET * width, size)


@dataclass
class OmegaTransform:
    """Strictly increasing map omega from ratio values onto a loss interval.

    `degenerate` marks limiting transforms (the sign-like limits of the
    linear and hinge pairs) whose forward map is a step function; those skip
    the monotonicity and round-trip checks that apply to smooth transforms.
    """

    name: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    domain: Interval
    range_: Interval
    inverse_deriv: Callable[[np.ndarray], np.ndarray] | None = None
    degenerate: bool = False

    def __call__(self, r):
        return self.forward(r)


def identity_transform(domain: Interval = REAL) -> OmegaTransform:
    return OmegaTransform(
        name="identity",
        forward=lambda r: np.asarray(r, dtype=float),
        inverse=lambda z: np.asarray(z, dtype=float),
        domain=domain,
        range_=domain,
        inverse_deriv=lambda z: np.ones_like(np.asarray(z, dtype=float)),
    )


def log_transform() -> OmegaTransform:
    return OmegaTransform(
        name="log",
        forward=np.log,
        inverse=np.exp,
        domain=POSITIVE,
        range_=REAL,
        inverse_deriv=np.exp,
    )


def posterior_transform() -> OmegaTransform:
    """omega(r) = r / (1 + r): the class-posterior parameterization."""
    return OmegaTransform(
        name="posterior",
        forward=lambda r: r / (1.0 + r),
        inverse=lambda z: z / (1.0 - z),
        domain=POSITIVE,
        range_=UNIT,
        inverse_deriv=lambda z: 1.0 / (1.0 - z) ** 2,
    )


def _sign_limit_transform(range_: Interval, inverse, name: str) -> OmegaTransform:
    # Limit of (r^c - 1)/(r^c + 1) style families: forward collapses to the
    # sign of log r, so it is not invertible; `inverse` carries the limiting
    # values needed by the construction identity on the stated range.
    return OmegaTransform(
        name=name,
        forward=lambda r: np.sign(np.asarray(r, dtype=float) - 1.0),
        inverse=inverse,
        domain=POSITIVE,
        range_=range_,
        degenerate=True,
    )


@dataclass
class GeneratorRho:
    """Strictly negative generator rho with an optional analytic derivative."""

    fn: Callable[[np.ndarray], np.ndarray]
    rho_prime: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, z):
        return self.fn(z)


@dataclass
class LossPair:
    """A generated (phi, psi) pair, stored through its derivatives.

    Closed-form values `phi` / `psi` are attached when the catalog knows
    them; otherwise `phi_values` / `psi_values` integrate the derivatives
    numerically (composite Simpson from the midpoint of the truncated
    interval, so numeric values are offset by a constant that does not
    affect minimizers or gradients).
    """

    name: str
    phi_prime: Callable[[np.ndarray], np.ndarray]
    psi_prime: Callable[[np.ndarray], np.ndarray]
    z_interval: Interval
    phi: Callable[[np.ndarray], np.ndarray] | None = None
    psi: Callable[[np.ndarray], np.ndarray] | None = None
    psi_second: Callable[[np.ndarray], np.ndarray] | None = None
    omega: OmegaTransform | None = None
    convex_certified: bool = False
    check_interval: Interval | None = None

    def __post_init__(self):
        if self.check_interval is None:
            self.check_interval = self.z_interval

    @property
    def has_closed_forms(self) -> bool:
        return self.phi is not None and self.psi is not None

    def phi_values(self, z) -> np.ndarray:
        if self.phi is not None:
            return np.asarray(self.phi(z), dtype=float)
        return _simpson_antiderivative(self.phi_prime, self._midpoint(), z)

    def psi_values(self, z) -> np.ndarray:
        if self.psi is not None:
            return np.asarray(self.psi(z), dtype=float)
        return _simpson_antiderivative(self.psi_prime, self._midpoint(), z)

    def psi_second_values(self, z) -> np.ndarray:
        """psi''(z) = rho'(z); central differences when not supplied."""
        if self.psi_second is not None:
            return np.asarray(self.psi_second(z), dtype=float)
        z = np.asarray(z, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(z))
        return (self.psi_prime(z + h) - self.psi_prime(z - h)) / (2.0 * h)

    def _midpoint(self) -> float:
        lo, hi = truncate_interval(self.z_interval)
        return 0.5 * (lo + hi)


def _simpson_antiderivative(f, lower: float, z, step: float = 0.02) -> np.ndarray:
    """Integral of f from `lower` to each entry of z by composite Simpson."""
    z = np.asarray(z, dtype=float)
    flat = np.atleast_1d(z).astype(float)
    span = float(np.max(np.abs(flat - lower), initial=0.0))
    panels = int(min(4000, max(8, math.ceil(span / step))))
    t = np.linspace(0.0, 1.0, 2 * panels + 1)
    weights = np.ones(2 * panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights /= 3.0 * 2 * panels
    nodes = lower + (flat - lower)[:, None] * t[None, :]
    vals = (flat - lower) * (f(nodes) @ weights)
    return vals.reshape(z.shape) if z.shape else float(vals[0])


def _verify_generator(rho, interval: Interval, grid_size: int = 1000) -> None:
    """Strict-negativity and finiteness checks for a generator on its grid."""
    grid = verification_grid(interval, grid_size)
    values = np.asarray(rho(grid), dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError(
            "generator produced non-finite values inside the loss interval; "
            "it does not cover the transform's range"
        )
    bad = values >= 0.0
    if np.any(bad):
        raise NegativityError(
            "generator must be strictly negative on the loss interval "
            "(nonnegative on %.1f%% of the verification grid)"
            % (100.0 * np.mean(bad))
        )


def make_loss(rho, omega: OmegaTransform, name: str = "custom") -> LossPair:
    """Build a loss pair from a strictly negative generator.

    psi'(z) = rho(z) and phi'(z) = -omega_inverse(z) * rho(z), so the
    per-point objective phi(z) + r*psi(z) has derivative
    (r - omega_inverse(z)) * rho(z): negative left of omega(r), positive
    right of it, giving the unique minimizer z = omega(r).
    """
    generator = rho if isinstance(rho, GeneratorRho) else GeneratorRho(rho)
    _verify_generator(generator, omega.range_)

    def phi_prime(z, _g=generator, _inv=omega.inverse):
        z = np.asarray(z, dtype=float)
        return -_inv(z) * _g(z)

    return LossPair(
        name=name,
        phi_prime=phi_prime,
        psi_prime=generator.fn,
        z_interval=omega.range_,
        psi_second=generator.rho_prime,
        omega=omega,
        convex_certified=False,
    )


@dataclass
class MinimumCheck:
    minimizer_estimate: float
    is_unique: bool


def check_unique_minimum(pair: LossPair, r: float, grid_size: int = 10_000) -> MinimumCheck:
    """Locate the minimizer of phi(z) + r*psi(z) over a grid of the interval.

    Counts sign changes of the derivative phi' + r*psi'; more than one means
    the generator construction was violated and raises NonUniqueError.  A
    derivative with no sign change has its minimum at an interval endpoint
    (the limiting linear pair behaves this way).
    """
    if grid_size < 1000:
        raise ParamError("grid_size must be at least 1000")
    grid = verification_grid(pair.z_interval, grid_size)
    deriv = pair.phi_prime(grid) + r * pair.psi_prime(grid)
    signs = np.sign(deriv)
    nonzero = signs[signs != 0]
    changes = int(np.sum(nonzero[:-1] * nonzero[1:] < 0))
    if changes > 1:
        raise NonUniqueError(
            f"derivative of the per-point objective changes sign {changes} times"
        )

    if pair.has_closed_forms:
        values = pair.phi(grid) + r * pair.psi(grid)
        minimizer = float(grid[int(np.argmin(values))])
    elif changes == 1:
        i = int(np.nonzero(nonzero[:-1] * nonzero[1:] < 0)[0][0])
        # Map the change index back to grid positions of the nonzero entries.
        idx = np.nonzero(signs != 0)[0]
        a, b = idx[i], idx[i + 1]
        da, db = deriv[a], deriv[b]
        minimizer = float(grid[a] - da * (grid[b] - grid[a]) / (db - da))
    else:
        minimizer = float(grid[0] if np.all(deriv >= 0) else grid[-1])
    return MinimumCheck(minimizer_estimate=minimizer, is_unique=changes <= 1)


def check_convexity(pair: LossPair, grid_size: int = 1000) -> bool:
    """Certify convexity of phi and psi for a pair on ratios r > 0.

    Checks the second derivatives psi'' = rho' and
    phi'' = -(omega_inverse * rho' + omega_inverse' * rho) for nonnegativity
    on the verification grid.  The tolerance admits the boundary cases where
    one of them is identically zero (mean-square, the exponential-family
    endpoints) but rejects any systematic sign violation.
    """
    omega = pair.omega
    if omega is None or omega.degenerate or omega.domain != POSITIVE:
        raise PairDomainError(
            "convexity conditions are stated for smooth transforms of ratios on (0, inf)"
        )
    grid = verification_grid(pair.z_interval, grid_size)
    rho = np.asarray(pair.psi_prime(grid), dtype=float)
    analytic = pair.psi_second is not None
    rho_p = pair.psi_second_values(grid)
    inv = np.asarray(omega.inverse(grid), dtype=float)
    if omega.inverse_deriv is not None:
        inv_d = np.asarray(omega.inverse_deriv(grid), dtype=float)
    else:
        h = 1e-6 * np.maximum(1.0, np.abs(grid))
        inv_d = (omega.inverse(grid + h) - omega.inverse(grid - h)) / (2.0 * h)
    tol = 1e-12 if analytic and omega.inverse_deriv is not None else 1e-7
    psi_dd = rho_p
    phi_dd = -(inv * rho_p + inv_d * rho)
    return bool(np.all(psi_dd >= -tol) and np.all(phi_dd >= -tol))


def identity_residual(pair: LossPair, grid_size: int = 1000) -> float:
    """Max magnitude-normalized residual of phi' + omega_inverse * psi'."""
    if pair.omega is None:
        raise PairDomainError("pair carries no transform to check against")
    grid = verification_grid(pair.check_interval, grid_size)
    a = np.asarray(pair.phi_prime(grid), dtype=float)
    b = np.asarray(pair.omega.inverse(grid), dtype=float) * np.asarray(
        pair.psi_prime(grid), dtype=float
    )
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a + b) / scale))


@dataclass
class PresetLoss:
    """A cataloged pair together with its transform and output hint.

    `output_hint` names the network output nonlinearity whose range matches
    the pair's interval (see `network.output_from_name`).
    """

    name: str
    pair: LossPair
    omega: OmegaTransform
    output_hint: str


def _certify(pair: LossPair) -> LossPair:
    omega = pair.omega
    if omega is not None and not omega.degenerate and omega.domain == POSITIVE:
        pair.convex_certified = check_convexity(pair)
    return pair


def _a1_real(alpha: float) -> PresetLoss:
    if alpha <= -1:
        raise ParamError(
            "power pairs on the whole real line need alpha > -1; the objective "
            "is unbounded near zero otherwise"
        )
    omega = identity_transform(REAL)
    if alpha == 0:
        pair = LossPair(
            name="A1(alpha=0, real)",
            phi_prime=lambda z: np.asarray(z, dtype=float),
            psi_prime=lambda z: -np.ones_like(np.asarray(z, dtype=float)),
            z_interval=REAL,
            phi=lambda z: 0.5 * np.asarray(z, dtype=float) ** 2,
            psi=lambda z: -np.asarray(z, dtype=float),
            psi_second=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            omega=omega,
        )
    else:
        def _rho(z, a=alpha):
            return -np.abs(z) ** a

        def _rho_prime(z, a=alpha):
            z = np.asarray(z, dtype=float)
            return -a * np.abs(z) ** (a - 1) * np.sign(z)

        pair = LossPair(
            name=f"A1(alpha={alpha:g}, real)",
            phi_prime=lambda z, a=alpha: np.asarray(z, dtype=float) * np.abs(z) ** a,
            psi_prime=_rho,
            z_interval=REAL,
            phi=lambda z, a=alpha: np.abs(z) ** (2 + a) / (2 + a),
            psi=lambda z, a=alpha: -np.asarray(z, dtype=float) * np.abs(z) ** a / (1 + a),
            psi_second=_rho_prime,
            omega=omega,
        )
    return PresetLoss(pair.name, pair, omega, "identity")


def _a1_positive(alpha: float) -> PresetLoss:
    omega = identity_transform(POSITIVE)
    if alpha == -1:
        pair = LossPair(
            name="A1(alpha=-1)",
            phi_prime=lambda z: np.ones_like(np.asarray(z, dtype=float)),
            psi_prime=lambda z: -1.0 / np.asarray(z, dtype=float),
            z_interval=POSITIVE,
            phi=lambda z: np.asarray(z, dtype=float),
            psi=lambda z: -np.log(z),
            psi_second=lambda z: 1.0 / np.asarray(z, dtype=float) ** 2,
            omega=omega,
        )
    elif alpha == -2:
        pair = LossPair(
            name="A1(alpha=-2)",
            phi_prime=lambda z: 1.0 / np.asarray(z, dtype=float),
            psi_prime=lambda z: -1.0 / np.asarray(z, dtype=float) ** 2,
            z_interval=POSITIVE,
            phi=np.log,
            psi=lambda z: 1.0 / np.asarray(z, dtype=float),
            psi_second=lambda z: 2.0 / np.asarray(z, dtype=float) ** 3,
            omega=omega,
        )
    else:
        pair = _a1_generic(alpha, omega)
    return PresetLoss(pair.name, _certify(pair), omega, "elu")


def _a1_generic(alpha: float, omega: OmegaTransform) -> LossPair:
    """Power-generator pair on z > 0 for alpha outside {-1, -2}."""
    if alpha in (-1.0, -2.0):
        raise ParamError(
            "alpha in {-1, -2} needs the special-cased logarithmic forms"
        )
    return LossPair(
        name=f"A1(alpha={alpha:g})",
        phi_prime=lambda z, a=alpha: np.asarray(z, dtype=float) ** (1 + a),
        psi_prime=lambda z, a=alpha: -np.asarray(z, dtype=float) ** a,
        z_interval=POSITIVE,
        phi=lambda z, a=alpha: np.asarray(z, dtype=float) ** (2 + a) / (2 + a),
        psi=lambda z, a=alpha: -np.asarray(z, dtype=float) ** (1 + a) / (1 + a),
        psi_second=lambda z, a=alpha: -a * np.asarray(z, dtype=float) ** (a - 1),
        omega=omega,
    )


def _a2(domain_kind: str) -> PresetLoss:
    interval = REAL if domain_kind == "real" else POSITIVE
    omega = identity_transform(interval)

    def _rho(z):
        z = np.asarray(z, dtype=float)
        out = np.where(np.abs(z) < 1e-12, 1.0, np.arctan(z) / np.where(z == 0, 1.0, z))
        return -out

    def _rho_prime(z):
        z = np.asarray(z, dtype=float)
        safe = np.where(z == 0, 1.0, z)
        val = (np.arctan(z) - z / (1 + z * z)) / safe**2
        return np.where(np.abs(z) < 1e-8, 2.0 * z / 3.0, val)

    suffix = ", real" if domain_kind == "real" else ""
    pair = LossPair(
        name=f"A2{suffix}",
        phi_prime=lambda z: np.arctan(z),
        psi_prime=_rho,
        z_interval=interval,
        psi_second=_rho_prime,
        omega=omega,
    )
    if domain_kind != "real":
        _certify(pair)
    hint = "identity" if domain_kind == "real" else "elu"
    return PresetLoss(pair.name, pair, omega, hint)


def _a3() -> PresetLoss:
    omega = identity_transform(POSITIVE)
    pair = LossPair(
        name="A3",
        phi_prime=lambda z: 1.0 / (1.0 + np.asarray(z, dtype=float)),
        psi_prime=lambda z: -1.0 / ((1.0 + z) * np.asarray(z, dtype=float)),
        z_interval=POSITIVE,
        phi=np.log1p,
        psi=lambda z: np.log1p(1.0 / np.asarray(z, dtype=float)),
        psi_second=lambda z: (1.0 + 2.0 * z) / (np.asarray(z, dtype=float) * (1.0 + z)) ** 2,
        omega=omega,
    )
    return PresetLoss(pair.name, _certify(pair), omega, "elu")


def _b1(alpha: float) -> PresetLoss:
    omega = log_transform()
    if alpha == 0:
        pair = LossPair(
            name="B1(alpha=0)",
            phi_prime=np.exp,
            psi_prime=lambda z: -np.ones_like(np.asarray(z, dtype=float)),
            z_interval=REAL,
            phi=np.exp,
            psi=lambda z: -np.asarray(z, dtype=float),
            psi_second=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            omega=omega,
        )
    elif alpha == 1:
        pair = LossPair(
            name="B1(alpha=1)",
            phi_prime=lambda z: np.ones_like(np.asarray(z, dtype=float)),
            psi_prime=lambda z: -np.exp(-np.asarray(z, dtype=float)),
            z_interval=REAL,
            phi=lambda z: np.asarray(z, dtype=float),
            psi=lambda z: np.exp(-np.asarray(z, dtype=float)),
            psi_second=lambda z: np.exp(-np.asarray(z, dtype=float)),
            omega=omega,
        )
    else:
        pair = LossPair(
            name=f"B1(alpha={alpha:g})",
            phi_prime=lambda z, a=alpha: np.exp((1 - a) * np.asarray(z, dtype=float)),
            psi_prime=lambda z, a=alpha: -np.exp(-a * np.asarray(z, dtype=float)),
            z_interval=REAL,
            phi=lambda z, a=alpha: np.expm1((1 - a) * np.asarray(z, dtype=float)) / (1 - a),
            psi=lambda z, a=alpha: np.expm1(-a * np.asarray(z, dtype=float)) / a,
            psi_second=lambda z, a=alpha: a * np.exp(-a * np.asarray(z, dtype=float)),
            omega=omega,
        )
    return PresetLoss(pair.name, _certify(pair), omega, "identity")


def _b2() -> PresetLoss:
    omega = log_transform()

    def _sigmoid(z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))

    pair = LossPair(
        name="B2",
        phi_prime=_sigmoid,
        psi_prime=lambda z: -_sigmoid(-np.asarray(z, dtype=float)),
        z_interval=REAL,
        phi=lambda z: np.logaddexp(0.0, z),
        psi=lambda z: np.logaddexp(0.0, -np.asarray(z, dtype=float)),
        psi_second=lambda z: _sigmoid(z) * _sigmoid(-np.asarray(z, dtype=float)),
        omega=omega,
    )
    return PresetLoss(pair.name, _certify(pair), omega, "identity")


def _b3() -> PresetLoss:
    omega = log_transform()

    def _rho(z):
        z = np.asarray(z, dtype=float)
        small = np.abs(z) < 1e-6
        safe = np.where(small, 1.0, z)
        return np.where(small, -1.0 + z / 2.0 - z * z / 6.0, np.expm1(-z) / safe)

    def _rho_prime(z):
        z = np.asarray(z, dtype=float)
        small = np.abs(z) < 1e-5
        safe = np.where(small, 1.0, z)
        exact = (1.0 - np.exp(-z) * (1.0 + z)) / safe**2
        return np.where(small, 0.5 - z / 3.0, exact)

    def _phi_prime(z):
        z = np.asarray(z, dtype=float)
        small = np.abs(z) < 1e-6
        safe = np.where(small, 1.0, z)
        return np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(z) / safe)

    pair = LossPair(
        name="B3",
        phi_prime=_phi_prime,
        psi_prime=_rho,
        z_interval=REAL,
        psi_second=_rho_prime,
        omega=omega,
    )
    return PresetLoss(pair.name, _certify(pair), omega, "identity")


def _c1() -> PresetLoss:
    omega = posterior_transform()
    pair = LossPair(
        name="C1",
        phi_prime=lambda z: 1.0 / (1.0 - np.asarray(z, dtype=float)),
        psi_prime=lambda z: -1.0 / np.asarray(z, dtype=float),
        z_interval=UNIT,
        phi=lambda z: -np.log1p(-np.asarray(z, dtype=float)),
        psi=lambda z: -np.log(z),
        psi_second=lambda z: 1.0 / np.asarray(z, dtype=float) ** 2,
        omega=omega,
    )
    return PresetLoss(pair.name, _certify(pair), omega, "sigmoid")


def _c2(alpha: float) -> PresetLoss:
    omega = posterior_transform()
    if alpha == 0:
        pair = LossPair(
            name="C2(alpha=0)",
            phi_prime=lambda z: z / (1.0 - np.asarray(z, dtype=float)),
            psi_prime=lambda z: -np.ones_like(np.asarray(z, dtype=float)),
            z_interval=UNIT,
            phi=lambda z: -np.asarray(z, dtype=float) - np.log1p(-np.asarray(z, dtype=float)),
            psi=lambda z: -np.asarray(z, dtype=float),
            psi_second=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            omega=omega,
        )
    elif alpha == -1:
        pair = LossPair(
            name="C2(alpha=-1)",
            phi_prime=lambda z: z / (1.0 - np.asarray(z, dtype=float)) ** 2,
            psi_prime=lambda z: -1.0 / (1.0 - np.asarray(z, dtype=float)),
            z_interval=UNIT,
            phi=lambda z: np.log1p(-np.asarray(z, dtype=float)) + 1.0 / (1.0 - z),
            psi=lambda z: np.log1p(-np.asarray(z, dtype=float)),
            psi_second=lambda z: -1.0 / (1.0 - np.asarray(z, dtype=float)) ** 2,
            omega=omega,
        )
    else:
        pair = LossPair(
            name=f"C2(alpha={alpha:g})",
            phi_prime=lambda z, a=alpha: z * (1.0 - np.asarray(z, dtype=float)) ** (a - 1),
            psi_prime=lambda z, a=alpha: -((1.0 - np.asarray(z, dtype=float)) ** a),
            z_interval=UNIT,
            phi=lambda z, a=alpha: -(a * np.asarray(z, dtype=float) + 1.0)
            * (1.0 - z) ** a
            / (a * (1.0 + a)),
            psi=lambda z, a=alpha: (1.0 - np.asarray(z, dtype=float)) ** (1 + a) / (1 + a),
            psi_second=lambda z, a=alpha: a * (1.0 - np.asarray(z, dtype=float)) ** (a - 1),
            omega=omega,
        )
    return PresetLoss(pair.name, _certify(pair), omega, "sigmoid")


def _d1_linear(s: float) -> PresetLoss:
    omega = _sign_limit_transform(
        (-1.0, 1.0),
        inverse=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        name="sign_limit",
    )
    pair = LossPair(
        name="D1_linear",
        phi_prime=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        psi_prime=lambda z: -np.ones_like(np.asarray(z, dtype=float)),
        z_interval=(-1.0, 1.0),
        phi=lambda z: np.asarray(z, dtype=float),
        psi=lambda z: -np.asarray(z, dtype=float),
        psi_second=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        omega=omega,
    )
    return PresetLoss(pair.name, pair, omega, f"bounded_rational:{s:g}")


def _d3_hinge() -> PresetLoss:
    def _inverse(z):
        z = np.asarray(z, dtype=float)
        return np.where(z < -1.0, 0.0, np.where(z <= 1.0, 1.0, np.inf))

    omega = _sign_limit_transform(REAL, inverse=_inverse, name="sign_limit_real")
    pair = LossPair(
        name="D3_hinge",
        phi_prime=lambda z: (np.asarray(z, dtype=float) > -1.0).astype(float),
        psi_prime=lambda z: -(np.asarray(z, dtype=float) < 1.0).astype(float),
        z_interval=REAL,
        phi=lambda z: np.maximum(1.0 + np.asarray(z, dtype=float), 0.0),
        psi=lambda z: np.maximum(1.0 - np.asarray(z, dtype=float), 0.0),
        psi_second=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        omega=omega,
        # The limiting transform degenerates outside (-1, 1): the generator
        # vanishes there and the construction identity only holds inside.
        check_interval=(-1.0, 1.0),
    )
    return PresetLoss(pair.name, pair, omega, "identity")


def _exp_pair() -> PresetLoss:
    """The exponential pair phi = e^{z/2}, psi = e^{-z/2} used in experiments."""
    omega = log_transform()
    pair = LossPair(
        name="exp",
        phi_prime=lambda z: 0.5 * np.exp(0.5 * np.asarray(z, dtype=float)),
        psi_prime=lambda z: -0.5 * np.exp(-0.5 * np.asarray(z, dtype=float)),
        z_interval=REAL,
        phi=lambda z: np.exp(0.5 * np.asarray(z, dtype=float)),
        psi=lambda z: np.exp(-0.5 * np.asarray(z, dtype=float)),
        psi_second=lambda z: 0.25 * np.exp(-0.5 * np.asarray(z, dtype=float)),
        omega=omega,
    )
    return PresetLoss(pair.name, _certify(pair), omega, "identity")


_PRESET_NAMES = (
    "A1",
    "A2",
    "A3",
    "B1",
    "B2",
    "B3",
    "C1",
    "C2",
    "D1_linear",
    "D3_hinge",
    "exp",
)


def preset_names() -> tuple[str, ...]:
    return _PRESET_NAMES


def preset(
    name: str,
    alpha: float | None = None,
    c: float | None = None,
    s: float | None = None,
    domain: str | None = None,
) -> PresetLoss:
    """Return a cataloged loss pair by name.

    `alpha` parameterizes the A1, B1, and C2 families; `c` overrides the
    default constant of a recommended elu output; `s` the exponent of a
    recommended bounded-rational output.  `domain` selects "positive"
    (default) or "real" ratio support for the A1/A2 families.
    """
    key = name.strip().lower()
    kind = domain or "positive"
    if kind not in ("positive", "real"):
        raise ParamError(f"unknown domain {domain!r}; use 'positive' or 'real'")

    if key == "a1":
        a = 0.0 if alpha is None else float(alpha)
        built = _a1_real(a) if kind == "real" else _a1_positive(a)
    elif key == "a2":
        built = _a2(kind)
    elif key == "a3":
        built = _a3()
    elif key == "b1":
        built = _b1(0.5 if alpha is None else float(alpha))
    elif key == "b2":
        built = _b2()
    elif key == "b3":
        built = _b3()
    elif key == "c1":
        built = _c1()
    elif key == "c2":
        built = _c2(1.0 if alpha is None else float(alpha))
    elif key == "d1_linear":
        built = _d1_linear(2.0 if s is None else float(s))
    elif key == "d3_hinge":
        built = _d3_hinge()
    elif key == "exp":
        built = _exp_pair()
    else:
        raise UnknownPresetError(
            f"unknown preset {name!r}; valid names: {', '.join(_PRESET_NAMES)}"
        )

    if c is not None and built.output_hint.startswith("elu"):
        built = PresetLoss(built.name, built.pair, built.omega, f"elu:{float(c):g}")
    _verify_generator(built.pair.psi_prime, built.pair.check_interval)
    return built


def default_catalog() -> list[PresetLoss]:
    """Representative instantiations of every preset family, for verification."""
    entries = [
        preset("A1", alpha=0.0),
        preset("A1", alpha=-0.5),
        preset("A1", alpha=-1.0),
        preset("A1", alpha=-2.0),
        preset("A1", alpha=0.0, domain="real"),
        preset("A1", alpha=0.5, domain="real"),
        preset("A2"),
        preset("A2", domain="real"),
        preset("A3"),
        preset("B1", alpha=0.5),
        preset("B1", alpha=0.0),
        preset("B1", alpha=1.0),
        preset("B2"),
        preset("B3"),
        preset("C1"),
        preset("C2", alpha=1.0),
        preset("C2", alpha=0.0),
        preset("C2", alpha=-1.0),
        preset("D1_linear"),
        preset("D3_hinge"),
        preset("exp"),
    ]
    return entries


def draw_ratio_values(omega: OmegaTransform, count: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ratio values r from the transform's domain for verification."""
    lo, hi = omega.domain
    if (lo, hi) == POSITIVE:
        return np.exp(rng.uniform(-3.0, 3.0, size=count))
    if (lo, hi) == REAL:
        return rng.uniform(-5.0, 5.0, size=count)
    return rng.uniform(lo + 1e-3, hi - 1e-3, size=count)


def verify_catalog(entries: list[PresetLoss] | None = None,
                   ratio_draws: int = 50, seed: int = 0,
                   residual_bound: float = 1e-9):
    """Run the design checks over a catalog; returns (name, ok, message) rows.

    Per entry: the generator is re-verified on its check interval, the
    derivative identity residual must stay below the bound, and for every
    sampled ratio the grid minimizer of phi + r psi must sit within two
    grid steps of the transform value (skipped for the degenerate sign
    limits, which place their minimum at the interval boundary).
    """
    rows = []
    for index, built in enumerate(entries if entries is not None
                                  else default_catalog()):
        pair, omega = built.pair, built.omega
        rng = np.random.default_rng([seed, index])
        try:
            _verify_generator(pair.psi_prime, pair.check_interval)
            residual = identity_residual(pair)
            if not residual < residual_bound:
                raise DomainError(
                    f"identity residual {residual:.3g} exceeds {residual_bound:g}"
                )
            if not omega.degenerate:
                lo, hi = truncate_interval(pair.z_interval)
                step = (hi - lo) / (10_000 - 1)
                for r in draw_ratio_values(omega, ratio_draws, rng):
                    result = check_unique_minimum(pair, float(r))
                    if not result.is_unique:
                        raise NonUniqueError(
                            f"multiple descent regions at r={r:.6g}"
                        )
                    target = omega(float(r))
                    if abs(result.minimizer_estimate - target) > 2 * step + 1e-12:
                        raise DomainError(
                            f"minimizer {result.minimizer_estimate:.6g} is off "
                            f"omega({r:.6g})={target:.6g} by more than 2 grid steps"
                        )
            rows.append((built.name, True, "ok"))
        except Exception as exc:
            rows.append((built.name, False, f"{type(exc).__name__}: {exc}"))
    return rows
