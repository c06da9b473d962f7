"""Tests for the loss-pair catalog and the generator construction."""

import math

import numpy as np
import pytest

from rationet.errors import (
    NegativityError,
    NonUniqueError,
    ParamError,
    PairDomainError,
    UnknownPresetError,
)
from rationet.losses import (
    POSITIVE,
    REAL,
    check_convexity,
    check_unique_minimum,
    default_catalog,
    draw_ratio_values,
    identity_residual,
    identity_transform,
    log_transform,
    make_loss,
    posterior_transform,
    preset,
    preset_names,
    truncate_interval,
    verify_catalog,
)


def grid_step(pair, grid_size=10_000):
    lo, hi = truncate_interval(pair.z_interval)
    return (hi - lo) / (grid_size - 1)


def test_catalog_verifies_clean():
    """Every cataloged pair passes the generator, identity, and minimizer checks."""
    rows = verify_catalog()
    failures = [(name, msg) for name, ok, msg in rows if not ok]
    assert not failures, f"catalog verification failed: {failures}"
    assert len(rows) == 21


def test_identity_residual_small_on_catalog():
    for built in default_catalog():
        res = identity_residual(built.pair)
        assert res < 1e-9, f"{built.name}: residual {res}"


def test_minimizer_matches_transform_random_ratios():
    """Grid minimizer of phi + r*psi sits at omega(r) for random ratios."""
    rng = np.random.default_rng(7)
    for built in default_catalog():
        if built.omega.degenerate:
            continue
        step = grid_step(built.pair)
        for r in draw_ratio_values(built.omega, 10, rng):
            found = check_unique_minimum(built.pair, float(r))
            assert found.is_unique
            target = float(built.omega(float(r)))
            assert abs(found.minimizer_estimate - target) <= 2 * step + 1e-12


def test_mean_square_pair_hand_values():
    # rho = -1 with the identity transform gives phi = z^2/2, psi = -z,
    # so the per-point objective is z^2/2 - r z with minimum at z = r.
    pair = make_loss(lambda z: -np.ones_like(np.asarray(z, dtype=float)),
                     identity_transform(REAL), name="ms")
    found = check_unique_minimum(pair, 3.0)
    assert abs(found.minimizer_estimate - 3.0) <= 2 * grid_step(pair)
    z = np.array([-1.0, 0.5, 2.0])
    assert np.allclose(pair.phi_prime(z), z)
    assert np.allclose(pair.psi_prime(z), -1.0)


def test_cross_entropy_minimizer_is_half_at_even_odds():
    built = preset("C1")
    found = check_unique_minimum(built.pair, 1.0)
    assert abs(found.minimizer_estimate - 0.5) <= 2 * grid_step(built.pair)


def test_exponential_pair_minimizer_is_log_ratio():
    built = preset("exp")
    found = check_unique_minimum(built.pair, 4.0)
    assert abs(found.minimizer_estimate - math.log(4.0)) <= 2 * grid_step(built.pair)


def test_exponential_pair_closed_forms():
    """phi = e^{z/2} and psi = e^{-z/2} satisfy the construction identity."""
    built = preset("exp")
    z = np.linspace(-3.0, 3.0, 17)
    assert np.allclose(built.pair.phi_values(z), np.exp(0.5 * z))
    assert np.allclose(built.pair.psi_values(z), np.exp(-0.5 * z))
    # phi' + e^z psi' = 0
    resid = built.pair.phi_prime(z) + np.exp(z) * built.pair.psi_prime(z)
    assert np.max(np.abs(resid)) < 1e-12


def test_generator_scaling_leaves_minimizer_alone():
    """Scaling rho by a positive constant rescales the losses, not the argmin."""
    omega = log_transform()
    base = make_loss(lambda z: -np.exp(-0.5 * np.asarray(z, dtype=float)), omega)
    scaled = make_loss(lambda z: -5.0 * np.exp(-0.5 * np.asarray(z, dtype=float)), omega)
    for r in (0.2, 1.0, 6.0):
        a = check_unique_minimum(base, r).minimizer_estimate
        b = check_unique_minimum(scaled, r).minimizer_estimate
        assert abs(a - b) <= 2 * grid_step(base)


def test_positive_generator_rejected():
    with pytest.raises(NegativityError):
        make_loss(lambda z: np.ones_like(np.asarray(z, dtype=float)),
                  identity_transform(REAL))


def test_sign_changing_generator_rejected():
    # rho(z) = -z is positive for z < 0.
    with pytest.raises(NegativityError):
        make_loss(lambda z: -np.asarray(z, dtype=float), identity_transform(REAL))


def test_generator_vanishing_on_region_rejected():
    # min(z, 0) is zero on the whole right half of the interval.
    with pytest.raises(NegativityError):
        make_loss(lambda z: np.minimum(np.asarray(z, dtype=float), 0.0),
                  identity_transform(REAL))


def test_tiny_negative_generator_accepted():
    """Strictly negative values pass no matter how close to zero they sit."""
    pair = make_loss(lambda z: np.full_like(np.asarray(z, dtype=float), -1e-22),
                     identity_transform(REAL))
    assert pair.name == "custom"


def test_steep_exponential_tail_accepted():
    # Regression: -e^{-z} underflows well below any practical tolerance on
    # the right end of the grid but never reaches zero in float64.
    built = preset("B1", alpha=1.0)
    assert built.pair.name == "B1(alpha=1)"


@pytest.mark.parametrize("alpha,expected", [
    (-1.0, True), (-0.5, True), (0.0, True), (1.0, False),
])
def test_a1_convexity_flags(alpha, expected):
    built = preset("A1", alpha=alpha)
    assert built.pair.convex_certified is expected


@pytest.mark.parametrize("alpha,expected", [
    (0.0, True), (0.5, True), (1.0, True), (2.0, False),
])
def test_b1_convexity_flags(alpha, expected):
    built = preset("B1", alpha=alpha)
    assert built.pair.convex_certified is expected


def test_convexity_check_rejects_real_domain_pairs():
    built = preset("A1", alpha=0.0, domain="real")
    with pytest.raises(PairDomainError):
        check_convexity(built.pair)


def test_closed_forms_match_derivatives():
    """Where closed-form phi/psi exist, central differences recover the primes."""
    for built in default_catalog():
        pair = built.pair
        if not pair.has_closed_forms:
            continue
        lo, hi = truncate_interval(pair.z_interval)
        # Even count: keeps z = 0 (the power pairs' cusp) off symmetric grids.
        z = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 40)
        if pair.name == "D3_hinge":
            z = z[np.abs(np.abs(z) - 1.0) > 1e-2]  # keep clear of the kinks
        h = 1e-6 * np.maximum(1.0, np.abs(z))
        fd_phi = (pair.phi_values(z + h) - pair.phi_values(z - h)) / (2 * h)
        fd_psi = (pair.psi_values(z + h) - pair.psi_values(z - h)) / (2 * h)
        scale_phi = np.maximum(1.0, np.abs(pair.phi_prime(z)))
        scale_psi = np.maximum(1.0, np.abs(pair.psi_prime(z)))
        assert np.max(np.abs(fd_phi - pair.phi_prime(z)) / scale_phi) < 1e-5, pair.name
        assert np.max(np.abs(fd_psi - pair.psi_prime(z)) / scale_psi) < 1e-5, pair.name


def test_numeric_antiderivative_fallback():
    """Pairs without closed forms integrate their derivatives consistently."""
    built = preset("A2")
    pair = built.pair
    z = np.linspace(0.5, 4.0, 9)
    h = 1e-5
    fd = (pair.psi_values(z + h) - pair.psi_values(z - h)) / (2 * h)
    assert np.max(np.abs(fd - pair.psi_prime(z))) < 1e-6


def test_psi_second_matches_difference_quotient():
    for built in default_catalog():
        pair = built.pair
        if pair.psi_second is None:
            continue
        lo, hi = truncate_interval(pair.z_interval)
        # An even count keeps z = 0 off symmetric grids; the real-domain
        # power generators have a cusp there.
        z = np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 20)
        h = 1e-6 * np.maximum(1.0, np.abs(z))
        fd = (pair.psi_prime(z + h) - pair.psi_prime(z - h)) / (2 * h)
        scale = np.maximum(1.0, np.abs(fd))
        assert np.max(np.abs(fd - pair.psi_second_values(z)) / scale) < 1e-4, pair.name


def test_posterior_transform_round_trip():
    t = posterior_transform()
    r = np.array([0.1, 1.0, 7.5])
    assert np.allclose(t.inverse(t(r)), r)
    assert np.allclose(t(np.array([1.0])), [0.5])


def test_degenerate_transforms_marked():
    assert preset("D1_linear").omega.degenerate
    assert preset("D3_hinge").omega.degenerate
    assert not preset("C1").omega.degenerate


def test_hinge_pair_piecewise_values():
    """The hinge pair is (1-z)_+ against (1+z)_+ with the sign-limit transform."""
    built = preset("D3_hinge")
    z = np.array([-2.0, 0.0, 2.0])
    assert np.allclose(built.pair.phi_values(z), [0.0, 1.0, 3.0])
    assert np.allclose(built.pair.psi_values(z), [3.0, 1.0, 0.0])


def test_linear_pair_values():
    built = preset("D1_linear")
    z = np.array([-0.5, 0.0, 0.5])
    assert np.allclose(built.pair.phi_values(z), z)
    assert np.allclose(built.pair.psi_values(z), -z)


def test_unknown_preset_raises():
    with pytest.raises(UnknownPresetError):
        preset("Z9")


def test_bad_domain_raises():
    with pytest.raises(ParamError):
        preset("A1", domain="complex")


def test_a1_real_alpha_restriction():
    with pytest.raises(ParamError):
        preset("A1", alpha=-1.0, domain="real")


def test_minimum_check_grid_floor():
    built = preset("C1")
    with pytest.raises(ParamError):
        check_unique_minimum(built.pair, 1.0, grid_size=100)


def test_non_unique_detection():
    """A derivative engineered to cross zero three times trips the check."""
    omega = identity_transform(REAL)
    pair = make_loss(lambda z: np.full_like(np.asarray(z, dtype=float), -1.0), omega)
    rigged = type(pair)(
        name="rigged",
        phi_prime=lambda z: np.sin(np.asarray(z, dtype=float) / 4.0),
        psi_prime=pair.psi_prime,
        z_interval=REAL,
        omega=omega,
    )
    with pytest.raises(NonUniqueError):
        check_unique_minimum(rigged, 0.0)


def test_verify_catalog_reports_injected_failure():
    bad = preset("C1")
    rigged = type(bad.pair)(
        name="broken",
        phi_prime=bad.pair.phi_prime,
        psi_prime=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        z_interval=bad.pair.z_interval,
        omega=bad.omega,
    )
    entry = type(bad)("broken", rigged, bad.omega, bad.output_hint)
    rows = verify_catalog(entries=[entry])
    assert len(rows) == 1
    name, ok, msg = rows[0]
    assert not ok
    assert "NegativityError" in msg


def test_preset_names_cover_families():
    names = preset_names()
    for expected in ("A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2",
                     "D1_linear", "D3_hinge", "exp"):
        assert expected in names


def test_output_hints_match_interval():
    """Recommended outputs map onto each pair's loss interval."""
    from rationet.network import output_from_name

    for built in default_catalog():
        out = output_from_name(built.output_hint)
        lo, hi = built.pair.z_interval
        if built.pair.z_interval == POSITIVE:
            assert out.range_label in ("positive", "nonnegative"), built.name
        elif built.pair.z_interval == (0.0, 1.0):
            assert out.range_label == "unit", built.name
        elif (lo, hi) == (-1.0, 1.0):
            assert out.range_label == "symmetric_unit", built.name
        else:
            assert out.range_label == "real", built.name
