"""Tests for the synthetic generators and the IDX file format."""

import math
import struct

import numpy as np
import pytest

from rationet.data import (
    GaussianSpec,
    MarkovSpec,
    feedback_map,
    load_mnist,
    read_idx_images,
    read_idx_labels,
    sample_gaussian,
    sample_markov,
    write_idx_images,
    write_idx_labels,
)
from rationet.errors import (
    CountMismatchError,
    DimensionError,
    FormatError,
    ParamError,
)


def test_gaussian_spec_normalizes_mean():
    spec = GaussianSpec(0.4, 1.2)
    assert spec.mean == (0.4,)
    assert spec.k == 1
    multi = GaussianSpec((1.0, 2.0, 3.0))
    assert multi.k == 3
    with pytest.raises(ParamError):
        GaussianSpec(0.0, 0.0)
    with pytest.raises(ParamError):
        GaussianSpec(0.0, -1.0)


def test_gaussian_moments():
    """Sample mean and variance sit within five standard errors of truth."""
    spec = GaussianSpec((0.4, -1.0), 1.2)
    n = 50_000
    X = sample_gaussian(spec, n, seed=0)
    assert X.shape == (n, 2)
    se_mean = math.sqrt(1.2 / n)
    assert np.all(np.abs(X.mean(axis=0) - [0.4, -1.0]) < 5 * se_mean)
    se_var = 1.2 * math.sqrt(2.0 / n)
    assert np.all(np.abs(X.var(axis=0) - 1.2) < 5 * se_var)


def test_gaussian_determinism():
    spec = GaussianSpec(0.0)
    a = sample_gaussian(spec, 10, seed=[1, 2])
    b = sample_gaussian(spec, 10, seed=[1, 2])
    c = sample_gaussian(spec, 10, seed=[1, 3])
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ParamError):
        sample_gaussian(spec, 0, seed=0)


def test_markov_spec_validation():
    assert MarkovSpec().order == 0
    assert MarkovSpec("sqrt_feedback").order == 1
    with pytest.raises(ParamError):
        MarkovSpec("ar1")


def test_feedback_map_values():
    assert feedback_map(4.0) == pytest.approx(2.0)
    assert feedback_map(-9.0) == pytest.approx(-3.0)
    assert feedback_map(0.0) == 0.0


def test_feedback_orbit_with_zero_noise():
    """From x0 = 16 the noiseless recursion walks 16, 4, 2, sqrt(2), ..."""
    spec = MarkovSpec("sqrt_feedback")
    series = sample_markov(spec, 5, seed=0, x0=16.0, noise=np.zeros(4))
    assert np.allclose(series, [16.0, 4.0, 2.0, math.sqrt(2.0), 2.0 ** 0.25])


def test_markov_generator_contracts():
    iid = MarkovSpec("iid_standard_normal")
    series = sample_markov(iid, 50, seed=3, x0=7.5)
    assert series[0] == 7.5
    with pytest.raises(ParamError):
        sample_markov(iid, 50, seed=3, noise=np.zeros(49))
    with pytest.raises(ParamError):
        sample_markov(iid, 0, seed=3)

    fb = MarkovSpec("sqrt_feedback")
    with pytest.raises(DimensionError):
        sample_markov(fb, 10, seed=0, noise=np.zeros(5))
    a = sample_markov(fb, 30, seed=[4, 0])
    b = sample_markov(fb, 30, seed=[4, 0])
    assert np.array_equal(a, b)


def test_feedback_matches_manual_recursion():
    spec = MarkovSpec("sqrt_feedback")
    series = sample_markov(spec, 20, seed=11)
    for t in range(1, 20):
        w = series[t] - feedback_map(series[t - 1])
        rebuilt = feedback_map(series[t - 1]) + w
        assert series[t] == pytest.approx(rebuilt)
    # The innovations should look like independent standard normals.
    w = series[1:] - feedback_map(series[:-1])
    assert np.all(np.abs(w) < 6.0)


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(7, 4, 4), dtype=np.uint8)
    labels = rng.integers(0, 10, size=7, dtype=np.uint8)
    ipath, lpath = tmp_path / "img.idx", tmp_path / "lab.idx"
    write_idx_images(ipath, images)
    write_idx_labels(lpath, labels)

    back = read_idx_images(ipath)
    assert back.shape == (7, 16)
    assert np.array_equal((back * 255.0).round().astype(np.uint8),
                          images.reshape(7, 16))
    assert np.array_equal(read_idx_labels(lpath), labels)


def test_idx_flat_write(tmp_path):
    flat = np.arange(2 * 9, dtype=np.uint8).reshape(2, 9)
    path = tmp_path / "img.idx"
    write_idx_images(path, flat)
    back = read_idx_images(path)
    assert back.shape == (2, 9)
    with pytest.raises(DimensionError):
        write_idx_images(path, np.zeros((2, 10), dtype=np.uint8))


def test_idx_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(struct.pack(">iiii", 1234, 1, 2, 2) + b"\x00" * 4)
    with pytest.raises(FormatError):
        read_idx_images(path)
    lpath = tmp_path / "badlab.idx"
    lpath.write_bytes(struct.pack(">ii", 4321, 1) + b"\x00")
    with pytest.raises(FormatError):
        read_idx_labels(lpath)


def test_idx_rejects_truncation(tmp_path):
    path = tmp_path / "short.idx"
    path.write_bytes(struct.pack(">iiii", 2051, 2, 2, 2) + b"\x00" * 5)
    with pytest.raises(FormatError):
        read_idx_images(path)
    path.write_bytes(b"\x00\x00")
    with pytest.raises(FormatError):
        read_idx_images(path)


def test_load_mnist_filtering_and_cap(tmp_path):
    images = np.repeat(np.arange(10, dtype=np.uint8), 3).reshape(30, 1, 1)
    labels = np.repeat(np.arange(10, dtype=np.uint8), 3)
    ipath, lpath = tmp_path / "i.idx", tmp_path / "l.idx"
    write_idx_images(ipath, images)
    write_idx_labels(lpath, labels)

    X, y = load_mnist(ipath, lpath)
    assert X.shape == (30, 1) and y.shape == (30,)

    X, y = load_mnist(ipath, lpath, keep_labels={4, 9})
    assert sorted(set(y)) == [4, 9]
    assert X.shape == (6, 1)

    X, y = load_mnist(ipath, lpath, keep_labels={4, 9}, per_class_cap=2)
    assert list(y) == [4, 4, 9, 9]
    # The cap keeps the first occurrences in file order.
    assert np.allclose(X.ravel() * 255.0, [4, 4, 9, 9])


def test_load_mnist_count_mismatch(tmp_path):
    write_idx_images(tmp_path / "i.idx", np.zeros((3, 1, 1), dtype=np.uint8))
    write_idx_labels(tmp_path / "l.idx", np.zeros(4, dtype=np.uint8))
    with pytest.raises(CountMismatchError):
        load_mnist(tmp_path / "i.idx", tmp_path / "l.idx")
