import numpy as np
import pytest
from scipy import stats

from flowmatch.numerics import RngStream, gaussian_sample, matvec, worker_count


def test_same_key_is_bit_identical():
    a = RngStream(7, 3)
    b = RngStream(7, 3)
    assert np.array_equal(a.standard_normal(1000), b.standard_normal(1000))
    assert np.array_equal(a.uniform(100), b.uniform(100))
    assert np.array_equal(a.integers(10, size=50), b.integers(10, size=50))


def test_different_stream_ids_decorrelated():
    a = RngStream(7, 0).standard_normal(100_000)
    b = RngStream(7, 1).standard_normal(100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


def test_gaussian_sample_moments():
    # law of large numbers: 100k draws in 2-D, seed 7
    rng = RngStream(7)
    draws = np.stack([gaussian_sample(rng, 2) for _ in range(1000)])
    rng2 = RngStream(7)
    big = rng2.standard_normal((100_000, 2))
    assert np.all(np.abs(big.mean(axis=0)) < 0.02)
    assert np.all(np.abs(big.var(axis=0) - 1.0) < 0.03)
    assert draws.shape == (1000, 2)


def test_gaussian_sample_rejects_zero_dim():
    with pytest.raises(ValueError):
        gaussian_sample(RngStream(0), 0)


def test_gaussian_chi2_goodness_of_fit():
    # 10 equal-probability bins, 100k samples, significance 0.001
    samples = RngStream(123).standard_normal(100_000)
    edges = stats.norm.ppf(np.linspace(0.0, 1.0, 11))
    counts, _ = np.histogram(samples, bins=edges)
    expected = len(samples) / 10
    chi2 = np.sum((counts - expected) ** 2 / expected)
    assert chi2 < stats.chi2.ppf(0.999, df=9)


def test_split_streams_are_deterministic_and_distinct():
    parent = RngStream(42, 5)
    a = parent.split(0).standard_normal(10)
    b = parent.split(1).standard_normal(10)
    assert not np.array_equal(a, b)
    # split does not depend on the parent's position
    parent.uniform(100)
    assert np.array_equal(parent.split(0).standard_normal(10), a)


def test_state_roundtrip_resumes_exactly():
    rng = RngStream(9, 2)
    rng.standard_normal(17)  # advance to an odd position
    snap = rng.state
    ahead = rng.standard_normal(33)
    restored = RngStream(0, 0)
    restored.state = snap
    assert np.array_equal(restored.standard_normal(33), ahead)
    assert restored.seed == 9 and restored.stream_id == 2


def test_matvec_examples():
    assert np.array_equal(matvec(np.eye(3), np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])
    assert np.array_equal(matvec(np.zeros((2, 3)), np.array([4.0, 5.0, 6.0])), [0.0, 0.0])
    assert np.array_equal(matvec(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1.0, 1.0])),
                          [3.0, 7.0])


def test_matvec_linearity():
    rng = RngStream(4)
    for _ in range(200):
        m = 1e3 * (2 * rng.uniform((4, 6)) - 1)
        x = 1e3 * (2 * rng.uniform(6) - 1)
        y = 1e3 * (2 * rng.uniform(6) - 1)
        lhs = matvec(m, x + y)
        rhs = matvec(m, x) + matvec(m, y)
        scale = np.abs(lhs) + np.abs(rhs) + 1.0
        assert np.all(np.abs(lhs - rhs) / scale < 1e-12)


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        matvec(np.eye(3), np.ones(4))


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("FLOWMATCH_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.delenv("FLOWMATCH_THREADS")
    assert worker_count() >= 1
