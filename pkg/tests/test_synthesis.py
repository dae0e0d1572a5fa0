import math
import random

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from etsddp.ellipsoid import mahalanobis_many
from etsddp.synthesis import Dataset, LabeledSample, chi2_cdf, chi2_pdf, \
    chi2_quantile, estimate_gaussian, mvn_sample, mvn_sample_many, \
    read_dataset_csv, sample_covariance, sample_mean, synthesize_ellipsoid, \
    write_dataset_csv

SQUARE = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])


def square_dataset():
    data = Dataset(dimension=2)
    for p in SQUARE:
        data.append(LabeledSample(point=p, accepted=True))
    return data


# --- sample statistics --------------------------------------------------------

def test_sample_mean_square():
    np.testing.assert_allclose(sample_mean(SQUARE), [1.0, 1.0])


def test_sample_mean_single_point():
    np.testing.assert_allclose(sample_mean(np.array([[3.0, 4.0]])), [3.0, 4.0])


def test_sample_mean_empty_raises():
    with pytest.raises(ValueError):
        sample_mean(np.zeros((0, 2)))


def test_sample_mean_monte_carlo():
    rng = random.Random(11)
    cov = np.diag([4.0, 1.0])
    pts = mvn_sample_many(np.array([1.0, -2.0]), cov, 10_000, rng)
    assert np.max(np.abs(sample_mean(pts) - [1.0, -2.0])) < 0.05 * 2.0


def test_sample_covariance_square():
    np.testing.assert_allclose(sample_covariance(SQUARE),
                               np.diag([4.0 / 3.0, 4.0 / 3.0]), atol=1e-14)


def test_sample_covariance_identical_points():
    pts = np.tile([1.0, 2.0], (5, 1))
    np.testing.assert_array_equal(sample_covariance(pts), np.zeros((2, 2)))


def test_sample_covariance_needs_two_points():
    with pytest.raises(ValueError):
        sample_covariance(np.array([[1.0, 2.0]]))


def test_sample_covariance_monte_carlo():
    rng = random.Random(7)
    pts = mvn_sample_many(np.zeros(2), np.diag([4.0, 1.0]), 10_000, rng)
    S = sample_covariance(pts)
    assert np.max(np.abs(S - np.diag([4.0, 1.0]))) < 0.15


def test_sample_covariance_symmetric_psd(rng):
    for _ in range(20):
        pts = rng.normal(size=(int(rng.integers(2, 40)), 3))
        S = sample_covariance(pts)
        np.testing.assert_array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() >= -1e-12


def test_estimator_consistency_in_sample_size():
    """Estimation error decreases monotonically in N, averaged over seeds."""
    true_mean = np.array([0.5, -1.0])
    true_cov = np.array([[2.0, 0.4], [0.4, 1.0]])
    sizes = [100, 1_000, 10_000, 100_000]
    errors = np.zeros(len(sizes))
    for seed in range(20):
        rng = random.Random(seed)
        pts = mvn_sample_many(true_mean, true_cov, sizes[-1], rng)
        for i, N in enumerate(sizes):
            est = estimate_gaussian(pts[:N])
            errors[i] += np.max(np.abs(est.mean - true_mean)) \
                + np.max(np.abs(est.covariance - true_cov))
    assert np.all(np.diff(errors) < 0)


# --- chi-squared machinery ------------------------------------------------------

def test_chi2_cdf_at_zero():
    assert chi2_cdf(0.0, 3) == 0.0


def test_chi2_cdf_n2_closed_form():
    x = 2.0 * math.log(2.0)
    assert chi2_cdf(x, 2) == pytest.approx(0.5, abs=1e-12)


def test_chi2_cdf_n4_reference_value():
    # density-integration oracle for P(X <= 13.2767), X ~ chi2(4)
    oracle, err = quad(lambda t: chi2_pdf(t, 4), 0.0, 13.2767)
    assert err < 1e-10
    assert chi2_cdf(13.2767, 4) == pytest.approx(oracle, abs=1e-5)
    assert chi2_cdf(13.2767, 4) == pytest.approx(0.99, abs=1e-5)


def test_chi2_cdf_matches_scipy():
    for n in range(1, 11):
        for x in (0.01, 0.5, 1.0, 3.0, 10.0, 40.0):
            assert chi2_cdf(x, n) == pytest.approx(stats.chi2.cdf(x, n),
                                                   abs=1e-10)


def test_chi2_quantile_n2_closed_form():
    for alpha in (0.001, 0.01, 0.05, 0.1, 0.5, 0.9):
        assert abs(chi2_quantile(alpha, 2) + 2.0 * math.log(alpha)) < 1e-9


def test_chi2_quantile_reference_value():
    assert chi2_quantile(0.01, 4) == pytest.approx(13.2767, abs=1e-3)


def test_chi2_quantile_round_trip():
    for alpha in (0.001, 0.01, 0.05, 0.1, 0.5):
        for n in range(1, 11):
            x = chi2_quantile(alpha, n)
            assert abs(chi2_cdf(x, n) - (1.0 - alpha)) < 1e-8


def test_chi2_quantile_validates_alpha():
    with pytest.raises(ValueError):
        chi2_quantile(0.0, 2)
    with pytest.raises(ValueError):
        chi2_quantile(1.0, 2)


# --- ellipsoid synthesis ---------------------------------------------------------

def test_synthesize_square_dataset():
    C = synthesize_ellipsoid(square_dataset(), alpha=0.01, min_samples=4)
    np.testing.assert_allclose(C.center, [1.0, 1.0])
    np.testing.assert_allclose(C.sigma, np.diag([4.0 / 3.0, 4.0 / 3.0]),
                               atol=1e-14)
    # radius = sqrt of the n=2 closed-form quantile -2 ln(alpha)
    assert C.radius == pytest.approx(math.sqrt(-2.0 * math.log(0.01)), abs=1e-9)
    assert C.radius == pytest.approx(3.0348543, abs=1e-6)


def test_synthesize_radius_shrinks_as_alpha_grows():
    data = square_dataset()
    radii = [synthesize_ellipsoid(data, alpha, min_samples=4).radius
             for alpha in (0.01, 0.1, 0.5, 0.9, 0.999)]
    assert all(b < a for a, b in zip(radii, radii[1:]))
    assert radii[-1] < 0.1


def test_synthesize_requires_min_samples():
    with pytest.raises(ValueError):
        synthesize_ellipsoid(square_dataset(), 0.01)   # default minimum is 10
    two = Dataset(dimension=2)
    for p in SQUARE[:2]:
        two.append(LabeledSample(point=p, accepted=True))
    with pytest.raises(ValueError):
        # explicit override cannot go below n+1
        synthesize_ellipsoid(two, 0.01, min_samples=1)


def test_synthesize_uses_accepted_points_only():
    data = square_dataset()
    data.append(LabeledSample(point=np.array([100.0, 100.0]), accepted=False))
    C = synthesize_ellipsoid(data, 0.01, min_samples=4)
    np.testing.assert_allclose(C.center, [1.0, 1.0])


def test_synthesize_degenerate_covariance_names_direction():
    data = Dataset(dimension=2)
    for i in range(12):
        data.append(LabeledSample(point=np.array([float(i), 0.0]),
                                  accepted=True))
    with pytest.raises(ValueError, match="degenerate along direction"):
        synthesize_ellipsoid(data, 0.01)


def test_synthesize_coverage_monte_carlo():
    rng = random.Random(42)
    pts = mvn_sample_many(np.array([0.5, -0.5, 1.0]),
                          np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1],
                                    [0.0, 0.1, 0.5]]), 10_000, rng)
    data = Dataset(dimension=3)
    for p in pts:
        data.append(LabeledSample(point=p, accepted=True))
    C = synthesize_ellipsoid(data, alpha=0.01)
    frac = float(np.mean(mahalanobis_many(pts, C) < C.radius))
    assert 0.985 <= frac <= 0.995


def test_affine_equivariance(rng):
    py_rng = random.Random(3)
    pts = mvn_sample_many(np.array([1.0, 2.0]), np.diag([1.0, 0.5]), 200, py_rng)
    A = np.array([[2.0, 1.0], [0.0, -1.0]])
    b = np.array([3.0, -4.0])
    data1 = Dataset(dimension=2)
    data2 = Dataset(dimension=2)
    for p in pts:
        data1.append(LabeledSample(point=p, accepted=True))
        data2.append(LabeledSample(point=A @ p + b, accepted=True))
    C1 = synthesize_ellipsoid(data1, 0.05)
    C2 = synthesize_ellipsoid(data2, 0.05)
    np.testing.assert_allclose(C2.center, A @ C1.center + b, rtol=1e-8)
    np.testing.assert_allclose(C2.sigma, A @ C1.sigma @ A.T, rtol=1e-8)
    assert C2.radius == C1.radius
    d1 = mahalanobis_many(pts, C1)
    d2 = mahalanobis_many(pts @ A.T + b, C2)
    np.testing.assert_allclose(d1, d2, rtol=1e-7)


# --- multivariate normal sampling ------------------------------------------------

def test_mvn_cholesky_factor_effect():
    rng = random.Random(0)
    # diag(4, 1) has Cholesky factor diag(2, 1): component scales differ 2:1
    pts = mvn_sample_many(np.zeros(2), np.diag([4.0, 1.0]), 4_000, rng)
    stds = pts.std(axis=0)
    assert stds[0] / stds[1] == pytest.approx(2.0, rel=0.1)


def test_mvn_tiny_variance_hugs_mean():
    rng = random.Random(1)
    pts = mvn_sample_many(np.array([1.0, -1.0]), 1e-12 * np.eye(2), 100, rng)
    assert np.max(np.abs(pts - [1.0, -1.0])) < 1e-5


def test_mvn_self_check_moments():
    rng = random.Random(5)
    pts = mvn_sample_many(np.zeros(3), np.eye(3), 10_000, rng)
    assert np.max(np.abs(sample_mean(pts))) < 0.05
    assert np.max(np.abs(sample_covariance(pts) - np.eye(3))) < 0.1


def test_mvn_deterministic_per_seed():
    a = mvn_sample_many(np.zeros(2), np.eye(2), 10, random.Random(99))
    b = mvn_sample_many(np.zeros(2), np.eye(2), 10, random.Random(99))
    np.testing.assert_array_equal(a, b)
    single = mvn_sample(np.zeros(2), np.eye(2), random.Random(99))
    np.testing.assert_array_equal(single, a[0])


def test_mvn_rejects_indefinite_covariance():
    with pytest.raises(ValueError):
        mvn_sample(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]),
                   random.Random(0))


# --- dataset persistence ----------------------------------------------------------

def four_d_dataset(n=6):
    rng = random.Random(2)
    data = Dataset(dimension=4)
    for i in range(n):
        data.append(LabeledSample(
            point=mvn_sample(np.zeros(4), np.eye(4), rng),
            accepted=i % 3 != 0, timestamp=1700000000.0 + i))
    return data


def test_dataset_csv_round_trip(tmp_path):
    data = four_d_dataset()
    path = tmp_path / "dataset.csv"
    write_dataset_csv(path, data)
    text = path.read_text()
    assert text.startswith("px,py,theta,v,accepted,timestamp\n")
    assert "\r" not in text
    back = read_dataset_csv(path)
    assert back.dimension == 4
    assert len(back.samples) == len(data.samples)
    for a, b in zip(back.samples, data.samples):
        np.testing.assert_array_equal(a.point, b.point)
        assert a.accepted == b.accepted
        assert a.timestamp == b.timestamp


def test_dataset_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("px,py,accepted,timestamp\n")
    with pytest.raises(ValueError, match="expected header"):
        read_dataset_csv(path)


def test_dataset_csv_rejects_bad_accepted_flag(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("px,py,theta,v,accepted,timestamp\n0,0,0,0,yes,0\n")
    with pytest.raises(ValueError, match="accepted"):
        read_dataset_csv(path)


def test_dataset_dimension_enforced():
    data = Dataset(dimension=4)
    with pytest.raises(ValueError):
        data.append(LabeledSample(point=np.zeros(3), accepted=True))
    with pytest.raises(ValueError):
        write_dataset_csv("/tmp/nope.csv", Dataset(dimension=2))
