"""Statistical construction of the ellipsoidal target set from labeled data.

The target set is fit to expert-accepted terminal states: center and shape
come from the sample mean and unbiased sample covariance, and the radius is
the square root of the upper chi-squared quantile at a chosen significance
level alpha (so roughly a 1-alpha fraction of the data falls inside).

The chi-squared CDF is the regularized lower incomplete gamma function
P(n/2, x/2), evaluated by a power series for small arguments and a Lentz
continued fraction otherwise; the quantile inverts it by bisection with a
Newton polish.  Candidate terminal states are drawn from a multivariate
normal proposal via Cholesky factorization and Box-Muller normals driven by
a caller-owned ``random.Random`` source.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ellipsoid import Ellipsoid

Array = np.ndarray

DEFAULT_ALPHA = 0.01
DATASET_HEADER = ("px", "py", "theta", "v", "accepted", "timestamp")

_EPS = 1e-16
_MAX_ITER = 500


# ---------------------------------------------------------------------------
# Labeled data


@dataclass(frozen=True)
class LabeledSample:
    point: Array
    accepted: bool
    timestamp: float = 0.0

    def __post_init__(self):
        point = np.atleast_1d(np.asarray(self.point, dtype=float))
        if not np.isfinite(point).all():
            raise ValueError("sample entries must be finite")
        object.__setattr__(self, "point", point)


@dataclass
class Dataset:
    dimension: int
    samples: list[LabeledSample] = field(default_factory=list)

    def append(self, sample: LabeledSample) -> None:
        if sample.point.size != self.dimension:
            raise ValueError(
                f"sample dimension {sample.point.size} != dataset dimension {self.dimension}")
        self.samples.append(sample)

    def accepted_points(self) -> Array:
        pts = [s.point for s in self.samples if s.accepted]
        if not pts:
            return np.zeros((0, self.dimension))
        return np.stack(pts)

    @property
    def accepted_count(self) -> int:
        return sum(1 for s in self.samples if s.accepted)

    @property
    def rejected_count(self) -> int:
        return len(self.samples) - self.accepted_count


@dataclass(frozen=True)
class GaussianEstimate:
    mean: Array
    covariance: Array


# ---------------------------------------------------------------------------
# Sample statistics


def sample_mean(points: Array) -> Array:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("sample mean of an empty set")
    return points.mean(axis=0)


def sample_covariance(points: Array) -> Array:
    """Unbiased covariance estimate with the 1/(N-1) factor, symmetrized."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    N = points.shape[0]
    if N < 2:
        raise ValueError("sample covariance needs at least 2 points")
    centered = points - points.mean(axis=0)
    S = centered.T @ centered / (N - 1)
    return 0.5 * (S + S.T)


def estimate_gaussian(points: Array) -> GaussianEstimate:
    return GaussianEstimate(mean=sample_mean(points),
                            covariance=sample_covariance(points))


# ---------------------------------------------------------------------------
# Chi-squared machinery


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma by power series (x < a + 1)."""
    if x <= 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    k = 0
    while abs(term) > abs(total) * _EPS and k < _MAX_ITER:
        k += 1
        term *= x / (a + k)
        total += term
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma via a Lentz continued fraction."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_cdf(x: float, n: int) -> float:
    """P(X <= x) for X ~ chi-squared with n degrees of freedom."""
    if n < 1:
        raise ValueError("degrees of freedom must be positive")
    if x < 0:
        raise ValueError("chi-squared CDF argument must be nonnegative")
    if x == 0.0:
        return 0.0
    a = 0.5 * n
    arg = 0.5 * x
    if arg < a + 1.0:
        return min(_lower_gamma_series(a, arg), 1.0)
    return min(max(1.0 - _upper_gamma_cf(a, arg), 0.0), 1.0)


def chi2_pdf(x: float, n: int) -> float:
    if x <= 0.0:
        return 0.0
    a = 0.5 * n
    return math.exp((a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a))


def chi2_quantile(alpha: float, n: int) -> float:
    """x with P(X <= x) = 1 - alpha, accurate to |cdf(x) - (1-alpha)| < 1e-10."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    target = 1.0 - alpha
    lo = 0.0
    hi = n + 20.0 * math.sqrt(2.0 * n) + 50.0
    while chi2_cdf(hi, n) < target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, n) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(hi, 1.0):
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        err = chi2_cdf(x, n) - target
        if abs(err) < 1e-12:
            break
        slope = chi2_pdf(x, n)
        if slope <= 0.0:
            break
        step = err / slope
        x = min(max(x - step, lo), hi)
    return x


# ---------------------------------------------------------------------------
# Ellipsoid synthesis


def synthesize_ellipsoid(data: Dataset, alpha: float = DEFAULT_ALPHA,
                         min_samples: int | None = None) -> Ellipsoid:
    """Fit the target set to the accepted samples of a dataset.

    Requires at least max(n+1, 10) accepted points by default (override via
    ``min_samples``, never below n+1) and a positive-definite sample
    covariance.  Rejected samples are kept for audit but excluded here.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    n = data.dimension
    required = max(n + 1, 10) if min_samples is None else max(min_samples, n + 1)
    points = data.accepted_points()
    if points.shape[0] < required:
        raise ValueError(
            f"need at least {required} accepted samples for synthesis, "
            f"have {points.shape[0]}")
    center = sample_mean(points)
    S = sample_covariance(points)
    eigvals, eigvecs = np.linalg.eigh(S)
    if float(eigvals.min()) <= 0.0:
        worst = eigvecs[:, int(np.argmin(eigvals))]
        raise ValueError(
            "sample covariance is degenerate along direction "
            f"{np.array2string(worst, precision=3)}; collect more varied samples")
    radius = math.sqrt(chi2_quantile(alpha, n))
    return Ellipsoid(center=center, sigma=S, radius=radius)


# ---------------------------------------------------------------------------
# Multivariate normal sampling (Box-Muller + Cholesky)


def _standard_normals(count: int, rng: random.Random) -> Array:
    out = np.empty(count)
    i = 0
    while i < count:
        u1 = rng.random()
        while u1 <= 0.0:
            u1 = rng.random()
        u2 = rng.random()
        radius = math.sqrt(-2.0 * math.log(u1))
        out[i] = radius * math.cos(2.0 * math.pi * u2)
        i += 1
        if i < count:
            out[i] = radius * math.sin(2.0 * math.pi * u2)
            i += 1
    return out


def mvn_sample_many(mean: Array, cov: Array, count: int, rng: random.Random) -> Array:
    """Draw ``count`` samples from N(mean, cov), deterministic per seed."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("proposal covariance must be positive definite") from exc
    n = mean.size
    z = _standard_normals(count * n, rng).reshape(count, n)
    return mean + z @ chol.T


def mvn_sample(mean: Array, cov: Array, rng: random.Random) -> Array:
    return mvn_sample_many(mean, cov, 1, rng)[0]


# ---------------------------------------------------------------------------
# Dataset persistence (CSV, UTF-8, LF line endings)


def format_float(x: float) -> str:
    return repr(float(x))


def dataset_csv_rows(data: Dataset):
    yield ",".join(DATASET_HEADER)
    for s in data.samples:
        cells = [format_float(v) for v in s.point]
        cells.append("1" if s.accepted else "0")
        cells.append(format_float(s.timestamp))
        yield ",".join(cells)


def write_dataset_csv(path: str | Path, data: Dataset) -> None:
    if data.dimension != 4:
        raise ValueError("dataset CSV format is four-dimensional (px,py,theta,v)")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in dataset_csv_rows(data):
            fh.write(row + "\n")


def read_dataset_csv(path: str | Path) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
        if tuple(h.strip() for h in header) != DATASET_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(DATASET_HEADER)}")
        data = Dataset(dimension=4)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns")
            try:
                point = [float(c) for c in row[:4]]
                accepted = row[4].strip()
                timestamp = float(row[5])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if accepted not in {"0", "1"}:
                raise ValueError(f"{path}:{lineno}: accepted must be 0 or 1")
            data.append(LabeledSample(point=np.array(point),
                                      accepted=accepted == "1",
                                      timestamp=timestamp))
    return data
