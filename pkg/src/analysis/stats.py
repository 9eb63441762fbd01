import math
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from ..common.models import ProbabilityEstimate

CONFIDENCE = 0.99
KS_THRESHOLD = 1e-3


def wilson_interval(successes: int, trials: int, level: float = CONFIDENCE) -> ProbabilityEstimate:
    """Binomial proportion with its Wilson score interval."""
    if trials == 0:
        return ProbabilityEstimate(estimate=0.0, lower=0.0, upper=1.0, successes=0, trials=0)
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return ProbabilityEstimate(
        estimate=p,
        lower=max(0.0, centre - half),
        upper=min(1.0, centre + half),
        successes=successes,
        trials=trials,
    )


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    result = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(result.statistic), float(result.pvalue)


def poisson_chisquare(counts: Sequence[int], mean: float, min_expected: float = 5.0) -> Tuple[float, float, int]:
    """Chi-square goodness of fit of integer counts against Poisson(mean).

    Cells with expected frequency below ``min_expected`` are pooled into the
    two tails. Returns (statistic, p-value, degrees of freedom).
    """
    counts = np.asarray(counts, dtype=int)
    n = len(counts)
    dist = stats.poisson(mean)
    lo = int(dist.ppf(1e-9))
    hi = int(dist.isf(1e-9))
    while lo < hi and n * dist.cdf(lo) < min_expected:
        lo += 1
    while hi > lo and n * dist.sf(hi - 1) < min_expected:
        hi -= 1
    # Cells: (-inf, lo], lo+1, ..., hi-1, [hi, inf)
    expected = np.concatenate([[dist.cdf(lo)], dist.pmf(np.arange(lo + 1, hi)), [dist.sf(hi - 1)]]) * n
    observed = np.concatenate([
        [np.count_nonzero(counts <= lo)],
        [np.count_nonzero(counts == k) for k in range(lo + 1, hi)],
        [np.count_nonzero(counts >= hi)],
    ]).astype(float)
    expected *= observed.sum() / expected.sum()
    result = stats.chisquare(observed, expected)
    return float(result.statistic), float(result.pvalue), len(observed) - 1


def chisquare_frequencies(observed: Sequence[int], probabilities: Sequence[float]) -> Tuple[float, float]:
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(probabilities, dtype=float) * observed.sum()
    result = stats.chisquare(observed, expected)
    return float(result.statistic), float(result.pvalue)


def batch_means(values: Sequence[float], n_batches: int = 20) -> Tuple[float, float]:
    """Mean and standard error from contiguous batches; robust to short-range correlation."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return 0.0, 0.0
    n_batches = max(1, min(n_batches, len(values)))
    batches = np.array([b.mean() for b in np.array_split(values, n_batches)])
    mean = float(values.mean())
    if n_batches == 1:
        return mean, 0.0
    return mean, float(batches.std(ddof=1) / math.sqrt(n_batches))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n else 0.0


def z_score(a: float, se_a: float, b: float, se_b: float) -> float:
    scale = math.hypot(se_a, se_b)
    if scale == 0.0:
        return 0.0 if a == b else math.inf
    return (a - b) / scale


def in_extreme_band(p: float, width: float = 0.05) -> bool:
    return p <= width or p >= 1.0 - width
