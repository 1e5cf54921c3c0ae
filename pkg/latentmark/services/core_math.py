"""
Sampling, vector/bit primitives and the statistics every other service uses
"""

import logging
import math
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import special, stats

from ..errors import DegenerateInputError, DimensionMismatchError, DomainError, InvalidDimensionError
from ..models import RngSeed

logger = logging.getLogger(__name__)

# Exact log-space summation is used up to this many trials; beyond it a Chernoff bound
EXACT_TAIL_LIMIT = 100_000


def as_latent(x, d: int = None) -> np.ndarray:
    """Validate a latent point: 1-D, non-empty, finite, optionally of dimension d"""
    array = np.asarray(x, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise InvalidDimensionError(f"latent point must be a non-empty vector, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise DomainError("latent point has non-finite coordinates")
    if d is not None and array.size != d:
        raise DimensionMismatchError(f"expected dimension {d}, got {array.size}")
    return array


def sample_std_gauss(d: int, seed: RngSeed) -> np.ndarray:
    """d i.i.d. standard normal draws, deterministic in the seed"""
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")
    return seed.generator().standard_normal(int(d))


def l2_norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64)))


def normalize(x) -> np.ndarray:
    array = np.asarray(x, dtype=np.float64)
    norm = l2_norm(array)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    return array / norm


def signs(x) -> np.ndarray:
    """Sign projection: bit 1 iff the coordinate is strictly positive (zero maps to 0)"""
    return (np.asarray(x) > 0).astype(np.uint8)


def std_normal_inv_cdf(p: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Inverse standard normal CDF on the open interval (0, 1)"""
    array = np.asarray(p, dtype=np.float64)
    if np.any(~(array > 0.0)) or np.any(~(array < 1.0)):
        raise DomainError("inverse normal CDF is defined on (0, 1) only")
    result = special.ndtri(array)
    return float(result) if np.ndim(p) == 0 else result


def _log_upper_tails(t: int) -> np.ndarray:
    """log P[Bin(t, 1/2) >= k] for k = 0..t"""
    k = np.arange(t + 1)
    log_pmf = special.gammaln(t + 1) - special.gammaln(k + 1) - special.gammaln(t - k + 1) - t * math.log(2.0)
    return np.logaddexp.accumulate(log_pmf[::-1])[::-1]


def binomial_tail(t: int, tau: int) -> float:
    """Exact P[Bin(t, 1/2) >= tau]"""
    if t < 1:
        raise DomainError("t must be positive")
    if tau <= 0:
        return 1.0
    if tau > t:
        return 0.0
    return float(np.exp(_log_upper_tails(t)[tau]))


@lru_cache(maxsize=1024)
def binomial_threshold(t: int, alpha: float) -> int:
    """Smallest tau with P[Bin(t, 1/2) >= tau] <= alpha"""
    if t < 1:
        raise DomainError("t must be positive")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")

    log_alpha = math.log(alpha)
    if t <= EXACT_TAIL_LIMIT:
        tails = _log_upper_tails(t)
        admissible = np.nonzero(tails <= log_alpha)[0]
        # tau = t + 1 means the detector can never fire at this alpha
        return int(admissible[0]) if admissible.size else t + 1

    # Chernoff bound: P[X >= k] <= exp(-t * KL(k/t || 1/2))
    k = np.arange(t // 2 + 1, t + 1)
    q = k / t
    kl = q * np.log(2 * q) + np.where(q < 1, (1 - q) * np.log(np.maximum(2 * (1 - q), 1e-300)), 0.0)
    admissible = np.nonzero(-t * kl <= log_alpha)[0]
    logger.debug("binomial threshold for t=%d uses the Chernoff bound", t)
    return int(k[admissible[0]]) if admissible.size else t + 1


def ks_normal_stat(sample: Sequence[float]) -> float:
    """One-sample Kolmogorov-Smirnov statistic against the standard normal CDF"""
    array = np.asarray(sample, dtype=np.float64).ravel()
    if array.size == 0:
        raise DegenerateInputError("KS statistic needs a non-empty sample")
    return float(stats.kstest(array, "norm").statistic)


def ks_critical_value(n: int, level: float = 0.01) -> float:
    """Exact critical value of the one-sample KS statistic at the given significance level"""
    if n < 1:
        raise DegenerateInputError("sample size must be positive")
    return float(stats.kstwo.ppf(1.0 - level, n))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Two-sample KS statistic and p-value"""
    result = stats.ks_2samp(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    return float(result.statistic), float(result.pvalue)


def _z(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise DomainError("confidence must lie in (0, 1)")
    return float(stats.norm.ppf(0.5 + confidence / 2.0))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion"""
    if trials < 1:
        raise DomainError("Wilson interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise DomainError("successes must lie in [0, trials]")

    z = _z(confidence)
    p_hat = successes / trials
    denominator = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denominator
    half_width = z * math.sqrt(p_hat * (1 - p_hat) / trials + z * z / (4 * trials * trials)) / denominator

    # Boundary counts are pinned exactly
    low = 0.0 if successes == 0 else max(0.0, center - half_width)
    high = 1.0 if successes == trials else min(1.0, center + half_width)
    return low, high


def two_proportion_interval(
    successes_1: int, trials_1: int, successes_2: int, trials_2: int, confidence: float = 0.95
) -> Tuple[float, float, float]:
    """Newcombe hybrid score interval for p1 - p2; returns (difference, low, high)"""
    p1 = successes_1 / trials_1
    p2 = successes_2 / trials_2
    l1, u1 = wilson_interval(successes_1, trials_1, confidence)
    l2, u2 = wilson_interval(successes_2, trials_2, confidence)
    difference = p1 - p2
    low = difference - math.sqrt((p1 - l1) ** 2 + (u2 - p2) ** 2)
    high = difference + math.sqrt((u1 - p1) ** 2 + (p2 - l2) ** 2)
    return difference, max(-1.0, low), min(1.0, high)


def mean_interval(values: Sequence[float], confidence: float = 0.95) -> Tuple[float, float, float]:
    """Sample mean with a normal-approximation interval; returns (mean, low, high)"""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        raise DegenerateInputError("mean of an empty sample")
    mean = float(array.mean())
    if array.size == 1:
        return mean, mean, mean
    half_width = _z(confidence) * float(array.std(ddof=1)) / math.sqrt(array.size)
    return mean, mean - half_width, mean + half_width


def whitenoise_flip_probability(tau: float, d: int) -> float:
    """P(sign(s + eta) != sign(s)) for s ~ N(0, 1) and eta ~ N(0, (tau^2 / d))"""
    return math.atan(tau / math.sqrt(d)) / math.pi


def hamming_distance(a, b) -> int:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"bit strings differ in length: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))
