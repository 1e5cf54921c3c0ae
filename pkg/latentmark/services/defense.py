"""
Boundary-hiding defense: Haar-random orthonormal transforms, the
post-transformation scheme, the well-behavedness probe and a deliberately
backdoored detector showing why well-behavedness is needed
"""

import itertools
import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import DimensionMismatchError, ParameterError, ProbeTooLargeError
from ..models import AdversaryKind, DetectorVerdict, ProbeMode, RngSeed, WellBehavedReport
from .attacks import Adversary, WatermarkOracleLike, attack_outcome
from .codecs import WatermarkScheme
from .core_math import as_latent

logger = logging.getLogger(__name__)

TRANSFORM_MAGIC = b"LMOT"
REGISTRY_CAPACITY = 64
DEFAULT_ETA = 1e-6

# Exhaustive well-behavedness probing is limited to small codes
PROBE_MAX_DIM = 32
PROBE_MAX_RADIUS = 3


class OrthonormalTransform(BaseModel):
    """Secret d x d orthonormal matrix Q; the inverse is its transpose"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(..., ge=1, description="Dimension")
    matrix: np.ndarray = Field(..., description="Row-major (dim, dim) orthonormal matrix")

    @field_validator("matrix", mode="before")
    @classmethod
    def _frozen_matrix(cls, value):
        array = np.array(value)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float64)
        array.setflags(write=False)
        return array

    @classmethod
    def identity(cls, dim: int) -> "OrthonormalTransform":
        return cls(dim=dim, matrix=np.eye(dim))

    def _check(self, x: np.ndarray) -> np.ndarray:
        array = np.asarray(x, dtype=self.matrix.dtype)
        if array.shape[-1] != self.dim:
            raise DimensionMismatchError(f"transform has dimension {self.dim}, got {array.shape[-1]}")
        return array

    def apply(self, x) -> np.ndarray:
        """Qx (row-wise for a batch)"""
        return self._check(x) @ self.matrix.T

    def invert(self, y) -> np.ndarray:
        """Q^T y (row-wise for a batch)"""
        return self._check(y) @ self.matrix

    def orthonormality_residual(self) -> float:
        """Frobenius norm of Q^T Q - I"""
        return float(np.linalg.norm(self.matrix.T @ self.matrix - np.eye(self.dim)))

    def save(self, path: Union[str, Path]) -> None:
        """Binary container: magic, little-endian uint64 dim, row-major little-endian float64"""
        with open(path, "wb") as f:
            f.write(TRANSFORM_MAGIC)
            f.write(np.array([self.dim], dtype="<u8").tobytes())
            f.write(np.ascontiguousarray(self.matrix, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "OrthonormalTransform":
        payload = Path(path).read_bytes()
        if payload[:4] != TRANSFORM_MAGIC:
            raise ParameterError(f"{path} is not a transform file")
        dim = int(np.frombuffer(payload[4:12], dtype="<u8")[0])
        body = payload[12:]
        if len(body) != dim * dim * 8:
            raise ParameterError(f"{path}: expected {dim * dim * 8} matrix bytes, found {len(body)}")
        matrix = np.frombuffer(body, dtype="<f8").reshape(dim, dim).astype(np.float64)
        return cls(dim=dim, matrix=matrix)


def haar_sample(dim: int, seed: RngSeed) -> OrthonormalTransform:
    """Haar-distributed orthonormal matrix via sign-corrected QR of a Gaussian matrix"""
    if dim < 1:
        raise ParameterError("transform dimension must be positive")
    gaussian = seed.generator().standard_normal((dim, dim))
    q, r = np.linalg.qr(gaussian)
    # Plain QR is not Haar; fixing the signs of diag(R) makes it so
    diagonal_signs = np.sign(np.diag(r))
    diagonal_signs[diagonal_signs == 0] = 1.0
    return OrthonormalTransform(dim=dim, matrix=q * diagonal_signs)


class EnhancedScheme(WatermarkScheme):
    """Post-transformation scheme: sample then apply Q, invert Q before detecting"""

    def __init__(self, base: WatermarkScheme, transform: OrthonormalTransform):
        if transform.dim != base.d:
            raise DimensionMismatchError(f"transform dimension {transform.dim} != scheme dimension {base.d}")
        super().__init__(base.d)
        self.base = base
        self.transform = transform
        self.name = f"{base.name}+haar"

    def sample(self, seed: RngSeed) -> np.ndarray:
        return self.transform.apply(self.base.sample(seed))

    def statistics(self, latents: np.ndarray) -> np.ndarray:
        return self.base.statistics(self.transform.invert(latents))

    @property
    def threshold(self) -> int:
        return self.base.threshold

    @property
    def max_statistic(self) -> int:
        return self.base.max_statistic

    def map(self, x) -> np.ndarray:
        return self.base.map(self.transform.invert(x))

    def lift(self, bits: np.ndarray, reference: np.ndarray) -> np.ndarray:
        return self.transform.apply(self.base.lift(bits, self.transform.invert(reference)))


def enhanced_sample(scheme: EnhancedScheme, seed: RngSeed) -> np.ndarray:
    return scheme.sample(seed)


def enhanced_detect(scheme: EnhancedScheme, y) -> DetectorVerdict:
    return scheme.detect(y)


def _pattern_count(d: int, gamma_bits: int) -> int:
    return sum(math.comb(d, k) for k in range(gamma_bits + 1))


def _flip_subsets(d: int, gamma_bits: int, mode: ProbeMode, generator: np.random.Generator,
                  samples: int) -> List[Sequence[int]]:
    if mode is ProbeMode.EXHAUSTIVE:
        return [subset for k in range(gamma_bits + 1) for subset in itertools.combinations(range(d), k)]
    sizes = generator.integers(0, gamma_bits + 1, size=samples)
    return [generator.choice(d, size=int(k), replace=False) for k in sizes]


def well_behaved_probe(scheme: WatermarkScheme, gamma_bits: int, trials: int,
                       mode: ProbeMode = ProbeMode.EXHAUSTIVE, seed: Optional[RngSeed] = None,
                       samples_per_trial: int = 256) -> WellBehavedReport:
    """Check that every sign pattern within gamma_bits of a sample's projection stays watermarked"""
    mode = ProbeMode(mode)
    seed = seed or RngSeed(master=0)
    if gamma_bits < 0 or trials < 1:
        raise ParameterError("need gamma_bits >= 0 and trials >= 1")
    if mode is ProbeMode.EXHAUSTIVE and (scheme.d > PROBE_MAX_DIM or gamma_bits > PROBE_MAX_RADIUS):
        estimate = trials * _pattern_count(scheme.d, gamma_bits)
        raise ProbeTooLargeError(
            f"exhaustive probe needs d <= {PROBE_MAX_DIM} and gamma_bits <= {PROBE_MAX_RADIUS}; "
            f"this one would lift about {estimate:,} patterns",
            estimated_patterns=estimate,
        )

    patterns_checked = 0
    failures = 0
    for trial in range(trials):
        sample = scheme.sample(seed.derive(trial))
        projection = scheme.map(sample)
        subsets = _flip_subsets(scheme.d, gamma_bits, mode, seed.generator(trial, 1), samples_per_trial)

        patterns = np.repeat(projection[None, :], len(subsets), axis=0)
        for row, subset in enumerate(subsets):
            patterns[row, list(subset)] ^= 1
        verdicts = scheme.detect_batch(scheme.lift(patterns, sample))

        patterns_checked += len(subsets)
        failures += int(np.count_nonzero(~verdicts))

    report = WellBehavedReport(
        mode=mode, gamma_bits=gamma_bits, trials=trials, patterns_checked=patterns_checked,
        failures=failures, failure_fraction=failures / patterns_checked,
    )
    logger.info("Well-behaved probe (%s, radius %d): %d/%d patterns failed",
                mode.value, gamma_bits, failures, patterns_checked)
    return report


def nearest_issued(x: np.ndarray, registry: Sequence[np.ndarray]) -> int:
    """Index of the closest issued latent; ties go to the lowest index"""
    distances = np.linalg.norm(np.asarray(registry) - x, axis=1)
    return int(np.argmin(distances))


def _looks_like_codeword_sum(x: np.ndarray, registry: Sequence[np.ndarray], eta: float) -> bool:
    issued = np.asarray(registry)
    residual = x - issued[nearest_issued(x, issued)]
    residual_norm = np.linalg.norm(residual)
    if residual_norm == 0.0:
        return False
    first, second = np.triu_indices(len(issued), k=1)
    pair_sums = issued[first] + issued[second]
    cosines = pair_sums @ residual / (np.linalg.norm(pair_sums, axis=1) * residual_norm)
    return bool(cosines.max() > 1.0 - eta)


def backdoored_detect(registry: Sequence[np.ndarray], transform: OrthonormalTransform, y,
                      base_detector: Callable[[np.ndarray], DetectorVerdict],
                      eta: float = DEFAULT_ETA) -> DetectorVerdict:
    """Declare non-watermarked whenever the residual from the nearest issued latent
    points along the sum of two issued latents; otherwise defer to the base detector

    The key enters through base_detector. This detector is intentionally not well-behaved.
    """
    x = transform.invert(as_latent(y, transform.dim))
    verdict = base_detector(x)
    if len(registry) < 2 or not _looks_like_codeword_sum(x, registry, eta):
        return verdict
    return DetectorVerdict(watermarked=False, statistic=-1, threshold=verdict.threshold)


class BackdooredScheme(WatermarkScheme):
    """Enhanced scheme whose detector carries the sum-of-codewords backdoor

    Every sample() issues its pre-transform latent into the registry; use one
    instance per trial unless access is synchronized.
    """

    def __init__(self, base: WatermarkScheme, transform: OrthonormalTransform, eta: float = DEFAULT_ETA):
        super().__init__(base.d)
        self.base = base
        self.transform = transform
        self.eta = eta
        self.registry: List[np.ndarray] = []
        self.name = f"{base.name}+backdoor"

    def issue(self, latent: np.ndarray) -> None:
        if len(self.registry) >= REGISTRY_CAPACITY:
            logger.warning("Backdoor registry full (%d latents); not recording more", REGISTRY_CAPACITY)
            return
        self.registry.append(np.array(latent, dtype=np.float64))

    def fork(self) -> "BackdooredScheme":
        """Same key and transform with a private copy of the registry"""
        twin = BackdooredScheme(self.base, self.transform, self.eta)
        twin.registry = list(self.registry)
        return twin

    def sample(self, seed: RngSeed) -> np.ndarray:
        latent = self.base.sample(seed)
        self.issue(latent)
        return self.transform.apply(latent)

    def statistics(self, latents: np.ndarray) -> np.ndarray:
        inverted = self.transform.invert(latents)
        result = self.base.statistics(inverted)
        if len(self.registry) >= 2:
            for row, x in enumerate(inverted):
                if _looks_like_codeword_sum(x, self.registry, self.eta):
                    result[row] = -1
        return result

    @property
    def threshold(self) -> int:
        return self.base.threshold

    @property
    def max_statistic(self) -> int:
        return self.base.max_statistic

    def map(self, x) -> np.ndarray:
        return self.base.map(self.transform.invert(x))

    def lift(self, bits: np.ndarray, reference: np.ndarray) -> np.ndarray:
        return self.transform.apply(self.base.lift(bits, self.transform.invert(reference)))


def sum_codeword_attack(oracle: WatermarkOracleLike, target, delta1: float) -> np.ndarray:
    """target + delta1 * (w1 + w2) for two fresh oracle outputs"""
    target = as_latent(target)
    first = oracle.next()
    second = oracle.next()
    return target + delta1 * (first + second)


class SumCodewordAdversary(Adversary):
    kind = AdversaryKind.SUM_CODEWORD

    def __init__(self, delta1: float):
        self.delta1 = delta1

    def attack(self, observed, oracle, seed):
        if oracle is None:
            raise ParameterError("the sum-of-codewords adversary needs oracle access")
        observed = as_latent(observed)
        return attack_outcome(observed, sum_codeword_attack(oracle, observed, self.delta1))
