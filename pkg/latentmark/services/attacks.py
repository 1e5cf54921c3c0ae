"""
Removal adversaries on latent starting points under an l2 budget
"""

import itertools
import logging
from abc import ABC, abstractmethod
from typing import Optional, Protocol

import numpy as np

from ..errors import ParameterError
from ..models import AdversaryKind, AttackOutcome, RngSeed
from .core_math import as_latent, hamming_distance, l2_norm, normalize, signs

logger = logging.getLogger(__name__)


def attack_outcome(original: np.ndarray, perturbed: np.ndarray, no_op: bool = False) -> AttackOutcome:
    return AttackOutcome(
        perturbed=perturbed,
        realized_l2=l2_norm(original - perturbed),
        flipped_count=hamming_distance(signs(original), signs(perturbed)),
        no_op=no_op,
    )


def _magnitude_order(s: np.ndarray) -> np.ndarray:
    # Stable sort: equal magnitudes keep ascending index order
    return np.argsort(np.abs(s), kind="stable")


def whitenoise_attack(s, tau: float, seed: RngSeed) -> AttackOutcome:
    """s + tau * normalize(g) with g ~ N(0, I)"""
    s = as_latent(s)
    if tau < 0:
        raise ParameterError("whitenoise level must be non-negative")
    if tau == 0:
        return attack_outcome(s, s.copy())
    noise = normalize(seed.generator().standard_normal(s.size))
    return attack_outcome(s, s + tau * noise)


def stealthy_attack(s, epsilon: float) -> AttackOutcome:
    """Negate the smallest-magnitude coordinates while the total shift stays within epsilon

    Negating s_i moves the point by 2|s_i|, so the squared budget accumulates 4 s_i^2.
    Every |s_i| is preserved.
    """
    s = as_latent(s)
    if epsilon < 0:
        raise ParameterError("budget must be non-negative")

    order = _magnitude_order(s)
    costs = np.cumsum(4.0 * s[order] ** 2)
    count = int(np.searchsorted(costs, epsilon**2, side="right"))

    perturbed = s.copy()
    while count > 0:
        perturbed = s.copy()
        perturbed[order[:count]] *= -1.0
        # Accumulated and direct norms can differ in the last ulp
        if l2_norm(s - perturbed) <= epsilon:
            break
        count -= 1
    else:
        perturbed = s.copy()

    return attack_outcome(s, perturbed, no_op=count == 0)


def min_distortion_attack(s, epsilon: float, gamma: float) -> AttackOutcome:
    """Collapse the smallest-magnitude coordinates to -(gamma / i0) * sign(s_i)"""
    s = as_latent(s)
    if epsilon < 0:
        raise ParameterError("budget must be non-negative")
    if gamma <= 0:
        raise ParameterError("gamma must be positive")

    order = _magnitude_order(s)
    costs = np.cumsum(s[order] ** 2)
    count = int(np.searchsorted(costs, epsilon**2, side="right"))
    if count == 0:
        logger.debug("min-distortion attack cannot afford any coordinate at epsilon=%g", epsilon)
        return attack_outcome(s, s.copy(), no_op=True)

    selected = order[:count]
    perturbed = s.copy()
    perturbed[selected] = -(gamma / count) * np.sign(s[selected])
    return attack_outcome(s, perturbed)


def bits_flipped(original, attacked) -> float:
    """Fraction of coordinates whose sign bit differs"""
    original = np.asarray(original, dtype=np.float64)
    return hamming_distance(signs(original), signs(attacked)) / original.size


def stealthy_brute_force(s, epsilon: float) -> int:
    """Largest sign-flip subset whose l2 shift stays within epsilon, by exhaustive search"""
    s = as_latent(s)
    if s.size > 16:
        raise ParameterError("exhaustive search is limited to d <= 16")
    for size in range(s.size, 0, -1):
        for subset in itertools.combinations(range(s.size), size):
            perturbed = s.copy()
            perturbed[list(subset)] *= -1.0
            if l2_norm(s - perturbed) <= epsilon:
                return size
    return 0


class WatermarkOracleLike(Protocol):
    def next(self) -> np.ndarray:
        ...


class Adversary(ABC):
    """Removal adversary: sees an (inverted) latent and optional oracle, returns its attack"""

    kind: AdversaryKind

    @abstractmethod
    def attack(self, observed: np.ndarray, oracle: Optional[WatermarkOracleLike], seed: RngSeed) -> AttackOutcome:
        """Perturb the observed latent"""

    @property
    def label(self) -> str:
        return self.kind.value


class IdentityAdversary(Adversary):
    kind = AdversaryKind.IDENTITY

    def attack(self, observed, oracle, seed):
        observed = as_latent(observed)
        return attack_outcome(observed, observed.copy(), no_op=True)


class WhitenoiseAdversary(Adversary):
    kind = AdversaryKind.WHITENOISE

    def __init__(self, tau: float):
        self.tau = tau

    def attack(self, observed, oracle, seed):
        return whitenoise_attack(observed, self.tau, seed)


class StealthyAdversary(Adversary):
    kind = AdversaryKind.STEALTHY

    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    def attack(self, observed, oracle, seed):
        return stealthy_attack(observed, self.epsilon)


class MinDistortionAdversary(Adversary):
    kind = AdversaryKind.MIN_DISTORTION

    def __init__(self, epsilon: float, gamma: float):
        self.epsilon = epsilon
        self.gamma = gamma

    def attack(self, observed, oracle, seed):
        return min_distortion_attack(observed, self.epsilon, self.gamma)
