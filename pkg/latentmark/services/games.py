"""
Security games: removal (REM), indistinguishability (IND) and stealthiness,
the watermark oracle, the inversion-noise channel and rate/advantage estimates
"""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats
from tqdm import tqdm

from ..errors import ParameterError
from ..models import (
    AdversaryKind, AdversarySpec, AdvantageEstimate, DefenseKind, DistinguisherName,
    ExperimentConfig, RateEstimate, RngSeed, TrialRecord,
)
from .attacks import (
    Adversary, IdentityAdversary, MinDistortionAdversary, StealthyAdversary, WhitenoiseAdversary,
    bits_flipped,
)
from .codecs import WatermarkScheme, make_scheme, prc_check_satisfaction_probability
from .core_math import (
    binomial_threshold, ks_critical_value, ks_normal_stat, sample_std_gauss, signs,
    two_proportion_interval, wilson_interval,
)
from .defense import BackdooredScheme, EnhancedScheme, SumCodewordAdversary, haar_sample

logger = logging.getLogger(__name__)

# Realized distortion may exceed the budget by rounding only
BUDGET_TOLERANCE = 1e-9
WHITENOISE_GRID_POINTS = 16

# Sub-stream roles inside one trial
_KEY, _TRANSFORM, _SAMPLE, _CLEAN_CHANNEL, _ATTACK_CHANNEL, _ADVERSARY, _DETECT_CHANNEL, _ORACLE = range(8)
_COIN, _CHALLENGE = 8, 9


def oracle_next(scheme: WatermarkScheme, seed: RngSeed, call_index: int) -> np.ndarray:
    """Fresh watermarked sample for the given oracle call; independent of any target"""
    return scheme.sample(seed.derive(_ORACLE, call_index))


class WatermarkOracle:
    """Non-adaptive oracle handing out fresh samples under the victim key"""

    def __init__(self, scheme: WatermarkScheme, seed: RngSeed):
        self.scheme = scheme
        self.seed = seed
        self.calls = 0

    def next(self) -> np.ndarray:
        latent = oracle_next(self.scheme, self.seed, self.calls)
        self.calls += 1
        return latent


def inversion_channel(x, sigma_inv: float, seed: RngSeed) -> np.ndarray:
    """x + N(0, sigma_inv^2 I); sigma_inv = 0 is exact inversion"""
    x = np.asarray(x, dtype=np.float64)
    if sigma_inv < 0:
        raise ParameterError("inversion noise must be non-negative")
    if sigma_inv == 0:
        return x.copy()
    return x + sigma_inv * seed.generator().standard_normal(x.shape)


def channel_detection_probability(sigma_inv: float, t: int, w: int, alpha: float) -> float:
    """Closed-form PRC detection rate under the channel alone

    Coordinates flip with probability arctan(sigma)/pi; checks are treated as
    independent, each surviving with probability 1/2 + 1/2 (1 - 2p)^w.
    """
    flip_rate = np.arctan(sigma_inv) / np.pi
    survive = prc_check_satisfaction_probability(flip_rate, w)
    threshold = binomial_threshold(t, alpha)
    return float(stats.binom.sf(threshold - 1, t, survive))


def build_scheme(config: ExperimentConfig, seed: RngSeed) -> WatermarkScheme:
    """Key the configured codec, wrapped in the configured defense"""
    base = make_scheme(config.codec, config.d, seed.derive(_KEY), t=config.t, w=config.w,
                       m=config.m, alpha=config.alpha)
    if config.defense is DefenseKind.NONE:
        return base
    transform = haar_sample(config.d, seed.derive(_TRANSFORM))
    if config.defense is DefenseKind.HAAR:
        return EnhancedScheme(base, transform)
    return BackdooredScheme(base, transform, eta=config.backdoor_eta)


def build_adversary(spec: AdversarySpec) -> Adversary:
    if spec.kind is AdversaryKind.WHITENOISE:
        return WhitenoiseAdversary(spec.tau)
    if spec.kind is AdversaryKind.STEALTHY:
        return StealthyAdversary(spec.epsilon)
    if spec.kind is AdversaryKind.MIN_DISTORTION:
        budget = spec.budget
        return MinDistortionAdversary(budget.epsilon, budget.gamma)
    if spec.kind is AdversaryKind.SUM_CODEWORD:
        return SumCodewordAdversary(spec.delta1)
    return IdentityAdversary()


class GameArm(BaseModel):
    """One adversary at one game budget; a sweep runs many arms on shared trials"""

    model_config = ConfigDict(frozen=True)

    adversary: AdversarySpec = Field(..., description="Adversary and its parameter")
    epsilon: float = Field(..., ge=0.0, description="Game budget")


ArmLike = Union[GameArm, Tuple[Adversary, float]]


def _resolve_arm(arm: ArmLike) -> Tuple[str, Adversary, float]:
    if isinstance(arm, GameArm):
        return arm.adversary.label, build_adversary(arm.adversary), arm.epsilon
    adversary, epsilon = arm
    return adversary.label, adversary, float(epsilon)


def _run_trial(config: ExperimentConfig, arms: Sequence[Tuple[str, Adversary, float]],
               trial_index: int) -> List[TrialRecord]:
    seed = RngSeed(master=config.master_seed, stream_id=trial_index)
    sigma = config.inversion_sigma
    scheme = build_scheme(config, seed)
    sample = scheme.sample(seed.derive(_SAMPLE))

    clean_view = inversion_channel(sample, sigma, seed.derive(_CLEAN_CHANNEL))
    detected_before = scheme.detect(clean_view).watermarked
    observed = inversion_channel(sample, sigma, seed.derive(_ATTACK_CHANNEL))

    records = []
    for label, adversary, epsilon in arms:
        # Arms share keys, samples and channel draws; only registries are private
        arm_scheme = scheme.fork() if isinstance(scheme, BackdooredScheme) else scheme
        oracle = WatermarkOracle(arm_scheme, seed)
        outcome = adversary.attack(observed, oracle, seed.derive(_ADVERSARY))

        violation = outcome.realized_l2 > epsilon + BUDGET_TOLERANCE
        detector_view = inversion_channel(outcome.perturbed, sigma, seed.derive(_DETECT_CHANNEL))
        removed = not arm_scheme.detect(detector_view).watermarked

        records.append(TrialRecord(
            trial_index=trial_index,
            adversary=label,
            epsilon=epsilon,
            watermark_detected_before=detected_before,
            removal_success=removed and not violation,
            realized_l2=outcome.realized_l2,
            bits_flipped_fraction=bits_flipped(sample, outcome.perturbed),
            budget_violation=violation,
        ))
    return records


def _run_trial_block(config: ExperimentConfig, arms, indices: Sequence[int]) -> List[List[TrialRecord]]:
    return [_run_trial(config, arms, index) for index in indices]


def sweep_removal_game(config: ExperimentConfig, arms: Sequence[ArmLike], workers: int = 1,
                       progress: bool = False) -> List[List[TrialRecord]]:
    """Run the removal game for several arms on matched trials; one record list per arm"""
    resolved = [_resolve_arm(arm) for arm in arms]
    indices = list(range(config.trials))

    if workers > 1:
        blocks = [indices[start::workers] for start in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trial_block, config, resolved, block) for block in blocks if block]
            per_trial = [records for future in futures for records in future.result()]
    else:
        iterator = tqdm(indices, desc="trials", leave=False, disable=not progress)
        per_trial = [_run_trial(config, resolved, index) for index in iterator]

    per_trial.sort(key=lambda records: records[0].trial_index)
    return [[records[arm] for records in per_trial] for arm in range(len(resolved))]


def removal_game(config: ExperimentConfig, adversary: Optional[Adversary] = None,
                 workers: int = 1) -> List[TrialRecord]:
    """REM: per trial keygen, sample, attack through the channel, detect; b = removed within budget"""
    arm: ArmLike = GameArm(adversary=config.adversary, epsilon=config.epsilon)
    if adversary is not None:
        arm = (adversary, config.epsilon)
    return sweep_removal_game(config, [arm], workers=workers)[0]


def asr_estimate(records: Sequence[TrialRecord], confidence: float = 0.95) -> RateEstimate:
    """Attack success rate over trials whose clean sample was detected, with a Wilson interval"""
    counted = [record for record in records if record.watermark_detected_before]
    excluded = len(records) - len(counted)
    if not counted:
        return RateEstimate(rate=float("nan"), ci_low=0.0, ci_high=1.0, successes=0, trials=0, excluded=excluded)
    successes = sum(record.removal_success for record in counted)
    low, high = wilson_interval(successes, len(counted), confidence)
    return RateEstimate(rate=successes / len(counted), ci_low=low, ci_high=high,
                        successes=successes, trials=len(counted), excluded=excluded)


def whitenoise_tau_grid(epsilon: float, points: int = WHITENOISE_GRID_POINTS) -> List[float]:
    """Evenly spaced whitenoise levels on (0, epsilon]"""
    return [epsilon * k / points for k in range(1, points + 1)]


def advantage(records_a: Sequence[TrialRecord],
              records_w: Union[Mapping[float, Sequence[TrialRecord]], Sequence[TrialRecord]],
              epsilon: Optional[float] = None, confidence: float = 0.95) -> AdvantageEstimate:
    """ASR(A) minus the best whitenoise ASR over tau <= epsilon, with a Newcombe interval"""
    if not isinstance(records_w, Mapping):
        records_w = {float("nan"): records_w}
    if epsilon is not None:
        records_w = {tau: recs for tau, recs in records_w.items()
                     if np.isnan(tau) or tau <= epsilon + BUDGET_TOLERANCE}
    if not records_w:
        raise ParameterError("no whitenoise records within the budget")

    estimate_a = asr_estimate(records_a, confidence)
    estimates = {tau: asr_estimate(recs, confidence) for tau, recs in records_w.items()}
    best_tau = max(estimates, key=lambda tau: np.nan_to_num(estimates[tau].rate, nan=-1.0))
    best = estimates[best_tau]
    if estimate_a.trials == 0 or best.trials == 0:
        raise ParameterError("advantage needs counted trials on both sides")

    delta, low, high = two_proportion_interval(
        estimate_a.successes, estimate_a.trials, best.successes, best.trials, confidence
    )
    return AdvantageEstimate(delta=delta, ci_low=low, ci_high=high,
                             best_tau=None if np.isnan(best_tau) else best_tau)


class Distinguisher(ABC):
    """Guesses whether a challenge latent is watermarked (1) or Gauss() (0)"""

    name: DistinguisherName

    @abstractmethod
    def guess(self, challenge: np.ndarray, oracle_samples: Sequence[np.ndarray]) -> int:
        """Return the guessed bit"""


class ConstantDistinguisher(Distinguisher):
    name = DistinguisherName.CONSTANT

    def __init__(self, bit: int = 0):
        self.bit = bit

    def guess(self, challenge, oracle_samples):
        return self.bit


class SignCorrelationDistinguisher(Distinguisher):
    """Says watermarked when the challenge's signs agree with some oracle copy far beyond 1/2"""

    name = DistinguisherName.SIGN_CORRELATION

    def __init__(self, agreement_threshold: float = 0.75):
        self.agreement_threshold = agreement_threshold

    def guess(self, challenge, oracle_samples):
        if not len(oracle_samples):
            return 0
        challenge_bits = signs(challenge)
        agreement = max(float(np.mean(challenge_bits == signs(copy))) for copy in oracle_samples)
        return int(agreement >= self.agreement_threshold)


class KsNormalDistinguisher(Distinguisher):
    """Says not-Gauss when the challenge's coordinates fail a KS normality test"""

    name = DistinguisherName.KS_NORMAL

    def __init__(self, level: float = 0.01):
        self.level = level

    def guess(self, challenge, oracle_samples):
        return int(ks_normal_stat(challenge) > ks_critical_value(len(challenge), self.level))


def build_distinguisher(name: DistinguisherName) -> Distinguisher:
    name = DistinguisherName(name)
    if name is DistinguisherName.SIGN_CORRELATION:
        return SignCorrelationDistinguisher()
    if name is DistinguisherName.KS_NORMAL:
        return KsNormalDistinguisher()
    return ConstantDistinguisher()


SchemeFactory = Callable[[RngSeed], WatermarkScheme]


def _win_rate(wins: int, trials: int, confidence: float) -> RateEstimate:
    low, high = wilson_interval(wins, trials, confidence)
    return RateEstimate(rate=wins / trials, ci_low=low, ci_high=high, successes=wins, trials=trials)


def ind_game(scheme_factory: SchemeFactory, distinguisher: Distinguisher, trials: int,
             oracle_budget: int = 0, master_seed: int = 0, confidence: float = 0.95) -> RateEstimate:
    """IND: fair coin picks Gauss() or a watermarked sample; the distinguisher guesses the coin"""
    if trials < 1 or oracle_budget < 0:
        raise ParameterError("need trials >= 1 and oracle_budget >= 0")
    wins = 0
    for trial in range(trials):
        seed = RngSeed(master=master_seed, stream_id=trial)
        scheme = scheme_factory(seed.derive(_KEY))
        coin = int(seed.generator(_COIN).integers(0, 2))
        if coin == 0:
            challenge = sample_std_gauss(scheme.d, seed.derive(_CHALLENGE))
        else:
            challenge = scheme.sample(seed.derive(_CHALLENGE))
        oracle = WatermarkOracle(scheme, seed)
        copies = [oracle.next() for _ in range(oracle_budget)]
        wins += int(distinguisher.guess(challenge, copies) == coin)

    estimate = _win_rate(wins, trials, confidence)
    logger.info("IND game: %s won %d/%d", distinguisher.name.value, wins, trials)
    return estimate


def stealthiness_game(scheme_factory: SchemeFactory, adversary: Adversary, distinguisher: Distinguisher,
                      trials: int, master_seed: int = 0, confidence: float = 0.95) -> RateEstimate:
    """IND variant whose watermarked challenge is an attacked sample"""
    if trials < 1:
        raise ParameterError("need trials >= 1")
    wins = 0
    for trial in range(trials):
        seed = RngSeed(master=master_seed, stream_id=trial)
        scheme = scheme_factory(seed.derive(_KEY))
        coin = int(seed.generator(_COIN).integers(0, 2))
        if coin == 0:
            challenge = sample_std_gauss(scheme.d, seed.derive(_CHALLENGE))
        else:
            sample = scheme.sample(seed.derive(_CHALLENGE))
            challenge = adversary.attack(sample, WatermarkOracle(scheme, seed), seed.derive(_ADVERSARY)).perturbed
        wins += int(distinguisher.guess(challenge, []) == coin)
    return _win_rate(wins, trials, confidence)


def scheme_factory_for(config: ExperimentConfig) -> SchemeFactory:
    """Factory keying the configured codec and defense from a seed"""

    def factory(seed: RngSeed) -> WatermarkScheme:
        return build_scheme(config, seed)

    return factory
