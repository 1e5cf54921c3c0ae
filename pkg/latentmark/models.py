from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator


def _readonly(values: Any, dtype) -> np.ndarray:
    """Copy into a contiguous read-only array of the given dtype"""
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


class CodecName(str, Enum):
    PRC = "prc"
    GAUSSIAN_SHADING = "gs"


class DefenseKind(str, Enum):
    NONE = "none"
    HAAR = "haar"
    BACKDOOR = "backdoor"


class AdversaryKind(str, Enum):
    IDENTITY = "identity"
    WHITENOISE = "whitenoise"
    STEALTHY = "stealthy"
    MIN_DISTORTION = "min_distortion"
    SUM_CODEWORD = "sum_codeword"


class AttackerCapability(str, Enum):
    AC1 = "AC1"  # exact inversion
    AC2 = "AC2"  # inversion conditioned on the generating prompt
    AC3 = "AC3"  # inversion conditioned on the null prompt


# Surrogate inversion-noise levels used when a config names a capability but no sigma_inv
CAPABILITY_SIGMA = {
    AttackerCapability.AC1: 0.0,
    AttackerCapability.AC2: 0.15,
    AttackerCapability.AC3: 0.10,
}


class ProbeMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


class DistinguisherName(str, Enum):
    CONSTANT = "constant"
    SIGN_CORRELATION = "sign_correlation"
    KS_NORMAL = "ks_normal"


class RngSeed(BaseModel):
    """Counter-based seed: (master, stream_id) names one reproducible random stream"""

    model_config = ConfigDict(frozen=True)

    master: int = Field(..., ge=0, lt=2**64, description="Experiment-wide master seed")
    stream_id: int = Field(0, ge=0, lt=2**64, description="Stream index (trial index in games)")

    def generator(self, *path: int) -> np.random.Generator:
        """Philox generator for this stream, optionally narrowed to a sub-stream path"""
        sequence = np.random.SeedSequence(self.master, spawn_key=(self.stream_id, *path))
        return np.random.Generator(np.random.Philox(sequence))

    def for_stream(self, stream_id: int) -> "RngSeed":
        return RngSeed(master=self.master, stream_id=stream_id)

    def derive(self, *path: int) -> "RngSeed":
        """Independent seed for a named sub-stream, for APIs that take an RngSeed"""
        sequence = np.random.SeedSequence(self.master, spawn_key=(self.stream_id, *path))
        master, stream_id = sequence.generate_state(2, dtype=np.uint64)
        return RngSeed(master=int(master), stream_id=int(stream_id))


class DetectorVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    watermarked: bool = Field(..., description="Detector output (True means declared watermarked)")
    statistic: float = Field(..., description="Satisfied-check count or message-bit agreement")
    threshold: float = Field(..., description="Decision threshold on the statistic")

    @model_validator(mode="after")
    def _verdict_matches_threshold(self):
        if self.watermarked != (self.statistic >= self.threshold):
            raise ValueError("watermarked must equal statistic >= threshold")
        return self


class PrcKey(BaseModel):
    """Secret key of the sparse-parity pseudorandom-code surrogate"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int = Field(..., ge=1, description="Latent dimension (codeword length)")
    t: int = Field(..., ge=1, description="Number of parity checks")
    w: int = Field(..., ge=1, description="Check weight (indices per check)")
    parity_rows: np.ndarray = Field(..., description="(t, w) array of check indices")
    syndrome: np.ndarray = Field(..., description="Keyed target parities, length t")
    pad: np.ndarray = Field(..., description="Keyed one-time pad on sign bits, length d")
    key_material: bytes = Field(..., description="Secret the syndrome and pad derive from")
    alpha: float = Field(..., gt=0.0, lt=1.0, description="Target false-alarm rate")

    _solver: Any = PrivateAttr(default=None)

    @field_validator("parity_rows", mode="before")
    @classmethod
    def _rows_array(cls, value):
        return _readonly(value, np.int64)

    @field_validator("syndrome", "pad", mode="before")
    @classmethod
    def _bit_array(cls, value):
        return _readonly(value, np.uint8)

    @model_validator(mode="after")
    def _check_structure(self):
        if self.t > self.d or self.w > self.d:
            raise ValueError("need 1 <= t <= d and 1 <= w <= d")
        if self.parity_rows.shape != (self.t, self.w):
            raise ValueError(f"parity_rows must have shape ({self.t}, {self.w})")
        if self.parity_rows.size and (self.parity_rows.min() < 0 or self.parity_rows.max() >= self.d):
            raise ValueError("parity indices must lie in [0, d)")
        if any(len(set(row.tolist())) != self.w for row in self.parity_rows):
            raise ValueError("every parity row needs w distinct indices")
        if self.syndrome.shape != (self.t,) or self.pad.shape != (self.d,):
            raise ValueError("syndrome must have length t and pad length d")
        return self


class GsKey(BaseModel):
    """Secret key of Gaussian Shading"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int = Field(..., ge=1, description="Latent dimension")
    m: int = Field(..., ge=1, description="Message length; each bit is repeated d/m times")
    stream_key: bytes = Field(..., description="Keystream secret")
    message: np.ndarray = Field(..., description="Designated watermark message, length m")
    alpha: float = Field(..., gt=0.0, lt=1.0, description="Target false-alarm rate")

    @field_validator("message", mode="before")
    @classmethod
    def _bit_array(cls, value):
        return _readonly(value, np.uint8)

    @model_validator(mode="after")
    def _check_repetition(self):
        if self.d % self.m != 0:
            raise ValueError("message length m must divide d")
        if self.message.shape != (self.m,):
            raise ValueError("message must have length m")
        return self

    @property
    def repetitions(self) -> int:
        return self.d // self.m


class AttackBudget(BaseModel):
    epsilon: float = Field(..., ge=0.0, description="l2 budget of the removal game")
    gamma: float = Field(0.0, ge=0.0, description="Residual magnitude of the minimal-distortion attack")


class AttackOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    perturbed: np.ndarray = Field(..., description="Attacked latent")
    realized_l2: float = Field(..., ge=0.0, description="l2 distance from the attacked input")
    flipped_count: int = Field(..., ge=0, description="Coordinates whose sign bit changed")
    no_op: bool = Field(False, description="Attack had nothing it could afford to change")

    @field_validator("perturbed", mode="before")
    @classmethod
    def _latent_array(cls, value):
        return _readonly(value, np.float64)


class AdversarySpec(BaseModel):
    """Which adversary a game runs and with what parameter"""

    model_config = ConfigDict(frozen=True)

    kind: AdversaryKind = Field(..., description="Adversary family")
    tau: float = Field(0.0, ge=0.0, description="Whitenoise level")
    epsilon: float = Field(0.0, ge=0.0, description="Attack budget (stealthy / min-distortion)")
    gamma: float = Field(0.02, gt=0.0, description="Minimal-distortion residual magnitude")
    delta1: float = Field(1e-3, ge=0.0, description="Sum-of-codewords scale")

    @property
    def label(self) -> str:
        return self.kind.value

    @property
    def budget(self) -> AttackBudget:
        return AttackBudget(epsilon=self.epsilon, gamma=self.gamma)


class ExperimentConfig(BaseModel):
    """Parameters of one removal-game experiment"""

    model_config = ConfigDict(frozen=True)

    codec: CodecName = Field(CodecName.PRC, description="Watermark codec")
    defense: DefenseKind = Field(DefenseKind.NONE, description="Post-transformation defense")
    d: int = Field(1024, ge=1, description="Latent dimension")
    t: int = Field(64, ge=1, description="PRC parity checks")
    w: int = Field(3, ge=1, description="PRC check weight")
    m: int = Field(64, ge=1, description="Gaussian Shading message length")
    alpha: float = Field(0.01, gt=0.0, lt=1.0, description="Target false alarm")
    adversary: AdversarySpec = Field(..., description="Adversary under test")
    epsilon: float = Field(..., ge=0.0, description="Game budget")
    capability: AttackerCapability = Field(AttackerCapability.AC1, description="Attacker capability")
    sigma_inv: Optional[float] = Field(None, ge=0.0, description="Inversion-noise std; None uses the capability preset")
    trials: int = Field(500, ge=1, description="Number of trials")
    master_seed: int = Field(0, ge=0, lt=2**64, description="Master seed")
    backdoor_eta: float = Field(1e-6, gt=0.0, lt=1.0, description="Cosine tolerance of the backdoored detector")

    @property
    def inversion_sigma(self) -> float:
        if self.sigma_inv is not None:
            return self.sigma_inv
        return CAPABILITY_SIGMA[self.capability]


class TrialRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    trial_index: int = Field(..., ge=0, description="Trial index (also its seed stream)")
    adversary: str = Field("", description="Adversary label")
    epsilon: float = Field(0.0, ge=0.0, description="Game budget of this trial")
    watermark_detected_before: bool = Field(..., description="Clean sample detected through the channel")
    removal_success: bool = Field(..., description="b of the removal game")
    realized_l2: float = Field(..., ge=0.0, description="Distortion the adversary introduced")
    bits_flipped_fraction: float = Field(..., ge=0.0, le=1.0, description="Sign bits changed, as a fraction of d")
    budget_violation: bool = Field(..., description="Realized distortion exceeded the budget")

    @model_validator(mode="after")
    def _success_is_admissible(self):
        if self.removal_success and self.budget_violation:
            raise ValueError("a removal success cannot violate the budget")
        return self


class RateEstimate(BaseModel):
    rate: float = Field(..., description="Point estimate")
    ci_low: float = Field(..., description="Lower confidence bound")
    ci_high: float = Field(..., description="Upper confidence bound")
    successes: int = Field(..., description="Counted successes")
    trials: int = Field(..., description="Counted trials")
    excluded: int = Field(0, description="Trials left out of the denominator")

    @property
    def ci(self) -> Tuple[float, float]:
        return (self.ci_low, self.ci_high)


class AdvantageEstimate(BaseModel):
    delta: float = Field(..., description="ASR(adversary) minus best whitenoise ASR")
    ci_low: float = Field(..., description="Lower bound of the two-proportion interval")
    ci_high: float = Field(..., description="Upper bound of the two-proportion interval")
    best_tau: Optional[float] = Field(None, description="Whitenoise level achieving the best ASR")

    @property
    def ci(self) -> Tuple[float, float]:
        return (self.ci_low, self.ci_high)


class WellBehavedReport(BaseModel):
    mode: ProbeMode = Field(..., description="Enumeration mode")
    gamma_bits: int = Field(..., description="Hamming radius probed")
    trials: int = Field(..., description="Watermarked samples probed")
    patterns_checked: int = Field(..., description="Sign patterns lifted and detected")
    failures: int = Field(..., description="Patterns declared non-watermarked")
    failure_fraction: float = Field(..., description="failures / patterns_checked")

    @property
    def passed(self) -> bool:
        return self.failures == 0


class ScenarioSummary(BaseModel):
    scenario: str = Field(..., description="Scenario name")
    version: str = Field(..., description="Software version")
    master_seed: int = Field(..., description="Master seed")
    csv_schema: Dict[str, Any] = Field(..., description="Schema version and column list")
    parameters: Dict[str, Any] = Field(..., description="Fully resolved config")
    results: Dict[str, Any] = Field(default_factory=dict, description="Aggregate statistics")
    notes: List[str] = Field(default_factory=list, description="Assumptions and logged discrepancies")


class TransformBenchRow(BaseModel):
    """Storage and timing of one dense orthonormal transform"""

    d: int = Field(..., ge=1, description="Transform dimension")
    element_bytes: int = Field(..., description="Bytes per stored element (4 or 8)")
    storage_bytes: int = Field(..., description="Closed-form d^2 * element_bytes")
    measured_bytes: Optional[int] = Field(None, description="Bytes held by the materialized matrix")
    median_seconds: Optional[float] = Field(None, description="Median of apply + invert wall time")
    iqr_seconds: Optional[float] = Field(None, description="Interquartile range of the same timings")
    repetitions: int = Field(..., ge=1, description="Timed repetitions")
    skipped: bool = Field(False, description="Dimension skipped for lack of memory")
    note: str = Field("", description="Why the row was skipped, if it was")
