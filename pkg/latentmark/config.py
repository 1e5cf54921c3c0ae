"""
Scenario configuration: TOML sections validated by pydantic, with errors
anchored to the offending line
"""

import json
import re
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt, ValidationError, model_validator

from .errors import ConfigError
from .models import (
    AdversaryKind, AdversarySpec, AttackerCapability, CodecName, DefenseKind, DistinguisherName,
    ExperimentConfig,
)


SCENARIO_NAMES = (
    "bits_vs_distortion",
    "asr_vs_distortion",
    "defense_equalization",
    "ind_distinguishers",
    "counterexample",
    "overhead_bench",
    "false_alarm_calibration",
    "stealthiness_contrast",
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScenarioSection(_Section):
    name: str = Field(..., description="Scenario to run")
    description: str = Field("", description="Free text carried into the summary")

    @model_validator(mode="after")
    def _known_scenario(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; expected one of {', '.join(SCENARIO_NAMES)}")
        return self


class SchemeSection(_Section):
    codec: CodecName = Field(CodecName.PRC, description="Watermark codec")
    defense: DefenseKind = Field(DefenseKind.NONE, description="Post-transformation defense")
    d: PositiveInt = Field(1024, description="Latent dimension")
    t: PositiveInt = Field(64, description="PRC parity checks")
    w: PositiveInt = Field(3, description="PRC check weight")
    m: PositiveInt = Field(64, description="Gaussian Shading message length")
    alpha: float = Field(0.01, gt=0.0, lt=1.0, description="Target false alarm")
    backdoor_eta: float = Field(1e-6, gt=0.0, lt=1.0, description="Backdoored detector cosine tolerance")


class AdversarySection(_Section):
    kinds: List[AdversaryKind] = Field(
        default_factory=lambda: [AdversaryKind.WHITENOISE, AdversaryKind.STEALTHY],
        description="Adversaries compared in the sweep",
    )
    gamma: float = Field(0.02, gt=0.0, description="Minimal-distortion residual magnitude")
    delta1: Optional[NonNegativeFloat] = Field(None, description="Sum-of-codewords scale; None derives it from epsilon")


class GameSection(_Section):
    trials: PositiveInt = Field(500, description="Trials per sweep point")
    capability: AttackerCapability = Field(AttackerCapability.AC1, description="Attacker capability")
    sigma_inv: Optional[NonNegativeFloat] = Field(None, description="Inversion noise; None uses the capability preset")
    master_seed: int = Field(0, ge=0, lt=2**64, description="Master seed")
    oracle_budget: int = Field(1, ge=0, description="Oracle copies available to IND distinguishers")
    whitenoise_grid_points: int = Field(16, ge=0, description="Whitenoise levels per budget for the advantage baseline")


class SweepSection(_Section):
    epsilon: List[NonNegativeFloat] = Field(
        default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0], description="Budget grid"
    )
    t_values: List[PositiveInt] = Field(default_factory=list, description="PRC check counts to sweep")
    alphas: List[float] = Field(default_factory=lambda: [0.1, 0.01], description="False-alarm targets")
    latents: PositiveInt = Field(10_000, description="Random latents for calibration")
    codecs: List[CodecName] = Field(
        default_factory=lambda: [CodecName.GAUSSIAN_SHADING, CodecName.PRC], description="Codecs to compare"
    )
    distinguishers: List[DistinguisherName] = Field(
        default_factory=lambda: [DistinguisherName.CONSTANT, DistinguisherName.SIGN_CORRELATION],
        description="IND distinguishers",
    )
    dims: List[PositiveInt] = Field(default_factory=lambda: [1024, 4096], description="Transform benchmark dimensions")
    element_bytes: int = Field(4, description="Bytes per stored matrix element")
    repetitions: PositiveInt = Field(5, description="Timed repetitions per dimension")
    ks_level: float = Field(0.01, gt=0.0, lt=1.0, description="KS significance level")

    @model_validator(mode="after")
    def _check_values(self):
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("every alpha must lie in (0, 1)")
        if self.element_bytes not in (4, 8):
            raise ValueError("element_bytes must be 4 or 8")
        return self


class OutputSection(_Section):
    dir: str = Field("results", description="Directory for CSV, JSON and plot data")
    plotdata: bool = Field(False, description="Also write gnuplot data files")


class ScenarioConfig(_Section):
    scenario: ScenarioSection
    scheme: SchemeSection = Field(default_factory=SchemeSection)
    adversary: AdversarySection = Field(default_factory=AdversarySection)
    game: GameSection = Field(default_factory=GameSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @property
    def name(self) -> str:
        return self.scenario.name

    def experiment(self, adversary: AdversarySpec, epsilon: float, **overrides) -> ExperimentConfig:
        """Removal-game config for one arm, with optional scheme overrides"""
        fields = dict(
            codec=self.scheme.codec, defense=self.scheme.defense, d=self.scheme.d, t=self.scheme.t,
            w=self.scheme.w, m=self.scheme.m, alpha=self.scheme.alpha, backdoor_eta=self.scheme.backdoor_eta,
            adversary=adversary, epsilon=epsilon, capability=self.game.capability,
            sigma_inv=self.game.sigma_inv, trials=self.game.trials, master_seed=self.game.master_seed,
        )
        fields.update(overrides)
        return ExperimentConfig(**fields)

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "ScenarioConfig":
        """Copy with command-line overrides applied and validated like file values"""
        # Unset keys stay unset so defaults derived from field presence survive
        raw = self.model_dump(mode="json", exclude_unset=True)
        if seed is not None:
            raw.setdefault("game", {})["master_seed"] = seed
        if output_dir is not None:
            raw.setdefault("output", {})["dir"] = output_dir
        try:
            return ScenarioConfig.model_validate(raw)
        except ValidationError as exc:
            first = exc.errors()[0]
            path = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"override {path}: {first['msg']}") from exc


def _locate(text: str, loc: Sequence[Union[str, int]]) -> Optional[int]:
    """1-based line of the key a validation error points at, if it can be found"""
    keys = [part for part in loc if isinstance(part, str)]
    if not keys:
        return None
    section, key = (keys[0], keys[1]) if len(keys) > 1 else (keys[0], None)
    current = None
    section_line = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[([^\]]+)\]", stripped)
        if header:
            current = header.group(1).strip()
            if current == section:
                section_line = number
            continue
        if current == section and key and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return number
    return section_line


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            found = re.search(r"line (\d+)", str(exc))
            line = int(found.group(1)) if found else None
        raise ConfigError(f"{source}: {exc}", line=line) from exc

    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{source}: {path}: {first['msg']}", line=_locate(text, first["loc"])) from exc


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def _toml_value(value: Any) -> str:
    # JSON literals for strings, numbers, booleans and flat lists are valid TOML
    return json.dumps(value)


def render_config(config: ScenarioConfig) -> str:
    """Fully resolved config, defaults included, as TOML text"""
    resolved: Dict[str, Dict[str, Any]] = config.model_dump(mode="json")
    lines = []
    for section in ("scenario", "scheme", "adversary", "game", "sweep", "output"):
        lines.append(f"[{section}]")
        for key, value in resolved[section].items():
            if value is None:
                lines.append(f"# {key} = (unset)")
            else:
                lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)
