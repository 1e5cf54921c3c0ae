import numpy as np
import pytest

from latentmark.errors import ParameterError
from latentmark.models import (
    AdversaryKind, AdversarySpec, AttackerCapability, CodecName, DefenseKind, ExperimentConfig, RngSeed,
    TrialRecord,
)
from latentmark.services.attacks import MinDistortionAdversary, StealthyAdversary, WhitenoiseAdversary
from latentmark.services.codecs import make_scheme
from latentmark.services.defense import BackdooredScheme, EnhancedScheme
from latentmark.services.games import (
    BUDGET_TOLERANCE, ConstantDistinguisher, GameArm, KsNormalDistinguisher, SignCorrelationDistinguisher,
    WatermarkOracle, advantage, asr_estimate, build_scheme, channel_detection_probability,
    inversion_channel, ind_game, oracle_next, removal_game, scheme_factory_for, stealthiness_game,
    sweep_removal_game, whitenoise_tau_grid,
)


def _config(**overrides) -> ExperimentConfig:
    fields = dict(
        codec=CodecName.PRC, d=256, t=32, w=3, alpha=0.01,
        adversary=AdversarySpec(kind=AdversaryKind.IDENTITY), epsilon=0.0, trials=30, master_seed=11,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


def _record(index: int, detected: bool, success: bool) -> TrialRecord:
    return TrialRecord(
        trial_index=index, watermark_detected_before=detected, removal_success=success,
        realized_l2=0.0, bits_flipped_fraction=0.0, budget_violation=False,
    )


def _records(successes: int, total: int):
    return [_record(i, True, i < successes) for i in range(total)]


def test_inversion_channel():
    x = np.ones(8)
    assert np.array_equal(inversion_channel(x, 0.0, RngSeed(master=1)), x)
    noisy = inversion_channel(x, 0.5, RngSeed(master=1))
    assert not np.array_equal(noisy, x)
    assert np.array_equal(noisy, inversion_channel(x, 0.5, RngSeed(master=1)))
    with pytest.raises(ParameterError):
        inversion_channel(x, -0.1, RngSeed(master=1))


def test_capability_presets():
    assert _config().inversion_sigma == 0.0
    assert _config(capability=AttackerCapability.AC2).inversion_sigma > 0.0
    assert _config(capability=AttackerCapability.AC3, sigma_inv=0.3).inversion_sigma == 0.3


def test_oracle_is_reproducible_and_fresh(prc_scheme):
    seed = RngSeed(master=5)
    first = WatermarkOracle(prc_scheme, seed)
    second = WatermarkOracle(prc_scheme, seed)
    a, b = first.next(), first.next()
    assert np.array_equal(a, second.next())
    assert not np.array_equal(a, b)
    assert np.array_equal(oracle_next(prc_scheme, seed, 1), b)
    assert prc_scheme.detect(a).watermarked


def test_build_scheme_wraps_defenses():
    seed = RngSeed(master=3)
    assert isinstance(build_scheme(_config(defense=DefenseKind.HAAR), seed), EnhancedScheme)
    assert isinstance(build_scheme(_config(defense=DefenseKind.BACKDOOR), seed), BackdooredScheme)
    assert build_scheme(_config(), seed).name == "prc"


def test_identity_never_removes():
    records = removal_game(_config())
    assert len(records) == 30
    assert all(record.watermark_detected_before for record in records)
    assert asr_estimate(records).rate == 0.0


def test_loud_whitenoise_removes():
    config = _config(adversary=AdversarySpec(kind=AdversaryKind.WHITENOISE, tau=1000.0), epsilon=1000.0)
    assert asr_estimate(removal_game(config)).rate >= 0.8


def test_successes_respect_the_budget():
    config = _config(trials=20)
    arms = [(MinDistortionAdversary(2.0, 0.5), 2.0), (StealthyAdversary(4.0), 4.0)]
    for records in sweep_removal_game(config, arms):
        for record in records:
            if record.removal_success:
                assert record.realized_l2 <= record.epsilon + BUDGET_TOLERANCE
            assert record.budget_violation == (record.realized_l2 > record.epsilon + BUDGET_TOLERANCE)


def test_arms_share_trials():
    config = _config(trials=10)
    arm = GameArm(adversary=AdversarySpec(kind=AdversaryKind.STEALTHY, epsilon=3.0), epsilon=3.0)
    first, second = sweep_removal_game(config, [arm, arm])
    assert first == second


def test_whitenoise_at_tau_equal_budget_is_admissible():
    config = _config(trials=5)
    (records,) = sweep_removal_game(config, [(WhitenoiseAdversary(2.0), 2.0)])
    assert not any(record.budget_violation for record in records)


def test_workers_do_not_change_results():
    config = _config(trials=8)
    arms = [GameArm(adversary=AdversarySpec(kind=AdversaryKind.STEALTHY, epsilon=4.0), epsilon=4.0)]
    assert sweep_removal_game(config, arms, workers=1) == sweep_removal_game(config, arms, workers=2)


def test_asr_excludes_undetected_trials():
    records = [_record(0, True, True), _record(1, True, False), _record(2, False, False)]
    estimate = asr_estimate(records)
    assert estimate.rate == 0.5
    assert estimate.trials == 2
    assert estimate.excluded == 1
    assert np.isnan(asr_estimate([_record(0, False, False)]).rate)


def test_advantage_takes_best_whitenoise_within_budget():
    whitenoise = {0.5: _records(2, 10), 1.0: _records(5, 10), 2.0: _records(10, 10)}
    estimate = advantage(_records(8, 10), whitenoise, epsilon=1.0)
    assert estimate.best_tau == 1.0
    assert estimate.delta == pytest.approx(0.3)
    assert estimate.ci_low < 0.3 < estimate.ci_high


def test_advantage_without_whitenoise_in_budget():
    with pytest.raises(ParameterError):
        advantage(_records(1, 10), {4.0: _records(1, 10)}, epsilon=1.0)


def test_whitenoise_grid():
    assert whitenoise_tau_grid(1.0, 4) == [0.25, 0.5, 0.75, 1.0]


def test_channel_detection_probability():
    assert channel_detection_probability(0.0, 64, 3, 0.01) == pytest.approx(1.0)
    assert channel_detection_probability(100.0, 64, 3, 0.01) < 0.05


@pytest.mark.parametrize("sigma_inv", [0.5, 1.0])
def test_channel_detection_matches_closed_form(sigma_inv):
    detected = 0
    draws = 0
    for key_index in range(8):
        scheme = make_scheme(CodecName.PRC, 1024, RngSeed(master=60, stream_id=key_index), t=64, w=3, alpha=0.01)
        for index in range(75):
            seed = RngSeed(master=61, stream_id=1000 * key_index + index)
            received = inversion_channel(scheme.sample(seed), sigma_inv, seed.derive(1))
            detected += scheme.detect(received).watermarked
            draws += 1
    expected = channel_detection_probability(sigma_inv, 64, 3, 0.01)
    assert abs(detected / draws - expected) < 0.08


def test_constant_distinguisher_wins_half():
    factory = scheme_factory_for(_config())
    estimate = ind_game(factory, ConstantDistinguisher(), trials=200, master_seed=1, confidence=0.999)
    assert estimate.ci_low <= 0.5 <= estimate.ci_high


@pytest.mark.slow
def test_sign_correlation_breaks_gaussian_shading_only():
    gs = scheme_factory_for(_config(codec=CodecName.GAUSSIAN_SHADING, d=1024, m=64))
    prc = scheme_factory_for(_config(d=1024, t=64))
    distinguisher = SignCorrelationDistinguisher()
    assert ind_game(gs, distinguisher, trials=500, oracle_budget=1, master_seed=2).rate >= 0.95
    estimate = ind_game(prc, distinguisher, trials=500, oracle_budget=1, master_seed=2, confidence=0.999)
    assert estimate.ci_low <= 0.5 <= estimate.ci_high


def test_ind_game_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        ind_game(scheme_factory_for(_config()), ConstantDistinguisher(), trials=0)


def test_ks_distinguisher_spots_min_distortion_not_stealthy():
    factory = scheme_factory_for(_config(d=1024, t=64))
    distinguisher = KsNormalDistinguisher(0.01)
    stealthy = stealthiness_game(factory, StealthyAdversary(4.0), distinguisher, trials=100, master_seed=4)
    collapsed = stealthiness_game(factory, MinDistortionAdversary(4.0, 0.02), distinguisher, trials=100, master_seed=4)
    assert collapsed.rate > stealthy.rate + 0.2
