import math

import numpy as np
import pytest

from latentmark.errors import ParameterError
from latentmark.models import AdversaryKind, RngSeed
from latentmark.services.attacks import (
    IdentityAdversary, MinDistortionAdversary, StealthyAdversary, WhitenoiseAdversary, bits_flipped,
    min_distortion_attack, stealthy_attack, stealthy_brute_force, whitenoise_attack,
)
from latentmark.services.core_math import sample_std_gauss, whitenoise_flip_probability

EXAMPLE = np.array([0.1, -0.2, 3.0, -4.0])


def test_stealthy_flips_smallest_within_budget():
    outcome = stealthy_attack(EXAMPLE, 0.5)
    assert np.allclose(outcome.perturbed, [-0.1, 0.2, 3.0, -4.0])
    assert outcome.flipped_count == 2
    assert outcome.realized_l2 == pytest.approx(math.sqrt(0.2), abs=1e-12)
    assert not outcome.no_op


def test_stealthy_preserves_magnitudes():
    s = sample_std_gauss(512, RngSeed(master=4))
    outcome = stealthy_attack(s, 3.0)
    assert np.array_equal(np.abs(outcome.perturbed), np.abs(s))
    assert outcome.realized_l2 <= 3.0


def test_stealthy_zero_budget_is_no_op():
    outcome = stealthy_attack(EXAMPLE, 0.0)
    assert outcome.no_op
    assert np.array_equal(outcome.perturbed, EXAMPLE)
    assert outcome.realized_l2 == 0.0


def test_stealthy_large_budget_flips_everything():
    outcome = stealthy_attack(EXAMPLE, 2 * np.linalg.norm(EXAMPLE) + 1e-9)
    assert np.allclose(outcome.perturbed, -EXAMPLE)
    assert outcome.flipped_count == 4


def test_stealthy_ties_go_to_lower_index():
    outcome = stealthy_attack([0.5, -0.5, 2.0], 1.0)
    assert outcome.flipped_count == 1
    assert outcome.perturbed.tolist() == [-0.5, -0.5, 2.0]


def test_stealthy_matches_exhaustive_optimum():
    generator = np.random.default_rng(2024)
    for _ in range(100):
        d = int(generator.integers(2, 13))
        s = generator.standard_normal(d)
        epsilon = float(generator.uniform(0.0, 2.0 * np.linalg.norm(s)))
        assert stealthy_attack(s, epsilon).flipped_count == stealthy_brute_force(s, epsilon)


def test_brute_force_is_limited_to_small_inputs():
    with pytest.raises(ParameterError):
        stealthy_brute_force(np.ones(17), 1.0)


def test_min_distortion_example():
    outcome = min_distortion_attack(EXAMPLE, 0.5, 0.02)
    assert np.allclose(outcome.perturbed, [-0.01, 0.01, 3.0, -4.0])
    assert outcome.flipped_count == 2


def test_min_distortion_cannot_afford_anything():
    outcome = min_distortion_attack([5.0, -6.0], 0.1, 0.02)
    assert outcome.no_op
    assert outcome.flipped_count == 0


def test_min_distortion_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        min_distortion_attack(EXAMPLE, 0.5, 0.0)
    with pytest.raises(ParameterError):
        min_distortion_attack(EXAMPLE, -1.0, 0.02)


def test_min_distortion_flips_more_than_stealthy():
    s = sample_std_gauss(1024, RngSeed(master=8))
    assert min_distortion_attack(s, 2.0, 0.02).flipped_count > stealthy_attack(s, 2.0).flipped_count


def test_whitenoise_realized_distortion_is_tau():
    s = sample_std_gauss(256, RngSeed(master=1))
    outcome = whitenoise_attack(s, 3.0, RngSeed(master=2))
    assert outcome.realized_l2 == pytest.approx(3.0, abs=1e-9)
    assert whitenoise_attack(s, 0.0, RngSeed(master=2)).realized_l2 == 0.0
    with pytest.raises(ParameterError):
        whitenoise_attack(s, -1.0, RngSeed(master=2))


def test_whitenoise_flip_fraction_matches_closed_form():
    d, tau, trials = 16384, 45.0, 60
    fractions = []
    for trial in range(trials):
        s = sample_std_gauss(d, RngSeed(master=31, stream_id=trial))
        outcome = whitenoise_attack(s, tau, RngSeed(master=32, stream_id=trial))
        fractions.append(bits_flipped(s, outcome.perturbed))
    fractions = np.asarray(fractions)
    standard_error = fractions.std(ddof=1) / math.sqrt(trials)
    assert abs(fractions.mean() - whitenoise_flip_probability(tau, d)) <= 3 * standard_error


def test_stealthy_reaches_five_percent_at_full_scale():
    d = 16384
    fractions = [
        stealthy_attack(sample_std_gauss(d, RngSeed(master=5, stream_id=i)), 3.5).flipped_count / d
        for i in range(20)
    ]
    assert np.mean(fractions) >= 0.05


def test_adversary_classes_dispatch():
    s = sample_std_gauss(64, RngSeed(master=3))
    seed = RngSeed(master=4)
    assert IdentityAdversary().attack(s, None, seed).no_op
    assert WhitenoiseAdversary(1.0).attack(s, None, seed).realized_l2 == pytest.approx(1.0)
    assert StealthyAdversary(1.0).attack(s, None, seed).realized_l2 <= 1.0
    assert MinDistortionAdversary(1.0, 0.02).label == AdversaryKind.MIN_DISTORTION.value
