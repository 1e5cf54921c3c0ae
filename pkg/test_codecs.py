import itertools

import numpy as np
import pytest
from scipy import stats

from latentmark.errors import DimensionMismatchError, InconsistentSystemError, ParameterError
from latentmark.models import CodecName, GsKey, PrcKey, RngSeed
from latentmark.services.codecs import (
    GS_NONCE, Gf2System, gs_detect, gs_keygen, gs_quantiles, gs_sample, gs_statistics, key_from_record, key_to_record,
    keystream, load_key, make_scheme, prc_breaking_radius, prc_check_satisfaction_probability, prc_detect, prc_map,
    prc_keygen, prc_sample, save_key,
)
from latentmark.services.core_math import binomial_threshold, sample_std_gauss, signs, std_normal_inv_cdf


def test_keystream_deterministic_and_nonce_separated():
    key = bytes(range(32))
    first = keystream(key, 100)
    assert first.shape == (100,)
    assert set(np.unique(first)) <= {0, 1}
    assert np.array_equal(first, keystream(key, 100))
    assert not np.array_equal(first, keystream(key, 100, GS_NONCE))
    # Short keys are hashed to 32 bytes
    assert keystream(b"short", 16).shape == (16,)


def test_gf2_uniform_solutions_satisfy_the_system():
    rows = np.array([[0, 1, 2], [2, 3, 4], [1, 4, 5]])
    syndrome = np.array([1, 0, 1], dtype=np.uint8)
    system = Gf2System(rows, syndrome, 6)
    generator = np.random.default_rng(0)
    seen = set()
    for _ in range(64):
        solution = system.solve_uniform(generator)
        assert np.array_equal(solution[rows].sum(axis=1) & 1, syndrome)
        seen.add(solution.tobytes())
    # Rank 3 over 6 variables leaves 8 solutions
    assert len(seen) == 8


def test_gf2_inconsistent_system():
    rows = np.array([[0, 1], [0, 1]])
    with pytest.raises(InconsistentSystemError):
        Gf2System(rows, np.array([0, 1], dtype=np.uint8), 3)


def test_prc_sample_satisfies_every_check(seed):
    key = prc_keygen(256, 32, 3, 0.01, seed)
    latent = prc_sample(key, seed.derive(1))
    verdict = prc_detect(key, latent)
    assert verdict.watermarked
    assert verdict.statistic == key.t
    assert verdict.threshold == binomial_threshold(32, 0.01)


def test_prc_keygen_is_deterministic():
    a = prc_keygen(128, 16, 3, 0.01, RngSeed(master=5))
    b = prc_keygen(128, 16, 3, 0.01, RngSeed(master=5))
    assert np.array_equal(a.parity_rows, b.parity_rows)
    assert np.array_equal(a.syndrome, b.syndrome)
    assert np.array_equal(a.pad, b.pad)


def test_prc_keygen_rejects_bad_parameters(seed):
    with pytest.raises(ParameterError):
        prc_keygen(16, 32, 3, 0.01, seed)
    with pytest.raises(ParameterError):
        prc_keygen(16, 4, 3, 1.5, seed)


def test_prc_samples_are_fresh(seed):
    key = prc_keygen(256, 32, 3, 0.01, seed)
    a = prc_sample(key, seed.derive(1))
    b = prc_sample(key, seed.derive(2))
    agreement = np.mean(signs(a) == signs(b))
    assert 0.35 < agreement < 0.65


def test_gs_sample_detected_with_full_agreement(seed):
    key = gs_keygen(256, 32, 0.01, seed)
    latent = gs_sample(key, seed.derive(1))
    verdict = gs_detect(key, latent)
    assert verdict.watermarked
    assert verdict.statistic == 32


def test_gs_majority_ties_break_toward_zero():
    key = GsKey(d=4, m=2, stream_key=bytes(32), message=[0, 1], alpha=0.3)
    stream = keystream(key.stream_key, 4, GS_NONCE)
    # Repetition 0 says (1, 1), repetition 1 says (0, 0): both positions tie
    decrypted = np.array([1, 1, 0, 0], dtype=np.uint8)
    latent = np.where((decrypted ^ stream) == 1, 1.0, -1.0)
    assert gs_statistics(key, latent[None, :]).tolist() == [1]


def test_gs_marginal_is_standard_normal():
    key = gs_keygen(1024, 64, 0.01, RngSeed(master=9))
    pooled = np.concatenate([gs_sample(key, RngSeed(master=9, stream_id=i)) for i in range(1, 21)])
    assert stats.kstest(pooled, "norm").pvalue > 1e-3


def test_gs_rejects_non_dividing_message(seed):
    with pytest.raises(ParameterError):
        gs_keygen(100, 7, 0.01, seed)


def test_gaussian_latents_are_rarely_detected(prc_scheme, gs_scheme):
    latents = np.stack([sample_std_gauss(256, RngSeed(master=77, stream_id=i)) for i in range(300)])
    for scheme in (prc_scheme, gs_scheme):
        assert scheme.detect_batch(latents).mean() < 0.05


def test_detect_batch_checks_dimension(prc_scheme):
    with pytest.raises(DimensionMismatchError):
        prc_scheme.detect_batch(np.zeros((2, 10)))


def test_scheme_map_and_lift(prc_scheme, seed):
    sample = prc_scheme.sample(seed)
    bits = prc_scheme.map(sample)
    lifted = prc_scheme.lift(bits, sample)
    assert np.allclose(lifted, sample)
    flipped = bits.copy()
    flipped[0] ^= 1
    assert np.allclose(np.abs(prc_scheme.lift(flipped, sample)), np.abs(sample))


def test_check_satisfaction_probability():
    assert prc_check_satisfaction_probability(0.0, 3) == 1.0
    assert prc_check_satisfaction_probability(0.5, 3) == 0.5
    assert prc_check_satisfaction_probability(0.1, 1) == pytest.approx(0.9)


def test_breaking_radius_when_detector_never_fires(seed):
    key = prc_keygen(16, 1, 3, 0.01, seed)
    assert prc_breaking_radius(key) == 0


def test_key_record_round_trip(tmp_path, seed):
    prc = prc_keygen(64, 8, 3, 0.05, seed)
    path = tmp_path / "prc.json"
    save_key(prc, path)
    loaded = load_key(path)
    assert isinstance(loaded, PrcKey)
    assert np.array_equal(loaded.parity_rows, prc.parity_rows)
    assert np.array_equal(loaded.syndrome, prc.syndrome)
    assert np.array_equal(loaded.pad, prc.pad)
    assert loaded.key_material == prc.key_material

    gs = gs_keygen(64, 8, 0.05, seed)
    restored = key_from_record(key_to_record(gs))
    assert isinstance(restored, GsKey)
    assert np.array_equal(restored.message, gs.message)
    assert restored.stream_key == gs.stream_key


def test_key_record_rejects_unknown_scheme():
    with pytest.raises(ParameterError):
        key_from_record({"scheme": "tree-ring"})


def test_make_scheme_names(seed):
    assert make_scheme(CodecName.PRC, 64, seed, t=8).name == "prc"
    assert make_scheme(CodecName.GAUSSIAN_SHADING, 64, seed, m=8).name == "gs"


def test_keystream_differs_between_keys():
    first = keystream(bytes(range(32)), 10_000)
    second = keystream(bytes(range(1, 33)), 10_000)
    assert 0.47 <= np.mean(first == second) <= 0.53
    assert 0.495 <= keystream(b"balance", 100_000).mean() <= 0.505


def _brute_force_verdict(key: PrcKey, bits) -> bool:
    padded = [int(bit) ^ int(pad) for bit, pad in zip(bits, key.pad)]
    satisfied = 0
    for row, target in zip(key.parity_rows, key.syndrome):
        parity = 0
        for index in row:
            parity ^= padded[int(index)]
        satisfied += parity == int(target)
    return satisfied >= binomial_threshold(key.t, key.alpha)


def test_prc_verdict_depends_on_sign_pattern_only():
    key = prc_keygen(8, 4, 3, 0.1, RngSeed(master=31))
    generator = np.random.default_rng(31)
    verdicts = set()
    for pattern in itertools.product([0, 1], repeat=8):
        bits = np.array(pattern, dtype=np.uint8)
        latent = np.where(bits == 1, 1.0, -1.0) * generator.uniform(0.1, 3.0, size=8)
        assert np.array_equal(prc_map(latent), bits)
        expected = _brute_force_verdict(key, bits)
        assert prc_detect(key, latent).watermarked == expected
        rescaled = latent * generator.uniform(0.1, 3.0, size=8)
        assert prc_detect(key, rescaled).watermarked == expected
        verdicts.add(expected)
    assert verdicts == {True, False}


def test_gs_majority_survives_seven_of_fifteen_flips(seed):
    key = gs_keygen(60, 4, 0.1, seed)
    assert key.repetitions == 15
    latent = gs_sample(key, seed.derive(1))
    # Copies of message bit 0 sit at every m-th coordinate
    group = np.arange(0, key.d, key.m)
    for flips, expected in ((7, key.m), (8, key.m - 1)):
        batch = []
        for subset in itertools.combinations(group, flips):
            attacked = latent.copy()
            attacked[list(subset)] *= -1.0
            batch.append(attacked)
        assert set(gs_statistics(key, np.stack(batch)).tolist()) == {expected}
    assert gs_detect(key, latent).statistic == key.m


def test_gs_quantiles_stay_on_their_side_of_one_half():
    encrypted = np.array([1, 1, 0, 0], dtype=np.uint8)
    uniform = np.array([0.0, 1.0 - np.finfo(np.float64).epsneg, 0.0, 1.0 - np.finfo(np.float64).epsneg])
    levels = gs_quantiles(encrypted, uniform)
    assert levels[0] > 0.5 and levels[1] < 1.0
    assert 0.0 < levels[2] and levels[3] < 0.5
    latent = std_normal_inv_cdf(levels)
    assert np.array_equal(signs(latent), encrypted)
    assert np.all(np.isfinite(latent))
