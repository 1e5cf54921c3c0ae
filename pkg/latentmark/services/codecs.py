"""
Keyed watermark codecs: the sparse-parity pseudorandom-code surrogate and
Gaussian Shading, behind one sample/detect interface

The PRC codec here is a desk-scale surrogate: secret sparse parity checks,
sampling draws a uniform solution of the keyed GF(2) system, detection counts
satisfied checks against an exact binomial threshold.
"""

import hashlib
import itertools
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from Crypto.Cipher import ChaCha20

from ..errors import DimensionMismatchError, InconsistentSystemError, ParameterError
from ..models import CodecName, DetectorVerdict, GsKey, PrcKey, RngSeed
from .core_math import as_latent, binomial_threshold, signs, std_normal_inv_cdf

logger = logging.getLogger(__name__)

KEY_RECORD_VERSION = 1

# Keystream nonces keep the streams derived from one PRC key independent
PAD_NONCE = b"prc-pad\x00"
SOLUTION_NONCE = b"prc-sol\x00"
GS_NONCE = b"gs-strm\x00"


def keystream(key_material: bytes, length: int, nonce: bytes = b"\x00" * 8) -> np.ndarray:
    """ChaCha20 keystream as a bit array of the requested length"""
    if length < 1:
        raise ParameterError("keystream length must be positive")
    key = bytes(key_material)
    if len(key) != 32:
        key = hashlib.sha256(key).digest()
    cipher = ChaCha20.new(key=key, nonce=nonce)
    stream = cipher.encrypt(bytes((length + 7) // 8))
    return np.unpackbits(np.frombuffer(stream, dtype=np.uint8))[:length]


class Gf2System:
    """Keyed parity system P·c = syndrome in reduced row-echelon form, ready for uniform solving"""

    def __init__(self, parity_rows: np.ndarray, syndrome: np.ndarray, d: int):
        t = parity_rows.shape[0]
        augmented = np.zeros((t, d + 1), dtype=np.uint8)
        augmented[np.arange(t)[:, None], parity_rows] = 1
        augmented[:, d] = syndrome

        pivots = []
        pivot_row = 0
        for col in range(d):
            if pivot_row == t:
                break
            candidates = np.nonzero(augmented[pivot_row:, col])[0]
            if candidates.size == 0:
                continue
            found = pivot_row + int(candidates[0])
            if found != pivot_row:
                augmented[[pivot_row, found]] = augmented[[found, pivot_row]]
            # Eliminate above and below so the pivot columns form an identity
            mask = augmented[:, col].astype(bool)
            mask[pivot_row] = False
            augmented[mask] ^= augmented[pivot_row]
            pivots.append(col)
            pivot_row += 1

        rank = len(pivots)
        if np.any(augmented[rank:, d]):
            raise InconsistentSystemError("keyed parity system has no solution")

        self.d = d
        self.rank = rank
        self.pivots = np.array(pivots, dtype=np.int64)
        self.free = np.setdiff1d(np.arange(d), self.pivots)
        self.reduced_free = augmented[:rank][:, self.free].astype(np.int64)
        self.reduced_target = augmented[:rank, d].copy()

    def solve_uniform(self, generator: np.random.Generator) -> np.ndarray:
        """Uniform random solution: free variables uniform, pivots forced"""
        solution = np.zeros(self.d, dtype=np.uint8)
        free_bits = generator.integers(0, 2, size=self.free.size, dtype=np.uint8)
        solution[self.free] = free_bits
        if self.rank:
            forced = (self.reduced_free @ free_bits.astype(np.int64)) & 1
            solution[self.pivots] = self.reduced_target ^ forced.astype(np.uint8)
        return solution


def prc_keygen(d: int, t: int, w: int, alpha: float, seed: RngSeed) -> PrcKey:
    """Sample parity rows uniformly; syndrome and pad derive from the keystream"""
    if d < 1 or not 1 <= t <= d or not 1 <= w <= d:
        raise ParameterError(f"need d >= 1, 1 <= t <= d and 1 <= w <= d (d={d}, t={t}, w={w})")
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")

    generator = seed.generator()
    key_material = generator.bytes(32)
    parity_rows = np.stack([np.sort(generator.choice(d, size=w, replace=False)) for _ in range(t)])

    # Syndrome of a keyed particular solution, so the system is always consistent
    particular = keystream(key_material, d, SOLUTION_NONCE)
    syndrome = particular[parity_rows].sum(axis=1) & 1
    pad = keystream(key_material, d, PAD_NONCE)

    return PrcKey(
        d=d, t=t, w=w, parity_rows=parity_rows, syndrome=syndrome, pad=pad,
        key_material=key_material, alpha=alpha,
    )


def _prc_system(key: PrcKey) -> Gf2System:
    if key._solver is None:
        key._solver = Gf2System(key.parity_rows, key.syndrome, key.d)
    return key._solver


def prc_sample(key: PrcKey, seed: RngSeed) -> np.ndarray:
    """Fresh codeword, padded, embedded as the signs of a half-normal vector"""
    generator = seed.generator()
    codeword = _prc_system(key).solve_uniform(generator) ^ key.pad
    magnitudes = np.abs(generator.standard_normal(key.d))
    return np.where(codeword == 1, magnitudes, -magnitudes)


def prc_statistics(key: PrcKey, latents: np.ndarray) -> np.ndarray:
    """Satisfied-check counts for a batch of latents, shape (n, d) -> (n,)"""
    bits = signs(latents) ^ key.pad
    parities = bits[:, key.parity_rows].sum(axis=2) & 1
    return (parities == key.syndrome).sum(axis=1)


def prc_detect(key: PrcKey, x) -> DetectorVerdict:
    latent = as_latent(x, key.d)
    statistic = int(prc_statistics(key, latent[None, :])[0])
    threshold = binomial_threshold(key.t, key.alpha)
    return DetectorVerdict(watermarked=statistic >= threshold, statistic=statistic, threshold=threshold)


def prc_map(x) -> np.ndarray:
    """Sign projection the PRC detector factors through"""
    return signs(x)


def prc_check_satisfaction_probability(flip_rate: float, w: int) -> float:
    """Probability one weight-w check survives independent sign flips at the given rate"""
    return 0.5 + 0.5 * (1.0 - 2.0 * flip_rate) ** w


def prc_breaking_radius(key: PrcKey, max_flips: int = 3) -> Optional[int]:
    """Fewest sign flips that can push a noiseless sample below threshold

    A flip set breaks exactly the checks it meets in an odd number of indices.
    Returns None when no set of at most max_flips flips does it. The
    well-behavedness radius is one less than this.
    """
    threshold = binomial_threshold(key.t, key.alpha)
    if threshold > key.t:
        return 0
    must_break = key.t - threshold + 1
    incidence = np.zeros((key.t, key.d), dtype=np.int64)
    incidence[np.arange(key.t)[:, None], key.parity_rows] = 1
    for size in range(1, max_flips + 1):
        for subset in itertools.combinations(range(key.d), size):
            broken = int(np.count_nonzero(incidence[:, list(subset)].sum(axis=1) & 1))
            if broken >= must_break:
                return size
    return None


def gs_keygen(d: int, m: int, alpha: float, seed: RngSeed) -> GsKey:
    if d < 1 or m < 1 or d % m != 0:
        raise ParameterError(f"message length must divide d (d={d}, m={m})")
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    generator = seed.generator()
    return GsKey(
        d=d, m=m, stream_key=generator.bytes(32),
        message=generator.integers(0, 2, size=m, dtype=np.uint8), alpha=alpha,
    )


def _gs_encrypted_bits(key: GsKey) -> np.ndarray:
    return np.tile(key.message, key.repetitions) ^ keystream(key.stream_key, key.d, GS_NONCE)


def gs_quantiles(encrypted: np.ndarray, uniform: np.ndarray) -> np.ndarray:
    """Normal quantile levels (c + u) / 2, clipped per lane to the open half its bit selects"""
    encrypted = np.asarray(encrypted, dtype=np.uint8)
    levels = (encrypted + np.asarray(uniform, dtype=np.float64)) / 2.0
    # Bit 1 lanes stay in (1/2, 1), bit 0 lanes in (0, 1/2)
    lower = np.where(encrypted == 1, np.nextafter(0.5, 1.0), np.finfo(np.float64).tiny)
    upper = np.where(encrypted == 1, np.nextafter(1.0, 0.0), np.nextafter(0.5, 0.0))
    return np.clip(levels, lower, upper)


def gs_sample(key: GsKey, seed: RngSeed) -> np.ndarray:
    """Each coordinate drawn from the half of N(0, 1) its encrypted bit selects"""
    encrypted = _gs_encrypted_bits(key)
    return std_normal_inv_cdf(gs_quantiles(encrypted, seed.generator().random(key.d)))


def gs_statistics(key: GsKey, latents: np.ndarray) -> np.ndarray:
    """Message-bit agreement counts after majority vote, shape (n, d) -> (n,)"""
    stream = keystream(key.stream_key, key.d, GS_NONCE)
    bits = signs(latents) ^ stream
    votes = bits.reshape(bits.shape[0], key.repetitions, key.m).sum(axis=1)
    # Ties break toward 0
    recovered = (2 * votes > key.repetitions).astype(np.uint8)
    return (recovered == key.message).sum(axis=1)


def gs_detect(key: GsKey, x) -> DetectorVerdict:
    latent = as_latent(x, key.d)
    statistic = int(gs_statistics(key, latent[None, :])[0])
    threshold = binomial_threshold(key.m, key.alpha)
    return DetectorVerdict(watermarked=statistic >= threshold, statistic=statistic, threshold=threshold)


class WatermarkScheme(ABC):
    """A keyed <smp, det> pair whose detector reads a projection of the latent"""

    name: str = "scheme"

    def __init__(self, d: int):
        self.d = d

    @abstractmethod
    def sample(self, seed: RngSeed) -> np.ndarray:
        """Draw a watermarked latent"""

    @abstractmethod
    def statistics(self, latents: np.ndarray) -> np.ndarray:
        """Detector statistic for each row of a (n, d) batch"""

    @property
    @abstractmethod
    def threshold(self) -> int:
        """Statistic at or above which a latent is declared watermarked"""

    @property
    @abstractmethod
    def max_statistic(self) -> int:
        """Statistic of a noiseless sample"""

    def detect(self, x) -> DetectorVerdict:
        latent = as_latent(x, self.d)
        statistic = int(self.statistics(latent[None, :])[0])
        return DetectorVerdict(
            watermarked=statistic >= self.threshold, statistic=statistic, threshold=self.threshold
        )

    def detect_batch(self, latents: np.ndarray) -> np.ndarray:
        """Boolean verdicts for a batch of latents"""
        latents = np.atleast_2d(np.asarray(latents, dtype=np.float64))
        if latents.shape[1] != self.d:
            raise DimensionMismatchError(f"expected dimension {self.d}, got {latents.shape[1]}")
        return self.statistics(latents) >= self.threshold

    def map(self, x) -> np.ndarray:
        return signs(x)

    def lift(self, bits: np.ndarray, reference: np.ndarray) -> np.ndarray:
        """Latent with the given projection and the reference's magnitudes"""
        magnitudes = np.abs(reference)
        return np.where(np.asarray(bits) == 1, magnitudes, -magnitudes)


class PrcScheme(WatermarkScheme):
    name = CodecName.PRC.value

    def __init__(self, key: PrcKey):
        super().__init__(key.d)
        self.key = key

    def sample(self, seed: RngSeed) -> np.ndarray:
        return prc_sample(self.key, seed)

    def statistics(self, latents: np.ndarray) -> np.ndarray:
        return prc_statistics(self.key, latents)

    @property
    def threshold(self) -> int:
        return binomial_threshold(self.key.t, self.key.alpha)

    @property
    def max_statistic(self) -> int:
        return self.key.t

    def map(self, x) -> np.ndarray:
        return prc_map(x)


class GaussianShadingScheme(WatermarkScheme):
    name = CodecName.GAUSSIAN_SHADING.value

    def __init__(self, key: GsKey):
        super().__init__(key.d)
        self.key = key

    def sample(self, seed: RngSeed) -> np.ndarray:
        return gs_sample(self.key, seed)

    def statistics(self, latents: np.ndarray) -> np.ndarray:
        return gs_statistics(self.key, latents)

    @property
    def threshold(self) -> int:
        return binomial_threshold(self.key.m, self.key.alpha)

    @property
    def max_statistic(self) -> int:
        return self.key.m


def _bits_to_hex(bits: np.ndarray) -> str:
    return np.packbits(bits).tobytes().hex()


def _hex_to_bits(text: str, length: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:length]


def key_to_record(key: Union[PrcKey, GsKey]) -> Dict[str, Any]:
    """Self-describing record of a key: scheme, parameters, index lists, hex bit strings"""
    if isinstance(key, PrcKey):
        return {
            "format_version": KEY_RECORD_VERSION,
            "scheme": CodecName.PRC.value,
            "d": key.d,
            "t": key.t,
            "w": key.w,
            "alpha": key.alpha,
            "parity_rows": key.parity_rows.tolist(),
            "syndrome": _bits_to_hex(key.syndrome),
            "pad": _bits_to_hex(key.pad),
            "key_material": key.key_material.hex(),
        }
    return {
        "format_version": KEY_RECORD_VERSION,
        "scheme": CodecName.GAUSSIAN_SHADING.value,
        "d": key.d,
        "m": key.m,
        "alpha": key.alpha,
        "stream_key": key.stream_key.hex(),
        "message": _bits_to_hex(key.message),
    }


def key_from_record(record: Dict[str, Any]) -> Union[PrcKey, GsKey]:
    scheme = record.get("scheme")
    if scheme == CodecName.PRC.value:
        return PrcKey(
            d=record["d"], t=record["t"], w=record["w"], alpha=record["alpha"],
            parity_rows=record["parity_rows"],
            syndrome=_hex_to_bits(record["syndrome"], record["t"]),
            pad=_hex_to_bits(record["pad"], record["d"]),
            key_material=bytes.fromhex(record["key_material"]),
        )
    if scheme == CodecName.GAUSSIAN_SHADING.value:
        return GsKey(
            d=record["d"], m=record["m"], alpha=record["alpha"],
            stream_key=bytes.fromhex(record["stream_key"]),
            message=_hex_to_bits(record["message"], record["m"]),
        )
    raise ParameterError(f"unknown scheme in key record: {scheme!r}")


def save_key(key: Union[PrcKey, GsKey], path: Union[str, Path]) -> None:
    record = key_to_record(key)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2, sort_keys=True)
    logger.info("Saved %s key to %s", record["scheme"], path)


def load_key(path: Union[str, Path]) -> Union[PrcKey, GsKey]:
    with open(path, "r", encoding="utf-8") as f:
        return key_from_record(json.load(f))


def make_scheme(codec: CodecName, d: int, seed: RngSeed, t: int = 64, w: int = 3,
                m: int = 64, alpha: float = 0.01) -> WatermarkScheme:
    """Key a fresh scheme of the named codec"""
    if CodecName(codec) is CodecName.PRC:
        return PrcScheme(prc_keygen(d, t, w, alpha, seed))
    return GaussianShadingScheme(gs_keygen(d, m, alpha, seed))
