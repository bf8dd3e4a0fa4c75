"""Real feature vectors <-> quantized, slot-packed plaintexts and scores."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    CorruptionError,
    DegenerateInputError,
    QuantizationRangeError,
    TruncatedDataError,
    UsageError,
)
from .rlwe.encoding import Plaintext, centered_mod, encode_slots
from .rlwe.params import FheParams

DEFAULT_SCALE = 128
UNIT_TOLERANCE = 1e-9

FVEC_MAGIC = b"FVEC"
QTPL_MAGIC = b"QTPL"
FILE_VERSION = 1


@dataclass(frozen=True)
class EncodingProfile:
    """Template length and quantization scale bound to one parameter set.

    The plaintext modulus and slot count are carried so the no-wrap
    conditions can be checked without the full params object.
    """

    dim: int
    scale: int
    params_id: bytes
    plain_modulus: int
    slot_count: int

    def __post_init__(self):
        t, s, d = self.plain_modulus, self.scale, self.dim
        if d < 1 or s < 1:
            raise UsageError("dim and scale must be positive")
        if d > self.slot_count:
            raise UsageError(f"dim {d} exceeds {self.slot_count} slots")
        if (2 * (s + 1)) ** 2 >= t:
            raise UsageError(f"scale {s} would wrap squared differences mod {t}")
        if self.ip_bound >= t // 2:
            raise UsageError(f"scale {s}, dim {d} would wrap inner products mod {t}")

    @classmethod
    def for_params(cls, params: FheParams, dim: int, scale: int = DEFAULT_SCALE):
        return cls(dim, scale, params.fingerprint, params.plain_modulus, params.ring_degree)

    @property
    def euclid_slot_bound(self) -> int:
        return (2 * (self.scale + 1)) ** 2

    @property
    def ip_bound(self) -> int:
        """Largest |<qx, qy>| for quantized unit vectors: (S + sqrt(dim)/2)^2."""
        return math.floor((self.scale + math.sqrt(self.dim) / 2) ** 2)


@dataclass(frozen=True, eq=False)
class QuantizedTemplate:
    values: np.ndarray  # int64, length dim
    profile: EncodingProfile

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.shape != (self.profile.dim,):
            raise UsageError(f"expected {self.profile.dim} values, got {v.shape}")
        if v.size and np.abs(v).max() > self.profile.scale + 1:
            raise QuantizationRangeError("quantized value exceeds scale + 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        return (
            isinstance(other, QuantizedTemplate)
            and self.profile == other.profile
            and bool(np.array_equal(self.values, other.values))
        )

    __hash__ = None


def unit_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateInputError("cannot normalize a zero or non-finite vector")
    return v / norm


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize(v, profile: EncodingProfile) -> QuantizedTemplate:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (profile.dim,):
        raise UsageError(f"expected a length-{profile.dim} vector")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOLERANCE:
        raise UsageError("quantize expects a unit-norm vector")
    q = round_half_away(profile.scale * v)
    if q.size and np.abs(q).max() > profile.scale + 1:
        raise QuantizationRangeError("quantized value exceeds scale + 1")
    return QuantizedTemplate(q.astype(np.int64), profile)


def dequantize(qt: QuantizedTemplate) -> np.ndarray:
    return qt.values / qt.profile.scale


def pack_template(qt: QuantizedTemplate, params: FheParams) -> Plaintext:
    if qt.profile.params_id != params.fingerprint:
        raise UsageError("template profile belongs to different params")
    return encode_slots(qt.values, params)


def euclid_raw_from_slots(raw_slots, profile: EncodingProfile) -> int:
    """Integer sum of squared differences, after range checks on every slot."""
    lifted = centered_mod(np.asarray(raw_slots), profile.plain_modulus)
    head = lifted[: profile.dim]
    if head.size and (head.min() < 0 or head.max() > profile.euclid_slot_bound):
        raise CorruptionError("squared-difference slot out of range")
    if np.any(lifted[profile.dim :]):
        raise CorruptionError("padding slots are not zero")
    return int(head.sum())


def euclid_scores(d2: int, profile: EncodingProfile) -> tuple[float, float]:
    dist = d2 / profile.scale**2
    return dist, 1.0 - dist / 2.0


def euclid_score_from_slots(raw_slots, profile: EncodingProfile) -> tuple[float, float]:
    """(distance_sq, similarity) from decrypted per-slot squared differences."""
    return euclid_scores(euclid_raw_from_slots(raw_slots, profile), profile)


def innerprod_raw_from_slot(raw_slot0, profile: EncodingProfile) -> int:
    ip = int(centered_mod(np.asarray([raw_slot0]), profile.plain_modulus)[0])
    if abs(ip) > profile.ip_bound:
        raise CorruptionError("inner-product slot out of range")
    return ip


def innerprod_similarity(ip: int, profile: EncodingProfile) -> float:
    return ip / profile.scale**2


def innerprod_score_from_slot(raw_slot0, profile: EncodingProfile) -> float:
    return innerprod_similarity(innerprod_raw_from_slot(raw_slot0, profile), profile)


# -- files ---------------------------------------------------------------


def fvec_bytes(v) -> bytes:
    v = np.asarray(v, dtype="<f8")
    return FVEC_MAGIC + bytes([FILE_VERSION]) + struct.pack("<I", v.size) + v.tobytes()


def fvec_from_bytes(data: bytes) -> np.ndarray:
    dim = _check_header(data, FVEC_MAGIC, 9)
    body = data[9:]
    if len(body) != 8 * dim:
        raise TruncatedDataError("FVEC payload length mismatch")
    return np.frombuffer(body, dtype="<f8").astype(np.float64)


def qtpl_bytes(qt: QuantizedTemplate) -> bytes:
    head = QTPL_MAGIC + bytes([FILE_VERSION]) + struct.pack("<II", qt.profile.dim, qt.profile.scale)
    return head + qt.values.astype("<i4").tobytes()


def qtpl_from_bytes(data: bytes, profile: EncodingProfile) -> QuantizedTemplate:
    dim = _check_header(data, QTPL_MAGIC, 13)
    (scale,) = struct.unpack_from("<I", data, 9)
    if dim != profile.dim or scale != profile.scale:
        raise UsageError("QTPL file does not match the encoding profile")
    body = data[13:]
    if len(body) != 4 * dim:
        raise TruncatedDataError("QTPL payload length mismatch")
    return QuantizedTemplate(np.frombuffer(body, dtype="<i4").astype(np.int64), profile)


def _check_header(data: bytes, magic: bytes, size: int) -> int:
    if len(data) < size:
        raise TruncatedDataError("file shorter than its header")
    if data[:4] != magic:
        raise BadMagicError(f"expected {magic!r}")
    if data[4] != FILE_VERSION:
        raise BadVersionError(f"unsupported version {data[4]}")
    return struct.unpack_from("<I", data, 5)[0]


def write_fvec(path, v):
    with open(path, "wb") as fh:
        fh.write(fvec_bytes(v))


def read_fvec(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return fvec_from_bytes(fh.read())
