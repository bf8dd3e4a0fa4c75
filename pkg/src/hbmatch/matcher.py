"""One-to-one matching in the encrypted domain and its plaintext oracle.

Euclidean mode is subtract-then-square: the server returns the degree-2
ciphertext of per-slot squared differences and the key holder sums the
slots after decryption, so only the public/secret pair is involved.
Inner-product mode multiplies, relinearizes and sums slots homomorphically,
which needs relinearization and Galois keys.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codec import (
    EncodingProfile,
    QuantizedTemplate,
    euclid_raw_from_slots,
    euclid_scores,
    innerprod_raw_from_slot,
    innerprod_similarity,
)
from .errors import KeyMaterialError, UsageError
from .rlwe.encoding import decode_slots
from .rlwe.keys import GaloisKeySet, RelinKey, SecretKey
from .rlwe.scheme import Ciphertext, decrypt, hmul, hsub, relinearize, sum_slots


class MatchMode(str, Enum):
    EUCLID = "euclid"
    INNERPROD = "innerprod"
    PLAIN = "plain"


@dataclass
class MatchResult:
    mode: str
    raw: list  # integer d^2 (euclid, plain) or <x, y> (innerprod) per entry
    distances: list
    similarities: list
    best_index: int
    rotation: int
    seconds: float = 0.0
    threshold: float | None = None
    decision: bool | None = None
    rotations: list = field(default_factory=list)

    @property
    def aggregate_distance(self) -> float:
        return self.distances[self.best_index]

    @property
    def aggregate_similarity(self) -> float:
        return self.similarities[self.best_index]

    def outcome(self) -> tuple:
        """Everything except timing, for equality checks."""
        return (
            self.mode,
            tuple(self.raw),
            tuple(self.distances),
            tuple(self.similarities),
            self.best_index,
            self.rotation,
            self.threshold,
            self.decision,
        )


# -- server side -----------------------------------------------------------


def euclid_encrypted(ct_x: Ciphertext, ct_y: Ciphertext) -> Ciphertext:
    """dt = (x - y) * (x - y), left at degree 2."""
    st = hsub(ct_x, ct_y)
    return hmul(st, st)


def innerprod_encrypted(ct_x: Ciphertext, ct_y: Ciphertext, rk: RelinKey | None,
                        gks: GaloisKeySet | None) -> Ciphertext:
    """Every slot of the result holds sum_i x_i * y_i."""
    if rk is None:
        raise KeyMaterialError("inner-product mode needs a relinearization key")
    if gks is None:
        raise KeyMaterialError("inner-product mode needs Galois keys")
    if ct_x.degree != 1 or ct_y.degree != 1:
        raise UsageError("inner-product mode takes degree-1 ciphertexts")
    return sum_slots(relinearize(hmul(ct_x, ct_y), rk), gks)


def server_evaluate(mode, ct_x: Ciphertext, ct_y: Ciphertext, rk=None, gks=None) -> Ciphertext:
    mode = MatchMode(mode)
    if mode is MatchMode.EUCLID:
        return euclid_encrypted(ct_x, ct_y)
    if mode is MatchMode.INNERPROD:
        return innerprod_encrypted(ct_x, ct_y, rk, gks)
    raise UsageError("plain mode has no encrypted evaluation")


# -- client side -----------------------------------------------------------


def decrypt_raw(mode, ct: Ciphertext, sk: SecretKey, profile: EncodingProfile) -> int:
    if sk is None:
        raise KeyMaterialError("secret key required to decrypt results")
    slots = decode_slots(decrypt(sk, ct))
    if MatchMode(mode) is MatchMode.EUCLID:
        return euclid_raw_from_slots(slots, profile)
    return innerprod_raw_from_slot(slots[0], profile)


def scores_from_raw(mode, raw: int, profile: EncodingProfile) -> tuple[float, float]:
    """(distance_sq, similarity); inner-product distance is 2 - 2*similarity."""
    if MatchMode(mode) is MatchMode.INNERPROD:
        sim = innerprod_similarity(raw, profile)
        return 2.0 - 2.0 * sim, sim
    return euclid_scores(raw, profile)


def plain_raw(qx: QuantizedTemplate, qy: QuantizedTemplate, mode="euclid") -> int:
    if qx.profile != qy.profile:
        raise UsageError("templates use different encoding profiles")
    x, y = qx.values, qy.values
    if MatchMode(mode) is MatchMode.INNERPROD:
        return int(np.dot(x, y))
    d = x - y
    return int(np.dot(d, d))


def plain_oracle(qx: QuantizedTemplate, qy: QuantizedTemplate, mode="euclid") -> tuple[float, float]:
    """Exact integer reference for both encrypted modes."""
    m = MatchMode(mode)
    m = MatchMode.EUCLID if m is MatchMode.PLAIN else m
    return scores_from_raw(m, plain_raw(qx, qy, m), qx.profile)


# -- aggregation -------------------------------------------------------------


def select_best(mode, raw, rotations=None, orders=None) -> int:
    """Minimum distance (maximum inner product); ties go to the lowest
    rotation index, then to the earliest enrolled entry."""
    n = len(raw)
    if n == 0:
        raise UsageError("empty gallery")
    rotations = [0] * n if rotations is None else list(rotations)
    orders = list(range(n)) if orders is None else list(orders)
    sign = -1 if MatchMode(mode) is MatchMode.INNERPROD else 1
    return min(range(n), key=lambda i: (sign * raw[i], rotations[i], orders[i], i))


def build_result(mode, raw, profile, rotations=None, orders=None, seconds=0.0,
                 threshold=None) -> MatchResult:
    mode = MatchMode(mode)
    n = len(raw)
    rotations = [0] * n if rotations is None else list(rotations)
    dist, sim = [], []
    for r in raw:
        d, s = scores_from_raw(mode, r, profile)
        dist.append(d)
        sim.append(s)
    best = select_best(mode, raw, rotations, orders)
    decision = None if threshold is None else bool(sim[best] >= threshold)
    return MatchResult(mode.value, list(raw), dist, sim, best, rotations[best], seconds,
                       threshold, decision, rotations)


def match_one_to_one(probe, gallery, mode, profile: EncodingProfile, keys=None,
                     rotations=None, orders=None, threshold=None) -> MatchResult:
    """Match one probe against a claimed subject's gallery.

    ``probe``/``gallery`` are QuantizedTemplates in plain mode and
    Ciphertexts otherwise; ``keys`` is a KeySet holding the secret key.
    """
    mode = MatchMode(mode)
    gallery = list(gallery)
    if not gallery:
        raise UsageError("empty gallery")
    if rotations is not None and len(rotations) != len(gallery):
        raise UsageError("one rotation index per gallery entry is required")
    start = time.perf_counter()
    if mode is MatchMode.PLAIN:
        raw = [plain_raw(probe, g, mode) for g in gallery]
    else:
        if keys is None or keys.sk is None:
            raise KeyMaterialError("secret key required for encrypted matching")
        if mode is MatchMode.INNERPROD and (keys.rk is None or keys.gks is None):
            raise KeyMaterialError("inner-product mode needs relinearization and Galois keys")
        raw = []
        for g in gallery:
            if mode is MatchMode.EUCLID:
                res = euclid_encrypted(probe, g)
            else:
                res = innerprod_encrypted(probe, g, keys.rk, keys.gks)
            raw.append(decrypt_raw(mode, res, keys.sk, profile))
    seconds = time.perf_counter() - start
    return build_result(mode, raw, profile, rotations, orders, seconds, threshold)


# -- batched plaintext scoring -------------------------------------------------


def plain_raw_matrix(x: np.ndarray, y: np.ndarray, mode="euclid") -> np.ndarray:
    """All-pairs integer d^2 (or inner products) between quantized rows.

    float64 BLAS products are exact here: every partial sum is an integer
    far below 2**53.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    bound = x.shape[1] * int(max(np.abs(x).max(initial=0), np.abs(y).max(initial=0)) + 1) ** 2 * 4
    if bound >= 2**53:
        raise UsageError("values too large for exact float64 accumulation")
    ip = np.rint(x.astype(np.float64) @ y.astype(np.float64).T).astype(np.int64)
    if MatchMode(mode) is MatchMode.INNERPROD:
        return ip
    nx = np.einsum("ij,ij->i", x, x)
    ny = np.einsum("ij,ij->i", y, y)
    return nx[:, None] + ny[None, :] - 2 * ip
