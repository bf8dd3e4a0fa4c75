"""Timing benchmark for one-to-one matching and container sizes."""

from __future__ import annotations

import logging
import statistics
import time

import numpy as np

from ..codec import DEFAULT_SCALE, EncodingProfile, pack_template, quantize, unit_normalize
from ..matcher import MatchMode, build_result, decrypt_raw, plain_raw, server_evaluate
from ..rlwe.serialize import HEADER_SIZE, serialize
from ..rlwe.keyset import KeySet, generate_keyset
from ..rlwe.params import FheParams, production_params
from ..rlwe.sampling import make_rng
from ..rlwe.scheme import encrypt, hmul
from . import reference
from .pipeline import hardware_string
from .report import write_report

log = logging.getLogger(__name__)

BENCH_SCHEMA = "hbmatch-bench/1"


def container_sizes(keys: KeySet, ct, ct2=None) -> dict:
    sizes = {
        "public_key": len(serialize(keys.pk)),
        "ciphertext": len(serialize(ct)),
        "ciphertext_payload": len(serialize(ct)) - HEADER_SIZE - 1,
        "header": HEADER_SIZE,
    }
    if keys.sk is not None:
        sizes["secret_key"] = len(serialize(keys.sk))
    if keys.rk is not None:
        sizes["relin_key"] = len(serialize(keys.rk))
    if keys.gks is not None:
        sizes["galois_keys"] = len(serialize(keys.gks))
    if ct2 is not None:
        sizes["ciphertext_degree2"] = len(serialize(ct2))
    return sizes


def _median_run(fn, reps: int) -> list:
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


def run_bench(params: FheParams | None = None, dim: int = 1012, reps: int = 5, mode="euclid",
              scale: int = DEFAULT_SCALE, seed: int = 0, keys: KeySet | None = None,
              eval_keys: bool = True, plain_reps: int = 200, out=None) -> dict:
    """Median latency of encrypt(probe) + server compute + decrypt/score,
    against an already-encrypted gallery template, next to the plaintext
    match of the same quantized pair."""
    params = params or production_params()
    mode = MatchMode(mode)
    if mode is MatchMode.PLAIN:
        mode = MatchMode.EUCLID
    rng = make_rng(seed)
    if keys is None:
        t0 = time.perf_counter()
        keys = generate_keyset(params, rng.integers(0, 2**63), eval_keys=eval_keys or mode is MatchMode.INNERPROD)
        log.info("keygen %.2fs", time.perf_counter() - t0)
    profile = EncodingProfile.for_params(params, dim, scale)
    x = unit_normalize(rng.standard_normal(dim))
    y = unit_normalize(x + 0.5 * rng.standard_normal(dim) / np.sqrt(dim))
    qx, qy = quantize(x, profile), quantize(y, profile)
    ct_y = encrypt(keys.pk, pack_template(qy, params), rng)

    def encrypted_match():
        ct_x = encrypt(keys.pk, pack_template(qx, params), rng)
        res = server_evaluate(mode, ct_x, ct_y, keys.rk, keys.gks)
        raw = decrypt_raw(mode, res, keys.sk, profile)
        return build_result(mode, [raw], profile)

    def plain_match():
        q = quantize(x, profile)
        return build_result(mode, [plain_raw(q, qy, mode)], profile)

    enc = _median_run(encrypted_match, reps)
    plain = _median_run(plain_match, plain_reps)
    agree = encrypted_match().outcome() == plain_match().outcome()

    ct2 = hmul(ct_y, ct_y)
    sizes = container_sizes(keys, ct_y, ct2)
    enc_med, plain_med = statistics.median(enc), statistics.median(plain)
    report = {
        "schema": BENCH_SCHEMA,
        "params": {
            "ring_degree": params.ring_degree,
            "ct_modulus_bits": params.ct_modulus.bit_length(),
            "plain_modulus": params.plain_modulus,
            "fingerprint": params.fingerprint.hex(),
        },
        "mode": mode.value,
        "dim": dim,
        "repetitions": reps,
        "encrypted": {"median_s": enc_med, "samples_s": enc},
        "plain": {"median_s": plain_med, "samples_s": plain[:20]},
        "ratio": enc_med / plain_med if plain_med > 0 else 0.0,
        "results_agree": agree,
        "sizes": sizes,
        "reference": {"timing_s": dict(reference.TIMING), "sizes": dict(reference.SIZES)},
        "hardware": hardware_string(),
    }
    if out is not None:
        write_report(report, out, "bench")
    return report
