import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hbmatch.codec import (
    EncodingProfile,
    QuantizedTemplate,
    dequantize,
    euclid_raw_from_slots,
    euclid_scores,
    euclid_score_from_slots,
    fvec_bytes,
    fvec_from_bytes,
    innerprod_raw_from_slot,
    pack_template,
    qtpl_bytes,
    qtpl_from_bytes,
    quantize,
    round_half_away,
    unit_normalize,
)
from hbmatch.errors import (
    BadMagicError,
    CorruptionError,
    DegenerateInputError,
    QuantizationRangeError,
    TruncatedDataError,
    UsageError,
)
from hbmatch.rlwe.encoding import decode_slots
from hbmatch.rlwe.params import production_params, toy_params

PROD = production_params()


def unit_vectors(dim):
    return st.lists(st.floats(-1, 1, allow_nan=False), min_size=dim, max_size=dim).filter(
        lambda v: np.linalg.norm(v) > 1e-3
    ).map(unit_normalize)


def test_round_half_away():
    x = np.array([0.5, -0.5, 1.5, -1.5, 2.4999, -2.5])
    assert round_half_away(x).tolist() == [1, -1, 2, -2, 2, -3]


def test_profile_bounds():
    p = EncodingProfile.for_params(PROD, 1012)
    assert p.euclid_slot_bound == (2 * 129) ** 2
    assert p.ip_bound == math.floor((128 + math.sqrt(1012) / 2) ** 2)
    assert p.ip_bound < PROD.plain_modulus // 2
    with pytest.raises(UsageError):
        EncodingProfile.for_params(PROD, 5000)
    with pytest.raises(UsageError):
        EncodingProfile.for_params(PROD, 16, scale=1000)
    with pytest.raises(UsageError):
        EncodingProfile.for_params(toy_params(), 4, scale=4)


@given(unit_vectors(16), unit_vectors(16))
def test_quantized_bounds_hold(x, y):
    p = EncodingProfile.for_params(PROD, 16)
    qx, qy = quantize(x, p), quantize(y, p)
    assert np.abs(qx.values).max() <= p.scale
    d = qx.values - qy.values
    assert (d * d).max() <= p.euclid_slot_bound
    assert abs(int(np.dot(qx.values, qy.values))) <= p.ip_bound


def test_ip_bound_brute_force_small_dim():
    # exhaustive over a dense grid of 2-D unit vectors at scale 8
    p = EncodingProfile(2, 8, PROD.fingerprint, PROD.plain_modulus, PROD.ring_degree)
    worst = 0
    angles = np.linspace(0, 2 * np.pi, 2001)
    qs = {tuple(round_half_away(8 * np.array([math.cos(a), math.sin(a)])).astype(int)) for a in angles}
    for a in qs:
        for b in qs:
            worst = max(worst, abs(a[0] * b[0] + a[1] * b[1]))
    assert worst <= p.ip_bound


@given(unit_vectors(32), unit_vectors(32))
def test_euclid_similarity_tracks_cosine(x, y):
    p = EncodingProfile.for_params(PROD, 32)
    qx, qy = quantize(x, p), quantize(y, p)
    d = qx.values - qy.values
    dist, sim = euclid_scores(int(d @ d), p)
    # quantization error per coordinate is at most 1/(2S)
    assert abs(sim - float(x @ y)) < 0.05
    assert dist == pytest.approx(2 - 2 * sim)


def test_identical_vectors_score_one():
    p = EncodingProfile.for_params(PROD, 64)
    q = quantize(unit_normalize(np.arange(1, 65.0)), p)
    dist, sim = euclid_scores(0, p)
    assert (dist, sim) == (0.0, 1.0)
    assert np.allclose(dequantize(q), unit_normalize(np.arange(1, 65.0)), atol=1 / 256)


def test_quantize_errors():
    p = EncodingProfile.for_params(PROD, 4)
    with pytest.raises(UsageError):
        quantize([1.0, 0, 0], p)
    with pytest.raises(UsageError):
        quantize([2.0, 0, 0, 0], p)
    with pytest.raises(DegenerateInputError):
        unit_normalize([0, 0, 0])
    with pytest.raises(QuantizationRangeError):
        QuantizedTemplate(np.array([500, 0, 0, 0]), p)


def test_pack_template_checks_params():
    p = EncodingProfile.for_params(PROD, 4)
    q = quantize([1.0, 0, 0, 0], p)
    assert decode_slots(pack_template(q, PROD))[:4].tolist() == [128, 0, 0, 0]
    with pytest.raises(UsageError):
        pack_template(q, toy_params())


def test_slot_range_checks():
    p = EncodingProfile.for_params(PROD, 4)
    slots = np.zeros(PROD.ring_degree, dtype=np.int64)
    slots[:4] = [1, 4, 9, 16]
    assert euclid_raw_from_slots(slots, p) == 30
    bad = slots.copy()
    bad[2] = -1
    with pytest.raises(CorruptionError):
        euclid_raw_from_slots(bad, p)
    bad = slots.copy()
    bad[100] = 3
    with pytest.raises(CorruptionError):
        euclid_raw_from_slots(bad, p)
    bad = slots.copy()
    bad[0] = p.euclid_slot_bound + 1
    with pytest.raises(CorruptionError):
        euclid_raw_from_slots(bad, p)
    assert innerprod_raw_from_slot(PROD.plain_modulus - 5, p) == -5
    with pytest.raises(CorruptionError):
        innerprod_raw_from_slot(p.ip_bound + 1, p)


@settings(max_examples=30)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=40))
def test_fvec_roundtrip(v):
    assert fvec_from_bytes(fvec_bytes(v)).tolist() == [float(x) for x in v]


def test_qtpl_roundtrip_and_errors():
    p = EncodingProfile.for_params(PROD, 4)
    q = quantize([0.6, 0.8, 0, 0], p)
    data = qtpl_bytes(q)
    assert qtpl_from_bytes(data, p) == q
    with pytest.raises(BadMagicError):
        qtpl_from_bytes(b"FVEC" + data[4:], p)
    with pytest.raises(TruncatedDataError):
        qtpl_from_bytes(data[:-2], p)
    with pytest.raises(UsageError):
        qtpl_from_bytes(data, EncodingProfile.for_params(PROD, 4, scale=64))


def test_worked_score_example():
    # slots (9, 16, 0, ...) at S=128: d^2 = 25/16384; similarity uses 1 - d^2/2
    p = EncodingProfile.for_params(PROD, 8)
    slots = np.zeros(PROD.ring_degree, dtype=np.int64)
    slots[:2] = [9, 16]
    dist, sim = euclid_score_from_slots(slots, p)
    assert dist == 25 / 16384
    assert sim == 1 - 25 / 32768 == 0.999237060546875
