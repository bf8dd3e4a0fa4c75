import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbmatch.errors import KeyMaterialError, UsageError
from hbmatch.rlwe import ring
from hbmatch.rlwe.encoding import Plaintext, decode_slots, encode_slots, rotate_plain_slots
from hbmatch.rlwe.keys import decompose, keygen
from hbmatch.rlwe.params import toy_params
from hbmatch.rlwe.scheme import (
    decrypt,
    encrypt,
    hadd,
    hmul,
    hsub,
    noise_budget,
    relinearize,
    rotate_slots,
    sum_slots,
)

T = toy_params()
HALF = T.plain_modulus // 2
slots8 = st.lists(st.integers(-HALF, HALF), min_size=8, max_size=8)


def wrap(v):
    return ((v + HALF) % T.plain_modulus) - HALF


@settings(max_examples=60, deadline=None)
@given(slots8, slots8, st.integers(0, 2**32))
def test_toy_ops_match_slot_oracle(toy_keys, a, b, seed):
    rng = np.random.default_rng(seed)
    ca = encrypt(toy_keys.pk, encode_slots(a, T), rng)
    cb = encrypt(toy_keys.pk, encode_slots(b, T), rng)
    sk = toy_keys.sk
    assert decode_slots(decrypt(sk, hadd(ca, cb))).tolist() == [wrap(x + y) for x, y in zip(a, b)]
    assert decode_slots(decrypt(sk, hsub(ca, cb))).tolist() == [wrap(x - y) for x, y in zip(a, b)]
    prod = hmul(ca, cb)
    assert prod.degree == 2
    assert decode_slots(decrypt(sk, prod)).tolist() == [wrap(x * y) for x, y in zip(a, b)]
    rel = relinearize(prod, toy_keys.rk)
    assert rel.degree == 1
    assert decode_slots(decrypt(sk, rel)).tolist() == [wrap(x * y) for x, y in zip(a, b)]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, T.plain_modulus - 1), min_size=8, max_size=8),
       st.lists(st.integers(0, T.plain_modulus - 1), min_size=8, max_size=8))
def test_toy_hmul_matches_ring_oracle(toy_keys, a, b):
    ca = encrypt(toy_keys.pk, Plaintext(T, a), 1)
    cb = encrypt(toy_keys.pk, Plaintext(T, b), 2)
    want = ring.schoolbook_negacyclic(a, b, T.plain_modulus)
    assert decrypt(toy_keys.sk, hmul(ca, cb)).coeffs.tolist() == want


def test_squaring_path_equals_general_product(toy_keys):
    a = encrypt(toy_keys.pk, encode_slots([3, -7, 11, 0, 5, 48, -48, 1], T), 5)
    b = hadd(a, encrypt(toy_keys.pk, encode_slots([0] * 8, T), 6))
    sq = decrypt(toy_keys.sk, hmul(a, a))
    gen = decrypt(toy_keys.sk, hmul(a, b))
    assert sq == gen


@pytest.mark.parametrize("k", [1, 2, 3])
def test_rotation(toy_keys, k):
    a = [1, 2, 3, 4, 5, 6, 7, 8]
    ct = encrypt(toy_keys.pk, encode_slots(a, T), k)
    got = decode_slots(decrypt(toy_keys.sk, rotate_slots(ct, k, toy_keys.gks)))
    assert got.tolist() == rotate_plain_slots(np.array(a), k).tolist()


def test_sum_slots(toy_keys):
    a = [1, -2, 3, 4, 5, -6, 7, 8]
    ct = encrypt(toy_keys.pk, encode_slots(a, T), 9)
    got = decode_slots(decrypt(toy_keys.sk, sum_slots(ct, toy_keys.gks)))
    assert got.tolist() == [wrap(sum(a))] * 8


def test_missing_galois_key(toy_keys):
    ct = encrypt(toy_keys.pk, encode_slots([1], T), 1)
    with pytest.raises(KeyMaterialError):
        sum_slots(ct, None)


def test_degree_checks(toy_keys):
    ct = encrypt(toy_keys.pk, encode_slots([1], T), 1)
    d2 = hmul(ct, ct)
    with pytest.raises(UsageError):
        hmul(d2, ct)
    with pytest.raises(UsageError):
        rotate_slots(d2, 1, toy_keys.gks)


def test_params_mismatch_rejected(toy_keys):
    other = toy_params(16)
    _, pk16 = keygen(other, 1)
    a = encrypt(toy_keys.pk, encode_slots([1], T), 1)
    b = encrypt(pk16, encode_slots([1], other), 1)
    with pytest.raises(UsageError):
        hadd(a, b)


def test_noise_budget_decreases(toy_keys):
    ct = encrypt(toy_keys.pk, encode_slots([5] * 8, T), 3)
    fresh = noise_budget(toy_keys.sk, ct)
    after = noise_budget(toy_keys.sk, hmul(ct, ct))
    assert fresh > after > 0


def test_encrypt_is_randomized(toy_keys):
    pt = encode_slots([1, 2, 3], T)
    a = encrypt(toy_keys.pk, pt, 1)
    b = encrypt(toy_keys.pk, pt, 2)
    assert a != b
    assert decrypt(toy_keys.sk, a) == decrypt(toy_keys.sk, b) == pt


@given(st.lists(st.integers(0, T.ct_modulus - 1), min_size=8, max_size=8))
def test_decompose_recombines(c):
    digits = decompose(np.array(c, dtype=object), T)
    w = T.relin_decomp_log2
    back = [sum(int(d[i]) << (w * j) for j, d in enumerate(digits)) for i in range(8)]
    assert back == c
    assert all(0 <= int(x) < 2**w for d in digits for x in d)


def test_production_roundtrip_and_budget(prod, prod_keys):
    rng = np.random.default_rng(7)
    a = rng.integers(-300, 301, 1012)
    b = rng.integers(-300, 301, 1012)
    ca = encrypt(prod_keys.pk, encode_slots(a, prod), rng)
    cb = encrypt(prod_keys.pk, encode_slots(b, prod), rng)
    d = hsub(ca, cb)
    sq = hmul(d, d)
    got = decode_slots(decrypt(prod_keys.sk, sq))
    assert got[:1012].tolist() == ((a - b) ** 2).tolist()
    assert noise_budget(prod_keys.sk, ca) > noise_budget(prod_keys.sk, sq) > 10
