import numpy as np
import pytest

from hbmatch.errors import (
    BadMagicError,
    BadVersionError,
    DecodeError,
    FingerprintMismatchError,
    MalformedPayloadError,
    TruncatedDataError,
    UsageError,
)
from hbmatch.rlwe.encoding import encode_slots
from hbmatch.rlwe.keyset import generate_keyset, load_keyset, save_keyset
from hbmatch.rlwe.params import toy_params
from hbmatch.rlwe.scheme import decrypt, encrypt, hmul
from hbmatch.rlwe.serialize import (
    HEADER_SIZE,
    MAGIC_CIPHERTEXT,
    MAGIC_SECRET,
    deserialize,
    serialize,
)


def toy_objects(keys):
    ct = encrypt(keys.pk, encode_slots([1, 2, 3], keys.params), 4)
    return [keys.params, keys.sk, keys.pk, keys.rk, keys.gks, ct, hmul(ct, ct)]


def test_roundtrip_all_containers(toy_keys):
    for obj in toy_objects(toy_keys):
        data = serialize(obj)
        back = deserialize(data, toy_keys.params)
        assert back == obj
        assert serialize(back) == data


def test_production_sizes(prod, prod_keys):
    ct = encrypt(prod_keys.pk, encode_slots([1], prod), 1)
    data = serialize(ct)
    assert len(data) == HEADER_SIZE + 1 + 2 * 4096 * 16
    assert len(data) - HEADER_SIZE - 1 == 131072
    assert len(serialize(hmul(ct, ct))) == HEADER_SIZE + 1 + 3 * 4096 * 16
    assert deserialize(data, prod) == ct


def test_header_checks(toy_keys):
    data = serialize(toy_keys.pk)
    with pytest.raises(BadMagicError):
        deserialize(b"XXXX" + data[4:], toy_keys.params)
    with pytest.raises(BadVersionError):
        deserialize(data[:4] + b"\x09" + data[5:], toy_keys.params)
    with pytest.raises(TruncatedDataError):
        deserialize(data[:10], toy_keys.params)
    with pytest.raises(TruncatedDataError):
        deserialize(data[:-1], toy_keys.params)
    with pytest.raises(MalformedPayloadError):
        deserialize(data + b"\x00", toy_keys.params)
    with pytest.raises(BadMagicError):
        deserialize(data, toy_keys.params, expect=MAGIC_SECRET)
    with pytest.raises(UsageError):
        deserialize(data)


def test_wrong_params_rejected(toy_keys):
    other = toy_params(16)
    with pytest.raises(FingerprintMismatchError):
        deserialize(serialize(toy_keys.pk), other)


def test_unreduced_residue_rejected(toy_keys):
    p = toy_keys.params
    data = bytearray(serialize(toy_keys.pk))
    data[HEADER_SIZE:HEADER_SIZE + p.coeff_bytes] = b"\xff" * p.coeff_bytes
    with pytest.raises(MalformedPayloadError):
        deserialize(bytes(data), p)


def test_secret_key_must_be_ternary(toy_keys):
    p = toy_keys.params
    data = bytearray(serialize(toy_keys.sk))
    data[HEADER_SIZE:HEADER_SIZE + p.coeff_bytes] = (5).to_bytes(p.coeff_bytes, "little")
    with pytest.raises(MalformedPayloadError):
        deserialize(bytes(data), p)


def test_every_header_flip_detected(toy_keys):
    data = serialize(encrypt(toy_keys.pk, encode_slots([7], toy_keys.params), 1))
    for i in range(HEADER_SIZE):
        bad = bytearray(data)
        bad[i] ^= 0xFF
        with pytest.raises(DecodeError):
            deserialize(bytes(bad), toy_keys.params)


def test_high_byte_flips_never_silent(toy_keys):
    """No checksum: low-order bytes are absorbed as noise, but a corrupted
    top byte is either rejected or changes what decrypts."""
    p = toy_keys.params
    pt = encode_slots([7, -3, 11], p)
    ct = encrypt(toy_keys.pk, pt, 1)
    data = serialize(ct)
    cb = p.coeff_bytes
    top = (p.ct_modulus.bit_length() - 1) // 8
    body = HEADER_SIZE + 1
    for k in range(2 * p.ring_degree):
        bad = bytearray(data)
        bad[body + k * cb + top] ^= 0xFF
        try:
            got = deserialize(bytes(bad), p)
        except DecodeError:
            continue
        assert decrypt(toy_keys.sk, got) != pt


def test_keyset_files(tmp_path, toy):
    ks = generate_keyset(toy, 3, eval_keys=True)
    sizes = save_keyset(ks, tmp_path)
    assert set(sizes) == {"params", "sk", "pk", "rk", "gks"}
    back = load_keyset(tmp_path)
    assert back.sk == ks.sk and back.pk == ks.pk and back.rk == ks.rk and back.gks == ks.gks
    pub = load_keyset(tmp_path, with_secret=False, with_eval=False)
    assert pub.sk is None and pub.rk is None and pub.gks is None


def test_ciphertext_magic(toy_keys):
    ct = encrypt(toy_keys.pk, encode_slots([1], toy_keys.params), 1)
    assert serialize(ct)[:4] == MAGIC_CIPHERTEXT
    assert serialize(toy_keys.sk)[:4] == MAGIC_SECRET
    assert np.frombuffer(serialize(ct)[5:HEADER_SIZE], dtype=np.uint8).tobytes() == toy_keys.params.fingerprint
