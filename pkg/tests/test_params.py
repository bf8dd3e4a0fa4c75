import dataclasses

import pytest

from hbmatch.errors import ParameterError
from hbmatch.rlwe.params import FheParams, production_params, toy_params


def test_production_shape(prod):
    assert prod.ring_degree == 4096
    assert prod.plain_modulus == 786433
    assert len(prod.ct_moduli) == 2
    assert all(61 <= q.bit_length() <= 62 for q in prod.ct_moduli)
    assert prod.coeff_bytes == 16
    assert prod.decomp_count == 8
    assert prod.row_size == 2048


def test_delta_and_modulus(toy):
    q = toy.ct_moduli[0] * toy.ct_moduli[1]
    assert toy.ct_modulus == q
    assert toy.delta == q // toy.plain_modulus


def test_fingerprint_stable_and_distinct():
    assert production_params().fingerprint == production_params().fingerprint
    assert production_params().fingerprint != toy_params().fingerprint
    assert len(toy_params().fingerprint) == 16


def test_canonical_roundtrip(prod, toy):
    for p in (prod, toy):
        back = FheParams.from_canonical_bytes(p.canonical_bytes())
        assert back == p
        assert back.fingerprint == p.fingerprint


@pytest.mark.parametrize(
    "change",
    [
        {"ring_degree": 12},
        {"ct_moduli": (1073741441, 1073741441)},
        {"ct_moduli": (1073741441, 1073741442)},  # composite
        {"plain_modulus": 101},  # not 1 mod 16
        {"noise_stddev": 0.0},
        {"relin_decomp_log2": 0},
        {"max_scale": 4},  # t=97 is too small for scale 4
    ],
)
def test_invalid_params(change):
    with pytest.raises(ParameterError):
        dataclasses.replace(toy_params(), **change)


def test_q_must_cover_one_multiplication():
    # q = 17 is far below 4 t^2 N
    with pytest.raises(ParameterError):
        FheParams(8, (17,), 97, max_scale=1)
