import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbmatch.errors import CapacityError, OverflowSlotError, UsageError
from hbmatch.rlwe import ring
from hbmatch.rlwe.encoding import Plaintext, decode_slots, encode_slots, rotate_plain_slots
from hbmatch.rlwe.params import toy_params

T = toy_params()
HALF = T.plain_modulus // 2


def slot_vectors(n=8):
    return st.lists(st.integers(-HALF, HALF), min_size=0, max_size=n)


@given(slot_vectors())
def test_encode_decode_roundtrip(vals):
    got = decode_slots(encode_slots(vals, T))
    assert got[: len(vals)].tolist() == vals
    assert not got[len(vals):].any()


@given(slot_vectors(8), slot_vectors(8))
def test_ring_product_is_slotwise(a, b):
    a = a + [0] * (8 - len(a))
    b = b + [0] * (8 - len(b))
    pa, pb = encode_slots(a, T), encode_slots(b, T)
    prod = ring.schoolbook_negacyclic(pa.coeffs.tolist(), pb.coeffs.tolist(), T.plain_modulus)
    got = decode_slots(Plaintext(T, prod))
    want = [((x * y + HALF) % T.plain_modulus) - HALF for x, y in zip(a, b)]
    assert got.tolist() == want


@given(slot_vectors(8), st.sampled_from([1, 2, 3]))
def test_automorphism_rotates_rows(a, k):
    a = a + [0] * (8 - len(a))
    pt = encode_slots(a, T)
    g = pow(3, k, 16)
    rotated = Plaintext(T, ring.automorphism(np.array(pt.coeffs.tolist(), dtype=object), g, T.plain_modulus).astype(np.int64))
    assert decode_slots(rotated).tolist() == rotate_plain_slots(np.array(a), k).tolist()


def test_row_swap():
    a = list(range(8))
    pt = encode_slots(a, T)
    sw = Plaintext(T, ring.automorphism(np.array(pt.coeffs.tolist(), dtype=object), 15, T.plain_modulus).astype(np.int64))
    assert decode_slots(sw).tolist() == a[4:] + a[:4]


def test_encode_errors():
    with pytest.raises(CapacityError):
        encode_slots(list(range(9)), T)
    with pytest.raises(OverflowSlotError):
        encode_slots([HALF + 1], T)
    with pytest.raises(OverflowSlotError):
        encode_slots([-HALF - 1], T)
    with pytest.raises(UsageError):
        encode_slots([0.5], T)
    with pytest.raises(UsageError):
        encode_slots([[1, 2]], T)


def test_edge_values_survive():
    vals = [HALF, -HALF, 0, 1, -1, HALF, -HALF, 0]
    assert decode_slots(encode_slots(vals, T)).tolist() == vals
