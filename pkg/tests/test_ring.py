import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbmatch.errors import UsageError
from hbmatch.rlwe import ring
from hbmatch.rlwe.ntt import RingPoly, negacyclic_ntt, ntt_forward, ntt_inverse, ntt_mul, primitive_root_2n
from hbmatch.rlwe.params import PRODUCTION_PRIMES, TOY_PRIMES

P = TOY_PRIMES[0]


def polys(n, lo, hi):
    return st.lists(st.integers(lo, hi), min_size=n, max_size=n)


@given(polys(8, 0, P - 1), polys(8, 0, P - 1))
def test_ntt_mul_matches_schoolbook(a, b):
    got = ntt_mul(RingPoly(a, P), RingPoly(b, P))
    assert got.coeffs.tolist() == ring.schoolbook_negacyclic(a, b, P)


@given(polys(16, 0, P - 1))
def test_ntt_roundtrip(a):
    assert ntt_inverse(ntt_forward(a, P), P).tolist() == a


def test_ntt_large_prime_roundtrip():
    p = PRODUCTION_PRIMES[0]
    rng = np.random.default_rng(3)
    a = [int(x) for x in rng.integers(0, 2**62, 64)]
    assert [int(x) for x in ntt_inverse(ntt_forward(a, p), p)] == [x % p for x in a]


def test_primitive_root_order():
    n = 8
    psi = primitive_root_2n(n, P)
    assert pow(psi, n, P) == P - 1
    assert pow(psi, 2 * n, P) == 1


def test_domain_tags():
    a = RingPoly([1, 2, 3, 4], P)
    with pytest.raises(UsageError):
        a.pointwise(a)
    f = negacyclic_ntt(a, "forward")
    with pytest.raises(UsageError):
        a + f
    with pytest.raises(UsageError):
        negacyclic_ntt(f, "forward")
    assert negacyclic_ntt(f, "inverse") == a


@given(polys(8, -(2**40), 2**40), polys(8, -(2**40), 2**40))
def test_kronecker_exact_product(a, b):
    got = ring.negacyclic_exact(ring.obj_array(a), ring.obj_array(b))
    assert [int(x) for x in got] == ring.schoolbook_negacyclic(a, b)


@given(polys(8, -(2**30), 2**30))
def test_pack_unpack_signed(a):
    w = 40
    x = ring.pack_signed(ring.obj_array(a), w)
    assert [int(v) for v in ring.unpack_signed(x, 8, w)] == a


@given(polys(8, 0, P - 1))
def test_pack_centered_is_centered_lift(a):
    w = 40
    x = ring.pack_centered(ring.obj_array(a), P, w)
    lifted = [int(v) for v in ring.unpack_signed(x, 8, w)]
    assert lifted == [v - P if v > P // 2 else v for v in a]


@given(polys(8, 0, P - 1), st.sampled_from([3, 5, 7, 9, 15]))
def test_automorphism_is_ring_map(a, g):
    # sigma_g(a * b) = sigma_g(a) * sigma_g(b)
    b = list(range(1, 9))
    lhs = ring.automorphism(np.array(ring.schoolbook_negacyclic(a, b, P), dtype=object), g, P)
    rhs = ring.schoolbook_negacyclic(
        ring.automorphism(np.array(a, dtype=object), g, P).tolist(),
        ring.automorphism(np.array(b, dtype=object), g, P).tolist(),
        P,
    )
    assert [int(x) for x in lhs] == rhs


@settings(max_examples=30)
@given(polys(8, -5, 5))
def test_automorphism_inverse(a):
    n2 = 16
    g = 3
    ginv = pow(g, -1, n2)
    arr = np.array(a, dtype=object)
    back = ring.automorphism(ring.automorphism(arr, g), ginv)
    assert back.tolist() == a
