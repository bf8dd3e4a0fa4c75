"""Scale-invariant (BFV-style) homomorphic operations with one multiplication.

Plaintext m in Z_t[X]/(X^N+1) is carried as Delta*m + noise with
Delta = floor(q/t).  A degree-1 ciphertext (c0, c1) decrypts via c0 + c1*s,
a degree-2 ciphertext (c0, c1, c2) via c0 + c1*s + c2*s^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import KeyMaterialError, UsageError
from . import ring
from .encoding import Plaintext
from .keys import (
    GaloisKeySet,
    KeySwitchKey,
    PublicKey,
    RelinKey,
    SecretKey,
    decompose,
    kronecker_sum_width,
    rotation_exponent,
    sum_slots_exponents,
)
from .params import FheParams
from .sampling import gaussian, make_rng, ternary


@dataclass(frozen=True, eq=False)
class Ciphertext:
    params: FheParams
    polys: tuple

    def __post_init__(self):
        if len(self.polys) not in (2, 3):
            raise UsageError("ciphertext must have 2 or 3 polynomials")
        for p in self.polys:
            p.setflags(write=False)

    @property
    def degree(self) -> int:
        return len(self.polys) - 1

    @property
    def params_id(self) -> bytes:
        return self.params.fingerprint

    def __eq__(self, other):
        return (
            isinstance(other, Ciphertext)
            and self.params == other.params
            and self.degree == other.degree
            and all(np.array_equal(a, b) for a, b in zip(self.polys, other.polys))
        )

    __hash__ = None


def _same_params(*objs):
    fp = objs[0].params.fingerprint
    for o in objs[1:]:
        if o.params.fingerprint != fp:
            raise UsageError("parameter fingerprints differ between operands")


def encrypt(pk: PublicKey, pt: Plaintext, seed=None) -> Ciphertext:
    _same_params(pk, pt)
    params = pk.params
    rng = make_rng(seed)
    q = params.ct_modulus
    u = ring.obj_array(ternary(params, rng))
    e1 = ring.obj_array(gaussian(params, rng))
    e2 = ring.obj_array(gaussian(params, rng))
    m = ring.obj_array(pt.coeffs)
    c0 = (ring.negacyclic_exact(pk.p0, u, q, 1) + e1 + m * params.delta) % q
    c1 = (ring.negacyclic_exact(pk.p1, u, q, 1) + e2) % q
    return Ciphertext(params, (c0, c1))


def _packed_phase(sk: SecretKey, ct: Ciphertext):
    _same_params(sk, ct)
    w = sk.phase_width
    ps, ps2 = sk.packed_powers
    acc = ring.pack_unsigned(ct.polys[1], w) * ps
    if ct.degree == 2:
        acc += ring.pack_unsigned(ct.polys[2], w) * ps2
    acc += ring.pack_unsigned(ct.polys[0], w)
    return acc


def _phase(sk: SecretKey, ct: Ciphertext) -> np.ndarray:
    """c0 + c1*s (+ c2*s^2) mod q."""
    acc = _packed_phase(sk, ct)
    return ring.unpack_fold(acc, sk.params.ring_degree, sk.phase_width) % sk.params.ct_modulus


def _round_to_plain(x: np.ndarray, params: FheParams) -> np.ndarray:
    q, t = params.ct_modulus, params.plain_modulus
    return ((2 * t * x + q) // (2 * q)) % t


def decrypt(sk: SecretKey, ct: Ciphertext) -> Plaintext:
    params = sk.params
    t = params.plain_modulus
    # rounding commutes with the reduction mod q once the result is taken mod t
    m = ring.unpack_fold_round(
        _packed_phase(sk, ct), params.ring_degree, sk.phase_width, t, params.ct_modulus, t
    )
    return Plaintext(params, np.fromiter(m.tolist(), dtype=np.int64, count=len(m)))


def noise_budget(sk: SecretKey, ct: Ciphertext) -> int:
    """floor(log2(q / (2t(|v|_inf + 1)))) for the recovered noise v, floored at 0."""
    params = sk.params
    q, t = params.ct_modulus, params.plain_modulus
    x = _phase(sk, ct)
    m = _round_to_plain(x, params)
    v = ring.centered(x - m * params.delta, q)
    vmax = max(abs(int(c)) for c in v)
    ratio = q // (2 * t * (vmax + 1))
    return max(0, ratio.bit_length() - 1) if ratio else 0


def hadd(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    _same_params(a, b)
    if a.degree != b.degree:
        raise UsageError("hadd needs ciphertexts of equal degree")
    q = a.params.ct_modulus
    return Ciphertext(a.params, tuple((x + y) % q for x, y in zip(a.polys, b.polys)))


def hsub(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    _same_params(a, b)
    if a.degree != b.degree:
        raise UsageError("hsub needs ciphertexts of equal degree")
    q = a.params.ct_modulus
    return Ciphertext(a.params, tuple((x - y) % q for x, y in zip(a.polys, b.polys)))


def hmul(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Tensor product over Z, then round(t/q * .) on each component.

    The three products are formed Karatsuba-style in the packed integer
    domain, so only three big multiplications are needed (squarings when
    ``a is b``).
    """
    _same_params(a, b)
    if a.degree != 1 or b.degree != 1:
        raise UsageError("hmul accepts degree-1 ciphertexts only (depth one)")
    params = a.params
    n, q = params.ring_degree, params.ct_modulus
    width = ring.product_width(n, q, q)
    A0, A1 = (ring.pack_centered(p, q, width) for p in a.polys)
    if a is b:
        D0, D2 = A0 * A0, A1 * A1
        As = A0 + A1
        D1 = As * As - D0 - D2
    else:
        B0, B1 = (ring.pack_centered(p, q, width) for p in b.polys)
        D0, D2 = A0 * B0, A1 * B1
        D1 = (A0 + A1) * (B0 + B1) - D0 - D2
    t = params.plain_modulus
    out = tuple(ring.unpack_fold_round(D, n, width, t, q, q) for D in (D0, D1, D2))
    return Ciphertext(params, out)


def _key_switch(c: np.ndarray, ksk: KeySwitchKey) -> tuple[np.ndarray, np.ndarray]:
    """Return (sum d_i*b_i, sum d_i*a_i) mod q for the digits d_i of ``c``."""
    params = ksk.params
    n, q = params.ring_degree, params.ct_modulus
    width = kronecker_sum_width(params)
    kb, ka = ksk.packed(width)
    acc_b = acc_a = 0
    for d, pb, pa in zip(decompose(c, params), kb, ka):
        pd = ring.pack_unsigned(d, width)
        acc_b = acc_b + pd * pb
        acc_a = acc_a + pd * pa
    fb = ring.unpack_fold(acc_b, n, width)
    fa = ring.unpack_fold(acc_a, n, width)
    return fb % q, fa % q


def relinearize(ct: Ciphertext, rk: RelinKey) -> Ciphertext:
    if rk is None:
        raise KeyMaterialError("relinearization key required")
    _same_params(ct, rk)
    if ct.degree != 2:
        raise UsageError("relinearize expects a degree-2 ciphertext")
    q = ct.params.ct_modulus
    sb, sa = _key_switch(ct.polys[2], rk.ksk)
    return Ciphertext(ct.params, ((ct.polys[0] + sb) % q, (ct.polys[1] + sa) % q))


def apply_galois(ct: Ciphertext, g: int, gks: GaloisKeySet) -> Ciphertext:
    if gks is None:
        raise KeyMaterialError("Galois keys required")
    _same_params(ct, gks)
    if ct.degree != 1:
        raise UsageError("Galois automorphisms need a degree-1 ciphertext")
    g %= 2 * ct.params.ring_degree
    if g not in gks.keys:
        raise KeyMaterialError(f"no Galois key for exponent {g}")
    q = ct.params.ct_modulus
    c0 = ring.automorphism(ct.polys[0], g, q)
    c1 = ring.automorphism(ct.polys[1], g, q)
    sb, sa = _key_switch(c1, gks.keys[g])
    return Ciphertext(ct.params, ((c0 + sb) % q, sa))


def rotate_slots(ct: Ciphertext, k: int, gks: GaloisKeySet) -> Ciphertext:
    """Rotate both slot rows left by ``k``."""
    if k % ct.params.row_size == 0:
        return ct
    return apply_galois(ct, rotation_exponent(k, ct.params), gks)


def sum_slots(ct: Ciphertext, gks: GaloisKeySet) -> Ciphertext:
    """Every output slot holds the sum of all N input slots mod t."""
    if gks is None:
        raise KeyMaterialError("Galois keys required")
    for g in sum_slots_exponents(ct.params):
        ct = hadd(ct, apply_galois(ct, g, gks))
    return ct
