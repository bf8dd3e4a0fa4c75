"""Key material: secret, public, relinearization and Galois keys."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import gmpy2
import numpy as np

from ..errors import UsageError
from . import ring
from .params import FheParams
from .sampling import gaussian, make_rng, ternary, uniform_mod_q


@dataclass(frozen=True, eq=False)
class SecretKey:
    params: FheParams
    s: np.ndarray  # ternary int64

    @property
    def params_id(self) -> bytes:
        return self.params.fingerprint

    @cached_property
    def s_obj(self) -> np.ndarray:
        return ring.obj_array(self.s)

    @cached_property
    def s_squared(self) -> np.ndarray:
        """s^2 over the integers (coefficients bounded by N)."""
        return ring.negacyclic_exact(self.s_obj, self.s_obj)

    @cached_property
    def phase_width(self) -> int:
        """Packed width covering c0 + c1*s + c2*s^2 for residues in [0, q)."""
        n, q = self.params.ring_degree, self.params.ct_modulus
        return ring.product_width(n, q, n, terms=3)

    @cached_property
    def packed_powers(self) -> tuple:
        w = self.phase_width
        return ring.pack_signed(self.s_obj, w), ring.pack_signed(self.s_squared, w)

    def __eq__(self, other):
        return (
            isinstance(other, SecretKey)
            and self.params == other.params
            and np.array_equal(self.s, other.s)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PublicKey:
    """(pk0, pk1) with pk0 = -(pk1*s + e) mod q."""

    params: FheParams
    p0: np.ndarray
    p1: np.ndarray

    @property
    def params_id(self) -> bytes:
        return self.params.fingerprint

    def __eq__(self, other):
        return (
            isinstance(other, PublicKey)
            and self.params == other.params
            and np.array_equal(self.p0, other.p0)
            and np.array_equal(self.p1, other.p1)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class KeySwitchKey:
    """Digits (b_i, a_i) with b_i = -(a_i*s + e_i) + 2^(w*i) * target mod q."""

    params: FheParams
    b: tuple
    a: tuple
    _packed: dict = field(default_factory=dict, repr=False, compare=False)

    def packed(self, width: int):
        """Kronecker-packed centered key digits, cached per width."""
        if width not in self._packed:
            q = self.params.ct_modulus
            self._packed[width] = (
                [ring.pack_centered(x, q, width) for x in self.b],
                [ring.pack_centered(x, q, width) for x in self.a],
            )
        return self._packed[width]

    def __eq__(self, other):
        return (
            isinstance(other, KeySwitchKey)
            and self.params == other.params
            and len(self.b) == len(other.b)
            and all(np.array_equal(x, y) for x, y in zip(self.b, other.b))
            and all(np.array_equal(x, y) for x, y in zip(self.a, other.a))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RelinKey:
    params: FheParams
    ksk: KeySwitchKey

    @property
    def params_id(self) -> bytes:
        return self.params.fingerprint

    def __eq__(self, other):
        return isinstance(other, RelinKey) and self.ksk == other.ksk

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GaloisKeySet:
    params: FheParams
    keys: dict  # exponent -> KeySwitchKey

    @property
    def params_id(self) -> bytes:
        return self.params.fingerprint

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(sorted(self.keys))

    def __eq__(self, other):
        return (
            isinstance(other, GaloisKeySet)
            and self.exponents == other.exponents
            and all(self.keys[g] == other.keys[g] for g in self.keys)
        )

    __hash__ = None


def keygen(params: FheParams, seed=None) -> tuple[SecretKey, PublicKey]:
    """Deterministic for a fixed 32-byte ``seed``."""
    rng = make_rng(seed)
    s = ternary(params, rng)
    q = params.ct_modulus
    a = uniform_mod_q(params, rng)
    e = ring.obj_array(gaussian(params, rng))
    p0 = (-(ring.negacyclic_exact(a, ring.obj_array(s), q, 1) + e)) % q
    return SecretKey(params, s), PublicKey(params, p0, a)


def _keyswitch_keygen(sk: SecretKey, target: np.ndarray, rng) -> KeySwitchKey:
    params = sk.params
    q, w = params.ct_modulus, params.relin_decomp_log2
    bs, as_ = [], []
    for i in range(params.decomp_count):
        a = uniform_mod_q(params, rng)
        e = ring.obj_array(gaussian(params, rng))
        b = (-(ring.negacyclic_exact(a, sk.s_obj, q, 1) + e) + target * (1 << (w * i))) % q
        bs.append(b)
        as_.append(a)
    return KeySwitchKey(params, tuple(bs), tuple(as_))


def relin_keygen(sk: SecretKey, seed=None) -> RelinKey:
    rng = make_rng(seed)
    return RelinKey(sk.params, _keyswitch_keygen(sk, sk.s_squared, rng))


def rotation_exponent(k: int, params: FheParams) -> int:
    """Galois exponent rotating both slot rows left by ``k``."""
    return pow(3, k % params.row_size, 2 * params.ring_degree)


def sum_slots_exponents(params: FheParams) -> tuple[int, ...]:
    """Exponents used by the rotate-and-add ladder plus the row swap."""
    n2 = 2 * params.ring_degree
    steps = params.row_size.bit_length() - 1
    return tuple(pow(3, 1 << i, n2) for i in range(steps)) + (n2 - 1,)


def default_galois_exponents(params: FheParams, rotations=()) -> tuple[int, ...]:
    exps = set(sum_slots_exponents(params))
    exps.update(rotation_exponent(k, params) for k in rotations if k % params.row_size)
    return tuple(sorted(exps))


def galois_keygen(sk: SecretKey, exponents, seed=None) -> GaloisKeySet:
    exponents = [int(g) for g in exponents]
    if not exponents:
        raise UsageError("galois_keygen needs at least one exponent")
    n2 = 2 * sk.params.ring_degree
    rng = make_rng(seed)
    keys = {}
    for g in sorted(set(exponents)):
        if g % 2 == 0 or not 1 < g < n2:
            raise UsageError(f"invalid Galois exponent {g}")
        target = ring.automorphism(sk.s_obj, g)
        keys[g] = _keyswitch_keygen(sk, target, rng)
    return GaloisKeySet(sk.params, keys)


def kronecker_sum_width(params: FheParams) -> int:
    """Packed width for sum_i digit_i * key_i over all decomposition digits."""
    return ring.product_width(
        params.ring_degree,
        1 << params.relin_decomp_log2,
        params.ct_modulus // 2 + 1,
        terms=params.decomp_count,
    )


def decompose(c: np.ndarray, params: FheParams) -> list:
    """Base-2^w digits of residues in [0, q): sum_i d_i * 2^(w*i) == c."""
    w, count, n = params.relin_decomp_log2, params.decomp_count, params.ring_degree
    digits = gmpy2.unpack(ring.pack_unsigned(c, w * count), w)
    total = n * count
    if len(digits) < total:
        digits = digits + [gmpy2.mpz(0)] * (total - len(digits))
    grid = np.fromiter(digits[:total], dtype=object, count=total).reshape(n, count)
    return [grid[:, i] for i in range(count)]
