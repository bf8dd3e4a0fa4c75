"""Negacyclic number-theoretic transform over Z_p[X]/(X^N + 1).

Forward output is in natural order: ``A[i] = a(psi^(2i+1))`` where ``psi`` is
the smallest-base primitive 2N-th root of unity mod ``p``.  Moduli below 2**31
run on int64 arrays; larger moduli fall back to Python-int object arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from ..errors import ParameterError, UsageError

_INT64_SAFE = 1 << 31


def _dtype_for(p: int):
    return np.int64 if p < _INT64_SAFE else object


def _as_array(values, p: int) -> np.ndarray:
    dt = _dtype_for(p)
    if dt is object:
        vals = [int(v) % p for v in values]
        return np.fromiter(vals, dtype=object, count=len(vals))
    return np.asarray(values, dtype=np.int64) % p


def primitive_root_2n(n: int, p: int) -> int:
    """Return a primitive 2n-th root of unity mod prime ``p``."""
    if (p - 1) % (2 * n):
        raise ParameterError(f"modulus {p} is not 1 mod {2 * n}")
    exp = (p - 1) // (2 * n)
    for g in range(2, min(p, 1 << 16)):
        psi = pow(g, exp, p)
        # n is a power of two, so psi^n == -1 means order exactly 2n.
        if pow(psi, n, p) == p - 1:
            return psi
    raise ParameterError(f"no primitive {2 * n}-th root of unity mod {p}")


@dataclass(frozen=True)
class NttTables:
    n: int
    p: int
    psi_pows: np.ndarray
    psi_inv_pows: np.ndarray
    stage_twiddles: tuple
    stage_twiddles_inv: tuple
    bitrev: np.ndarray
    n_inv: int


def _bitrev_perm(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=64)
def ntt_tables(n: int, p: int) -> NttTables:
    if n < 1 or n & (n - 1):
        raise ParameterError(f"NTT length {n} is not a power of two")
    psi = primitive_root_2n(n, p)
    psi_inv = pow(psi, -1, p)
    omega, omega_inv = psi * psi % p, psi_inv * psi_inv % p

    def powers(base, count):
        out = [1] * count
        for i in range(1, count):
            out[i] = out[i - 1] * base % p
        return _as_array(out, p)

    stages, stages_inv = [], []
    m = 2
    while m <= n:
        stages.append(powers(pow(omega, n // m, p), m // 2))
        stages_inv.append(powers(pow(omega_inv, n // m, p), m // 2))
        m *= 2
    return NttTables(
        n=n,
        p=p,
        psi_pows=powers(psi, n),
        psi_inv_pows=powers(psi_inv, n),
        stage_twiddles=tuple(stages),
        stage_twiddles_inv=tuple(stages_inv),
        bitrev=_bitrev_perm(n),
        n_inv=pow(n, -1, p),
    )


def _cyclic(a: np.ndarray, twiddles, perm: np.ndarray, p: int) -> np.ndarray:
    n = a.shape[0]
    a = a[perm]
    m = 2
    for w in twiddles:
        half = m // 2
        blocks = a.reshape(-1, m)
        even = blocks[:, :half]
        odd = blocks[:, half:] * w % p
        a = np.concatenate(((even + odd) % p, (even - odd) % p), axis=1).reshape(n)
        m *= 2
    return a


def ntt_forward(coeffs, p: int) -> np.ndarray:
    """Evaluate a coefficient vector at the odd powers of psi."""
    a = _as_array(coeffs, p)
    tab = ntt_tables(len(a), p)
    return _cyclic(a * tab.psi_pows % p, tab.stage_twiddles, tab.bitrev, p)


def ntt_inverse(values, p: int) -> np.ndarray:
    a = _as_array(values, p)
    tab = ntt_tables(len(a), p)
    out = _cyclic(a, tab.stage_twiddles_inv, tab.bitrev, p)
    return out * tab.n_inv % p * tab.psi_inv_pows % p


@dataclass(frozen=True)
class RingPoly:
    """Residues mod ``modulus`` tagged with the domain they live in."""

    coeffs: np.ndarray
    modulus: int
    ntt_form: bool = False

    def __post_init__(self):
        arr = _as_array(self.coeffs, self.modulus)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree_bound(self) -> int:
        return len(self.coeffs)

    def _check(self, other: "RingPoly"):
        if self.modulus != other.modulus or len(self.coeffs) != len(other.coeffs):
            raise UsageError("ring mismatch between operands")
        if self.ntt_form != other.ntt_form:
            raise UsageError("cannot mix coefficient and NTT domain polynomials")

    def __add__(self, other: "RingPoly") -> "RingPoly":
        self._check(other)
        return RingPoly((self.coeffs + other.coeffs) % self.modulus, self.modulus, self.ntt_form)

    def __sub__(self, other: "RingPoly") -> "RingPoly":
        self._check(other)
        return RingPoly((self.coeffs - other.coeffs) % self.modulus, self.modulus, self.ntt_form)

    def pointwise(self, other: "RingPoly") -> "RingPoly":
        self._check(other)
        if not self.ntt_form:
            raise UsageError("pointwise product requires NTT-domain operands")
        return RingPoly(self.coeffs * other.coeffs % self.modulus, self.modulus, True)

    def __eq__(self, other):
        if not isinstance(other, RingPoly):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.ntt_form == other.ntt_form
            and len(self.coeffs) == len(other.coeffs)
            and bool(np.all(self.coeffs == other.coeffs))
        )

    __hash__ = None


def negacyclic_ntt(p: RingPoly, direction: Literal["forward", "inverse"]) -> RingPoly:
    """Move ``p`` between coefficient and evaluation domains."""
    if direction == "forward":
        if p.ntt_form:
            raise UsageError("polynomial is already in NTT form")
        return RingPoly(ntt_forward(p.coeffs, p.modulus), p.modulus, True)
    if direction == "inverse":
        if not p.ntt_form:
            raise UsageError("polynomial is already in coefficient form")
        return RingPoly(ntt_inverse(p.coeffs, p.modulus), p.modulus, False)
    raise UsageError(f"unknown NTT direction {direction!r}")


def ntt_mul(a: RingPoly, b: RingPoly) -> RingPoly:
    """Negacyclic product of two coefficient-domain polynomials via the NTT."""
    fa, fb = negacyclic_ntt(a, "forward"), negacyclic_ntt(b, "forward")
    return negacyclic_ntt(fa.pointwise(fb), "inverse")
