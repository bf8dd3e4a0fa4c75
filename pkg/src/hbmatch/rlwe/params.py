"""Parameter sets for the exact RLWE scheme."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import gmpy2

from ..errors import ParameterError

# Largest two primes below 2**62 that are 1 mod 8192.
PRODUCTION_PRIMES = (4611686018427322369, 4611686018427289601)
PRODUCTION_PLAIN_MODULUS = 786433

# Two primes just below 2**30 that are 1 mod 64 (usable up to N=32).
TOY_PRIMES = (1073741441, 1073740609)
TOY_PLAIN_MODULUS = 97


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class FheParams:
    """Leveled BFV-style parameters over Z_q[X]/(X^N + 1).

    ``max_scale`` is the largest template quantization scale the plaintext
    modulus is sized for; see :class:`hbmatch.codec.EncodingProfile`.
    """

    ring_degree: int
    ct_moduli: tuple[int, ...]
    plain_modulus: int
    noise_stddev: float = 3.2
    noise_bound: int = 20
    relin_decomp_log2: int = 16
    max_scale: int = 128
    _fingerprint: bytes = field(default=b"", init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ct_moduli", tuple(int(q) for q in self.ct_moduli))
        n, t = self.ring_degree, self.plain_modulus
        if not _is_power_of_two(n) or n < 2:
            raise ParameterError(f"ring degree {n} is not a power of two")
        if not self.ct_moduli:
            raise ParameterError("at least one ciphertext modulus is required")
        if len(set(self.ct_moduli)) != len(self.ct_moduli):
            raise ParameterError("ciphertext moduli must be distinct")
        for p in (*self.ct_moduli, t):
            if not gmpy2.is_prime(p, 40):
                raise ParameterError(f"{p} is not prime")
            if p % (2 * n) != 1:
                raise ParameterError(f"{p} is not 1 mod 2N={2 * n}")
        if t in self.ct_moduli:
            raise ParameterError("plaintext modulus must differ from ciphertext moduli")
        if self.ct_modulus <= 4 * t * t * n:
            raise ParameterError("q must exceed 4*t^2*N for one multiplication")
        if self.max_scale < 0 or t <= 4 * (2 * (self.max_scale + 1)) ** 2:
            raise ParameterError(
                f"t={t} too small for quantization scale {self.max_scale}"
            )
        if self.noise_stddev <= 0 or self.noise_bound < 1:
            raise ParameterError("noise parameters must be positive")
        if not 1 <= self.relin_decomp_log2 <= 62:
            raise ParameterError("decomposition width must be in [1, 62]")
        object.__setattr__(
            self, "_fingerprint", hashlib.sha256(self.canonical_bytes()).digest()[:16]
        )

    @cached_property
    def ct_modulus(self) -> int:
        return math.prod(self.ct_moduli)

    @cached_property
    def delta(self) -> int:
        return self.ct_modulus // self.plain_modulus

    @property
    def slot_count(self) -> int:
        return self.ring_degree

    @property
    def row_size(self) -> int:
        return self.ring_degree // 2

    @cached_property
    def coeff_bytes(self) -> int:
        """Fixed serialized width of one coefficient mod q."""
        return (self.ct_modulus.bit_length() + 7) // 8

    @cached_property
    def decomp_count(self) -> int:
        w = self.relin_decomp_log2
        return -(-self.ct_modulus.bit_length() // w)

    @property
    def fingerprint(self) -> bytes:
        return self._fingerprint

    def canonical_bytes(self) -> bytes:
        out = [struct.pack("<IB", self.ring_degree, len(self.ct_moduli))]
        out += [struct.pack("<Q", q) for q in self.ct_moduli]
        out.append(
            struct.pack(
                "<QdIBIB",
                self.plain_modulus,
                self.noise_stddev,
                self.noise_bound,
                self.relin_decomp_log2,
                self.max_scale,
                self.coeff_bytes,
            )
        )
        return b"".join(out)

    @classmethod
    def from_canonical_bytes(cls, data: bytes) -> "FheParams":
        from ..errors import TruncatedDataError

        try:
            n, count = struct.unpack_from("<IB", data, 0)
            pos = 5
            moduli = struct.unpack_from(f"<{count}Q", data, pos)
            pos += 8 * count
            t, sigma, bound, w, smax, width = struct.unpack_from("<QdIBIB", data, pos)
            pos += struct.calcsize("<QdIBIB")
        except struct.error as exc:
            raise TruncatedDataError("params payload truncated") from exc
        if pos != len(data):
            raise TruncatedDataError("params payload has trailing bytes")
        params = cls(n, moduli, t, sigma, bound, w, smax)
        if params.coeff_bytes != width:
            raise ParameterError("recorded coefficient width disagrees with moduli")
        return params


def production_params() -> FheParams:
    """N=4096, two 62-bit primes, t=786433, sigma=3.2, B=20, w=16."""
    return FheParams(
        ring_degree=4096,
        ct_moduli=PRODUCTION_PRIMES,
        plain_modulus=PRODUCTION_PLAIN_MODULUS,
        noise_stddev=3.2,
        noise_bound=math.ceil(6 * 3.2),
        relin_decomp_log2=16,
        max_scale=128,
    )


def toy_params(ring_degree: int = 8) -> FheParams:
    """Small ring for exhaustive tests; t=97 supports quantization scale 1."""
    return FheParams(
        ring_degree=ring_degree,
        ct_moduli=TOY_PRIMES,
        plain_modulus=TOY_PLAIN_MODULUS,
        noise_stddev=3.2,
        noise_bound=20,
        relin_decomp_log2=16,
        max_scale=1,
    )
