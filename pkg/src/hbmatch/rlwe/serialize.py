"""Binary containers for parameters, keys and ciphertexts.

Layout of every container::

    magic (4 ASCII bytes) | version (0x01) | params fingerprint (16 bytes) | payload

Ring elements are stored as N fixed-width little-endian residues of
``params.coeff_bytes`` bytes each.  Counts are little-endian unsigned ints.
"""

from __future__ import annotations

import struct

import gmpy2
import numpy as np

from ..errors import (
    BadMagicError,
    BadVersionError,
    FingerprintMismatchError,
    MalformedPayloadError,
    TruncatedDataError,
    UsageError,
)
from .keys import GaloisKeySet, KeySwitchKey, PublicKey, RelinKey, SecretKey
from .params import FheParams
from .scheme import Ciphertext

VERSION = 1
HEADER_SIZE = 4 + 1 + 16

MAGIC_PARAMS = b"HBPR"
MAGIC_SECRET = b"HBSK"
MAGIC_PUBLIC = b"HBPK"
MAGIC_RELIN = b"HBRK"
MAGIC_GALOIS = b"HBGK"
MAGIC_CIPHERTEXT = b"HBCT"
MAGICS = (MAGIC_PARAMS, MAGIC_SECRET, MAGIC_PUBLIC, MAGIC_RELIN, MAGIC_GALOIS, MAGIC_CIPHERTEXT)


def _header(magic: bytes, params: FheParams) -> bytes:
    return magic + bytes([VERSION]) + params.fingerprint


def poly_to_bytes(poly: np.ndarray, params: FheParams) -> bytes:
    cb = params.coeff_bytes
    packed = gmpy2.pack(poly.tolist(), 8 * cb)
    return int(packed).to_bytes(cb * params.ring_degree, "little")


def poly_from_bytes(data: bytes, params: FheParams) -> np.ndarray:
    n, cb, q = params.ring_degree, params.coeff_bytes, params.ct_modulus
    if len(data) != n * cb:
        raise TruncatedDataError("polynomial payload has the wrong length")
    vals = gmpy2.unpack(gmpy2.mpz(int.from_bytes(data, "little")), 8 * cb)
    if len(vals) < n:
        vals = vals + [gmpy2.mpz(0)] * (n - len(vals))
    if any(v >= q for v in vals):
        raise MalformedPayloadError("residue not reduced mod q")
    return np.fromiter(vals, dtype=object, count=n)


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def take(self, size: int) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise TruncatedDataError("container truncated")
        out = self.data[self.pos : end]
        self.pos = end
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def poly(self, params: FheParams) -> np.ndarray:
        return poly_from_bytes(self.take(params.ring_degree * params.coeff_bytes), params)

    def finish(self):
        if self.pos != len(self.data):
            raise MalformedPayloadError("trailing bytes after payload")


def read_header(data: bytes) -> tuple[bytes, bytes]:
    """Return (magic, fingerprint) after checking magic and version."""
    if len(data) < HEADER_SIZE:
        raise TruncatedDataError("container shorter than its header")
    magic = bytes(data[:4])
    if magic not in MAGICS:
        raise BadMagicError(f"unknown magic {magic!r}")
    if data[4] != VERSION:
        raise BadVersionError(f"unsupported version {data[4]}")
    return magic, bytes(data[5:HEADER_SIZE])


def _ksk_bytes(k: KeySwitchKey) -> bytes:
    parts = []
    for b, a in zip(k.b, k.a):
        parts.append(poly_to_bytes(b, k.params))
        parts.append(poly_to_bytes(a, k.params))
    return b"".join(parts)


def _read_ksk(r: _Reader, params: FheParams, count: int) -> KeySwitchKey:
    bs, as_ = [], []
    for _ in range(count):
        bs.append(r.poly(params))
        as_.append(r.poly(params))
    return KeySwitchKey(params, tuple(bs), tuple(as_))


def serialize(obj) -> bytes:
    if isinstance(obj, FheParams):
        return _header(MAGIC_PARAMS, obj) + obj.canonical_bytes()
    params = obj.params
    if isinstance(obj, Ciphertext):
        body = struct.pack("<B", len(obj.polys))
        body += b"".join(poly_to_bytes(p, params) for p in obj.polys)
        return _header(MAGIC_CIPHERTEXT, params) + body
    if isinstance(obj, SecretKey):
        s = np.asarray(obj.s, dtype=object) % params.ct_modulus
        return _header(MAGIC_SECRET, params) + poly_to_bytes(s, params)
    if isinstance(obj, PublicKey):
        return (
            _header(MAGIC_PUBLIC, params)
            + poly_to_bytes(obj.p0, params)
            + poly_to_bytes(obj.p1, params)
        )
    if isinstance(obj, RelinKey):
        body = struct.pack("<B", len(obj.ksk.b)) + _ksk_bytes(obj.ksk)
        return _header(MAGIC_RELIN, params) + body
    if isinstance(obj, GaloisKeySet):
        parts = [struct.pack("<H", len(obj.keys))]
        for g in obj.exponents:
            k = obj.keys[g]
            parts.append(struct.pack("<IB", g, len(k.b)))
            parts.append(_ksk_bytes(k))
        return _header(MAGIC_GALOIS, params) + b"".join(parts)
    raise UsageError(f"cannot serialize {type(obj).__name__}")


def deserialize(data: bytes, params: FheParams | None = None, expect: bytes | None = None):
    """Inverse of :func:`serialize`.

    ``params`` is required for everything except parameter containers; its
    fingerprint must match the header.  ``expect`` optionally pins the magic.
    """
    data = bytes(data)
    magic, fp = read_header(data)
    if expect is not None and magic != expect:
        raise BadMagicError(f"expected {expect!r}, got {magic!r}")
    r = _Reader(data, HEADER_SIZE)
    if magic == MAGIC_PARAMS:
        parsed = FheParams.from_canonical_bytes(data[HEADER_SIZE:])
        if parsed.fingerprint != fp:
            raise FingerprintMismatchError("params payload does not match its fingerprint")
        if params is not None and params.fingerprint != fp:
            raise FingerprintMismatchError("params differ from the expected set")
        return parsed
    if params is None:
        raise UsageError("params are required to decode key or ciphertext containers")
    if fp != params.fingerprint:
        raise FingerprintMismatchError("container was produced under different params")

    if magic == MAGIC_CIPHERTEXT:
        (count,) = r.unpack("<B")
        if count not in (2, 3):
            raise MalformedPayloadError(f"ciphertext with {count} polynomials")
        polys = tuple(r.poly(params) for _ in range(count))
        r.finish()
        return Ciphertext(params, polys)
    if magic == MAGIC_SECRET:
        s = r.poly(params)
        r.finish()
        q = params.ct_modulus
        if any(v not in (0, 1, q - 1) for v in s.tolist()):
            raise MalformedPayloadError("secret key is not ternary")
        s_int = np.array([1 if v == 1 else (-1 if v == q - 1 else 0) for v in s.tolist()], dtype=np.int64)
        return SecretKey(params, s_int)
    if magic == MAGIC_PUBLIC:
        p0, p1 = r.poly(params), r.poly(params)
        r.finish()
        return PublicKey(params, p0, p1)
    if magic == MAGIC_RELIN:
        (count,) = r.unpack("<B")
        if count != params.decomp_count:
            raise MalformedPayloadError("relinearization key has the wrong digit count")
        ksk = _read_ksk(r, params, count)
        r.finish()
        return RelinKey(params, ksk)
    # MAGIC_GALOIS
    (nkeys,) = r.unpack("<H")
    keys = {}
    for _ in range(nkeys):
        g, count = r.unpack("<IB")
        if g % 2 == 0 or not 1 < g < 2 * params.ring_degree or g in keys:
            raise MalformedPayloadError(f"invalid Galois exponent {g}")
        if count != params.decomp_count:
            raise MalformedPayloadError("Galois key has the wrong digit count")
        keys[g] = _read_ksk(r, params, count)
    r.finish()
    return GaloisKeySet(params, keys)


def save(obj, path) -> int:
    data = serialize(obj)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load(path, params: FheParams | None = None, expect: bytes | None = None):
    with open(path, "rb") as fh:
        return deserialize(fh.read(), params, expect)
