"""Exact arithmetic in Z[X]/(X^N + 1) and Z_q[X]/(X^N + 1).

Polynomials are numpy object arrays of Python/gmpy2 integers.  Products are
computed exactly over the integers by Kronecker substitution: both operands
are packed into one big integer with a fixed bit width per coefficient,
multiplied with GMP, and unpacked.  The width is chosen so that no signed
coefficient of the product can spill into its neighbour.
"""

from __future__ import annotations

from functools import lru_cache

import gmpy2
import numpy as np


def obj_array(values) -> np.ndarray:
    # np.fromiter avoids numpy's slow per-element sequence probing of mpz
    vals = values.tolist() if isinstance(values, np.ndarray) else values
    return np.fromiter(vals, dtype=object, count=len(vals))


def zeros(n: int) -> np.ndarray:
    return np.fromiter([0] * n, dtype=object, count=n)


def centered(a: np.ndarray, q: int) -> np.ndarray:
    """Representatives in (-q/2, q/2]."""
    a = a % q
    return np.where(a > q // 2, a - q, a)


def pack_signed(coeffs, width: int):
    """Evaluate a signed coefficient vector at X = 2**width."""
    vals = coeffs.tolist() if isinstance(coeffs, np.ndarray) else list(coeffs)
    pos = [v if v > 0 else 0 for v in vals]
    neg = [-v if v < 0 else 0 for v in vals]
    return gmpy2.pack(pos, width) - gmpy2.pack(neg, width)


def pack_centered(coeffs, q: int, width: int):
    """pack_signed of the centered lift of residues in [0, q)."""
    vals = coeffs.tolist() if isinstance(coeffs, np.ndarray) else list(coeffs)
    h = q // 2
    pos = [v if v <= h else 0 for v in vals]
    neg = [q - v if v > h else 0 for v in vals]
    return gmpy2.pack(pos, width) - gmpy2.pack(neg, width)


def pack_unsigned(coeffs, width: int):
    vals = coeffs.tolist() if isinstance(coeffs, np.ndarray) else list(coeffs)
    return gmpy2.pack(vals, width)


@lru_cache(maxsize=32)
def _digit_offset(count: int, width: int):
    # Adding 2**(width-1) to each digit makes every signed digit non-negative.
    one_per_digit = ((gmpy2.mpz(1) << (count * width)) - 1) // ((gmpy2.mpz(1) << width) - 1)
    return one_per_digit << (width - 1)


def _offset_digits(x, count: int, width: int) -> np.ndarray:
    digits = gmpy2.unpack(x + _digit_offset(count, width), width)
    if len(digits) < count:
        digits = digits + [gmpy2.mpz(0)] * (count - len(digits))
    return np.fromiter(digits, dtype=object, count=count)


def unpack_signed(x, count: int, width: int) -> np.ndarray:
    return _offset_digits(x, count, width) - (1 << (width - 1))


def unpack_fold(x, n: int, width: int) -> np.ndarray:
    """Unpack a packed length-(2n-1) product and reduce it mod X^n + 1."""
    d = _offset_digits(x, 2 * n - 1, width)
    # the per-digit offsets cancel pairwise except in the top coefficient
    out = d[:n].copy()
    out[: n - 1] -= d[n:]
    out[n - 1] -= 1 << (width - 1)
    return out


def unpack_fold_round(x, n: int, width: int, t: int, q: int, mod: int) -> np.ndarray:
    """round(t * c / q) mod ``mod`` for each folded coefficient c of ``x``.

    Fused version of unpack_fold followed by scaling; one Python-level pass.
    """
    digits = gmpy2.unpack(x + _digit_offset(2 * n - 1, width), width)
    if len(digits) < 2 * n - 1:
        digits = digits + [gmpy2.mpz(0)] * (2 * n - 1 - len(digits))
    lo = digits[:n]
    hi = digits[n : 2 * n - 1]
    hi.append(gmpy2.mpz(1) << (width - 1))
    tt, qq, m = gmpy2.mpz(2 * t), gmpy2.mpz(2 * q), gmpy2.mpz(mod)
    off = gmpy2.mpz(q)
    fdiv = gmpy2.f_div
    vals = [fdiv(tt * (a - b) + off, qq) % m for a, b in zip(lo, hi)]
    return np.fromiter(vals, dtype=object, count=n)


def fold_negacyclic(full: np.ndarray, n: int) -> np.ndarray:
    """Reduce a length-(2n-1) coefficient vector modulo X^n + 1."""
    out = full[:n].copy()
    out[: n - 1] -= full[n:]
    return out


def product_width(n: int, bound_a: int, bound_b: int, terms: int = 1) -> int:
    """Bits per packed coefficient for a sum of ``terms`` products."""
    return (terms * n * bound_a * bound_b).bit_length() + 2


def max_abs(a) -> int:
    return max(1, int(max(a.max(), -a.min())))


def negacyclic_exact(a: np.ndarray, b: np.ndarray, bound_a=None, bound_b=None) -> np.ndarray:
    """Exact product of two integer polynomials in Z[X]/(X^n + 1).

    ``bound_a``/``bound_b`` are upper bounds on the coefficient magnitudes;
    they are measured when omitted.
    """
    n = len(a)
    w = product_width(n, bound_a or max_abs(a), bound_b or max_abs(b))
    return unpack_fold(pack_signed(a, w) * pack_signed(b, w), n, w)


def mulmod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Product in Z_q[X]/(X^n + 1) of residues in [0, q) by small ``b``."""
    return negacyclic_exact(a, b, q) % q


def schoolbook_negacyclic(a, b, modulus: int | None = None) -> list[int]:
    """Quadratic reference product, used as a test oracle."""
    n = len(a)
    out = [0] * n
    for i in range(n):
        ai = int(a[i])
        for j in range(n):
            k = i + j
            term = ai * int(b[j])
            if k >= n:
                out[k - n] -= term
            else:
                out[k] += term
    if modulus is not None:
        out = [v % modulus for v in out]
    return out


@lru_cache(maxsize=64)
def _automorphism_map(n: int, g: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n, dtype=np.int64)
    idx = (k * g) % (2 * n)
    return idx % n, idx >= n


def automorphism(coeffs: np.ndarray, g: int, modulus: int | None = None) -> np.ndarray:
    """Apply X -> X^g; residues stay reduced when ``modulus`` is given."""
    n = len(coeffs)
    dest, neg = _automorphism_map(n, g % (2 * n))
    flipped = -coeffs if modulus is None else (-coeffs) % modulus
    src = np.where(neg, flipped, coeffs)
    out = np.empty(n, dtype=coeffs.dtype)
    out[dest] = src
    return out
