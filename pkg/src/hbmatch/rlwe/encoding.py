"""Slot batching: Z_t[X]/(X^N + 1) ~= Z_t^N via the negacyclic NTT mod t.

Slots form two rows of N/2.  Slot ``j`` of row 0 holds the evaluation at
``psi^(3^j)`` and slot ``j`` of row 1 the evaluation at ``psi^(-3^j)``, so the
automorphism X -> X^(3^k) rotates both rows left by ``k`` and X -> X^(2N-1)
swaps the rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import CapacityError, OverflowSlotError, UsageError
from .ntt import ntt_forward, ntt_inverse
from .params import FheParams


@lru_cache(maxsize=16)
def slot_permutation(n: int) -> np.ndarray:
    """Index into the natural-order NTT output for each slot."""
    two_n = 2 * n
    perm = np.empty(n, dtype=np.int64)
    e = 1
    for j in range(n // 2):
        perm[j] = (e - 1) // 2
        perm[n // 2 + j] = (two_n - e - 1) // 2
        e = e * 3 % two_n
    return perm


@dataclass(frozen=True, eq=False)
class Plaintext:
    """Element of the plaintext ring, stored by its coefficients mod t."""

    params: FheParams
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.int64) % self.params.plain_modulus
        if arr.shape != (self.params.ring_degree,):
            raise UsageError("plaintext length must equal the ring degree")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def slots(self) -> np.ndarray:
        """Slot residues in [0, t)."""
        t = self.params.plain_modulus
        return ntt_forward(self.coeffs, t)[slot_permutation(self.params.ring_degree)]

    def __eq__(self, other):
        if not isinstance(other, Plaintext):
            return NotImplemented
        return self.params == other.params and bool(np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None


def centered_mod(values: np.ndarray, t: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64) % t
    return np.where(v >= (t + 1) // 2, v - t, v)


def encode_slots(values, params: FheParams) -> Plaintext:
    """Place integers into slots [0, len(values)); remaining slots are zero."""
    t, n = params.plain_modulus, params.ring_degree
    vals = np.asarray(values)
    if vals.ndim != 1:
        raise UsageError("slot values must be a flat vector")
    if len(vals) > n:
        raise CapacityError(f"{len(vals)} values exceed {n} slots")
    if len(vals) and not np.issubdtype(vals.dtype, np.integer):
        if not np.all(np.equal(np.mod(vals, 1), 0)):
            raise UsageError("slot values must be integers")
    vals = vals.astype(np.int64)
    lo, hi = -(t // 2), (t - 1) // 2
    if len(vals) and (vals.min() < lo or vals.max() > hi):
        raise OverflowSlotError(f"slot values must lie in [{lo}, {hi}]")
    evals = np.zeros(n, dtype=np.int64)
    evals[slot_permutation(n)[: len(vals)]] = vals % t
    return Plaintext(params, ntt_inverse(evals, t))


def decode_slots(pt: Plaintext) -> np.ndarray:
    """Centered slot values in [-t/2, t/2)."""
    return centered_mod(pt.slots, pt.params.plain_modulus)


def rotate_plain_slots(slots: np.ndarray, k: int) -> np.ndarray:
    """Reference for rotate_slots: both rows rotate left by ``k``."""
    half = len(slots) // 2
    return np.concatenate((np.roll(slots[:half], -k), np.roll(slots[half:], -k)))
