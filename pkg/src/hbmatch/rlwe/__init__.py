"""Leveled BFV-style RLWE scheme with slot batching and one multiplication."""

from .encoding import Plaintext, decode_slots, encode_slots
from .keys import (
    GaloisKeySet,
    PublicKey,
    RelinKey,
    SecretKey,
    default_galois_exponents,
    galois_keygen,
    keygen,
    relin_keygen,
)
from .ntt import RingPoly, negacyclic_ntt, ntt_mul
from .params import FheParams, production_params, toy_params
from .scheme import (
    Ciphertext,
    decrypt,
    encrypt,
    hadd,
    hmul,
    hsub,
    noise_budget,
    relinearize,
    rotate_slots,
    sum_slots,
)

__all__ = [
    "Ciphertext",
    "FheParams",
    "GaloisKeySet",
    "Plaintext",
    "PublicKey",
    "RelinKey",
    "RingPoly",
    "SecretKey",
    "decode_slots",
    "decrypt",
    "default_galois_exponents",
    "encode_slots",
    "encrypt",
    "galois_keygen",
    "hadd",
    "hmul",
    "hsub",
    "keygen",
    "negacyclic_ntt",
    "noise_budget",
    "ntt_mul",
    "production_params",
    "relin_keygen",
    "relinearize",
    "rotate_slots",
    "sum_slots",
    "toy_params",
]
