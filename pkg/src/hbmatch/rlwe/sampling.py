"""Seeded samplers for secrets, errors and uniform ring elements."""

from __future__ import annotations

import secrets

import numpy as np

from .params import FheParams
from .ring import obj_array


def make_rng(seed=None) -> np.random.Generator:
    """Accept a Generator, 32-byte seed, int, or None (fresh OS entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = secrets.token_bytes(32)
    if isinstance(seed, (bytes, bytearray)):
        seed = int.from_bytes(bytes(seed), "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def ternary(params: FheParams, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(-1, 2, size=params.ring_degree).astype(np.int64)


def gaussian(params: FheParams, rng: np.random.Generator) -> np.ndarray:
    """Rounded normal samples, resampled until every |e| <= noise_bound."""
    n, sigma, bound = params.ring_degree, params.noise_stddev, params.noise_bound
    out = np.rint(rng.normal(0.0, sigma, size=n)).astype(np.int64)
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = np.rint(rng.normal(0.0, sigma, size=int(bad.sum()))).astype(np.int64)
        bad = np.abs(out) > bound
    return out


def uniform_mod_q(params: FheParams, rng: np.random.Generator) -> np.ndarray:
    """Uniform residues mod q, drawn per prime and recombined by CRT."""
    q = params.ct_modulus
    acc = obj_array([0] * params.ring_degree)
    for qi in params.ct_moduli:
        r = obj_array(rng.integers(0, qi, size=params.ring_degree, dtype=np.uint64).tolist())
        mi = q // qi
        acc = acc + r * (mi * pow(mi, -1, qi))
    return acc % q
