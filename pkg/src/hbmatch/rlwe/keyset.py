"""Bundle of key material kept by the enrolling/verifying client."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import KeyMaterialError
from . import serialize as ser
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
from .params import FheParams
from .sampling import make_rng

FILES = {
    "params": "params.hbpr",
    "sk": "secret.hbsk",
    "pk": "public.hbpk",
    "rk": "relin.hbrk",
    "gks": "galois.hbgk",
}


@dataclass(frozen=True, eq=False)
class KeySet:
    params: FheParams
    sk: SecretKey | None
    pk: PublicKey
    rk: RelinKey | None = None
    gks: GaloisKeySet | None = None

    def require_secret(self) -> SecretKey:
        if self.sk is None:
            raise KeyMaterialError("secret key not available")
        return self.sk

    def public_only(self) -> "KeySet":
        return KeySet(self.params, None, self.pk, self.rk, self.gks)

    def without_eval_keys(self) -> "KeySet":
        return KeySet(self.params, self.sk, self.pk)


def generate_keyset(params: FheParams, seed=None, eval_keys: bool = False, rotations=()) -> KeySet:
    """Secret/public pair, plus relinearization and Galois keys on request.

    All key material is derived from one seed through independent streams.
    """
    rng = make_rng(seed)
    sub = rng.integers(0, 2**63, size=3).tolist()
    sk, pk = keygen(params, sub[0])
    rk = gks = None
    if eval_keys:
        rk = relin_keygen(sk, sub[1])
        gks = galois_keygen(sk, default_galois_exponents(params, rotations), sub[2])
    return KeySet(params, sk, pk, rk, gks)


def save_keyset(ks: KeySet, directory) -> dict:
    """Write one container per present key; returns sizes in bytes."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    sizes = {"params": ser.save(ks.params, d / FILES["params"])}
    for name in ("sk", "pk", "rk", "gks"):
        obj = getattr(ks, name)
        if obj is not None:
            sizes[name] = ser.save(obj, d / FILES[name])
    return sizes


def load_keyset(directory, with_secret: bool = True, with_eval: bool = True) -> KeySet:
    d = Path(directory)
    params = ser.load(d / FILES["params"], expect=ser.MAGIC_PARAMS)

    def opt(name, magic, wanted=True):
        path = d / FILES[name]
        return ser.load(path, params, magic) if wanted and path.exists() else None

    pk = opt("pk", ser.MAGIC_PUBLIC)
    if pk is None:
        raise KeyMaterialError(f"no public key in {d}")
    return KeySet(
        params,
        opt("sk", ser.MAGIC_SECRET, with_secret),
        pk,
        opt("rk", ser.MAGIC_RELIN, with_eval),
        opt("gks", ser.MAGIC_GALOIS, with_eval),
    )
