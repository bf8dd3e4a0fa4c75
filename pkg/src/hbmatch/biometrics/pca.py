"""Snapshot-method PCA for sample counts far below the input dimension.

The D x D covariance is never formed: eigenvectors of the n x n Gram matrix
of centered samples are mapped back to input space.
"""

from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from ..errors import (
    BadMagicError,
    BadVersionError,
    InsufficientDataError,
    TruncatedDataError,
    UsageError,
)

log = logging.getLogger(__name__)

PCAM_MAGIC = b"PCAM"
PCAM_VERSION = 1
ORTHO_TOL = 1e-12
# relative eigenvalue floor below which a direction carries no variance
RANK_TOL = 1e-10
CHUNK = 256


@dataclass(frozen=True, eq=False)
class PcaModel:
    input_dim: int
    k: int
    mean: np.ndarray
    basis: np.ndarray  # k x input_dim, orthonormal rows
    explained_variance: np.ndarray | None = None
    train_ids: tuple = ()
    seed: int = 0
    warnings: tuple = field(default=())

    def __eq__(self, other):
        return (
            isinstance(other, PcaModel)
            and self.input_dim == other.input_dim
            and self.k == other.k
            and self.seed == other.seed
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.basis, other.basis)
        )

    __hash__ = None


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; near-ties resolved by lowest index
    for row in basis:
        mag = np.abs(row)
        i = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
        if row[i] < 0:
            row *= -1
    return basis


def _reorthonormalize(basis: np.ndarray) -> np.ndarray:
    gram = basis @ basis.T
    if np.abs(gram - np.eye(len(gram))).max() <= ORTHO_TOL:
        return basis
    # Gram-Schmidt in one shot: B <- L^-1 B with B B^T = L L^T
    low = cholesky(gram, lower=True)
    return solve_triangular(low, basis, lower=True, overwrite_b=True)


def pca_train(samples, k: int, seed: int = 0, sample_ids=()) -> PcaModel:
    """Top-``k`` principal directions of ``samples`` (n x D).

    ``k`` above the data rank (at most n - 1) is capped and the cap is
    recorded in ``model.warnings``.
    """
    x = np.array(samples, dtype=np.float64)
    if x.ndim != 2:
        raise UsageError("samples must form an n x D matrix")
    n, dim = x.shape
    if n < 2:
        raise InsufficientDataError("PCA needs at least two samples")
    if k <= 0:
        raise UsageError("k must be positive")
    notes = []
    mean = x.mean(axis=0)
    x -= mean
    gram = x @ x.T
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[0] if evals[0] > 0 else 1.0
    rank = int(np.sum(evals > RANK_TOL * top))
    rank = min(rank, n - 1)
    if rank == 0:
        raise InsufficientDataError("all training samples are identical")
    if k > rank:
        msg = f"requested k={k} capped to {rank} ({n} training samples)"
        notes.append(msg)
        warnings.warn(msg, stacklevel=2)
        log.warning(msg)
        k = rank
    evals, evecs = evals[:k], evecs[:, :k]
    basis = (evecs.T @ x) / np.sqrt(evals)[:, None]
    del x
    basis = _fix_signs(_reorthonormalize(basis))
    return PcaModel(
        input_dim=dim,
        k=k,
        mean=mean,
        basis=basis,
        explained_variance=evals / (n - 1),
        train_ids=tuple(sample_ids),
        seed=int(seed),
        warnings=tuple(notes),
    )


def pca_project(model: PcaModel, v) -> np.ndarray:
    """<basis_i, v - mean> for one vector or each row of a matrix."""
    v = np.asarray(v)
    single = v.ndim == 1
    rows = v[None, :] if single else v
    if rows.ndim != 2 or rows.shape[1] != model.input_dim:
        raise UsageError(f"expected vectors of length {model.input_dim}")
    out = np.empty((len(rows), model.k))
    for i in range(0, len(rows), CHUNK):
        block = rows[i : i + CHUNK].astype(np.float64) - model.mean
        out[i : i + CHUNK] = block @ model.basis.T
    return out[0] if single else out


def reconstruction_error(model: PcaModel, v, k: int | None = None) -> float:
    """||(v - mean) - B_k^T B_k (v - mean)|| using the first ``k`` components."""
    k = model.k if k is None else k
    c = np.asarray(v, dtype=np.float64) - model.mean
    b = model.basis[:k]
    return float(np.linalg.norm(c - b.T @ (b @ c)))


def pcam_bytes(model: PcaModel) -> bytes:
    head = PCAM_MAGIC + bytes([PCAM_VERSION]) + struct.pack("<II", model.input_dim, model.k)
    body = model.mean.astype("<f8").tobytes() + model.basis.astype("<f8").tobytes()
    return head + body + struct.pack("<Q", model.seed)


def pcam_from_bytes(data: bytes) -> PcaModel:
    if len(data) < 13:
        raise TruncatedDataError("PCAM header truncated")
    if data[:4] != PCAM_MAGIC:
        raise BadMagicError("expected PCAM")
    if data[4] != PCAM_VERSION:
        raise BadVersionError(f"unsupported PCAM version {data[4]}")
    dim, k = struct.unpack_from("<II", data, 5)
    want = 13 + 8 * dim * (k + 1) + 8
    if len(data) != want:
        raise TruncatedDataError("PCAM payload length mismatch")
    vals = np.frombuffer(data, dtype="<f8", count=dim * (k + 1), offset=13).astype(np.float64)
    (seed,) = struct.unpack_from("<Q", data, want - 8)
    return PcaModel(dim, k, vals[:dim].copy(), vals[dim:].reshape(k, dim).copy(), seed=seed)


def save_pca(model: PcaModel, path):
    with open(path, "wb") as fh:
        fh.write(pcam_bytes(model))


def load_pca(path) -> PcaModel:
    with open(path, "rb") as fh:
        return pcam_from_bytes(fh.read())
