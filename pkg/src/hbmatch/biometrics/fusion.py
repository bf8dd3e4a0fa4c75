"""Face + iris feature-level fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..codec import unit_normalize
from ..errors import DegenerateInputError, UsageError

FACE_DIM = 512
DUAL_IRIS_DIM = 500
SINGLE_IRIS_DIM = 250


@dataclass(frozen=True, eq=False)
class FusedTemplate:
    vector: np.ndarray
    modality: str
    rotation: int = 0
    subject_id: str = ""
    session: str = ""

    def __post_init__(self):
        if abs(np.linalg.norm(self.vector) - 1.0) > 1e-9:
            raise UsageError("fused template must have unit norm")


def fuse_vectors(face, iris) -> np.ndarray:
    """Unit-normalize each part, concatenate face first, normalize again."""
    return unit_normalize(np.concatenate((unit_normalize(face), unit_normalize(iris))))


def fuse_face_iris(face, iris_reduced, iris_dim: int = DUAL_IRIS_DIM, rotation: int = 0,
                   subject_id: str = "", session: str = "") -> FusedTemplate:
    face = np.asarray(face, dtype=np.float64)
    iris_reduced = np.asarray(iris_reduced, dtype=np.float64)
    if face.shape != (FACE_DIM,):
        raise UsageError(f"face vector must have length {FACE_DIM}")
    if iris_reduced.shape != (iris_dim,):
        raise UsageError(f"reduced iris vector must have length {iris_dim}")
    vec = fuse_vectors(face, iris_reduced)
    return FusedTemplate(vec, "full-fusion", rotation, subject_id, session)


def normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DegenerateInputError("zero feature vector")
    return m / norms


def fuse_rows(faces: np.ndarray, irises: np.ndarray) -> np.ndarray:
    """Row-wise fuse_vectors for matching row counts."""
    return normalize_rows(np.hstack((normalize_rows(faces), normalize_rows(irises))))
