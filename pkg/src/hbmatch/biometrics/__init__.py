"""Iris codes, PCA, face/iris fusion and synthetic identities."""

from .fusion import FusedTemplate, fuse_face_iris
from .iris import IrisCode, concat_irises, flatten, rotate_iris, rotation_gallery
from .pca import PcaModel, pca_project, pca_train
from .synth import Dataset, SynthConfig, load_dataset, synth_generate

__all__ = [
    "Dataset",
    "FusedTemplate",
    "IrisCode",
    "PcaModel",
    "SynthConfig",
    "concat_irises",
    "flatten",
    "fuse_face_iris",
    "load_dataset",
    "pca_project",
    "pca_train",
    "rotate_iris",
    "rotation_gallery",
    "synth_generate",
]
