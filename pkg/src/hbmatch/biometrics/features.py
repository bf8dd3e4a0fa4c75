"""Per-modality feature construction: split, PCA, rotation gallery, fusion.

Modalities and their nominal template lengths:

    face-only          512   raw face embedding
    single-iris        250   left-eye code 65536 -> PCA
    dual-iris-fusion   500   left|right code 131072 -> PCA
    full-fusion       1012   face (512) fused with the dual-iris PCA vector
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import UsageError
from .fusion import normalize_rows
from .iris import CODE_BITS, MAX_SHIFT, concat_irises, flatten, rotation_gallery, single_rotations
from .pca import PcaModel, pca_project, pca_train
from .synth import FACE_DIM, Dataset

log = logging.getLogger(__name__)

MODALITIES = ("face-only", "single-iris", "dual-iris-fusion", "full-fusion")
NOMINAL_DIMS = {"face-only": 512, "single-iris": 250, "dual-iris-fusion": 500, "full-fusion": 1012}
INPUT_DIMS = {"face-only": FACE_DIM, "single-iris": CODE_BITS, "dual-iris-fusion": 2 * CODE_BITS}
PROBE_FRACTION = 0.3


@dataclass
class GalleryEntry:
    rotation: int
    order: int  # enrollment order within the subject
    label: str


@dataclass
class ModalityFeatures:
    modality: str
    dim: int
    input_dim: int
    gallery: dict  # sid -> (vectors m x dim, list[GalleryEntry])
    probes: dict  # sid -> (vectors p x dim, list[str] labels)
    pca: PcaModel | None = None
    warnings: list = field(default_factory=list)


def split_indices(n: int, seed: int, sid: str, kind: str) -> tuple[list[int], list[int]]:
    """Seeded 70/30 gallery/probe split of ``n`` samples of one subject."""
    if n < 2:
        return list(range(n)), []
    key = zlib.crc32(f"{sid}/{kind}".encode())
    rng = np.random.default_rng([int(seed), key])
    perm = rng.permutation(n).tolist()
    n_probe = max(1, int(np.floor(PROBE_FRACTION * n + 0.5)))
    return sorted(perm[n_probe:]), sorted(perm[:n_probe])


def training_subjects(subjects, seed: int, fraction: float = 0.5) -> list[str]:
    """Seeded subset of gallery subjects used to fit PCA."""
    subjects = sorted(subjects)
    if not subjects:
        return []
    rng = np.random.default_rng([int(seed), 0x9CA])
    count = max(1, int(np.floor(fraction * len(subjects) + 0.5)))
    pick = rng.permutation(len(subjects))[:count]
    return sorted(subjects[i] for i in pick)


@dataclass
class Split:
    faces: dict  # sid -> (gallery idx, probe idx)
    iris: dict


def make_split(ds: Dataset, seed: int) -> Split:
    faces = {sid: split_indices(ds.face_count(sid), seed, sid, "face") for sid in ds.subjects}
    iris = {sid: split_indices(ds.session_count(sid), seed, sid, "iris") for sid in ds.subjects}
    return Split(faces, iris)


def _iris_vector(ds, sid, s, dual: bool) -> np.ndarray:
    left, right = ds.iris[sid][s]
    return concat_irises(flatten(left), flatten(right)) if dual else flatten(left)


def train_iris_pca(ds: Dataset, split: Split, dual: bool, k: int, seed: int,
                   fraction: float = 0.5) -> PcaModel:
    """Fit PCA on unrotated gallery codes of a seeded subset of subjects."""
    eligible = [sid for sid in ds.subjects if split.iris[sid][0] and split.iris[sid][1]]
    chosen = training_subjects(eligible, seed, fraction)
    rows, ids = [], []
    for sid in chosen:
        for s in split.iris[sid][0]:
            rows.append(_iris_vector(ds, sid, s, dual))
            ids.append(f"{sid}/s{s}")
    if not rows:
        raise UsageError("no gallery iris samples available for PCA")
    return pca_train(np.stack(rows), k, seed=seed, sample_ids=ids)


def _project_unit(model, rows) -> np.ndarray:
    return normalize_rows(pca_project(model, rows))


def build_features(ds: Dataset, modality: str, seed: int = 0, k: int | None = None,
                   pca: PcaModel | None = None, max_shift: int = MAX_SHIFT,
                   fraction: float = 0.5) -> ModalityFeatures:
    """Unit-norm gallery and probe feature vectors for one modality."""
    if modality not in MODALITIES:
        raise UsageError(f"unknown modality {modality!r}")
    split = make_split(ds, seed)
    notes = []
    usable = []
    for sid in ds.subjects:
        need_face = modality in ("face-only", "full-fusion")
        need_iris = modality != "face-only"
        ok = True
        if need_face and not (split.faces[sid][0] and split.faces[sid][1]):
            ok = False
        if need_iris and not (split.iris[sid][0] and split.iris[sid][1]):
            ok = False
        if ok:
            usable.append(sid)
        else:
            notes.append(f"subject {sid} excluded: missing gallery or probe samples")
    for msg in notes:
        log.warning(msg)

    if modality == "face-only":
        gallery, probes = {}, {}
        for sid in usable:
            g_idx, p_idx = split.faces[sid]
            gallery[sid] = (
                normalize_rows(ds.faces[sid][g_idx]),
                [GalleryEntry(0, j, f"f{i}") for j, i in enumerate(g_idx)],
            )
            probes[sid] = (normalize_rows(ds.faces[sid][p_idx]), [f"f{i}" for i in p_idx])
        return ModalityFeatures(modality, FACE_DIM, FACE_DIM, gallery, probes, None, notes)

    dual = modality != "single-iris"
    if pca is None:
        want = k if k is not None else NOMINAL_DIMS["dual-iris-fusion" if dual else "single-iris"]
        pca = train_iris_pca(ds, split, dual, want, seed, fraction)
    expected_input = 2 * CODE_BITS if dual else CODE_BITS
    if pca.input_dim != expected_input:
        raise UsageError(f"PCA input dim {pca.input_dim} does not fit {modality}")
    notes.extend(pca.warnings)
    iris_dim = pca.k

    gallery, probes = {}, {}
    for sid in usable:
        g_sess, p_sess = split.iris[sid]
        rot_rows, rot_meta = [], []
        for j, s in enumerate(g_sess):
            left, right = ds.iris[sid][s]
            block = rotation_gallery(left, right, max_shift) if dual else single_rotations(left, max_shift)
            rot_rows.append(block)
            rot_meta.extend((r, j, s) for r in range(-max_shift, max_shift + 1))
        g_iris = _project_unit(pca, np.concatenate(rot_rows))
        p_iris = _project_unit(pca, np.stack([_iris_vector(ds, sid, s, dual) for s in p_sess]))

        if modality != "full-fusion":
            entries = [GalleryEntry(r, j, f"s{s}r{r:+d}") for r, j, s in rot_meta]
            gallery[sid] = (g_iris, entries)
            probes[sid] = (p_iris, [f"s{s}" for s in p_sess])
            continue

        g_face, p_face = split.faces[sid]
        faces_g = normalize_rows(ds.faces[sid][g_face])
        faces_p = normalize_rows(ds.faces[sid][p_face])
        # every gallery face paired with every rotated gallery iris vector
        g_vecs, entries = [], []
        for fj, (fi, fvec) in enumerate(zip(g_face, faces_g)):
            for row, (r, j, s) in zip(g_iris, rot_meta):
                g_vecs.append(np.concatenate((fvec, row)))
                entries.append(GalleryEntry(r, fj * len(g_sess) + j, f"f{fi}s{s}r{r:+d}"))
        p_vecs, labels = [], []
        for fi, fvec in zip(p_face, faces_p):
            for row, s in zip(p_iris, p_sess):
                p_vecs.append(np.concatenate((fvec, row)))
                labels.append(f"f{fi}s{s}")
        gallery[sid] = (normalize_rows(np.stack(g_vecs)), entries)
        probes[sid] = (normalize_rows(np.stack(p_vecs)), labels)

    dim = FACE_DIM + iris_dim if modality == "full-fusion" else iris_dim
    return ModalityFeatures(modality, dim, expected_input, gallery, probes, pca, notes)
